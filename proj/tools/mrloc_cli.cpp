// Command-line front end: simulate-rir, gen-dataset, train, localize, sweep,
// sequential, evaluate, export-embedding.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "mrloc/dds_localizer.hpp"
#include "mrloc/error.hpp"
#include "mrloc/feature_archive.hpp"
#include "mrloc/harness/config.hpp"
#include "mrloc/harness/experiment.hpp"
#include "mrloc/harness/reports.hpp"
#include "mrloc/mrl_localizer.hpp"

namespace h = mrloc::harness;
using nlohmann::ordered_json;

namespace {

struct Common {
  std::string config;
  std::vector<std::string> overrides;
  long long seed = -1;
  bool paper_scale = false;
  std::string output_dir;
  int threads = 0;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("-c,--config", c.config, "INI config file")->check(CLI::ExistingFile);
  cmd->add_option("-s,--set", c.overrides, "Override as section.key=value (repeatable)");
  cmd->add_option("--seed", c.seed, "Run seed (overrides scenario.seed)");
  cmd->add_flag("--paper-scale", c.paper_scale, "N=400, T=120, 3 s sources, 50 rotations");
  cmd->add_option("-o,--output-dir", c.output_dir, "Output directory (default $MRLOC_OUTPUT_DIR or .)");
  cmd->add_option("-j,--threads", c.threads, "Worker threads (overrides run.parallelism)");
}

h::ScenarioConfig resolve(const Common& c) {
  h::ScenarioConfig cfg = c.config.empty() ? h::ScenarioConfig{} : h::load_config(c.config);
  if (c.paper_scale) h::apply_paper_scale(cfg);
  for (const auto& o : c.overrides) h::apply_override(cfg, o);
  if (c.seed >= 0) cfg.seed = static_cast<std::uint64_t>(c.seed);
  if (c.threads > 0) cfg.parallelism = c.threads;
  cfg.validate();
  return cfg;
}

void emit(const ordered_json& j) { std::cout << j.dump(2) << std::endl; }

int fail(const std::string& kind, const std::string& message, int code) {
  ordered_json j;
  j["error"] = {{"kind", kind}, {"message", message}, {"exit_code", code}};
  std::cerr << j.dump() << std::endl;
  return code;
}

mrloc::FeatureArchive load_or_generate(const h::ScenarioConfig& cfg, const std::string& dataset) {
  if (!dataset.empty()) return mrloc::read_archive(dataset);
  return h::generate_dataset(cfg, h::draw_rotation(cfg.seed, 0), 0);
}

std::vector<double> parse_values(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw mrloc::ConfigError("--values: '" + item + "' is not a number");
    }
  }
  if (out.empty()) throw mrloc::ConfigError("--values is empty");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semi-supervised source localization experiments"};
  app.require_subcommand(1);

  Common common;

  auto* sim = app.add_subcommand("simulate-rir", "Simulate one impulse response");
  double sim_azimuth = std::nan(""), sim_rotation = 0.0;
  int sim_mic = 1;
  std::string sim_out, sim_csv;
  add_common(sim, common);
  sim->add_option("--azimuth", sim_azimuth, "Source azimuth in degrees (default: middle of the range)");
  sim->add_option("--rotation", sim_rotation, "Constellation rotation in degrees");
  sim->add_option("--mic", sim_mic, "Microphone 1 or 2")->check(CLI::Range(1, 2));
  sim->add_option("--out", sim_out, "Binary RIR output (default <dir>/rir.bin)");
  sim->add_option("--csv", sim_csv, "Also write taps as CSV");

  auto* gen = app.add_subcommand("gen-dataset", "Simulate a feature archive");
  std::string gen_out, gen_csv;
  double gen_rotation = std::nan("");
  int gen_rotation_index = 0;
  add_common(gen, common);
  gen->add_option("--out", gen_out, "Archive path (default <dir>/dataset.mrld)");
  gen->add_option("--csv", gen_csv, "Also export the archive as CSV");
  gen->add_option("--rotation", gen_rotation, "Rotation in degrees (default: drawn from the seed)");
  gen->add_option("--rotation-index", gen_rotation_index, "Rotation slot used for seeding");

  auto* train = app.add_subcommand("train", "Fit the manifold-regularized model");
  std::string train_dataset, train_out;
  add_common(train, common);
  train->add_option("--dataset", train_dataset, "Feature archive (generated when omitted)");
  train->add_option("--out", train_out, "Model path (default <dir>/model.mrlm)");

  auto* loc = app.add_subcommand("localize", "Localize the test rows of an archive");
  std::string loc_dataset, loc_model, loc_stem = "localize";
  add_common(loc, common);
  loc->add_option("--dataset", loc_dataset, "Feature archive (generated when omitted)");
  loc->add_option("--model", loc_model, "Stored MRL model (refit when omitted)");
  loc->add_option("--stem", loc_stem, "Report file stem");

  auto* sweep = app.add_subcommand("sweep", "T60 or SNR sweep averaged over rotations");
  std::string sweep_axis = "t60", sweep_values;
  int sweep_rotations = 0;
  add_common(sweep, common);
  sweep->add_option("--axis", sweep_axis, "t60 (values in ms) or snr (test SNR in dB)")
      ->check(CLI::IsMember({"t60", "snr"}));
  sweep->add_option("--values", sweep_values, "Comma-separated axis values")->required();
  sweep->add_option("--rotations", sweep_rotations, "Rotations per value (default run.rotations)");

  auto* seq = app.add_subcommand("sequential", "Sequential adaptation protocol");
  int seq_cycles = 0, seq_batch = 0;
  add_common(seq, common);
  seq->add_option("--cycles", seq_cycles, "Number of cycles");
  seq->add_option("--batch", seq_batch, "Fresh samples per cycle");

  auto* eval = app.add_subcommand("evaluate", "Recompute RMSE from a predictions file");
  std::string eval_predictions, eval_report;
  eval->add_option("--predictions", eval_predictions, "Predictions CSV")->required()->check(CLI::ExistingFile);
  eval->add_option("--report", eval_report, "JSON report to check against")->check(CLI::ExistingFile);

  auto* emb = app.add_subcommand("export-embedding", "Write the diffusion embedding of the training rows");
  std::string emb_dataset, emb_out;
  add_common(emb, common);
  emb->add_option("--dataset", emb_dataset, "Feature archive (generated when omitted)");
  emb->add_option("--out", emb_out, "CSV path (default <dir>/embedding.csv)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what(), 2);
  }

  try {
    if (*eval) {
      const auto stored = h::read_predictions_csv(eval_predictions);
      const auto rmse = h::recompute_rmse(stored);
      ordered_json out;
      bool consistent = true;
      ordered_json stored_methods;
      if (!eval_report.empty()) {
        std::ifstream in(eval_report);
        stored_methods = ordered_json::parse(in).value("methods", ordered_json::object());
      }
      for (const auto& [method, value] : rmse) {
        ordered_json e;
        e["rmse"] = value;
        if (stored_methods.contains(method) && stored_methods[method].contains("rmse")) {
          const double ref = stored_methods[method]["rmse"].get<double>();
          const bool match = std::abs(ref - value) <= 1e-12 * std::max(1.0, std::abs(ref));
          e["stored_rmse"] = ref;
          e["match"] = match;
          consistent = consistent && match;
        }
        out[method] = e;
      }
      emit({{"methods", out}, {"consistent", consistent}});
      return consistent ? 0 : 1;
    }

    const h::ScenarioConfig cfg = resolve(common);
    const std::string dir = h::output_directory(common.output_dir);

    if (*sim) {
      mrloc::Constellation cons = cfg.constellation;
      cons.rotation_deg = sim_rotation;
      const double az = std::isnan(sim_azimuth) ? 0.5 * (cons.azimuth_low + cons.azimuth_high) : sim_azimuth;
      const auto room = cfg.room();
      room.validate();
      cons.validate(room);
      const auto src = mrloc::azimuth_to_position(cons, az);
      const auto rir = mrloc::simulate_rir(room, src, sim_mic == 1 ? cons.mic1 : cons.rotated_mic2());
      const std::string path = sim_out.empty() ? dir + "/rir.bin" : sim_out;
      mrloc::write_rir_binary(path, rir);
      if (!sim_csv.empty()) {
        std::ofstream out(sim_csv);
        out << "sample,value\n";
        for (std::size_t i = 0; i < rir.taps.size(); ++i) out << i << ',' << h::format_double(rir.taps[i]) << '\n';
      }
      emit({{"path", path},
            {"taps", rir.taps.size()},
            {"sabine_t60", mrloc::sabine_t60(room)},
            {"schroeder_t60", mrloc::schroeder_t60(rir)},
            {"azimuth", az}});
    } else if (*gen) {
      const double rot = std::isnan(gen_rotation) ? h::draw_rotation(cfg.seed, gen_rotation_index) : gen_rotation;
      const auto archive = h::generate_dataset(cfg, rot, gen_rotation_index);
      const std::string path = gen_out.empty() ? dir + "/dataset.mrld" : gen_out;
      mrloc::write_archive(path, archive);
      if (!gen_csv.empty()) mrloc::write_archive_csv(gen_csv, archive);
      emit({{"path", path},
            {"dataset_hash", mrloc::archive_hash(archive)},
            {"rows", archive.rows.size()},
            {"rotation_deg", rot},
            {"config_hash", h::config_hash(cfg)}});
    } else if (*train) {
      const auto archive = load_or_generate(cfg, train_dataset);
      std::vector<std::uint32_t> rows;
      const auto set = archive.training_set(&rows);
      auto fitted = mrloc::fit_from_samples(set, cfg.kernel, cfg.mrl);
      fitted.model.dataset_hash = mrloc::archive_hash(archive);
      fitted.model.source_rows = rows;
      const std::string path = train_out.empty() ? dir + "/model.mrlm" : train_out;
      mrloc::save_model(path, fitted.model);
      emit({{"path", path},
            {"dataset_hash", fitted.model.dataset_hash},
            {"num_train", set.size()},
            {"num_labelled", set.labelled()},
            {"gamma_k", fitted.model.params.gamma_k},
            {"gamma_m", fitted.model.params.gamma_m},
            {"epsilon_k", fitted.kernel.epsilon_k},
            {"epsilon_w", fitted.kernel.epsilon_w},
            {"condition", fitted.model.diagnostics.condition_estimate},
            {"residual", fitted.model.diagnostics.residual_norm},
            {"graph_connected", fitted.graph_connected}});
    } else if (*loc) {
      const auto archive = load_or_generate(cfg, loc_dataset);
      auto report = h::evaluate_methods(cfg, archive);
      if (!loc_model.empty()) {
        auto model = mrloc::load_model(loc_model);
        if (model.dataset_hash != report.dataset_hash)
          throw mrloc::IoError("model was trained on dataset " + model.dataset_hash + ", not " + report.dataset_hash);
        std::vector<mrloc::RtfVector> samples;
        for (auto r : model.source_rows) samples.push_back(archive.rtf(r));
        model.training = std::make_shared<const std::vector<mrloc::RtfVector>>(std::move(samples));
        for (auto& m : report.methods) {
          if (m.method != "mrl") continue;
          for (std::size_t i = 0; i < m.rows.size(); ++i) m.predictions[i] = model.predict(archive.rtf(m.rows[i]));
          m.rmse = h::evaluate_rmse(m.predictions, m.truths);
          m.error.clear();
          m.diagnostics = {{"gamma_k", model.params.gamma_k}, {"gamma_m", model.params.gamma_m},
                           {"epsilon_k", model.epsilon_k}, {"condition", model.diagnostics.condition_estimate}};
        }
      }
      const auto path = h::write_evaluation(dir, loc_stem, cfg, report);
      ordered_json rmse;
      for (const auto& m : report.methods) rmse[m.method] = m.error.empty() ? ordered_json(m.rmse) : ordered_json(m.error);
      emit({{"report", path}, {"dataset_hash", report.dataset_hash}, {"rmse", rmse}});
    } else if (*sweep) {
      const auto axis = sweep_axis == "t60" ? h::SweepAxis::T60 : h::SweepAxis::Snr;
      const int rotations = sweep_rotations > 0 ? sweep_rotations : cfg.rotations;
      const auto report = h::run_sweep(cfg, axis, parse_values(sweep_values), rotations,
                                       [](const std::string& line) { std::cerr << line << std::endl; });
      const auto path = h::write_sweep(dir, cfg, report);
      ordered_json summary = ordered_json::array();
      for (std::size_t v = 0; v < report.values.size(); ++v) {
        ordered_json row{{"value", report.values[v]}};
        for (const auto& [m, r] : report.mean_rmse[v]) row[m] = std::isnan(r) ? ordered_json(nullptr) : ordered_json(r);
        summary.push_back(row);
      }
      emit({{"report", path}, {"summary", summary}});
    } else if (*seq) {
      h::ScenarioConfig scfg = cfg;
      if (seq_cycles > 0) scfg.sequential.cycles = seq_cycles;
      if (seq_batch > 0) scfg.sequential.batch = seq_batch;
      scfg.validate();
      const auto report = h::run_sequential(scfg, [](const std::string& line) { std::cerr << line << std::endl; });
      const auto path = h::write_sequential(dir, scfg, report);
      emit({{"report", path}, {"rmse", report.rmse}, {"training_size", report.training_size}});
      if (!report.error.empty()) return fail("adaptation", report.error, 1);
    } else if (*emb) {
      const auto archive = load_or_generate(cfg, emb_dataset);
      const auto set = archive.training_set();
      std::vector<double> truth;
      for (auto r : archive.rows_with(mrloc::SampleRole::Unlabelled)) truth.push_back(archive.rows[r].azimuth);
      const auto fitted = mrloc::fit_dds(set, cfg.kernel, cfg.dds);
      const std::string path = emb_out.empty() ? dir + "/embedding.csv" : emb_out;
      mrloc::write_embedding_csv(path, fitted.model, truth);
      emit({{"path", path},
            {"dimension", fitted.model.embedding.dimension()},
            {"eigenvalues", std::vector<double>(fitted.model.embedding.eigenvalues.data(),
                                                fitted.model.embedding.eigenvalues.data() +
                                                    fitted.model.embedding.eigenvalues.size())},
            {"graph_connected", fitted.graph_connected}});
    }
  } catch (const mrloc::ConfigError& e) {
    return fail(e.kind(), e.what(), 2);
  } catch (const mrloc::Error& e) {
    return fail(e.kind(), e.what(), 1);
  } catch (const nlohmann::json::exception& e) {
    return fail("io", e.what(), 1);
  } catch (const std::exception& e) {
    return fail("internal", e.what(), 1);
  }
  return 0;
}
