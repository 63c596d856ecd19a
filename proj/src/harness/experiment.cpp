#include "mrloc/harness/experiment.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <random>
#include <thread>

#include <nlohmann/json.hpp>

#include "mrloc/error.hpp"
#include "mrloc/hashing.hpp"

namespace mrloc::harness {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Runs fn(i) for i in [0, n) on up to `threads` workers; rethrows the first
// exception after all workers have joined.
template <typename Fn>
void parallel_for(std::size_t n, int threads, Fn&& fn) {
  const auto workers = static_cast<std::size_t>(std::max(1, threads));
  if (workers == 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < std::min(workers, n); ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

enum Stream : std::uint64_t { kAzimuthStream = 11, kSourceStream = 12, kNoiseStream = 13, kRotationStream = 14 };

struct PlannedRow {
  SampleRole role;
  double azimuth;
  std::uint64_t index;  // position within its role
};

std::vector<double> uniform_grid(double low, double high, int count) {
  std::vector<double> g(count);
  for (int i = 0; i < count; ++i) g[i] = count == 1 ? 0.5 * (low + high) : low + (high - low) * i / (count - 1);
  return g;
}

std::vector<double> uniform_draws(std::uint64_t seed, int rotation_index, SampleRole role, double low, double high,
                                  int count) {
  std::mt19937_64 rng(derive_seed(seed, kAzimuthStream, rotation_index, static_cast<int>(role)));
  std::uniform_real_distribution<double> dist(low, high);
  std::vector<double> v(count);
  for (double& a : v) a = dist(rng);
  return v;
}

std::string room_hash(const ScenarioConfig& cfg) {
  std::string text;
  for (const auto& [key, value] : to_pairs(cfg))
    if (key.rfind("room.", 0) == 0) text += key + "=" + value + "\n";
  return sha256_hex(text);
}

FeatureArchive simulate_rows(const ScenarioConfig& cfg, const Constellation& cons, int rotation_index,
                             const std::vector<PlannedRow>& plan, int threads) {
  const RoomSpec room = cfg.room();
  room.validate();
  cons.validate(room);
  const auto band = make_band(cfg.welch.fft_size, cfg.sample_rate, cfg.band_high_hz, cfg.band_first_bin);
  const int max_lag = admissible_max_lag(cons.mic_spacing(), cfg.speed_of_sound, cfg.sample_rate);
  const Point mic2 = cons.rotated_mic2();

  FeatureArchive archive;
  archive.band = band;
  archive.rows.resize(plan.size());
  parallel_for(plan.size(), threads, [&](std::size_t i) {
    const auto& p = plan[i];
    try {
      const Point src = azimuth_to_position(cons, p.azimuth);
      const auto a1 = simulate_rir(room, src, cons.mic1);
      const auto a2 = simulate_rir(room, src, mic2);
      const auto role = static_cast<std::uint64_t>(p.role);
      const auto s = make_white_source(cfg.source_duration, cfg.sample_rate,
                                       derive_seed(cfg.seed, kSourceStream, rotation_index, role, p.index));
      const double snr = p.role == SampleRole::Test ? cfg.test_snr_db : cfg.train_snr_db;
      const auto pair = synthesize_pair(s, a1, a2, snr, derive_seed(cfg.seed, kNoiseStream, rotation_index, role, p.index));
      ArchiveRow row;
      row.role = p.role;
      row.azimuth = p.azimuth;
      if (p.role == SampleRole::Labelled) row.label = p.azimuth;
      row.values = extract_rtf(pair, cfg.welch, band).values;
      if (p.role == SampleRole::Test) {
        const auto peak = gcc_peak(pair, max_lag, cfg.gcc_weighting);
        row.gcc_tdoa = peak.tdoa;
        row.gcc_peak_ratio = peak.peak_to_median;
      }
      archive.rows[i] = std::move(row);
    } catch (const Error& e) {
      throw Error(e.kind(), std::string(role_name(p.role)) + " sample at azimuth " + std::to_string(p.azimuth) +
                                " deg: " + e.what());
    }
  });

  nlohmann::ordered_json meta;
  meta["format"] = "mrloc-features";
  meta["room_hash"] = room_hash(cfg);
  meta["t60"] = cfg.t60;
  meta["train_snr_db"] = cfg.train_snr_db;
  meta["test_snr_db"] = cfg.test_snr_db;
  meta["seed"] = cfg.seed;
  meta["source"] = kSourceDescription;
  meta["rotation_index"] = rotation_index;
  meta["rotation_deg"] = cons.rotation_deg;
  meta["azimuth_low"] = cons.azimuth_low;
  meta["azimuth_high"] = cons.azimuth_high;
  meta["config"] = to_ini(cfg);
  archive.metadata_json = meta.dump();
  return archive;
}

}  // namespace

double evaluate_rmse(const std::vector<double>& predictions, const std::vector<double>& truths) {
  if (predictions.empty() || predictions.size() != truths.size())
    throw ConfigError("RMSE needs equal-length, non-empty prediction and truth lists");
  double acc = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double e = predictions[i] - truths[i];
    acc += e * e;
  }
  return std::sqrt(acc / static_cast<double>(predictions.size()));
}

double draw_rotation(std::uint64_t seed, int index) {
  std::mt19937_64 rng(derive_seed(seed, kRotationStream, index));
  return std::uniform_real_distribution<double>(0.0, 360.0)(rng);
}

FeatureArchive generate_dataset(const ScenarioConfig& cfg, double rotation_deg, int rotation_index) {
  cfg.validate();
  Constellation cons = cfg.constellation;
  cons.rotation_deg = rotation_deg;
  const double lo = cons.azimuth_low, hi = cons.azimuth_high;

  std::vector<PlannedRow> plan;
  const auto grid = uniform_grid(lo, hi, cfg.num_labelled);
  for (int i = 0; i < cfg.num_labelled; ++i) plan.push_back({SampleRole::Labelled, grid[i], std::uint64_t(i)});
  const auto unl = uniform_draws(cfg.seed, rotation_index, SampleRole::Unlabelled, lo, hi, cfg.num_train - cfg.num_labelled);
  for (std::size_t i = 0; i < unl.size(); ++i) plan.push_back({SampleRole::Unlabelled, unl[i], i});
  const auto test = uniform_draws(cfg.seed, rotation_index, SampleRole::Test, lo, hi, cfg.num_test);
  for (std::size_t i = 0; i < test.size(); ++i) plan.push_back({SampleRole::Test, test[i], i});
  return simulate_rows(cfg, cons, rotation_index, plan, cfg.parallelism);
}

EvaluationReport evaluate_methods(const ScenarioConfig& cfg, const FeatureArchive& archive) {
  EvaluationReport report;
  report.config_hash = config_hash(cfg);
  report.dataset_hash = archive_hash(archive);
  try {
    report.rotation_deg = nlohmann::json::parse(archive.metadata_json).value("rotation_deg", 0.0);
  } catch (const nlohmann::json::exception&) {
  }

  std::vector<std::uint32_t> source_rows;
  const TrainingSet train = archive.training_set(&source_rows);
  const auto test_rows = archive.rows_with(SampleRole::Test);
  std::vector<RtfVector> test;
  std::vector<double> truths;
  for (auto r : test_rows) {
    test.push_back(archive.rtf(r));
    truths.push_back(archive.rows[r].azimuth);
  }

  const bool needs_features = std::any_of(cfg.methods.begin(), cfg.methods.end(),
                                          [](const std::string& m) { return m != "gcc"; });
  Eigen::MatrixXd dist, cross;
  if (needs_features) {
    dist = pairwise_sq_distances(train.samples);
    cross = cross_sq_distances(test, train.samples);
  }

  for (const auto& method : cfg.methods) {
    MethodResult res;
    res.method = method;
    res.rows = test_rows;
    res.truths = truths;
    res.predictions.assign(test_rows.size(), std::nan(""));
    try {
      auto t0 = Clock::now();
      if (method == "mrl") {
        const auto fitted = fit_from_distances(train, dist, cfg.kernel, cfg.mrl);
        res.fit_seconds = seconds_since(t0);
        t0 = Clock::now();
        const auto& m = fitted.model;
        for (std::size_t t = 0; t < test.size(); ++t) {
          double acc = m.label_offset;
          for (Eigen::Index i = 0; i < m.weights.size(); ++i)
            acc += m.weights[i] * gaussian_from_sq(cross(t, i), m.epsilon_k);
          res.predictions[t] = acc;
        }
        res.diagnostics = {{"gamma_k", m.params.gamma_k},
                           {"gamma_m", m.params.gamma_m},
                           {"epsilon_k", fitted.kernel.epsilon_k},
                           {"epsilon_w", fitted.kernel.epsilon_w},
                           {"condition", m.diagnostics.condition_estimate},
                           {"loo_rmse", fitted.loo_rmse},
                           {"graph_connected", fitted.graph_connected ? 1.0 : 0.0}};
      } else if (method == "dds") {
        const auto fitted = fit_dds(train, dist, cfg.kernel, cfg.dds);
        res.fit_seconds = seconds_since(t0);
        t0 = Clock::now();
        for (std::size_t t = 0; t < test.size(); ++t) {
          try {
            const Eigen::VectorXd row = cross.row(t).transpose();
            res.predictions[t] = dds_estimate(fitted.model, nystrom_extend(fitted.model, row)).position;
          } catch (const ExtensionError&) {
            ++res.failures;
          }
        }
        res.diagnostics = {{"epsilon_w", fitted.kernel.epsilon_w},
                           {"epsilon_b", fitted.kernel.epsilon_b},
                           {"epsilon_gamma", fitted.kernel.epsilon_gamma},
                           {"lambda_1", fitted.model.embedding.eigenvalues[0]},
                           {"graph_connected", fitted.graph_connected ? 1.0 : 0.0}};
      } else if (method == "gcc") {
        Constellation cons = cfg.constellation;
        cons.rotation_deg = report.rotation_deg;
        for (std::size_t t = 0; t < test_rows.size(); ++t) {
          const auto& row = archive.rows[test_rows[t]];
          if (std::isnan(row.gcc_tdoa)) throw SignalError("archive row has no GCC delay");
          const auto inv = tdoa_to_constellation_azimuth(cons, row.gcc_tdoa, cfg.speed_of_sound);
          res.predictions[t] = inv.azimuth;
          if (!(row.gcc_peak_ratio >= kMinPeakToMedian)) ++res.failures;
        }
        res.fit_seconds = 0.0;
      } else {
        throw ConfigError("unknown method '" + method + "'");
      }
      res.predict_seconds = seconds_since(t0);

      std::vector<double> p, y;
      for (std::size_t t = 0; t < res.predictions.size(); ++t) {
        if (std::isnan(res.predictions[t])) continue;
        p.push_back(res.predictions[t]);
        y.push_back(res.truths[t]);
      }
      if (p.empty()) throw Error("evaluation", "no successful predictions");
      res.rmse = evaluate_rmse(p, y);
    } catch (const Error& e) {
      res.error = std::string(e.kind()) + ": " + e.what();
      res.rmse = std::nan("");
    }
    report.methods.push_back(std::move(res));
  }
  return report;
}

ScenarioConfig config_for(const ScenarioConfig& base, SweepAxis axis, double value) {
  ScenarioConfig c = base;
  if (axis == SweepAxis::T60) c.t60 = value / 1000.0;
  else c.test_snr_db = value;
  return c;
}

SweepReport run_sweep(const ScenarioConfig& base, SweepAxis axis, const std::vector<double>& values, int rotations,
                      const ProgressFn& progress) {
  if (values.empty()) throw ConfigError("sweep needs at least one axis value");
  if (rotations < 1) throw ConfigError("sweep needs at least one rotation");
  SweepReport report;
  report.axis = axis;
  report.values = values;
  for (std::size_t v = 0; v < values.size(); ++v) {
    config_for(base, axis, values[v]).validate();
    for (int r = 0; r < rotations; ++r) {
      SweepCell cell;
      cell.axis_value = values[v];
      cell.rotation_index = r;
      cell.rotation_deg = draw_rotation(base.seed, r);
      report.cells.push_back(cell);
    }
  }

  // Cells run concurrently; each one generates with a single thread.
  std::mutex progress_mutex;
  std::atomic<int> done{0};
  parallel_for(report.cells.size(), base.parallelism, [&](std::size_t i) {
    auto& cell = report.cells[i];
    const auto t0 = Clock::now();
    ScenarioConfig cfg = config_for(base, axis, cell.axis_value);
    cfg.parallelism = 1;
    try {
      const auto archive = generate_dataset(cfg, cell.rotation_deg, cell.rotation_index);
      const auto eval = evaluate_methods(cfg, archive);
      cell.dataset_hash = eval.dataset_hash;
      for (const auto& m : eval.methods) {
        if (m.error.empty()) cell.rmse[m.method] = m.rmse;
        else cell.errors[m.method] = m.error;
      }
    } catch (const std::exception& e) {
      for (const auto& m : base.methods) cell.errors[m] = e.what();
    }
    cell.seconds = seconds_since(t0);
    if (progress) {
      std::lock_guard lock(progress_mutex);
      std::string line = "cell " + std::to_string(++done) + "/" + std::to_string(report.cells.size()) + " value " +
                         std::to_string(cell.axis_value) + " rotation " + std::to_string(cell.rotation_index);
      for (const auto& [m, v] : cell.rmse) line += " " + m + "=" + std::to_string(v);
      for (const auto& [m, e] : cell.errors) line += " " + m + "=FAILED";
      progress(line);
    }
  });

  report.mean_rmse.resize(values.size());
  report.failed_cells.resize(values.size());
  for (std::size_t v = 0; v < values.size(); ++v) {
    for (const auto& method : base.methods) {
      double sum = 0.0;
      int count = 0, failed = 0;
      for (const auto& cell : report.cells) {
        if (cell.axis_value != values[v]) continue;
        if (auto it = cell.rmse.find(method); it != cell.rmse.end()) {
          sum += it->second;
          ++count;
        } else {
          ++failed;
        }
      }
      report.mean_rmse[v][method] = count > 0 ? sum / count : std::nan("");
      report.failed_cells[v][method] = failed;
    }
  }
  return report;
}

SequentialReport run_sequential(const ScenarioConfig& cfg, const ProgressFn& progress) {
  cfg.validate();
  const auto& seq = cfg.sequential;
  Constellation cons = cfg.constellation;
  cons.azimuth_low = seq.azimuth_low;
  cons.azimuth_high = seq.azimuth_high;
  cons.rotation_deg = 0.0;

  std::vector<PlannedRow> plan;
  const auto grid = uniform_grid(seq.azimuth_low, seq.azimuth_high, seq.num_labelled);
  for (int i = 0; i < seq.num_labelled; ++i) plan.push_back({SampleRole::Labelled, grid[i], std::uint64_t(i)});
  const auto pool = uniform_draws(cfg.seed, 0, SampleRole::Unlabelled, seq.azimuth_low, seq.azimuth_high,
                                  seq.initial_unlabelled);
  for (std::size_t i = 0; i < pool.size(); ++i) plan.push_back({SampleRole::Unlabelled, pool[i], i});
  const auto fresh = uniform_draws(cfg.seed, 0, SampleRole::Test, seq.azimuth_low, seq.azimuth_high,
                                   seq.cycles * seq.batch);
  for (std::size_t i = 0; i < fresh.size(); ++i) plan.push_back({SampleRole::Test, fresh[i], i});

  ScenarioConfig scfg = cfg;
  scfg.constellation = cons;
  const auto archive = simulate_rows(scfg, cons, 0, plan, cfg.parallelism);

  SequentialReport report;
  report.dataset_hash = archive_hash(archive);
  MrlOptions options = cfg.mrl;
  options.scale_policy = seq.scale_policy;
  AdaptiveSession session(archive.training_set(), cfg.kernel, options, seq.refit_every);

  const auto test_rows = archive.rows_with(SampleRole::Test);
  for (int c = 0; c < seq.cycles; ++c) {
    std::vector<double> truth, pred;
    std::vector<RtfVector> batch;
    for (int b = 0; b < seq.batch; ++b) {
      const auto row = test_rows[static_cast<std::size_t>(c * seq.batch + b)];
      batch.push_back(archive.rtf(row));
      truth.push_back(archive.rows[row].azimuth);
      pred.push_back(session.localize(batch.back()));
    }
    report.rmse.push_back(evaluate_rmse(pred, truth));
    report.training_size.push_back(session.training_set().size());
    report.truths.push_back(std::move(truth));
    report.predictions.push_back(std::move(pred));
    if (progress)
      progress("cycle " + std::to_string(c + 1) + "/" + std::to_string(seq.cycles) + " N=" +
               std::to_string(report.training_size.back()) + " rmse=" + std::to_string(report.rmse.back()));
    if (c + 1 == seq.cycles) break;
    try {
      for (const auto& h : batch) session.accept(h);
    } catch (const Error& e) {
      report.error = std::string(e.kind()) + ": " + e.what();
      break;
    }
  }
  return report;
}

}  // namespace mrloc::harness
