#include "mrloc/harness/reports.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "mrloc/error.hpp"

namespace mrloc::harness {
namespace {

using nlohmann::ordered_json;

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  return out;
}

ordered_json config_json(const ScenarioConfig& cfg) {
  ordered_json j;
  for (const auto& [key, value] : to_pairs(cfg)) j[key] = value;
  return j;
}

void write_json(const std::string& path, const ordered_json& j) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
  if (!out) throw IoError("failed writing " + path);
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string output_directory(const std::string& requested) {
  std::string dir = requested;
  if (dir.empty()) {
    const char* env = std::getenv("MRLOC_OUTPUT_DIR");
    dir = env && *env ? env : ".";
  }
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir + ": " + ec.message());
  return dir;
}

std::string write_evaluation(const std::string& dir, const std::string& stem, const ScenarioConfig& cfg,
                             const EvaluationReport& report) {
  const std::string csv = dir + "/" + stem + "_predictions.csv";
  {
    auto out = open_out(csv);
    out << "method,row,truth,prediction,error\n";
    for (const auto& m : report.methods)
      for (std::size_t i = 0; i < m.rows.size(); ++i)
        out << m.method << ',' << m.rows[i] << ',' << format_double(m.truths[i]) << ','
            << format_double(m.predictions[i]) << ',' << format_double(m.predictions[i] - m.truths[i]) << '\n';
    if (!out) throw IoError("failed writing " + csv);
  }

  ordered_json j;
  j["config_hash"] = report.config_hash;
  j["dataset_hash"] = report.dataset_hash;
  j["seed"] = cfg.seed;
  j["source"] = kSourceDescription;
  j["rotation_deg"] = report.rotation_deg;
  j["predictions_file"] = stem + "_predictions.csv";
  ordered_json methods = ordered_json::object();
  for (const auto& m : report.methods) {
    ordered_json e;
    if (m.error.empty()) e["rmse"] = m.rmse;
    else e["error"] = m.error;
    e["num_test"] = m.rows.size();
    e["failures"] = m.failures;
    ordered_json diag = ordered_json::object();
    for (const auto& [k, v] : m.diagnostics) diag[k] = v;
    e["diagnostics"] = diag;
    e["timings"] = {{"fit_seconds", m.fit_seconds}, {"predict_seconds", m.predict_seconds}};
    methods[m.method] = e;
  }
  j["methods"] = methods;
  j["config"] = config_json(cfg);
  const std::string path = dir + "/" + stem + ".json";
  write_json(path, j);
  return path;
}

std::string write_sweep(const std::string& dir, const ScenarioConfig& cfg, const SweepReport& report) {
  const char* axis = report.axis == SweepAxis::T60 ? "t60_ms" : "snr_db";
  {
    auto out = open_out(dir + "/sweep_cells.csv");
    out << axis << ",rotation_index,rotation_deg,method,rmse,dataset_hash,error\n";
    for (const auto& c : report.cells) {
      for (const auto& m : cfg.methods) {
        auto it = c.rmse.find(m);
        auto err = c.errors.find(m);
        out << format_double(c.axis_value) << ',' << c.rotation_index << ',' << format_double(c.rotation_deg) << ','
            << m << ',' << (it != c.rmse.end() ? format_double(it->second) : "") << ',' << c.dataset_hash << ','
            << (err != c.errors.end() ? "\"" + err->second + "\"" : "") << '\n';
      }
    }
  }
  {
    auto out = open_out(dir + "/sweep_" + std::string(axis) + ".dat");
    out << "# " << axis;
    for (const auto& m : cfg.methods) out << ' ' << m;
    out << '\n';
    for (std::size_t v = 0; v < report.values.size(); ++v) {
      out << format_double(report.values[v]);
      for (const auto& m : cfg.methods) out << ' ' << format_double(report.mean_rmse[v].at(m));
      out << '\n';
    }
  }

  ordered_json j;
  j["axis"] = axis;
  j["config_hash"] = config_hash(cfg);
  j["seed"] = cfg.seed;
  j["source"] = kSourceDescription;
  j["values"] = report.values;
  ordered_json summary = ordered_json::array();
  for (std::size_t v = 0; v < report.values.size(); ++v) {
    ordered_json row;
    row["value"] = report.values[v];
    ordered_json mean = ordered_json::object(), failed = ordered_json::object();
    for (const auto& m : cfg.methods) {
      const double r = report.mean_rmse[v].at(m);
      mean[m] = std::isnan(r) ? ordered_json(nullptr) : ordered_json(r);
      failed[m] = report.failed_cells[v].at(m);
    }
    row["mean_rmse"] = mean;
    row["failed_cells"] = failed;
    summary.push_back(row);
  }
  j["summary"] = summary;
  ordered_json cells = ordered_json::array();
  double total = 0.0;
  for (const auto& c : report.cells) {
    ordered_json e;
    e["value"] = c.axis_value;
    e["rotation_index"] = c.rotation_index;
    e["rotation_deg"] = c.rotation_deg;
    e["dataset_hash"] = c.dataset_hash;
    ordered_json rmse = ordered_json::object();
    for (const auto& [m, r] : c.rmse) rmse[m] = r;
    e["rmse"] = rmse;
    if (!c.errors.empty()) {
      ordered_json errs = ordered_json::object();
      for (const auto& [m, err] : c.errors) errs[m] = err;
      e["errors"] = errs;
    }
    e["seconds"] = c.seconds;
    total += c.seconds;
    cells.push_back(e);
  }
  j["cells"] = cells;
  j["timings"] = {{"cell_seconds_total", total}};
  j["config"] = config_json(cfg);
  const std::string path = dir + "/sweep.json";
  write_json(path, j);
  return path;
}

std::string write_sequential(const std::string& dir, const ScenarioConfig& cfg, const SequentialReport& report) {
  {
    auto out = open_out(dir + "/sequential.csv");
    out << "cycle,n_train,rmse\n";
    for (std::size_t c = 0; c < report.rmse.size(); ++c)
      out << (c + 1) << ',' << report.training_size[c] << ',' << format_double(report.rmse[c]) << '\n';
  }
  {
    auto out = open_out(dir + "/sequential_predictions.csv");
    out << "method,row,truth,prediction,error\n";
    std::size_t row = 0;
    for (std::size_t c = 0; c < report.predictions.size(); ++c)
      for (std::size_t i = 0; i < report.predictions[c].size(); ++i, ++row)
        out << "mrl_cycle" << (c + 1) << ',' << row << ',' << format_double(report.truths[c][i]) << ','
            << format_double(report.predictions[c][i]) << ','
            << format_double(report.predictions[c][i] - report.truths[c][i]) << '\n';
  }
  ordered_json j;
  j["config_hash"] = config_hash(cfg);
  j["dataset_hash"] = report.dataset_hash;
  j["seed"] = cfg.seed;
  j["source"] = kSourceDescription;
  j["rmse"] = report.rmse;
  j["training_size"] = report.training_size;
  if (!report.error.empty()) j["error"] = report.error;
  j["config"] = config_json(cfg);
  const std::string path = dir + "/sequential.json";
  write_json(path, j);
  return path;
}

StoredPredictions read_predictions_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("method,row,truth,prediction", 0) != 0)
    throw IoError(path + ": not a predictions file");
  StoredPredictions s;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string method, row, truth, pred;
    if (!std::getline(ss, method, ',') || !std::getline(ss, row, ',') || !std::getline(ss, truth, ',') ||
        !std::getline(ss, pred, ','))
      throw IoError(path + ": malformed line " + std::to_string(lineno));
    auto num = [&](const std::string& t) {
      if (t == "nan") return std::nan("");
      double v = 0.0;
      auto res = std::from_chars(t.data(), t.data() + t.size(), v);
      if (res.ec != std::errc()) throw IoError(path + ": bad number on line " + std::to_string(lineno));
      return v;
    };
    s.truths[method].push_back(num(truth));
    s.predictions[method].push_back(num(pred));
  }
  return s;
}

std::map<std::string, double> recompute_rmse(const StoredPredictions& stored) {
  std::map<std::string, double> out;
  for (const auto& [method, preds] : stored.predictions) {
    const auto& truths = stored.truths.at(method);
    std::vector<double> p, y;
    for (std::size_t i = 0; i < preds.size(); ++i) {
      if (std::isnan(preds[i])) continue;
      p.push_back(preds[i]);
      y.push_back(truths[i]);
    }
    out[method] = p.empty() ? std::nan("") : evaluate_rmse(p, y);
  }
  return out;
}

}  // namespace mrloc::harness
