#include "mrloc/harness/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <sstream>

#include "mrloc/error.hpp"
#include "mrloc/hashing.hpp"

namespace mrloc::harness {
namespace {

std::string fmt(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  double v = 0.0;
  auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (res.ec != std::errc() || res.ptr != t.data() + t.size())
    throw ConfigError(key + ": expected a number, got '" + text + "'");
  return v;
}

long parse_long(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  long v = 0;
  auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (res.ec != std::errc() || res.ptr != t.data() + t.size())
    throw ConfigError(key + ": expected an integer, got '" + text + "'");
  return v;
}

int parse_int(const std::string& key, const std::string& text) { return static_cast<int>(parse_long(key, text)); }

bool parse_bool(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  throw ConfigError(key + ": expected true/false, got '" + text + "'");
}

std::vector<double> parse_list(const std::string& key, const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!trim(item).empty()) out.push_back(parse_double(key, item));
  return out;
}

std::string join(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + fmt(v[i]);
  return s;
}

Point parse_point(const std::string& key, const std::string& text) {
  const auto v = parse_list(key, text);
  if (v.size() != 3) throw ConfigError(key + ": expected x,y,z");
  return {v[0], v[1], v[2]};
}

std::string fmt_point(const Point& p) { return join({p.x, p.y, p.z}); }

}  // namespace

void ScenarioConfig::validate() const {
  if (num_train < 1 || num_labelled < 1 || num_test < 1) throw ConfigError("sample counts must be at least 1");
  if (num_labelled > num_train) throw ConfigError("scenario.num_labelled exceeds scenario.num_train");
  if (!(source_duration > 0.0)) throw ConfigError("scenario.source_duration must be positive");
  if (!(t60 > 0.0)) throw ConfigError("room.t60 must be positive");
  if (!(constellation.azimuth_low < constellation.azimuth_high))
    throw ConfigError("constellation azimuth range is empty");
  if (sequential.cycles < 1 || sequential.batch < 1 || sequential.num_labelled < 1 || sequential.refit_every < 1 ||
      sequential.initial_unlabelled < 0)
    throw ConfigError("sequential counts must be positive");
  if (!(sequential.azimuth_low < sequential.azimuth_high)) throw ConfigError("sequential azimuth range is empty");
  if (rotations < 1) throw ConfigError("run.rotations must be at least 1");
  if (parallelism < 1) throw ConfigError("run.parallelism must be at least 1");
  if (kernel.num_neighbors < 1) throw ConfigError("kernel.num_neighbors must be at least 1");
  if (dds.dimension < 1) throw ConfigError("dds.dimension must be at least 1");
  for (const auto& m : methods)
    if (m != "mrl" && m != "dds" && m != "gcc") throw ConfigError("unknown method '" + m + "'");
  mrl.params.validate();
}

RoomSpec ScenarioConfig::room() const {
  RoomSpec r = room_with_t60(room_dimensions, t60, speed_of_sound, sample_rate);
  r.max_image_order = max_image_order;
  r.rir_length = rir_length;
  return r;
}

void set_value(ScenarioConfig& c, const std::string& key, const std::string& value) {
  const std::string v = trim(value);
  if (key == "room.dimensions") {
    const auto d = parse_list(key, v);
    if (d.size() != 3) throw ConfigError(key + ": expected three lengths");
    c.room_dimensions = {d[0], d[1], d[2]};
  } else if (key == "room.speed_of_sound") c.speed_of_sound = parse_double(key, v);
  else if (key == "room.sample_rate") c.sample_rate = parse_double(key, v);
  else if (key == "room.t60") c.t60 = parse_double(key, v);
  else if (key == "room.max_image_order") c.max_image_order = parse_int(key, v);
  else if (key == "room.rir_length") c.rir_length = parse_long(key, v);
  else if (key == "constellation.mic1") c.constellation.mic1 = parse_point(key, v);
  else if (key == "constellation.mic2") c.constellation.mic2 = parse_point(key, v);
  else if (key == "constellation.source_radius") c.constellation.source_radius = parse_double(key, v);
  else if (key == "constellation.azimuth_low") c.constellation.azimuth_low = parse_double(key, v);
  else if (key == "constellation.azimuth_high") c.constellation.azimuth_high = parse_double(key, v);
  else if (key == "scenario.num_train") c.num_train = parse_int(key, v);
  else if (key == "scenario.num_labelled") c.num_labelled = parse_int(key, v);
  else if (key == "scenario.num_test") c.num_test = parse_int(key, v);
  else if (key == "scenario.source_duration") c.source_duration = parse_double(key, v);
  else if (key == "scenario.train_snr_db") c.train_snr_db = parse_double(key, v);
  else if (key == "scenario.test_snr_db") c.test_snr_db = parse_double(key, v);
  else if (key == "scenario.seed") c.seed = static_cast<std::uint64_t>(parse_long(key, v));
  else if (key == "features.window") c.welch.window_s = parse_double(key, v);
  else if (key == "features.overlap") c.welch.overlap = parse_double(key, v);
  else if (key == "features.fft_size") c.welch.fft_size = parse_int(key, v);
  else if (key == "features.window_function") {
    if (v == "hann") c.welch.window = WindowKind::Hann;
    else if (v == "rectangular") c.welch.window = WindowKind::Rectangular;
    else throw ConfigError(key + ": expected hann or rectangular");
  } else if (key == "features.band_high_hz") c.band_high_hz = parse_double(key, v);
  else if (key == "features.band_first_bin") c.band_first_bin = parse_int(key, v);
  else if (key == "kernel.num_neighbors") c.kernel.num_neighbors = parse_int(key, v);
  else if (key == "kernel.eps_k") c.kernel.epsilon_k = parse_double(key, v);
  else if (key == "kernel.eps_w") c.kernel.epsilon_w = parse_double(key, v);
  else if (key == "kernel.eps_b") c.kernel.epsilon_b = parse_double(key, v);
  else if (key == "kernel.eps_gamma") c.kernel.epsilon_gamma = parse_double(key, v);
  else if (key == "mrl.gamma_k") c.mrl.params.gamma_k = parse_double(key, v);
  else if (key == "mrl.gamma_m") c.mrl.params.gamma_m = parse_double(key, v);
  else if (key == "mrl.center_labels") c.mrl.center_labels = parse_bool(key, v);
  else if (key == "mrl.grid_search") c.mrl.grid_search = parse_bool(key, v);
  else if (key == "mrl.gamma_grid") c.mrl.gamma_grid = parse_list(key, v);
  else if (key == "mrl.scale_policy") {
    if (v == "frozen") c.mrl.scale_policy = ScalePolicy::Frozen;
    else if (v == "rescale") c.mrl.scale_policy = ScalePolicy::Rescale;
    else throw ConfigError(key + ": expected frozen or rescale");
  } else if (key == "dds.dimension") c.dds.dimension = parse_int(key, v);
  else if (key == "dds.on_vanishing") {
    if (v == "error") c.dds.on_vanishing = VanishingAffinity::Error;
    else if (v == "zero") c.dds.on_vanishing = VanishingAffinity::ZeroVector;
    else throw ConfigError(key + ": expected error or zero");
  } else if (key == "gcc.weighting") {
    if (v == "none") c.gcc_weighting = GccWeighting::None;
    else if (v == "phat") c.gcc_weighting = GccWeighting::Phat;
    else throw ConfigError(key + ": expected none or phat");
  } else if (key == "sequential.azimuth_low") c.sequential.azimuth_low = parse_double(key, v);
  else if (key == "sequential.azimuth_high") c.sequential.azimuth_high = parse_double(key, v);
  else if (key == "sequential.num_labelled") c.sequential.num_labelled = parse_int(key, v);
  else if (key == "sequential.initial_unlabelled") c.sequential.initial_unlabelled = parse_int(key, v);
  else if (key == "sequential.cycles") c.sequential.cycles = parse_int(key, v);
  else if (key == "sequential.batch") c.sequential.batch = parse_int(key, v);
  else if (key == "sequential.refit_every") c.sequential.refit_every = parse_int(key, v);
  else if (key == "sequential.scale_policy") {
    if (v == "frozen") c.sequential.scale_policy = ScalePolicy::Frozen;
    else if (v == "rescale") c.sequential.scale_policy = ScalePolicy::Rescale;
    else throw ConfigError(key + ": expected frozen or rescale");
  } else if (key == "run.methods") {
    c.methods.clear();
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ','))
      if (!trim(item).empty()) c.methods.push_back(trim(item));
  } else if (key == "run.rotations") c.rotations = parse_int(key, v);
  else if (key == "run.parallelism") c.parallelism = parse_int(key, v);
  else throw ConfigError("unknown configuration key '" + key + "'");
}

std::vector<std::pair<std::string, std::string>> to_pairs(const ScenarioConfig& c) {
  auto policy = [](ScalePolicy p) { return std::string(p == ScalePolicy::Frozen ? "frozen" : "rescale"); };
  std::string methods;
  for (std::size_t i = 0; i < c.methods.size(); ++i) methods += (i ? "," : "") + c.methods[i];
  return {
      {"room.dimensions", join({c.room_dimensions[0], c.room_dimensions[1], c.room_dimensions[2]})},
      {"room.speed_of_sound", fmt(c.speed_of_sound)},
      {"room.sample_rate", fmt(c.sample_rate)},
      {"room.t60", fmt(c.t60)},
      {"room.max_image_order", std::to_string(c.max_image_order)},
      {"room.rir_length", std::to_string(c.rir_length)},
      {"constellation.mic1", fmt_point(c.constellation.mic1)},
      {"constellation.mic2", fmt_point(c.constellation.mic2)},
      {"constellation.source_radius", fmt(c.constellation.source_radius)},
      {"constellation.azimuth_low", fmt(c.constellation.azimuth_low)},
      {"constellation.azimuth_high", fmt(c.constellation.azimuth_high)},
      {"scenario.num_train", std::to_string(c.num_train)},
      {"scenario.num_labelled", std::to_string(c.num_labelled)},
      {"scenario.num_test", std::to_string(c.num_test)},
      {"scenario.source_duration", fmt(c.source_duration)},
      {"scenario.train_snr_db", fmt(c.train_snr_db)},
      {"scenario.test_snr_db", fmt(c.test_snr_db)},
      {"scenario.seed", std::to_string(c.seed)},
      {"features.window", fmt(c.welch.window_s)},
      {"features.overlap", fmt(c.welch.overlap)},
      {"features.fft_size", std::to_string(c.welch.fft_size)},
      {"features.window_function", c.welch.window == WindowKind::Hann ? "hann" : "rectangular"},
      {"features.band_high_hz", fmt(c.band_high_hz)},
      {"features.band_first_bin", std::to_string(c.band_first_bin)},
      {"kernel.num_neighbors", std::to_string(c.kernel.num_neighbors)},
      {"kernel.eps_k", fmt(c.kernel.epsilon_k)},
      {"kernel.eps_w", fmt(c.kernel.epsilon_w)},
      {"kernel.eps_b", fmt(c.kernel.epsilon_b)},
      {"kernel.eps_gamma", fmt(c.kernel.epsilon_gamma)},
      {"mrl.gamma_k", fmt(c.mrl.params.gamma_k)},
      {"mrl.gamma_m", fmt(c.mrl.params.gamma_m)},
      {"mrl.center_labels", c.mrl.center_labels ? "true" : "false"},
      {"mrl.grid_search", c.mrl.grid_search ? "true" : "false"},
      {"mrl.gamma_grid", join(c.mrl.gamma_grid)},
      {"mrl.scale_policy", policy(c.mrl.scale_policy)},
      {"dds.dimension", std::to_string(c.dds.dimension)},
      {"dds.on_vanishing", c.dds.on_vanishing == VanishingAffinity::Error ? "error" : "zero"},
      {"gcc.weighting", c.gcc_weighting == GccWeighting::None ? "none" : "phat"},
      {"sequential.azimuth_low", fmt(c.sequential.azimuth_low)},
      {"sequential.azimuth_high", fmt(c.sequential.azimuth_high)},
      {"sequential.num_labelled", std::to_string(c.sequential.num_labelled)},
      {"sequential.initial_unlabelled", std::to_string(c.sequential.initial_unlabelled)},
      {"sequential.cycles", std::to_string(c.sequential.cycles)},
      {"sequential.batch", std::to_string(c.sequential.batch)},
      {"sequential.refit_every", std::to_string(c.sequential.refit_every)},
      {"sequential.scale_policy", policy(c.sequential.scale_policy)},
      {"run.methods", methods},
      {"run.rotations", std::to_string(c.rotations)},
      {"run.parallelism", std::to_string(c.parallelism)},
  };
}

ScenarioConfig load_config(const std::string& path) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(path, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError("malformed config " + path + ": " + e.message() + " (line " + std::to_string(e.line()) + ")");
  }
  ScenarioConfig cfg;
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw ConfigError(path + ": key '" + section + "' outside any section");
    for (const auto& [key, node] : body) set_value(cfg, section + "." + key, node.get_value<std::string>());
  }
  cfg.validate();
  return cfg;
}

void apply_override(ScenarioConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("override '" + assignment + "' is not section.key=value");
  set_value(cfg, trim(assignment.substr(0, eq)), assignment.substr(eq + 1));
}

std::string to_ini(const ScenarioConfig& cfg) {
  std::string out, section;
  for (const auto& [key, value] : to_pairs(cfg)) {
    const auto dot = key.find('.');
    const std::string sec = key.substr(0, dot);
    if (sec != section) {
      out += (out.empty() ? "[" : "\n[") + sec + "]\n";
      section = sec;
    }
    out += key.substr(dot + 1) + " = " + value + "\n";
  }
  return out;
}

std::string config_hash(const ScenarioConfig& cfg) { return sha256_hex(to_ini(cfg)); }

void apply_paper_scale(ScenarioConfig& cfg) {
  cfg.num_train = 400;
  cfg.num_test = 120;
  cfg.source_duration = 3.0;
  cfg.rotations = 50;
  cfg.sequential.cycles = 9;
  cfg.sequential.batch = 90;
}

}  // namespace mrloc::harness
