#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "pnsim/experiment.hpp"
#include "pnsim/version.hpp"

// JSON run configuration. Unknown keys are rejected by name, parse errors
// are reported with a line number, and the effective configuration (defaults
// and command line overrides folded in) is hashed so every output file can
// be traced back to the exact settings that produced it.

namespace pnsim {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Pump power sweep settings. slope == 0 requests calibration against the
/// target label-1 rate at the anchor power.
struct SweepSection {
  std::vector<double> powers;
  std::uint64_t pulses_per_point = 0;
  double slope = 0.0;
  double target_rate_hz = 11800.0;
  double anchor_power = 40.0;
  int n_max = 4;
};

struct RunConfig {
  ExperimentConfig experiment;
  int n_max = 4;  // herald labels carried through to outputs
  std::optional<SweepSection> sweep;
};

namespace cfgdetail {

using json = nlohmann::json;

inline std::size_t line_of_byte(const std::string& text, std::size_t byte) {
  const std::size_t end = std::min(byte, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(),
                                                 text.begin() + static_cast<std::ptrdiff_t>(end),
                                                 '\n'));
}

inline void reject_unknown(const json& obj, const std::string& where,
                           std::initializer_list<const char*> allowed) {
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    bool ok = false;
    for (const char* a : allowed)
      if (key == a) ok = true;
    if (!ok) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

template <typename T>
T get_or(const json& obj, const char* key, T fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("key '") + key + "' in " + where + " has the wrong type");
  }
}

template <typename T>
T require(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) throw ConfigError(std::string("missing key '") + key + "' in " + where);
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("key '") + key + "' in " + where + " has the wrong type");
  }
}

inline DetectorConfig parse_detector(const json& obj, const std::string& where,
                                     double default_efficiency) {
  reject_unknown(obj, where,
                 {"efficiency", "dark_mean", "gain", "excess_noise", "baseline_sigma", "deadspot"});
  DetectorConfig d;
  d.efficiency = get_or(obj, "efficiency", default_efficiency, where);
  d.dark_mean = get_or(obj, "dark_mean", d.dark_mean, where);
  d.gain = get_or(obj, "gain", d.gain, where);
  d.excess_noise = get_or(obj, "excess_noise", d.excess_noise, where);
  d.baseline_sigma = get_or(obj, "baseline_sigma", d.baseline_sigma, where);
  if (obj.contains("deadspot")) {
    const json& ds = obj.at("deadspot");
    const std::string dw = where + ".deadspot";
    if (!ds.is_object()) throw ConfigError(dw + " must be an object");
    reject_unknown(ds, dw, {"active_diameter", "spot_diameter", "beam_sigma"});
    DeadSpotGeometry g;
    g.active_diameter = get_or(ds, "active_diameter", g.active_diameter, dw);
    g.spot_diameter = get_or(ds, "spot_diameter", g.spot_diameter, dw);
    g.beam_sigma = get_or(ds, "beam_sigma", g.beam_sigma, dw);
    d.deadspot = g;
  }
  try {
    d.validate();
  } catch (const std::exception& e) {
    throw ConfigError("invalid " + where + " settings: " + e.what());
  }
  return d;
}

inline json detector_json(const DetectorConfig& d) {
  json o;
  o["efficiency"] = d.efficiency;
  o["dark_mean"] = d.dark_mean;
  o["gain"] = d.gain;
  o["excess_noise"] = d.excess_noise;
  o["baseline_sigma"] = d.baseline_sigma;
  if (d.deadspot) {
    json ds;
    ds["active_diameter"] = d.deadspot->active_diameter;
    ds["spot_diameter"] = d.deadspot->spot_diameter;
    ds["beam_sigma"] = d.deadspot->beam_sigma;
    o["deadspot"] = ds;
  }
  return o;
}

}  // namespace cfgdetail

/// Parses a configuration from JSON text. `name` labels error messages
/// (normally the file path).
inline RunConfig parse_config(const std::string& text, const std::string& name) {
  using cfgdetail::get_or;
  using cfgdetail::reject_unknown;
  using cfgdetail::require;
  using json = nlohmann::json;

  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(name + ":" + std::to_string(cfgdetail::line_of_byte(text, e.byte)) +
                      ": " + e.what());
  }
  if (!root.is_object()) throw ConfigError(name + ": top level must be an object");
  reject_unknown(root, "top level",
                 {"source", "trigger", "monitor", "classification", "windows", "num_pulses",
                  "rep_rate_hz", "seed", "histogram", "sweep"});

  RunConfig cfg;
  ExperimentConfig& exp = cfg.experiment;

  if (root.contains("source")) {
    const json& src = root.at("source");
    if (!src.is_object()) throw ConfigError("'source' must be an object");
    reject_unknown(src, "source", {"kind", "mean_pairs"});
    const std::string kind = get_or<std::string>(src, "kind", "poisson", "source");
    if (kind == "poisson")
      exp.source.kind = SourceKind::poisson;
    else if (kind == "thermal")
      exp.source.kind = SourceKind::thermal;
    else
      throw ConfigError("source.kind must be 'poisson' or 'thermal', got '" + kind + "'");
    exp.source.mean_pairs = require<double>(src, "mean_pairs", "source");
  }

  if (root.contains("trigger"))
    exp.trigger = cfgdetail::parse_detector(root.at("trigger"), "trigger", 0.68);
  else
    exp.trigger.efficiency = 0.68;
  if (root.contains("monitor"))
    exp.monitor = cfgdetail::parse_detector(root.at("monitor"), "monitor", 0.58);

  const std::string mode =
      get_or<std::string>(root, "classification", "pulse_height", "top level");
  if (mode == "pulse_height")
    exp.classification = TriggerClassification::pulse_height;
  else if (mode == "detected_count")
    exp.classification = TriggerClassification::detected_count;
  else
    throw ConfigError("classification must be 'pulse_height' or 'detected_count', got '" + mode +
                      "'");

  cfg.n_max = 4;
  std::vector<ScaWindow> explicit_windows;
  if (root.contains("windows")) {
    const json& win = root.at("windows");
    if (!win.is_object()) throw ConfigError("'windows' must be an object");
    reject_unknown(win, "windows", {"n_max", "explicit"});
    cfg.n_max = get_or(win, "n_max", cfg.n_max, "windows");
    if (win.contains("explicit")) {
      const json& arr = win.at("explicit");
      if (!arr.is_array()) throw ConfigError("windows.explicit must be an array");
      for (std::size_t i = 0; i < arr.size(); ++i) {
        const std::string ww = "windows.explicit[" + std::to_string(i) + "]";
        const json& w = arr[i];
        if (!w.is_object()) throw ConfigError(ww + " must be an object");
        reject_unknown(w, ww, {"label", "low", "high"});
        explicit_windows.push_back(ScaWindow{require<int>(w, "label", ww),
                                             require<double>(w, "low", ww),
                                             require<double>(w, "high", ww)});
      }
    }
  }
  if (cfg.n_max < 1) throw ConfigError("windows.n_max must be >= 1");
  exp.windows = explicit_windows.empty() ? default_windows(exp.trigger, cfg.n_max)
                                         : ScaWindows(explicit_windows);
  if (!explicit_windows.empty()) cfg.n_max = exp.windows.max_label();

  exp.num_pulses = get_or<std::uint64_t>(root, "num_pulses", 100000, "top level");
  exp.rep_rate_hz = get_or(root, "rep_rate_hz", exp.rep_rate_hz, "top level");
  exp.seed = get_or<std::uint64_t>(root, "seed", exp.seed, "top level");

  if (root.contains("histogram")) {
    const json& h = root.at("histogram");
    if (!h.is_object()) throw ConfigError("'histogram' must be an object");
    reject_unknown(h, "histogram", {"low", "width", "nbins"});
    exp.hist.low = get_or(h, "low", exp.hist.low, "histogram");
    exp.hist.width = get_or(h, "width", exp.hist.width, "histogram");
    exp.hist.nbins = get_or(h, "nbins", exp.hist.nbins, "histogram");
  } else {
    exp.hist = HistogramSpec::for_detector(exp.trigger, cfg.n_max);
  }

  if (root.contains("sweep")) {
    const json& sw = root.at("sweep");
    if (!sw.is_object()) throw ConfigError("'sweep' must be an object");
    reject_unknown(sw, "sweep",
                   {"powers", "pulses_per_point", "slope", "calibrate", "n_max"});
    SweepSection s;
    s.powers = require<std::vector<double>>(sw, "powers", "sweep");
    s.pulses_per_point = require<std::uint64_t>(sw, "pulses_per_point", "sweep");
    s.n_max = get_or(sw, "n_max", cfg.n_max, "sweep");
    if (sw.contains("slope") && sw.contains("calibrate"))
      throw ConfigError("sweep: give either 'slope' or 'calibrate', not both");
    if (sw.contains("slope")) {
      s.slope = require<double>(sw, "slope", "sweep");
      if (!(s.slope > 0.0)) throw ConfigError("sweep.slope must be > 0");
    } else if (sw.contains("calibrate")) {
      const json& cal = sw.at("calibrate");
      if (!cal.is_object()) throw ConfigError("sweep.calibrate must be an object");
      reject_unknown(cal, "sweep.calibrate", {"target_rate_hz", "anchor_power"});
      s.target_rate_hz = get_or(cal, "target_rate_hz", s.target_rate_hz, "sweep.calibrate");
      s.anchor_power = get_or(cal, "anchor_power", s.anchor_power, "sweep.calibrate");
    }
    cfg.sweep = std::move(s);
  }

  try {
    exp.validate();
  } catch (const std::exception& e) {
    throw ConfigError(std::string("invalid configuration: ") + e.what());
  }
  return cfg;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << is.rdbuf();
  return parse_config(buf.str(), path);
}

/// Canonical JSON dump of the effective configuration. Key order is fixed,
/// so equal configurations hash equally regardless of input formatting.
inline std::string canonical_config(const RunConfig& cfg) {
  using json = nlohmann::ordered_json;
  const ExperimentConfig& exp = cfg.experiment;
  json root;
  root["source"]["kind"] = exp.source.kind == SourceKind::poisson ? "poisson" : "thermal";
  root["source"]["mean_pairs"] = exp.source.mean_pairs;
  root["trigger"] = json::parse(cfgdetail::detector_json(exp.trigger).dump());
  root["monitor"] = json::parse(cfgdetail::detector_json(exp.monitor).dump());
  root["classification"] = to_string(exp.classification);
  json wins = json::array();
  for (const auto& w : exp.windows.windows()) {
    json o;
    o["label"] = w.label;
    o["low"] = w.low;
    o["high"] = w.high;
    wins.push_back(o);
  }
  root["windows"] = wins;
  root["n_max"] = cfg.n_max;
  root["num_pulses"] = exp.num_pulses;
  root["rep_rate_hz"] = exp.rep_rate_hz;
  root["seed"] = exp.seed;
  root["histogram"]["low"] = exp.hist.low;
  root["histogram"]["width"] = exp.hist.width;
  root["histogram"]["nbins"] = exp.hist.nbins;
  if (cfg.sweep) {
    root["sweep"]["powers"] = cfg.sweep->powers;
    root["sweep"]["pulses_per_point"] = cfg.sweep->pulses_per_point;
    root["sweep"]["slope"] = cfg.sweep->slope;
    root["sweep"]["target_rate_hz"] = cfg.sweep->target_rate_hz;
    root["sweep"]["anchor_power"] = cfg.sweep->anchor_power;
    root["sweep"]["n_max"] = cfg.sweep->n_max;
  }
  return root.dump();
}

inline std::string config_hash(const RunConfig& cfg) {
  return to_hex(fnv1a(canonical_config(cfg)));
}

}  // namespace pnsim
