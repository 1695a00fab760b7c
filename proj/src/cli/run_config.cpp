#include "qthermo/cli/run_config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <set>

#include "qthermo/errors.hpp"
#include "qthermo/scene_io.hpp"

namespace qthermo::cli {

using nlohmann::json;

namespace {

void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError(where, "expected an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, _] : j.items()) {
    if (!ok.count(key)) throw ConfigError(where.empty() ? key : where + "." + key, "unknown field");
  }
}

std::string join(const std::string& where, const std::string& key) {
  return where.empty() ? key : where + "." + key;
}

double get_number(const json& j, const std::string& where, const std::string& key, double fallback) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (!v.is_number()) throw ConfigError(join(where, key), "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ConfigError(join(where, key), "must be finite");
  return x;
}

double get_positive(const json& j, const std::string& where, const std::string& key,
                    double fallback) {
  const double x = get_number(j, where, key, fallback);
  if (!(x > 0.0)) throw ConfigError(join(where, key), "must be positive");
  return x;
}

int get_int(const json& j, const std::string& where, const std::string& key, int fallback,
            int min_value) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (!v.is_number_integer()) throw ConfigError(join(where, key), "expected an integer");
  const auto x = v.get<long long>();
  if (x < min_value || x > 1'000'000'000) {
    throw ConfigError(join(where, key), "must be >= " + std::to_string(min_value));
  }
  return static_cast<int>(x);
}

bool get_bool(const json& j, const std::string& where, const std::string& key, bool fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_boolean()) throw ConfigError(join(where, key), "expected true or false");
  return j.at(key).get<bool>();
}

std::string get_string(const json& j, const std::string& where, const std::string& key,
                       const std::string& fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_string()) throw ConfigError(join(where, key), "expected a string");
  return j.at(key).get<std::string>();
}

std::array<double, 2> get_pair(const json& v, const std::string& where) {
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
    throw ConfigError(where, "expected [x, y]");
  }
  return {v[0].get<double>(), v[1].get<double>()};
}

template <typename F>
auto rethrow_as_config(const std::string& where, F&& f) {
  try {
    return f();
  } catch (const DomainError& e) {
    throw ConfigError(where, e.what());
  }
}

thermal::ThermalScene load_preset(const std::string& data_dir, const std::string& name) {
  const auto path = scene::preset_path(data_dir, name);
  if (!std::filesystem::exists(path)) throw ConfigError("scene", "unknown preset '" + name + "'");
  return scene::load_scene(path);
}

thermal::ThermalScene parse_scene(const json& root, const std::string& data_dir) {
  if (!root.contains("scene")) return load_preset(data_dir, "al_bridge");
  const json& s = root.at("scene");
  if (s.is_string()) return load_preset(data_dir, s.get<std::string>());
  if (s.is_object() && s.contains("preset")) {
    check_keys(s, "scene", {"preset"});
    return load_preset(data_dir, get_string(s, "scene", "preset", ""));
  }
  if (!s.is_object()) throw ConfigError("scene", "expected a preset name or a scene object");
  return scene::scene_from_json(s, "scene");
}

source::FwmParams parse_source(const json& root, const std::string& data_dir) {
  const json s = root.value("source", json::object());
  if (!s.is_object()) throw ConfigError("source", "expected an object");
  check_keys(s, "source",
             {"preset", "gain", "eta_p", "eta_c", "seed_flux", "excess_noise_p", "excess_noise_c"});
  const std::string preset = get_string(s, "source", "preset", "calibrated");
  const json base = scene::read_json_file(scene::preset_path(data_dir, "source_" + preset));
  const auto defaults = scene::fwm_from_json(base, "source.preset");
  return scene::fwm_from_json(s, "source", defaults);
}

thermal::DriveWaveform parse_drive(const json& root) {
  thermal::DriveWaveform d;
  d.amplitude = 0.1;
  if (!root.contains("drive")) return d;
  const json& j = root.at("drive");
  check_keys(j, "drive", {"kind", "amplitude", "modulation_frequency", "duty"});
  const std::string kind = get_string(j, "drive", "kind", "dc_square");
  if (kind == "dc_square") {
    d.kind = thermal::DriveWaveform::Kind::dc_square;
  } else if (kind == "rf_square") {
    d.kind = thermal::DriveWaveform::Kind::rf_square;
  } else {
    throw ConfigError("drive.kind", "expected 'dc_square' or 'rf_square'");
  }
  d.amplitude = get_number(j, "drive", "amplitude", d.amplitude);
  d.modulation_frequency = get_positive(j, "drive", "modulation_frequency", d.modulation_frequency);
  d.duty = get_number(j, "drive", "duty", d.duty);
  rethrow_as_config("drive", [&] { d.validate(); });
  return d;
}

imaging::ScanConfig parse_scan(const json& root) {
  imaging::ScanConfig s;
  s.origin_x = 186e-6;
  s.origin_y = 51e-6;
  if (!root.contains("scan")) return s;
  const json& j = root.at("scan");
  check_keys(j, "scan", {"nx", "ny", "step_um", "origin_um", "dwell_s", "move_time_s", "source_mode"});
  s.nx = get_int(j, "scan", "nx", s.nx, 1);
  s.ny = get_int(j, "scan", "ny", s.ny, 1);
  s.step = get_positive(j, "scan", "step_um", s.step * 1e6) * 1e-6;
  if (j.contains("origin_um")) {
    const auto o = get_pair(j.at("origin_um"), "scan.origin_um");
    s.origin_x = o[0] * 1e-6;
    s.origin_y = o[1] * 1e-6;
  }
  s.dwell = get_positive(j, "scan", "dwell_s", s.dwell);
  s.move_time = get_number(j, "scan", "move_time_s", s.move_time);
  const std::string mode = get_string(j, "scan", "source_mode", "squeezed");
  if (mode == "squeezed") {
    s.source_mode = detect::SourceMode::squeezed;
  } else if (mode == "coherent") {
    s.source_mode = detect::SourceMode::coherent;
  } else {
    throw ConfigError("scan.source_mode", "expected 'squeezed' or 'coherent'");
  }
  rethrow_as_config("scan", [&] { s.validate(); });
  return s;
}

imaging::DetectionConfig parse_detection(const json& root) {
  imaging::DetectionConfig d;
  if (!root.contains("detection")) return d;
  const json& j = root.at("detection");
  check_keys(j, "detection",
             {"bin_duration_s", "detector_efficiency", "gate_fraction", "spot_diameter_um",
              "probe_power_w", "laser_heating"});
  d.bin_duration = get_positive(j, "detection", "bin_duration_s", d.bin_duration);
  d.detector_efficiency = get_number(j, "detection", "detector_efficiency", d.detector_efficiency);
  d.gate_fraction = get_number(j, "detection", "gate_fraction", d.gate_fraction);
  d.spot_diameter = get_positive(j, "detection", "spot_diameter_um", d.spot_diameter * 1e6) * 1e-6;
  d.probe_power = get_number(j, "detection", "probe_power_w", d.probe_power);
  d.laser_heating = get_bool(j, "detection", "laser_heating", d.laser_heating);
  rethrow_as_config("detection", [&] { d.validate(); });
  return d;
}

OptimizeOptions parse_optimize(const json& root) {
  OptimizeOptions o;
  if (!root.contains("optimize")) return o;
  const json& j = root.at("optimize");
  check_keys(j, "optimize", {"eta_p", "gain", "gain_range", "gain_points", "eta_points"});
  o.eta_p = get_number(j, "optimize", "eta_p", o.eta_p);
  if (!(o.eta_p > 0.0 && o.eta_p <= 1.0)) throw ConfigError("optimize.eta_p", "must lie in (0, 1]");
  o.gain = get_number(j, "optimize", "gain", o.gain);
  if (!(o.gain >= 1.0)) throw ConfigError("optimize.gain", "must be >= 1");
  if (j.contains("gain_range")) {
    const auto r = get_pair(j.at("gain_range"), "optimize.gain_range");
    if (!(r[0] >= 1.0 && r[1] > r[0])) {
      throw ConfigError("optimize.gain_range", "expected 1 <= min < max");
    }
    o.gain_min = r[0];
    o.gain_max = r[1];
  }
  o.gain_points = get_int(j, "optimize", "gain_points", o.gain_points, 2);
  o.eta_points = get_int(j, "optimize", "eta_points", o.eta_points, 2);
  return o;
}

TransientOptions parse_transient(const json& root, const thermal::ThermalScene& scene) {
  TransientOptions t;
  const json j = root.value("transient", json::object());
  check_keys(j, "transient", {"positions_um", "cycles", "rebin", "variance_groups", "write_traces"});
  if (j.contains("positions_um")) {
    const json& p = j.at("positions_um");
    if (!p.is_array() || p.empty()) throw ConfigError("transient.positions_um", "expected a non-empty array");
    for (std::size_t k = 0; k < p.size(); ++k) {
      const auto xy = get_pair(p[k], "transient.positions_um[" + std::to_string(k) + "]");
      t.positions.push_back({xy[0] * 1e-6, xy[1] * 1e-6});
    }
  } else {
    t.positions.push_back({0.5 * scene.width(), 0.5 * scene.height()});
  }
  for (std::size_t k = 0; k < t.positions.size(); ++k) {
    const auto& xy = t.positions[k];
    if (xy[0] < 0.0 || xy[0] > scene.width() || xy[1] < 0.0 || xy[1] > scene.height()) {
      throw ConfigError("transient.positions_um[" + std::to_string(k) + "]",
                        "position lies outside the scene");
    }
  }
  t.cycles = get_int(j, "transient", "cycles", t.cycles, 100);
  t.rebin = get_int(j, "transient", "rebin", t.rebin, 1);
  t.variance_groups = get_int(j, "transient", "variance_groups", t.variance_groups, 1);
  t.write_traces = get_bool(j, "transient", "write_traces", t.write_traces);
  return t;
}

NoiseOptions parse_noise(const json& root) {
  NoiseOptions n;
  if (!root.contains("noise")) return n;
  const json& j = root.at("noise");
  check_keys(j, "noise",
             {"technical_corner_hz", "f_max_hz", "points", "durations_s", "repeats",
              "compare_coherent"});
  n.technical_corner = get_positive(j, "noise", "technical_corner_hz", n.technical_corner);
  n.f_max = get_positive(j, "noise", "f_max_hz", n.f_max);
  if (!(n.technical_corner < n.f_max)) {
    throw ConfigError("noise.f_max_hz", "must exceed technical_corner_hz");
  }
  n.points = get_int(j, "noise", "points", n.points, 2);
  if (j.contains("durations_s")) {
    const json& d = j.at("durations_s");
    if (!d.is_array() || d.size() < 2) throw ConfigError("noise.durations_s", "expected >= 2 values");
    n.durations.clear();
    for (const auto& v : d) {
      if (!v.is_number() || !(v.get<double>() > 0.0)) {
        throw ConfigError("noise.durations_s", "durations must be positive numbers");
      }
      n.durations.push_back(v.get<double>());
    }
  }
  const auto [lo, hi] = std::minmax_element(n.durations.begin(), n.durations.end());
  if (*hi / *lo < 100.0 * (1.0 - 1e-12)) {
    throw ConfigError("noise.durations_s", "durations must span at least two decades");
  }
  n.repeats = get_int(j, "noise", "repeats", n.repeats, 2);
  n.compare_coherent = get_bool(j, "noise", "compare_coherent", n.compare_coherent);
  return n;
}

FitCommandOptions parse_fit(const json& root) {
  FitCommandOptions f;
  if (!root.contains("fit")) return f;
  const json& j = root.at("fit");
  check_keys(j, "fit", {"modulation_frequency", "duty", "rebin", "phase"});
  f.modulation_frequency = get_positive(j, "fit", "modulation_frequency", f.modulation_frequency);
  f.duty = get_number(j, "fit", "duty", f.duty);
  if (!(f.duty > 0.0 && f.duty < 1.0)) throw ConfigError("fit.duty", "must lie in (0, 1)");
  f.rebin = get_int(j, "fit", "rebin", f.rebin, 1);
  const std::string phase = get_string(j, "fit", "phase", "heating");
  if (phase == "heating") {
    f.phase = analysis::Phase::heating;
  } else if (phase == "cooling") {
    f.phase = analysis::Phase::cooling;
  } else {
    throw ConfigError("fit.phase", "expected 'heating' or 'cooling'");
  }
  return f;
}

}  // namespace

json load_config_document(const std::string& path) {
  json doc = scene::read_json_file(path);
  if (doc.is_object() && doc.contains("manifest_version")) {
    if (!doc.contains("config") || !doc.at("config").is_object()) {
      throw ConfigError("config", "manifest has no embedded config");
    }
    return doc.at("config");
  }
  return doc;
}

RunConfig parse_run_config(json document, const Overrides& overrides, const std::string& data_dir) {
  if (!document.is_object()) throw ConfigError("(root)", "config must be a JSON object");
  if (overrides.seed) document["seed"] = *overrides.seed;
  if (overrides.threads) document["threads"] = *overrides.threads;
  if (overrides.output_dir) document["output_dir"] = *overrides.output_dir;
  if (!document.contains("schema_version")) document["schema_version"] = kSchemaVersion;

  check_keys(document, "",
             {"schema_version", "seed", "threads", "output_dir", "scene", "source", "drive", "scan",
              "detection", "optimize", "transient", "noise", "fit"});
  const json& version = document.at("schema_version");
  if (!version.is_number_integer() || version.get<int>() != kSchemaVersion) {
    throw ConfigError("schema_version", "unsupported version (expected 1)");
  }

  RunConfig cfg;
  if (document.contains("seed")) {
    const json& s = document.at("seed");
    if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<long long>() >= 0)) {
      throw ConfigError("seed", "expected a non-negative integer");
    }
    cfg.seed = s.get<std::uint64_t>();
  }
  cfg.threads = get_int(document, "", "threads", 1, 1);
  cfg.output_dir = get_string(document, "", "output_dir", cfg.output_dir);
  if (cfg.output_dir.empty()) throw ConfigError("output_dir", "must not be empty");

  cfg.scene = parse_scene(document, data_dir);
  cfg.source = parse_source(document, data_dir);
  cfg.drive = parse_drive(document);
  cfg.scan = parse_scan(document);
  cfg.detection = parse_detection(document);
  cfg.detection.threads = cfg.threads;
  cfg.optimize = parse_optimize(document);
  cfg.transient = parse_transient(document, cfg.scene);
  cfg.noise = parse_noise(document);
  cfg.fit = parse_fit(document);

  const double bins = 1.0 / (cfg.drive.modulation_frequency * cfg.detection.bin_duration);
  if (std::fabs(bins - std::round(bins)) > 1e-6 * bins || std::round(bins) < 2) {
    throw ConfigError("detection.bin_duration_s",
                      "modulation period must be an integer number of bins");
  }
  const auto& s = cfg.scan;
  const double tol = 1e-9 * cfg.scene.cell_size;
  if (s.origin_x < -tol || s.origin_y < -tol ||
      s.origin_x + s.nx * s.step > cfg.scene.width() + tol ||
      s.origin_y + s.ny * s.step > cfg.scene.height() + tol) {
    throw ConfigError("scan", "scan window exceeds the scene bounds");
  }
  if (cfg.scene.metal.c_tr == 0.0) throw ConfigError("scene.materials.metal.c_tr", "must be non-zero");
  cfg.document = std::move(document);
  return cfg;
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string config_hash(const json& document) {
  json copy = document;
  copy.erase("threads");
  copy.erase("output_dir");
  return hex64(fnv1a64(copy.dump()));
}

}  // namespace qthermo::cli
