#pragma once

// Run configuration (JSON, schema_version 1). Parsing validates everything a
// command needs, so no output is written for a bad config.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "qthermo/analysis.hpp"
#include "qthermo/imaging.hpp"
#include "qthermo/thermal.hpp"
#include "qthermo/twin_beam.hpp"

namespace qthermo::cli {

inline constexpr int kSchemaVersion = 1;

struct OptimizeOptions {
  double eta_p = 0.75;         // probe transmission for the gain/conjugate surface
  double gain = 5.0;           // gain for the probe/conjugate surface
  double gain_min = 1.0;
  double gain_max = 10.0;
  int gain_points = 91;
  int eta_points = 100;        // transmissions k / eta_points, k = 1..eta_points
};

struct TransientOptions {
  std::vector<std::array<double, 2>> positions;  // m
  int cycles = 4000;
  int rebin = 1;
  int variance_groups = 10;
  bool write_traces = false;
};

struct NoiseOptions {
  double technical_corner = 1e3;  // Hz
  double f_max = 1e6;             // Hz
  int points = 200;
  std::vector<double> durations = {1e-5, 1e-4, 1e-3, 1e-2, 5e-2};
  int repeats = 100;
  bool compare_coherent = true;
};

struct FitCommandOptions {
  double modulation_frequency = 40e3;
  double duty = 0.5;
  int rebin = 1;
  analysis::Phase phase = analysis::Phase::heating;  // label for two-column input
};

struct RunConfig {
  nlohmann::json document;  // effective config (overrides applied)
  std::uint64_t seed = 1;
  int threads = 1;
  std::string output_dir = "qthermo_out";
  thermal::ThermalScene scene;
  source::FwmParams source;
  thermal::DriveWaveform drive;
  imaging::ScanConfig scan;
  imaging::DetectionConfig detection;
  OptimizeOptions optimize;
  TransientOptions transient;
  NoiseOptions noise;
  FitCommandOptions fit;
};

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<std::string> output_dir;
};

/// Reads a config file; a run manifest is accepted and its embedded config used.
nlohmann::json load_config_document(const std::string& path);

/// Throws ConfigError naming the offending field.
RunConfig parse_run_config(nlohmann::json document, const Overrides& overrides,
                           const std::string& data_dir);

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(const std::string& bytes);
std::string hex64(std::uint64_t v);

/// Hash of the config with execution-only knobs (threads, output_dir) removed.
std::string config_hash(const nlohmann::json& document);

}  // namespace qthermo::cli
