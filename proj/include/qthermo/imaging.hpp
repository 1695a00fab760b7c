#pragma once

// Raster scan: a precomputed periodic thermal response is read out pixel by
// pixel through the photon-count and lock-in chain.

#include <cstdint>
#include <string>
#include <vector>

#include "qthermo/detection.hpp"
#include "qthermo/thermal.hpp"
#include "qthermo/twin_beam.hpp"

namespace qthermo::imaging {

struct ScanConfig {
  int nx = 10;
  int ny = 10;
  double step = 4.8e-6;        // m
  double origin_x = 0.0;       // m, lower-left corner of the scan window
  double origin_y = 0.0;
  double dwell = 50e-3;        // s per pixel
  double move_time = 0.3e-3;   // s per step
  detect::SourceMode source_mode = detect::SourceMode::squeezed;

  double pixel_x(int i) const { return origin_x + (i + 0.5) * step; }
  double pixel_y(int j) const { return origin_y + (j + 0.5) * step; }
  std::size_t pixels() const { return static_cast<std::size_t>(nx) * ny; }
  void validate() const;
};

struct DetectionConfig {
  double bin_duration = 0.1e-6;       // 250 bins per 40 kHz cycle
  double detector_efficiency = 0.95;
  double gate_fraction = 0.6;
  double spot_diameter = 25e-6;       // 1/e^2
  double probe_power = 25e-6;         // W at the sample
  bool laser_heating = false;         // report steady probe heating per pixel
  int threads = 1;

  void validate() const;
};

/// Periodic steady-state film/substrate fields, one per time bin of a cycle.
struct ThermalResponse {
  thermal::ModulatedRun run;
  int bins_per_cycle = 0;
  double modulation_frequency = 0.0;
  double duty = 0.5;
  int warmup_cycles = 0;
};

/// Simulates at least five slow time constants, then runs to periodic steady
/// state (1 mK between successive cycles) or `max_cycles`.
ThermalResponse prepare_thermal(const thermal::ThermalScene& scene,
                                const thermal::DriveWaveform& drive, double bin_duration,
                                int max_cycles = 400);

/// Spot-weighted film temperature rise for every bin of the cycle.
std::vector<double> spot_temperature_cycle(const thermal::ThermalScene& scene,
                                           const ThermalResponse& response,
                                           const detect::SpotFootprint& footprint);

/// Detector trace for a probe parked at (x, y) for `n_cycles` drive cycles.
/// Throws DomainError when the spot misses the metal.
detect::DetectorTrace simulate_pixel_trace(const thermal::ThermalScene& scene,
                                           const ThermalResponse& response, double x, double y,
                                           const source::FwmParams& source,
                                           detect::SourceMode mode, std::size_t n_cycles,
                                           const DetectionConfig& detection, std::uint64_t seed,
                                           std::uint32_t pixel_index);

/// One pixel through the full chain. Invalid (off-device) pixels come back
/// with valid = false and NaN estimates.
detect::PixelEstimate measure_pixel(const thermal::ThermalScene& scene,
                                    const ThermalResponse& response, double x, double y,
                                    const source::FwmParams& source, detect::SourceMode mode,
                                    double dwell, const DetectionConfig& detection,
                                    std::uint64_t seed, std::uint32_t pixel_index);

/// Lock-in estimate of the same pixel without photon noise.
double noiseless_pixel_dT(const thermal::ThermalScene& scene, const ThermalResponse& response,
                          double x, double y, const DetectionConfig& detection);

struct HeatMapImage {
  ScanConfig scan;
  std::string scene_name;
  std::vector<detect::PixelEstimate> pixels;  // row-major, index j * nx + i
  std::vector<double> truth_dT;               // noiseless lock-in value per pixel, K
  std::vector<double> metal_fraction;
  double total_acquisition_time = 0.0;        // s
  bool thermal_converged = false;

  const detect::PixelEstimate& at(int i, int j) const {
    return pixels[static_cast<std::size_t>(j) * scan.nx + i];
  }
};

/// Throws DomainError when the scan window leaves the scene.
HeatMapImage acquire_image(const thermal::ThermalScene& scene, const thermal::DriveWaveform& drive,
                           const ScanConfig& scan, const source::FwmParams& source,
                           std::uint64_t seed, const DetectionConfig& detection = {});

/// Same, reusing a thermal response computed by `prepare_thermal`.
HeatMapImage acquire_image(const thermal::ThermalScene& scene, const ThermalResponse& response,
                           const ScanConfig& scan, const source::FwmParams& source,
                           std::uint64_t seed, const DetectionConfig& detection = {});

/// dT uncertainty scaling as 1/sqrt(averaging time) from one reference point.
struct NoiseModel {
  double reference_dT = 42e-3;     // K
  double reference_time = 50e-3;   // s

  double at(double averaging_time) const;
};

/// Reference point derived from the photon statistics of a detected source.
NoiseModel noise_model_for(const source::FwmParams& detected, detect::SourceMode mode,
                           double c_tr, double gate_fraction, double reference_time = 50e-3);

struct AcquisitionBudget {
  double total_time = 0.0;     // s
  double per_pixel_dT = 0.0;   // K
};

AcquisitionBudget acquisition_budget(const ScanConfig& scan, const NoiseModel& model = {});

struct ModalityComparison {
  HeatMapImage squeezed;
  HeatMapImage coherent;
  std::vector<double> std_error_ratio;  // squeezed / coherent, NaN on invalid pixels
  double median_ratio = 0.0;
};

ModalityComparison compare_modalities(const thermal::ThermalScene& scene,
                                      const ThermalResponse& response, const ScanConfig& scan,
                                      const source::FwmParams& squeezed, std::uint64_t seed,
                                      const DetectionConfig& detection = {});

}  // namespace qthermo::imaging
