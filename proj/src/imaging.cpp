#include "qthermo/imaging.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <memory>
#include <thread>

#include "qthermo/errors.hpp"

namespace qthermo::imaging {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

detect::PixelEstimate invalid_pixel() {
  detect::PixelEstimate p;
  p.delta_r_over_r = kNaN;
  p.delta_t = kNaN;
  p.std_error = kNaN;
  p.std_error_relative = kNaN;
  p.noise_rel_shot_db = kNaN;
  p.valid = false;
  return p;
}

std::vector<double> reflectivity_series(const std::vector<double>& dT_cycle, double c_tr,
                                        std::size_t n_bins) {
  std::vector<double> r(n_bins);
  const std::size_t bpc = dT_cycle.size();
  for (std::size_t k = 0; k < n_bins; ++k) r[k] = 1.0 + c_tr * dT_cycle[k % bpc];
  return r;
}

double median(std::vector<double> v) {
  if (v.empty()) return kNaN;
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  const double upper = v[mid];
  if (v.size() % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + mid);
  return 0.5 * (lower + upper);
}

}  // namespace

void ScanConfig::validate() const {
  if (nx < 1 || ny < 1) throw DomainError("scan grid must be at least 1x1");
  if (!(step > 0.0)) throw DomainError("scan step must be positive");
  if (!(dwell > 0.0)) throw DomainError("dwell must be positive");
  if (!(move_time >= 0.0)) throw DomainError("move_time must be non-negative");
}

void DetectionConfig::validate() const {
  if (!(bin_duration > 0.0)) throw DomainError("bin_duration must be positive");
  if (!(detector_efficiency > 0.0 && detector_efficiency <= 1.0)) {
    throw DomainError("detector_efficiency must lie in (0, 1]");
  }
  if (!(gate_fraction > 0.0 && gate_fraction <= 1.0)) {
    throw DomainError("gate_fraction must lie in (0, 1]");
  }
  if (!(spot_diameter > 0.0)) throw DomainError("spot_diameter must be positive");
  if (!(probe_power >= 0.0)) throw DomainError("probe_power must be non-negative");
  if (threads < 1) throw DomainError("threads must be >= 1");
}

ThermalResponse prepare_thermal(const thermal::ThermalScene& scene,
                                const thermal::DriveWaveform& drive, double bin_duration,
                                int max_cycles) {
  drive.validate();
  const double bins = 1.0 / (drive.modulation_frequency * bin_duration);
  const int bpc = static_cast<int>(std::lround(bins));
  if (bpc < 2 || std::fabs(bins - bpc) > 1e-6 * bpc) {
    throw DomainError("modulation period must span an integer number of bins");
  }
  const double tau = thermal::slowest_time_constant(scene);
  const int warmup = static_cast<int>(std::ceil(5.0 * tau / drive.period()));
  thermal::ModulatedOptions options;
  options.min_cycles = std::max(2, warmup + 1);
  ThermalResponse out;
  out.run = thermal::run_modulated(scene, drive, std::max(max_cycles, options.min_cycles), bpc,
                                   options);
  out.bins_per_cycle = bpc;
  out.modulation_frequency = drive.modulation_frequency;
  out.duty = drive.duty;
  out.warmup_cycles = out.run.cycles_run - 1;
  return out;
}

std::vector<double> spot_temperature_cycle(const thermal::ThermalScene& /*scene*/,
                                           const ThermalResponse& response,
                                           const detect::SpotFootprint& footprint) {
  std::vector<double> out;
  out.reserve(response.run.cycle.size());
  for (const auto& field : response.run.cycle) out.push_back(footprint.weighted_film_dT(field));
  return out;
}

detect::DetectorTrace simulate_pixel_trace(const thermal::ThermalScene& scene,
                                           const ThermalResponse& response, double x, double y,
                                           const source::FwmParams& source,
                                           detect::SourceMode mode, std::size_t n_cycles,
                                           const DetectionConfig& detection, std::uint64_t seed,
                                           std::uint32_t pixel_index) {
  const detect::ProbeSpot spot{x, y, detection.spot_diameter, detection.probe_power};
  const detect::SpotFootprint footprint(spot, scene);
  if (footprint.metal_fraction() < detect::kMinMetalFraction) {
    throw DomainError("probe spot is entirely off the device");
  }
  const double eff = detection.detector_efficiency;
  const auto detected =
      source::with_extra_loss(source, std::min(1.0, footprint.metal_fraction()) * eff, eff);
  const auto dT = spot_temperature_cycle(scene, response, footprint);
  const std::size_t n_bins = n_cycles * static_cast<std::size_t>(response.bins_per_cycle);
  const auto twin =
      detect::source_trace(detected, mode, n_bins, detection.bin_duration, seed, pixel_index);
  const auto r = reflectivity_series(dT, scene.metal.c_tr, n_bins);
  return detect::synthesize_trace(twin, r, 1.0, response.modulation_frequency, response.duty);
}

detect::PixelEstimate measure_pixel(const thermal::ThermalScene& scene,
                                    const ThermalResponse& response, double x, double y,
                                    const source::FwmParams& source, detect::SourceMode mode,
                                    double dwell, const DetectionConfig& detection,
                                    std::uint64_t seed, std::uint32_t pixel_index) {
  const detect::ProbeSpot spot{x, y, detection.spot_diameter, detection.probe_power};
  if (detect::SpotFootprint(spot, scene).metal_fraction() < detect::kMinMetalFraction) {
    return invalid_pixel();
  }
  const auto n_cycles = static_cast<std::size_t>(
      std::max(2L, std::lround(dwell * response.modulation_frequency)));
  const auto trace = simulate_pixel_trace(scene, response, x, y, source, mode, n_cycles, detection,
                                          seed, pixel_index);
  return detect::lock_in_demodulate(trace, scene.metal, detection.gate_fraction);
}

double noiseless_pixel_dT(const thermal::ThermalScene& scene, const ThermalResponse& response,
                          double x, double y, const DetectionConfig& detection) {
  const detect::ProbeSpot spot{x, y, detection.spot_diameter, detection.probe_power};
  const detect::SpotFootprint footprint(spot, scene);
  if (footprint.metal_fraction() < detect::kMinMetalFraction) return kNaN;
  const auto dT = spot_temperature_cycle(scene, response, footprint);
  const std::size_t n_bins = 2 * static_cast<std::size_t>(response.bins_per_cycle);
  source::FwmParams unit;
  const auto twin = source::expected_twin_beams(unit, n_bins, detection.bin_duration);
  const auto r = reflectivity_series(dT, scene.metal.c_tr, n_bins);
  const auto trace =
      detect::synthesize_trace(twin, r, 1.0, response.modulation_frequency, response.duty);
  return detect::lock_in_demodulate(trace, scene.metal, detection.gate_fraction).delta_t;
}

HeatMapImage acquire_image(const thermal::ThermalScene& scene, const thermal::DriveWaveform& drive,
                           const ScanConfig& scan, const source::FwmParams& source,
                           std::uint64_t seed, const DetectionConfig& detection) {
  scan.validate();
  detection.validate();
  const auto response = prepare_thermal(scene, drive, detection.bin_duration);
  return acquire_image(scene, response, scan, source, seed, detection);
}

HeatMapImage acquire_image(const thermal::ThermalScene& scene, const ThermalResponse& response,
                           const ScanConfig& scan, const source::FwmParams& source,
                           std::uint64_t seed, const DetectionConfig& detection) {
  scan.validate();
  detection.validate();
  source.validate();
  const double tol = 1e-9 * scene.cell_size;
  if (scan.origin_x < -tol || scan.origin_y < -tol ||
      scan.origin_x + scan.nx * scan.step > scene.width() + tol ||
      scan.origin_y + scan.ny * scan.step > scene.height() + tol) {
    throw DomainError("scan window exceeds the scene bounds");
  }

  HeatMapImage image;
  image.scan = scan;
  image.scene_name = scene.name;
  image.thermal_converged = response.run.converged;
  const std::size_t n = scan.pixels();
  image.pixels.resize(n);
  image.truth_dT.resize(n);
  image.metal_fraction.resize(n);
  image.total_acquisition_time = static_cast<double>(n) * (scan.dwell + scan.move_time);

  std::unique_ptr<thermal::SteadySolver> heating;
  if (detection.laser_heating) heating = std::make_unique<thermal::SteadySolver>(scene);

  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t p = next++; p < n; p = next++) {
      const int i = static_cast<int>(p % scan.nx), j = static_cast<int>(p / scan.nx);
      const double x = scan.pixel_x(i), y = scan.pixel_y(j);
      const detect::ProbeSpot spot{x, y, detection.spot_diameter, detection.probe_power};
      image.metal_fraction[p] = detect::SpotFootprint(spot, scene).metal_fraction();
      image.pixels[p] = measure_pixel(scene, response, x, y, source, scan.source_mode, scan.dwell,
                                      detection, seed, static_cast<std::uint32_t>(p));
      image.truth_dT[p] = noiseless_pixel_dT(scene, response, x, y, detection);
      if (heating && image.pixels[p].valid) {
        const auto field = heating->solve(thermal::laser_source(scene, spot));
        image.pixels[p].probe_heating =
            *std::max_element(field.film_dT.begin(), field.film_dT.end());
      }
    }
  };
  const int n_threads = static_cast<int>(std::min<std::size_t>(detection.threads, n));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return image;
}

double NoiseModel::at(double averaging_time) const {
  if (!(averaging_time > 0.0)) throw DomainError("averaging time must be positive");
  return reference_dT * std::sqrt(reference_time / averaging_time);
}

NoiseModel noise_model_for(const source::FwmParams& detected, detect::SourceMode mode,
                           double c_tr, double gate_fraction, double reference_time) {
  if (c_tr == 0.0) throw DomainError("c_tr must be non-zero");
  const double rel =
      detect::predicted_relative_uncertainty(detected, mode, reference_time, gate_fraction);
  return {rel / std::fabs(c_tr), reference_time};
}

AcquisitionBudget acquisition_budget(const ScanConfig& scan, const NoiseModel& model) {
  scan.validate();
  AcquisitionBudget b;
  b.total_time = static_cast<double>(scan.pixels()) * (scan.dwell + scan.move_time);
  b.per_pixel_dT = model.at(scan.dwell);
  return b;
}

ModalityComparison compare_modalities(const thermal::ThermalScene& scene,
                                      const ThermalResponse& response, const ScanConfig& scan,
                                      const source::FwmParams& squeezed, std::uint64_t seed,
                                      const DetectionConfig& detection) {
  ModalityComparison out;
  ScanConfig s = scan;
  s.source_mode = detect::SourceMode::squeezed;
  out.squeezed = acquire_image(scene, response, s, squeezed, seed, detection);
  s.source_mode = detect::SourceMode::coherent;
  out.coherent = acquire_image(scene, response, s, squeezed, seed, detection);
  std::vector<double> finite;
  out.std_error_ratio.resize(scan.pixels(), kNaN);
  for (std::size_t p = 0; p < scan.pixels(); ++p) {
    const auto& a = out.squeezed.pixels[p];
    const auto& b = out.coherent.pixels[p];
    if (!a.valid || !b.valid || !(b.std_error > 0.0)) continue;
    out.std_error_ratio[p] = a.std_error / b.std_error;
    finite.push_back(out.std_error_ratio[p]);
  }
  out.median_ratio = median(std::move(finite));
  return out;
}

}  // namespace qthermo::imaging
