#pragma once

// Thermoreflectance readout: temperature -> reflectivity, balanced
// probe-minus-conjugate photocounts, and gated hot/cold lock-in demodulation.

#include <cstdint>
#include <span>
#include <vector>

#include "qthermo/probe_spot.hpp"
#include "qthermo/thermal.hpp"
#include "qthermo/twin_beam.hpp"

namespace qthermo::detect {

enum class FrameLabel : std::uint8_t { cold = 0, hot = 1, transition = 2 };

enum class SourceMode : std::uint8_t { squeezed, coherent };

struct DetectorTrace {
  std::vector<double> probe;         // reflected probe photons per bin
  std::vector<double> conjugate;     // conjugate photons per bin
  std::vector<double> differential;  // probe - conjugate
  std::vector<FrameLabel> labels;
  double bin_duration = 0.0;          // s
  double modulation_frequency = 0.0;  // Hz
  double duty = 0.5;

  std::size_t size() const { return differential.size(); }
  /// Throws DomainError unless a cycle spans an integer number of bins.
  int bins_per_cycle() const;
  std::size_t full_cycles() const { return size() / static_cast<std::size_t>(bins_per_cycle()); }
};

struct PixelEstimate {
  double delta_r_over_r = 0.0;
  double delta_t = 0.0;             // K
  double std_error = 0.0;           // K
  double std_error_relative = 0.0;  // same, in units of dR/R
  double noise_rel_shot_db = 0.0;
  int n_cycles_averaged = 0;
  bool valid = true;
  double probe_heating = 0.0;       // K, peak steady laser heating (when computed)
};

/// dR/R = c_tr * dT.
double reflectivity_from_temperature(double delta_t, const thermal::Material& material);

/// Gaussian spot footprint restricted to metal cells of a scene.
class SpotFootprint {
 public:
  SpotFootprint(const ProbeSpot& spot, const thermal::ThermalScene& scene);

  /// Share of the spot's power landing on metal.
  double metal_fraction() const { return metal_fraction_; }
  /// Cold reflectivity seen by the spot; off-metal light counts as lost.
  double reflectivity() const { return reflectivity_; }
  /// Intensity-weighted film temperature over the metal part of the spot.
  double weighted_film_dT(const thermal::TemperatureField& field) const;
  const std::vector<CellWeight>& metal_weights() const { return weights_; }

 private:
  std::vector<CellWeight> weights_;  // normalized to sum 1 over metal
  double metal_fraction_ = 0.0;
  double reflectivity_ = 0.0;
};

/// Spots returning less than this share of light are treated as off-device.
inline constexpr double kMinMetalFraction = 1e-3;

struct EffectiveReflection {
  double reflectivity = 0.0;    // cold reflectivity weighted by the spot
  double mean_dT = 0.0;         // K, spot-weighted over metal
  double delta_r_over_r = 0.0;  // c_tr * mean_dT
  double metal_fraction = 0.0;
};

/// Throws DomainError when the spot center leaves the grid or the spot
/// misses the metal entirely.
EffectiveReflection effective_reflection(const ProbeSpot& spot, const thermal::ThermalScene& scene,
                                         const thermal::TemperatureField& field);

/// Shot-noise-limited uncertainty of dR/R for N detected photons: 1/sqrt(N).
double shot_noise_limit(double n_photons);

/// Drive-phase labels; a bin straddling a switching edge is a transition.
std::vector<FrameLabel> frame_labels(std::size_t n_bins, int bins_per_cycle, double duty);

/// Scales the probe by R(t)/R0 (R0 = cold-frame mean of the series), thins
/// both beams by the detector efficiency and forms the difference.
DetectorTrace synthesize_trace(const source::TwinBeamTrace& twin,
                               std::span<const double> reflectivity, double detector_efficiency,
                               double modulation_frequency, double duty = 0.5);

/// Gated hot-minus-cold estimate. Each half-cycle contributes its last
/// `gate_fraction` of bins; the per-cycle estimates are averaged.
PixelEstimate lock_in_demodulate(const DetectorTrace& trace, const thermal::Material& material,
                                 double gate_fraction = 0.6);

/// Photon-count trace for one measurement: the source after extra probe/conjugate
/// transmission, either squeezed or as a coherent pair with the same means.
source::TwinBeamTrace source_trace(const source::FwmParams& detected, SourceMode mode,
                                   std::size_t n_bins, double bin_duration, std::uint64_t seed,
                                   std::uint32_t stream_index);

/// Analytic white-noise uncertainty of the gated lock-in estimate of dR/R
/// after `duration` seconds of modulated measurement.
double predicted_relative_uncertainty(const source::FwmParams& detected, SourceMode mode,
                                      double duration, double gate_fraction, double duty = 0.5);

}  // namespace qthermo::detect
