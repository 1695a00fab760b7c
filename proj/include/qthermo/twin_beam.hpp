#pragma once

// Seeded four-wave-mixing twin-beam source: analytic intensity-difference
// variance with loss, its optimization, and Monte-Carlo photon-count traces.
//
// Normalization: a variance of 1 is the shot noise of a coherent pair with the
// same transmitted mean photon numbers (G = 1 gives exactly 1).

#include <cstddef>
#include <cstdint>
#include <vector>

namespace qthermo::source {

struct FwmParams {
  double gain = 5.0;            // G >= 1
  double eta_p = 0.75;          // probe transmission
  double eta_c = 0.89;          // conjugate transmission
  double seed_flux = 5.08e11;   // photons/s entering the cell
  double excess_noise_p = 0.0;  // technical noise, units of the probe's shot noise
  double excess_noise_c = 0.0;

  /// Throws DomainError. Transmissions may be 0 for one beam as long as some
  /// light is detected.
  void validate() const;
};

/// Pure gain/loss model (excess noise ignored).
double variance_with_loss(double gain, double eta_p, double eta_c);
double variance_with_loss(const FwmParams& params);

/// Variance including the configured excess noise, weighted by each beam's mean.
double total_normalized_variance(const FwmParams& params);

double squeezing_db(double normalized_variance);

/// Extra transmission applied to each beam (detector efficiency, partial
/// reflection off the sample). Excess-noise coefficients are kept relative to
/// the detected shot noise.
FwmParams with_extra_loss(FwmParams params, double probe_factor, double conjugate_factor);

struct ConjugateLossOptimum {
  double eta_c = 1.0;
  double variance = 1.0;
};

/// Conjugate transmission in (0, 1] minimizing the loss model; ties resolve to 1.
ConjugateLossOptimum optimize_conjugate_loss(double gain, double eta_p);

struct TwinBeamTrace {
  std::vector<double> probe;      // photons per bin
  std::vector<double> conjugate;  // photons per bin
  double bin_duration = 0.0;      // s
  std::uint64_t rng_seed = 0;
  std::uint32_t stream_index = 0;

  std::size_t size() const { return probe.size(); }
};

/// Minimum seed photons per bin for the Gaussian count model.
inline constexpr double kMinSeedPhotonsPerBin = 1e4;

/// Jointly Gaussian probe/conjugate counts with the moments of the gain/loss
/// model plus excess noise. Deterministic in (params, n_bins, bin_duration,
/// seed, stream_index).
TwinBeamTrace sample_twin_beams(const FwmParams& params, std::size_t n_bins, double bin_duration,
                                std::uint64_t seed, std::uint32_t stream_index = 0);

/// Independent Poisson counts: the shot-noise reference.
TwinBeamTrace sample_coherent_pair(double flux_p, double flux_c, std::size_t n_bins,
                                   double bin_duration, std::uint64_t seed,
                                   std::uint32_t stream_index = 0);

/// Mean counts only (noiseless limit).
TwinBeamTrace expected_twin_beams(const FwmParams& params, std::size_t n_bins,
                                  double bin_duration);

double mean_probe_photons(const FwmParams& params, double bin_duration);
double mean_conjugate_photons(const FwmParams& params, double bin_duration);

/// Var(N_p - N_c) / (<N_p> + <N_c>) estimated from the trace.
double normalized_difference_variance(const TwinBeamTrace& trace);

struct SpectrumPoint {
  double frequency_hz = 0.0;
  double noise_db = 0.0;  // relative to shot noise
};

/// Qualitative intensity-difference noise spectrum: squeezed floor plus a
/// technical term that is 1/f below the corner and dies off quickly above it.
double noise_spectrum_value(const FwmParams& params, double technical_corner_hz,
                            double frequency_hz);

/// Log-spaced spectrum from corner/10 to f_max.
std::vector<SpectrumPoint> noise_spectrum(const FwmParams& params, double technical_corner_hz,
                                          double f_max_hz, std::size_t n_points = 200);

}  // namespace qthermo::source
