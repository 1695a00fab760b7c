#pragma once

// Post-processing of detector traces: cycle-resolved transients, double
// exponential fits, per-bin noise variance and averaging-time scaling.

#include <cstdint>
#include <span>
#include <vector>

#include "qthermo/detection.hpp"
#include "qthermo/thermal.hpp"
#include "qthermo/twin_beam.hpp"

namespace qthermo::analysis {

enum class Phase { heating, cooling };

const char* phase_name(Phase phase);

struct TransientCurve {
  std::vector<double> times;    // s from the start of the half-cycle (bin centers)
  std::vector<double> dT_mean;  // K
  std::vector<double> dT_band;  // K, standard error of the mean across cycles
  Phase phase = Phase::heating;
  int n_cycles = 0;
};

/// Averages each bin of the chosen half-cycle over all full cycles. The
/// baseline is the mean differential over every cold bin; `rebin` merges
/// consecutive bins. Needs at least 10 cycles.
TransientCurve cycle_resolved_transient(const detect::DetectorTrace& trace,
                                        const thermal::Material& material, Phase phase,
                                        int rebin = 1);

/// a0 + a1 exp(-t/tau1) + a2 exp(-t/tau2), with tau1 <= tau2.
struct DoubleExpFit {
  double a0 = 0.0;
  double a1 = 0.0;
  double tau1 = 0.0;
  double a2 = 0.0;
  double tau2 = 0.0;
  double residual_rms = 0.0;
  bool converged = false;
  bool single_exponential = false;
  int n_iterations = 0;

  double operator()(double t) const;
};

struct FitOptions {
  std::vector<double> weights;  // per point; empty = unweighted
  int max_iterations = 400;
};

/// Damped Gauss-Newton (Levenberg-Marquardt) from five starts. Falls back to a
/// single exponential (a2 = 0, tau2 = tau1) when the second term improves the
/// rms residual by less than 1%.
DoubleExpFit fit_double_exponential(std::span<const double> times, std::span<const double> values,
                                    const FitOptions& options = {});
DoubleExpFit fit_double_exponential(const TransientCurve& curve, const FitOptions& options = {});

/// Start time constants as fractions of the fit window.
inline constexpr double kStartFractions[5] = {1.0 / 50, 1.0 / 20, 1.0 / 8, 1.0 / 3, 1.0 / 1.5};

struct VarianceTransient {
  std::vector<double> times;         // s, group centers within the cycle
  std::vector<double> noise_db;      // relative to the Poisson expectation
  std::vector<double> std_error_db;  // statistical uncertainty per group
  std::vector<detect::FrameLabel> labels;  // majority label of each group
  int n_cycles = 0;
  int group_size = 0;
};

/// Across-cycle variance of the differential counts at each intra-cycle bin,
/// normalized to the summed mean counts, pooled over `n_groups` consecutive
/// groups. Needs at least 100 cycles.
VarianceTransient variance_transient(const detect::DetectorTrace& trace, int n_groups = 10);

struct ResolutionConfig {
  source::FwmParams detected;  // photon statistics at the detector
  detect::SourceMode mode = detect::SourceMode::squeezed;
  double c_tr = 1.8e-4;
  double bin_duration = 0.1e-6;
  double modulation_frequency = 40e3;
  double duty = 0.5;
  double gate_fraction = 0.6;
};

struct ResolutionPoint {
  double duration = 0.0;  // s
  double dT_std = 0.0;    // K, scatter of zero-signal estimates
  double dT_mean = 0.0;   // K
  int repeats = 0;
};

struct ResolutionStudy {
  std::vector<ResolutionPoint> points;
  double slope = 0.0;      // d ln(dT_std) / d ln(duration)
  double intercept = 0.0;
};

/// Repeated zero-signal estimates per duration. Durations of two cycles or
/// more use the gated lock-in over round(d f) cycles; shorter ones compare a
/// single hot/cold frame pair of gate*d/2 each. Durations must span two decades.
ResolutionStudy resolution_vs_averaging(const ResolutionConfig& config,
                                        const std::vector<double>& durations, int repeats,
                                        std::uint64_t seed);

/// Least-squares slope and intercept of ln(y) against ln(x).
std::pair<double, double> loglog_fit(std::span<const double> x, std::span<const double> y);

}  // namespace qthermo::analysis
