#include "qthermo/twin_beam.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "qthermo/errors.hpp"
#include "qthermo/rng.hpp"

namespace qthermo::source {

namespace {

void check_transmission(double eta, const char* name) {
  if (!(eta >= 0.0 && eta <= 1.0)) {
    throw DomainError(std::string(name) + " must lie in [0, 1], got " + std::to_string(eta));
  }
}

void check_gain(double gain) {
  if (!(gain >= 1.0) || !std::isfinite(gain)) {
    throw DomainError("gain must be >= 1, got " + std::to_string(gain));
  }
}

// Second moments per seed photon of the detected counts.
struct CountMoments {
  double mean_p, mean_c;
  double var_p, var_c, cov;
};

CountMoments moments_per_seed_photon(const FwmParams& p) {
  const double g = p.gain;
  const double mean_p = p.eta_p * g;
  const double mean_c = p.eta_c * (g - 1.0);
  // Amplified seed: Var(n_p) = G(2G-1), Var(n_c) = (G-1)(2G-1), Cov = 2G(G-1);
  // loss is binomial thinning.
  const double var_p = p.eta_p * p.eta_p * g * (2.0 * g - 1.0) + p.eta_p * (1.0 - p.eta_p) * g +
                       p.excess_noise_p * mean_p;
  const double var_c = p.eta_c * p.eta_c * (g - 1.0) * (2.0 * g - 1.0) +
                       p.eta_c * (1.0 - p.eta_c) * (g - 1.0) + p.excess_noise_c * mean_c;
  const double cov = p.eta_p * p.eta_c * 2.0 * g * (g - 1.0);
  return {mean_p, mean_c, var_p, var_c, cov};
}

}  // namespace

void FwmParams::validate() const {
  check_gain(gain);
  check_transmission(eta_p, "eta_p");
  check_transmission(eta_c, "eta_c");
  if (!(eta_p * gain + eta_c * (gain - 1.0) > 0.0)) {
    throw DomainError("no detected light: eta_p*G + eta_c*(G-1) must be positive");
  }
  if (!(seed_flux > 0.0) || !std::isfinite(seed_flux)) {
    throw DomainError("seed_flux must be positive");
  }
  if (!(excess_noise_p >= 0.0) || !(excess_noise_c >= 0.0)) {
    throw DomainError("excess noise must be non-negative");
  }
}

double variance_with_loss(double gain, double eta_p, double eta_c) {
  check_gain(gain);
  check_transmission(eta_p, "eta_p");
  check_transmission(eta_c, "eta_c");
  const double denom = eta_p * gain + eta_c * (gain - 1.0);
  if (!(denom > 0.0)) throw DomainError("no detected light");
  const double numer =
      eta_p * eta_p * gain - 2.0 * eta_p * eta_c * gain + eta_c * eta_c * (gain - 1.0);
  return 1.0 + 2.0 * (gain - 1.0) * numer / denom;
}

double variance_with_loss(const FwmParams& params) {
  return variance_with_loss(params.gain, params.eta_p, params.eta_c);
}

double total_normalized_variance(const FwmParams& params) {
  params.validate();
  const double mp = params.eta_p * params.gain;
  const double mc = params.eta_c * (params.gain - 1.0);
  return variance_with_loss(params) +
         (params.excess_noise_p * mp + params.excess_noise_c * mc) / (mp + mc);
}

double squeezing_db(double normalized_variance) {
  if (!(normalized_variance > 0.0)) {
    throw DomainError("normalized variance must be positive");
  }
  return 10.0 * std::log10(normalized_variance);
}

FwmParams with_extra_loss(FwmParams params, double probe_factor, double conjugate_factor) {
  check_transmission(probe_factor, "probe_factor");
  check_transmission(conjugate_factor, "conjugate_factor");
  params.eta_p *= probe_factor;
  params.eta_c *= conjugate_factor;
  return params;
}

ConjugateLossOptimum optimize_conjugate_loss(double gain, double eta_p) {
  check_gain(gain);
  if (!(eta_p > 0.0 && eta_p <= 1.0)) throw DomainError("eta_p must lie in (0, 1]");
  const auto v = [&](double eta_c) { return variance_with_loss(gain, eta_p, eta_c); };
  const double v_one = v(1.0);

  // Coarse bracket, then golden-section refinement.
  constexpr int kCoarse = 1000;
  int best = kCoarse;
  double best_v = v_one;
  for (int k = kCoarse - 1; k >= 1; --k) {
    const double vk = v(static_cast<double>(k) / kCoarse);
    if (vk < best_v) {
      best_v = vk;
      best = k;
    }
  }
  double lo = static_cast<double>(best - 1) / kCoarse;
  double hi = std::min(1.0, static_cast<double>(best + 1) / kCoarse);
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - inv_phi * (hi - lo);
  double x2 = lo + inv_phi * (hi - lo);
  double f1 = v(std::max(x1, 1e-12));
  double f2 = v(x2);
  while (hi - lo > 1e-10) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - inv_phi * (hi - lo);
      f1 = v(std::max(x1, 1e-12));
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + inv_phi * (hi - lo);
      f2 = v(x2);
    }
  }
  const double eta = 0.5 * (lo + hi);
  const double v_eta = v(eta);
  if (v_one <= v_eta || 1.0 - eta < 1e-6) return {1.0, v_one};
  return {eta, v_eta};
}

double mean_probe_photons(const FwmParams& params, double bin_duration) {
  return params.eta_p * params.gain * params.seed_flux * bin_duration;
}

double mean_conjugate_photons(const FwmParams& params, double bin_duration) {
  return params.eta_c * (params.gain - 1.0) * params.seed_flux * bin_duration;
}

TwinBeamTrace sample_twin_beams(const FwmParams& params, std::size_t n_bins, double bin_duration,
                                std::uint64_t seed, std::uint32_t stream_index) {
  params.validate();
  if (!(bin_duration > 0.0)) throw DomainError("bin_duration must be positive");
  const double n_seed = params.seed_flux * bin_duration;
  if (n_seed < kMinSeedPhotonsPerBin) {
    throw DomainError("seed photons per bin = " + std::to_string(n_seed) +
                      " is below the Gaussian-statistics regime (>= 1e4); "
                      "lengthen the bin or raise the seed flux");
  }
  const CountMoments m = moments_per_seed_photon(params);
  const double mean_p = m.mean_p * n_seed;
  const double mean_c = m.mean_c * n_seed;
  // 2x2 Cholesky factor of the count covariance; degenerate beams handled.
  double l11 = 0.0, l21 = 0.0, l22 = 0.0;
  if (m.var_p > 0.0) {
    l11 = std::sqrt(m.var_p * n_seed);
    l21 = m.cov * n_seed / l11;
    l22 = std::sqrt(std::max(0.0, m.var_c * n_seed - l21 * l21));
  } else {
    l22 = std::sqrt(std::max(0.0, m.var_c * n_seed));
  }

  TwinBeamTrace trace;
  trace.probe.resize(n_bins);
  trace.conjugate.resize(n_bins);
  trace.bin_duration = bin_duration;
  trace.rng_seed = seed;
  trace.stream_index = stream_index;
  const rng::CounterRng gen(seed, rng::stream_id(stream_index, rng::Purpose::twin_beams));
  for (std::size_t k = 0; k < n_bins; ++k) {
    rng::Draws draws(gen, k);
    const auto z = draws.normal_pair();
    trace.probe[k] = mean_p + l11 * z[0];
    trace.conjugate[k] = mean_c + l21 * z[0] + l22 * z[1];
  }
  return trace;
}

TwinBeamTrace sample_coherent_pair(double flux_p, double flux_c, std::size_t n_bins,
                                   double bin_duration, std::uint64_t seed,
                                   std::uint32_t stream_index) {
  if (!(flux_p >= 0.0) || !(flux_c >= 0.0)) throw DomainError("fluxes must be non-negative");
  if (!(bin_duration > 0.0)) throw DomainError("bin_duration must be positive");
  TwinBeamTrace trace;
  trace.probe.resize(n_bins);
  trace.conjugate.resize(n_bins);
  trace.bin_duration = bin_duration;
  trace.rng_seed = seed;
  trace.stream_index = stream_index;
  const double mean_p = flux_p * bin_duration;
  const double mean_c = flux_c * bin_duration;
  const rng::CounterRng gen(seed, rng::stream_id(stream_index, rng::Purpose::coherent_pair));
  for (std::size_t k = 0; k < n_bins; ++k) {
    rng::Draws draws(gen, k);
    trace.probe[k] = rng::poisson(draws, mean_p);
    trace.conjugate[k] = rng::poisson(draws, mean_c);
  }
  return trace;
}

TwinBeamTrace expected_twin_beams(const FwmParams& params, std::size_t n_bins,
                                  double bin_duration) {
  params.validate();
  TwinBeamTrace trace;
  trace.probe.assign(n_bins, mean_probe_photons(params, bin_duration));
  trace.conjugate.assign(n_bins, mean_conjugate_photons(params, bin_duration));
  trace.bin_duration = bin_duration;
  return trace;
}

double normalized_difference_variance(const TwinBeamTrace& trace) {
  const std::size_t n = trace.size();
  if (n < 2 || trace.conjugate.size() != n) throw DomainError("trace too short or ragged");
  double sum_p = 0.0, sum_c = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    sum_p += trace.probe[k];
    sum_c += trace.conjugate[k];
  }
  const double mean_p = sum_p / n;
  const double mean_c = sum_c / n;
  const double mean_d = mean_p - mean_c;
  double ss = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double r = trace.probe[k] - trace.conjugate[k] - mean_d;
    ss += r * r;
  }
  return ss / static_cast<double>(n - 1) / (mean_p + mean_c);
}

double noise_spectrum_value(const FwmParams& params, double technical_corner_hz,
                            double frequency_hz) {
  if (!(frequency_hz > 0.0) || !(technical_corner_hz > 0.0)) {
    throw DomainError("frequencies must be positive");
  }
  const double floor = total_normalized_variance(params);
  const double x = frequency_hz / technical_corner_hz;
  // Scaled by the single-beam excess 2(G-1): vanishes for a coherent pair.
  const double technical = 2.0 * (params.gain - 1.0) / x / (1.0 + x * x * x);
  return squeezing_db(floor + technical);
}

std::vector<SpectrumPoint> noise_spectrum(const FwmParams& params, double technical_corner_hz,
                                          double f_max_hz, std::size_t n_points) {
  if (!(technical_corner_hz < f_max_hz)) throw DomainError("corner must be below f_max");
  if (n_points < 2) throw DomainError("need at least two spectrum points");
  const double f_min = technical_corner_hz / 10.0;
  const double log_span = std::log(f_max_hz / f_min);
  std::vector<SpectrumPoint> out;
  out.reserve(n_points);
  for (std::size_t k = 0; k < n_points; ++k) {
    const double f = f_min * std::exp(log_span * static_cast<double>(k) / (n_points - 1));
    out.push_back({f, noise_spectrum_value(params, technical_corner_hz, f)});
  }
  return out;
}

}  // namespace qthermo::source
