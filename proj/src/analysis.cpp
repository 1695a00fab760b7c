#include "qthermo/analysis.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "qthermo/errors.hpp"

namespace qthermo::analysis {

const char* phase_name(Phase phase) { return phase == Phase::heating ? "heating" : "cooling"; }

// ---------------------------------------------------------------------------
// Cycle-resolved transients

TransientCurve cycle_resolved_transient(const detect::DetectorTrace& trace,
                                        const thermal::Material& material, Phase phase,
                                        int rebin) {
  if (material.c_tr == 0.0) throw DomainError("material has no thermoreflectance");
  if (rebin < 1) throw DomainError("rebin must be >= 1");
  const int bpc = trace.bins_per_cycle();
  const std::size_t n_cycles = trace.full_cycles();
  if (n_cycles < 10) {
    throw DomainError("transient needs at least 10 cycles, got " + std::to_string(n_cycles));
  }

  const auto wanted = phase == Phase::heating ? detect::FrameLabel::hot : detect::FrameLabel::cold;
  std::vector<int> bins;
  for (int b = 0; b < bpc; ++b) {
    if (trace.labels[b] == wanted) bins.push_back(b);
  }
  const std::size_t n_groups = bins.size() / static_cast<std::size_t>(rebin);
  if (n_groups == 0) throw DomainError("half-cycle has fewer bins than the rebin factor");

  double baseline = 0.0, probe_level = 0.0;
  std::size_t n_cold = 0;
  for (std::size_t k = 0; k < n_cycles * bpc; ++k) {
    if (trace.labels[k] != detect::FrameLabel::cold) continue;
    baseline += trace.differential[k];
    probe_level += trace.probe[k];
    ++n_cold;
  }
  if (n_cold == 0) throw DomainError("trace has no cold frames");
  baseline /= static_cast<double>(n_cold);
  probe_level /= static_cast<double>(n_cold);
  if (!(probe_level > 0.0)) throw DomainError("no reflected probe light in the cold frames");

  TransientCurve curve;
  curve.phase = phase;
  curve.n_cycles = static_cast<int>(n_cycles);
  const double scale = 1.0 / (probe_level * material.c_tr);
  const double n = static_cast<double>(n_cycles);
  for (std::size_t g = 0; g < n_groups; ++g) {
    double offset = 0.0;
    for (int q = 0; q < rebin; ++q) offset += bins[g * rebin + q] - bins.front() + 0.5;
    curve.times.push_back(offset / rebin * trace.bin_duration);

    double sum = 0.0, sum_sq = 0.0;
    for (std::size_t c = 0; c < n_cycles; ++c) {
      double v = 0.0;
      for (int q = 0; q < rebin; ++q) v += trace.differential[c * bpc + bins[g * rebin + q]];
      v = (v / rebin - baseline) * scale;
      sum += v;
      sum_sq += v * v;
    }
    const double mean = sum / n;
    const double var = std::max(0.0, (sum_sq - n * mean * mean) / (n - 1.0));
    curve.dT_mean.push_back(mean);
    curve.dT_band.push_back(std::sqrt(var / n));
  }
  return curve;
}

// ---------------------------------------------------------------------------
// Exponential fits

double DoubleExpFit::operator()(double t) const {
  double v = a0 + a1 * std::exp(-t / tau1);
  if (a2 != 0.0) v += a2 * std::exp(-t / tau2);
  return v;
}

namespace {

// Bounds on ln(tau / window).
constexpr double kMinLogTau = -9.2;  // 1e-4 window
constexpr double kMaxLogTau = 4.6;   // 1e2 window

struct Problem {
  Eigen::VectorXd s;  // normalized times
  Eigen::VectorXd y;  // normalized values
  Eigen::VectorXd w;  // weights
  double min_log_tau = kMinLogTau;
};

struct Solution {
  Eigen::VectorXd p;  // a0, a1, [a2], u1, [u2]
  double cost = std::numeric_limits<double>::infinity();
  bool converged = false;
  int iterations = 0;
};

// Parameter layout: single = {a0, a1, u1}; double = {a0, a1, a2, u1, u2}.
Eigen::VectorXd residuals(const Problem& pr, const Eigen::VectorXd& p, bool two,
                          Eigen::MatrixXd* jac) {
  const Eigen::Index n = pr.s.size();
  const int k = two ? 5 : 3;
  Eigen::VectorXd r(n);
  if (jac) jac->resize(n, k);
  const double r1 = std::exp(-p[two ? 3 : 2]);
  const double r2 = two ? std::exp(-p[4]) : 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double s = pr.s[i];
    const double e1 = std::exp(-s * r1);
    double m = p[0] + p[1] * e1;
    double e2 = 0.0;
    if (two) {
      e2 = std::exp(-s * r2);
      m += p[2] * e2;
    }
    const double sw = std::sqrt(pr.w[i]);
    r[i] = sw * (m - pr.y[i]);
    if (jac) {
      auto row = jac->row(i);
      row[0] = sw;
      row[1] = sw * e1;
      if (two) {
        row[2] = sw * e2;
        row[3] = sw * p[1] * e1 * s * r1;
        row[4] = sw * p[2] * e2 * s * r2;
      } else {
        row[2] = sw * p[1] * e1 * s * r1;
      }
    }
  }
  return r;
}

Eigen::VectorXd linear_amplitudes(const Problem& pr, double u1, double u2, bool two) {
  const Eigen::Index n = pr.s.size();
  Eigen::MatrixXd a(n, two ? 3 : 2);
  Eigen::VectorXd b(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double sw = std::sqrt(pr.w[i]);
    a(i, 0) = sw;
    a(i, 1) = sw * std::exp(-pr.s[i] * std::exp(-u1));
    if (two) a(i, 2) = sw * std::exp(-pr.s[i] * std::exp(-u2));
    b[i] = sw * pr.y[i];
  }
  return a.colPivHouseholderQr().solve(b);
}

Solution levenberg_marquardt(const Problem& pr, Eigen::VectorXd p, bool two, int max_iter) {
  const int k = static_cast<int>(p.size());
  const int first_u = two ? 3 : 2;
  Eigen::MatrixXd jac;
  Eigen::VectorXd r = residuals(pr, p, two, &jac);
  double cost = r.squaredNorm();
  double lambda = 1e-3;
  Solution out;
  for (int it = 1; it <= max_iter; ++it) {
    out.iterations = it;
    const Eigen::MatrixXd a = jac.transpose() * jac;
    const Eigen::VectorXd g = jac.transpose() * r;
    bool accepted = false;
    while (lambda < 1e16) {
      Eigen::MatrixXd m = a;
      for (int d = 0; d < k; ++d) m(d, d) += lambda * std::max(a(d, d), 1e-12);
      const Eigen::VectorXd delta = m.ldlt().solve(-g);
      Eigen::VectorXd trial = p + delta;
      for (int d = first_u; d < k; ++d) trial[d] = std::clamp(trial[d], pr.min_log_tau, kMaxLogTau);
      Eigen::MatrixXd trial_jac;
      const Eigen::VectorXd trial_r = residuals(pr, trial, two, &trial_jac);
      const double trial_cost = trial_r.squaredNorm();
      if (std::isfinite(trial_cost) && trial_cost < cost) {
        const double drop = cost - trial_cost;
        const double step = (trial - p).norm();
        p = trial;
        r = trial_r;
        jac = std::move(trial_jac);
        cost = trial_cost;
        lambda = std::max(lambda / 3.0, 1e-12);
        accepted = true;
        if (drop <= 1e-10 * cost + 1e-32 || step <= 1e-13 * (1.0 + p.norm())) {
          out.converged = true;
        }
        break;
      }
      lambda *= 4.0;
    }
    // No downhill step left at any damping: a minimum to machine precision.
    if (!accepted) out.converged = true;
    if (out.converged) break;
  }
  out.p = p;
  out.cost = cost;
  if (!p.allFinite()) out.converged = false;
  return out;
}

Solution best_of_starts(const Problem& pr, bool two, int max_iter) {
  Solution best;
  for (double f : kStartFractions) {
    const double u1 = std::max(std::log(f), pr.min_log_tau);
    const double u2 = std::max(std::log(5.0 * f), pr.min_log_tau);
    const Eigen::VectorXd amp = linear_amplitudes(pr, u1, u2, two);
    Eigen::VectorXd p(two ? 5 : 3);
    if (two) {
      p << amp[0], amp[1], amp[2], u1, u2;
    } else {
      p << amp[0], amp[1], u1;
    }
    if (!p.allFinite()) continue;
    Solution s = levenberg_marquardt(pr, p, two, max_iter);
    const bool better = (s.converged && !best.converged) ||
                        (s.converged == best.converged && s.cost < best.cost);
    if (better) best = std::move(s);
  }
  return best;
}

}  // namespace

DoubleExpFit fit_double_exponential(std::span<const double> times, std::span<const double> values,
                                    const FitOptions& options) {
  const std::size_t n = times.size();
  if (values.size() != n) throw DomainError("times and values differ in length");
  if (n < 8) throw DomainError("double-exponential fit needs at least 8 points");
  if (!options.weights.empty() && options.weights.size() != n) {
    throw DomainError("weights differ in length from the data");
  }
  double window = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(times[i]) || !std::isfinite(values[i])) {
      throw DomainError("fit input contains non-finite values");
    }
    window = std::max(window, std::fabs(times[i]));
    scale = std::max(scale, std::fabs(values[i]));
  }
  if (!(window > 0.0)) throw DomainError("fit times must not all be zero");
  if (scale == 0.0) scale = 1.0;

  Problem pr{Eigen::VectorXd(n), Eigen::VectorXd(n), Eigen::VectorXd::Ones(n)};
  for (std::size_t i = 0; i < n; ++i) {
    pr.s[i] = times[i] / window;
    pr.y[i] = values[i] / scale;
    if (!options.weights.empty()) {
      if (!(options.weights[i] >= 0.0)) throw DomainError("weights must be non-negative");
      pr.w[i] = options.weights[i];
    }
  }
  const double w_sum = pr.w.sum();
  if (!(w_sum > 0.0)) throw DomainError("weights sum to zero");
  // A time constant far below the sample spacing only inflates the amplitudes.
  std::vector<double> sorted(pr.s.begin(), pr.s.end());
  std::sort(sorted.begin(), sorted.end());
  double spacing = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < n; ++i) {
    if (sorted[i] > sorted[i - 1]) spacing = std::min(spacing, sorted[i] - sorted[i - 1]);
  }
  if (std::isfinite(spacing)) pr.min_log_tau = std::max(kMinLogTau, std::log(spacing / 4.0));

  const Solution two = best_of_starts(pr, true, options.max_iterations);
  const Solution one = best_of_starts(pr, false, options.max_iterations);
  const double rms_two = std::sqrt(two.cost / w_sum);
  const double rms_one = std::sqrt(one.cost / w_sum);

  DoubleExpFit fit;
  const bool fallback =
      one.p.size() == 3 && (two.p.size() != 5 || rms_one - rms_two < 0.01 * rms_one + 1e-9);
  if (fallback) {
    fit.a0 = one.p[0] * scale;
    fit.a1 = one.p[1] * scale;
    fit.tau1 = std::exp(one.p[2]) * window;
    fit.a2 = 0.0;
    fit.tau2 = fit.tau1;
    fit.residual_rms = rms_one * scale;
    fit.converged = one.converged;
    fit.single_exponential = true;
    fit.n_iterations = one.iterations;
    return fit;
  }
  if (two.p.size() != 5) {
    fit.converged = false;
    fit.residual_rms = std::numeric_limits<double>::quiet_NaN();
    return fit;
  }
  fit.a0 = two.p[0] * scale;
  fit.a1 = two.p[1] * scale;
  fit.a2 = two.p[2] * scale;
  fit.tau1 = std::exp(two.p[3]) * window;
  fit.tau2 = std::exp(two.p[4]) * window;
  if (fit.tau1 > fit.tau2) {
    std::swap(fit.tau1, fit.tau2);
    std::swap(fit.a1, fit.a2);
  }
  fit.residual_rms = rms_two * scale;
  fit.converged = two.converged;
  fit.n_iterations = two.iterations;
  return fit;
}

DoubleExpFit fit_double_exponential(const TransientCurve& curve, const FitOptions& options) {
  return fit_double_exponential(curve.times, curve.dT_mean, options);
}

// ---------------------------------------------------------------------------
// Noise variance across the cycle

VarianceTransient variance_transient(const detect::DetectorTrace& trace, int n_groups) {
  const int bpc = trace.bins_per_cycle();
  const std::size_t n_cycles = trace.full_cycles();
  if (n_cycles < 100) {
    throw DomainError("variance transient needs at least 100 cycles, got " +
                      std::to_string(n_cycles));
  }
  if (n_groups < 1 || n_groups > bpc) throw DomainError("n_groups must lie in [1, bins per cycle]");

  std::vector<double> var(bpc), mean_counts(bpc);
  const double n = static_cast<double>(n_cycles);
  for (int b = 0; b < bpc; ++b) {
    const double shift = trace.differential[b];
    double sum = 0.0, sum_sq = 0.0, counts = 0.0;
    for (std::size_t c = 0; c < n_cycles; ++c) {
      const std::size_t k = c * bpc + b;
      const double d = trace.differential[k] - shift;
      sum += d;
      sum_sq += d * d;
      counts += trace.probe[k] + trace.conjugate[k];
    }
    var[b] = (sum_sq - sum * sum / n) / (n - 1.0);
    mean_counts[b] = counts / n;
  }

  VarianceTransient out;
  out.n_cycles = static_cast<int>(n_cycles);
  out.group_size = bpc / n_groups;
  for (int g = 0; g < n_groups; ++g) {
    const int lo = g * bpc / n_groups, hi = (g + 1) * bpc / n_groups;
    double v = 0.0, m = 0.0;
    int hot = 0, cold = 0;
    for (int b = lo; b < hi; ++b) {
      v += var[b];
      m += mean_counts[b];
      hot += trace.labels[b] == detect::FrameLabel::hot;
      cold += trace.labels[b] == detect::FrameLabel::cold;
    }
    if (!(m > 0.0)) throw DomainError("no detected light in a cycle segment");
    out.times.push_back(0.5 * (lo + hi) * trace.bin_duration);
    out.noise_db.push_back(10.0 * std::log10(v / m));
    out.std_error_db.push_back(10.0 / std::log(10.0) * std::sqrt(2.0 / ((n - 1.0) * (hi - lo))));
    const int width = hi - lo;
    out.labels.push_back(2 * hot > width    ? detect::FrameLabel::hot
                         : 2 * cold > width ? detect::FrameLabel::cold
                                            : detect::FrameLabel::transition);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Resolution against averaging time

std::pair<double, double> loglog_fit(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw DomainError("log-log fit needs >= 2 points");
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw DomainError("log-log fit needs positive data");
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double denom = n * sxx - sx * sx;
  if (!(denom > 0.0)) throw DomainError("log-log fit needs distinct x values");
  const double slope = (n * sxy - sx * sy) / denom;
  return {slope, (sy - slope * sx) / n};
}

ResolutionStudy resolution_vs_averaging(const ResolutionConfig& config,
                                        const std::vector<double>& durations, int repeats,
                                        std::uint64_t seed) {
  if (durations.size() < 2) throw DomainError("need at least two durations");
  if (repeats < 2) throw DomainError("need at least two repeats per duration");
  const auto [lo, hi] = std::minmax_element(durations.begin(), durations.end());
  if (!(*lo > 0.0)) throw DomainError("durations must be positive");
  if (*hi / *lo < 100.0 * (1.0 - 1e-12)) throw DomainError("durations must span two decades");
  if (config.c_tr == 0.0) throw DomainError("c_tr must be non-zero");

  const double f = config.modulation_frequency;
  const double bins = 1.0 / (f * config.bin_duration);
  const auto bpc = static_cast<std::size_t>(std::lround(bins));
  thermal::Material material;
  material.c_tr = config.c_tr;

  ResolutionStudy study;
  for (std::size_t di = 0; di < durations.size(); ++di) {
    const double d = durations[di];
    std::vector<double> est(repeats);
    for (int r = 0; r < repeats; ++r) {
      const auto stream = static_cast<std::uint32_t>(di * repeats + r);
      if (d * f >= 2.0) {
        const auto n_cycles = static_cast<std::size_t>(std::lround(d * f));
        const auto twin = detect::source_trace(config.detected, config.mode, n_cycles * bpc,
                                               config.bin_duration, seed, stream);
        const std::vector<double> flat(twin.size(), 1.0);
        const auto trace = detect::synthesize_trace(twin, flat, 1.0, f, config.duty);
        est[r] = detect::lock_in_demodulate(trace, material, config.gate_fraction).delta_t;
      } else {
        const auto n_w = static_cast<std::size_t>(
            std::max(1L, std::lround(config.gate_fraction * d / 2.0 / config.bin_duration)));
        const auto twin = detect::source_trace(config.detected, config.mode, 2 * n_w,
                                               config.bin_duration, seed, stream);
        double hot = 0.0, cold = 0.0, level = 0.0;
        for (std::size_t k = 0; k < n_w; ++k) {
          hot += twin.probe[k] - twin.conjugate[k];
          cold += twin.probe[n_w + k] - twin.conjugate[n_w + k];
          level += twin.probe[n_w + k];
        }
        est[r] = (hot - cold) / level / config.c_tr;
      }
    }
    double mean = 0.0;
    for (double e : est) mean += e;
    mean /= repeats;
    double ss = 0.0;
    for (double e : est) ss += (e - mean) * (e - mean);
    study.points.push_back({d, std::sqrt(ss / (repeats - 1)), mean, repeats});
  }
  std::vector<double> x, y;
  for (const auto& p : study.points) {
    x.push_back(p.duration);
    y.push_back(p.dT_std);
  }
  std::tie(study.slope, study.intercept) = loglog_fit(x, y);
  return study;
}

}  // namespace qthermo::analysis
