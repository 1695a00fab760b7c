#include "qthermo/detection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "qthermo/errors.hpp"
#include "qthermo/rng.hpp"

namespace qthermo::detect {

void ProbeSpot::validate() const {
  if (!(diameter_1e2 > 0.0)) throw DomainError("spot diameter must be positive");
  if (!(power_at_sample >= 0.0)) throw DomainError("probe power must be non-negative");
  if (!std::isfinite(center_x) || !std::isfinite(center_y)) {
    throw DomainError("spot center must be finite");
  }
}

std::vector<CellWeight> spot_weights(const ProbeSpot& spot, int nx, int ny, double cell_size) {
  spot.validate();
  // I(r) ~ exp(-2 r^2 / w^2) is separable; per axis the power fraction in
  // [a, b] is (erf(sqrt2 (b - x0)/w) - erf(sqrt2 (a - x0)/w)) / 2.
  const double w = 0.5 * spot.diameter_1e2;
  const double reach = 4.0 * w;
  const auto axis = [&](double center, int n) {
    std::vector<std::pair<int, double>> out;
    const int lo = std::max(0, static_cast<int>(std::floor((center - reach) / cell_size)));
    const int hi = std::min(n - 1, static_cast<int>(std::floor((center + reach) / cell_size)));
    for (int k = lo; k <= hi; ++k) {
      const double a = k * cell_size - center;
      const double b = (k + 1) * cell_size - center;
      const double f = 0.5 * (std::erf(std::sqrt(2.0) * b / w) - std::erf(std::sqrt(2.0) * a / w));
      if (f > 0.0) out.emplace_back(k, f);
    }
    return out;
  };
  const auto fx = axis(spot.center_x, nx);
  const auto fy = axis(spot.center_y, ny);
  std::vector<CellWeight> weights;
  weights.reserve(fx.size() * fy.size());
  for (const auto& [j, wy] : fy) {
    for (const auto& [i, wx] : fx) {
      weights.push_back({static_cast<std::size_t>(j) * nx + i, wx * wy});
    }
  }
  return weights;
}

double reflectivity_from_temperature(double delta_t, const thermal::Material& material) {
  return material.c_tr * delta_t;
}

SpotFootprint::SpotFootprint(const ProbeSpot& spot, const thermal::ThermalScene& scene) {
  if (spot.center_x < 0.0 || spot.center_x > scene.width() || spot.center_y < 0.0 ||
      spot.center_y > scene.height()) {
    throw DomainError("spot center lies outside the scene grid");
  }
  double metal = 0.0;
  for (const auto& w : spot_weights(spot, scene.nx, scene.ny, scene.cell_size)) {
    if (!scene.is_metal(w.cell)) continue;
    weights_.push_back(w);
    metal += w.weight;
  }
  metal_fraction_ = metal;
  reflectivity_ = metal * scene.metal.base_reflectivity;
  if (metal > 0.0) {
    for (auto& w : weights_) w.weight /= metal;
  }
}

double SpotFootprint::weighted_film_dT(const thermal::TemperatureField& field) const {
  double sum = 0.0;
  for (const auto& w : weights_) sum += w.weight * field.film_dT[w.cell];
  return sum;
}

EffectiveReflection effective_reflection(const ProbeSpot& spot, const thermal::ThermalScene& scene,
                                         const thermal::TemperatureField& field) {
  const SpotFootprint footprint(spot, scene);
  if (footprint.metal_fraction() < kMinMetalFraction) {
    throw DomainError("probe spot is entirely off the device");
  }
  EffectiveReflection out;
  out.reflectivity = footprint.reflectivity();
  out.metal_fraction = footprint.metal_fraction();
  out.mean_dT = footprint.weighted_film_dT(field);
  out.delta_r_over_r = reflectivity_from_temperature(out.mean_dT, scene.metal);
  return out;
}

double shot_noise_limit(double n_photons) {
  if (!(n_photons > 0.0)) throw DomainError("photon number must be positive");
  return 1.0 / std::sqrt(n_photons);
}

int DetectorTrace::bins_per_cycle() const {
  if (!(bin_duration > 0.0) || !(modulation_frequency > 0.0)) {
    throw DomainError("trace needs a positive bin duration and modulation frequency");
  }
  const double bins = 1.0 / (modulation_frequency * bin_duration);
  const double rounded = std::round(bins);
  if (rounded < 2.0 || std::fabs(bins - rounded) > 1e-6 * rounded) {
    throw DomainError("modulation period is not an integer number of bins");
  }
  return static_cast<int>(rounded);
}

std::vector<FrameLabel> frame_labels(std::size_t n_bins, int bins_per_cycle, double duty) {
  if (bins_per_cycle < 2) throw DomainError("bins_per_cycle must be >= 2");
  if (!(duty > 0.0 && duty < 1.0)) throw DomainError("duty must lie in (0, 1)");
  const double edge = duty * bins_per_cycle;
  std::vector<FrameLabel> pattern(bins_per_cycle);
  for (int b = 0; b < bins_per_cycle; ++b) {
    if (b + 1 <= edge) {
      pattern[b] = FrameLabel::hot;
    } else if (b >= edge) {
      pattern[b] = FrameLabel::cold;
    } else {
      pattern[b] = FrameLabel::transition;
    }
  }
  std::vector<FrameLabel> labels(n_bins);
  for (std::size_t k = 0; k < n_bins; ++k) labels[k] = pattern[k % bins_per_cycle];
  return labels;
}

DetectorTrace synthesize_trace(const source::TwinBeamTrace& twin,
                               std::span<const double> reflectivity, double detector_efficiency,
                               double modulation_frequency, double duty) {
  const std::size_t n = twin.size();
  if (twin.conjugate.size() != n || reflectivity.size() != n) {
    throw DomainError("reflectivity series length " + std::to_string(reflectivity.size()) +
                      " does not match trace length " + std::to_string(n));
  }
  if (!(detector_efficiency > 0.0 && detector_efficiency <= 1.0)) {
    throw DomainError("detector efficiency must lie in (0, 1]");
  }
  DetectorTrace out;
  out.bin_duration = twin.bin_duration;
  out.modulation_frequency = modulation_frequency;
  out.duty = duty;
  out.labels = frame_labels(n, out.bins_per_cycle(), duty);

  double r_sum = 0.0;
  std::size_t r_count = 0;
  for (std::size_t k = 0; k < n; ++k) {
    if (out.labels[k] == FrameLabel::cold) {
      r_sum += reflectivity[k];
      ++r_count;
    }
  }
  if (r_count == 0 || !(r_sum > 0.0)) {
    throw DomainError("calibration reflectivity needs cold bins with positive reflectivity");
  }
  const double r0 = r_sum / static_cast<double>(r_count);

  out.probe.resize(n);
  out.conjugate.resize(n);
  out.differential.resize(n);
  const double e = detector_efficiency;
  const rng::CounterRng gen(twin.rng_seed,
                            rng::stream_id(twin.stream_index, rng::Purpose::detector_thinning));
  for (std::size_t k = 0; k < n; ++k) {
    double p = twin.probe[k] * (reflectivity[k] / r0);
    double c = twin.conjugate[k];
    if (e < 1.0) {
      rng::Draws draws(gen, k);
      const auto z = draws.normal_pair();
      const double s = std::sqrt(e * (1.0 - e));
      p = e * p + s * std::sqrt(std::max(p, 0.0)) * z[0];
      c = e * c + s * std::sqrt(std::max(c, 0.0)) * z[1];
    }
    out.probe[k] = p;
    out.conjugate[k] = c;
    out.differential[k] = p - c;
  }
  return out;
}

PixelEstimate lock_in_demodulate(const DetectorTrace& trace, const thermal::Material& material,
                                 double gate_fraction) {
  if (!(gate_fraction > 0.0 && gate_fraction <= 1.0)) {
    throw DomainError("gate fraction must lie in (0, 1]");
  }
  if (material.c_tr == 0.0) throw DomainError("material has no thermoreflectance");
  const int bpc = trace.bins_per_cycle();
  const std::size_t n_cycles = trace.full_cycles();
  if (n_cycles < 2) throw DomainError("lock-in needs at least two full modulation cycles");
  if (trace.labels.size() != trace.size() || trace.probe.size() != trace.size() ||
      trace.conjugate.size() != trace.size()) {
    throw DomainError("trace arrays are ragged");
  }

  std::vector<int> hot, cold;
  for (int b = 0; b < bpc; ++b) {
    if (trace.labels[b] == FrameLabel::hot) hot.push_back(b);
    if (trace.labels[b] == FrameLabel::cold) cold.push_back(b);
  }
  if (hot.empty() || cold.empty()) throw DomainError("trace lacks hot or cold frames");
  const auto gate = [&](std::vector<int>& bins) {
    const auto keep = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::lround(gate_fraction * bins.size())));
    bins.erase(bins.begin(), bins.end() - static_cast<std::ptrdiff_t>(keep));
  };
  gate(hot);
  gate(cold);

  double probe_cold = 0.0, sum_p = 0.0, sum_c = 0.0;
  for (std::size_t cyc = 0; cyc < n_cycles; ++cyc) {
    const std::size_t base = cyc * bpc;
    for (int b : cold) probe_cold += trace.probe[base + b];
    for (int b : hot) {
      sum_p += trace.probe[base + b];
      sum_c += trace.conjugate[base + b];
    }
    for (int b : cold) {
      sum_p += trace.probe[base + b];
      sum_c += trace.conjugate[base + b];
    }
  }
  const double n_gated = static_cast<double>(n_cycles * (hot.size() + cold.size()));
  const double probe_level = probe_cold / static_cast<double>(n_cycles * cold.size());
  if (!(probe_level > 0.0)) throw DomainError("no reflected probe light in the cold frames");

  std::vector<double> per_cycle(n_cycles);
  for (std::size_t cyc = 0; cyc < n_cycles; ++cyc) {
    const std::size_t base = cyc * bpc;
    double h = 0.0, c = 0.0;
    for (int b : hot) h += trace.differential[base + b];
    for (int b : cold) c += trace.differential[base + b];
    per_cycle[cyc] = (h / hot.size() - c / cold.size()) / probe_level;
  }
  double mean = 0.0;
  for (double e : per_cycle) mean += e;
  mean /= static_cast<double>(n_cycles);
  double ss = 0.0;
  for (double e : per_cycle) ss += (e - mean) * (e - mean);
  const double var = ss / static_cast<double>(n_cycles - 1);

  const double shot_var = (sum_p + sum_c) / n_gated *
                          (1.0 / hot.size() + 1.0 / cold.size()) / (probe_level * probe_level);

  PixelEstimate out;
  out.delta_r_over_r = mean;
  out.delta_t = mean / material.c_tr;
  out.std_error_relative = std::sqrt(var / static_cast<double>(n_cycles));
  out.std_error = out.std_error_relative / std::fabs(material.c_tr);
  out.noise_rel_shot_db = var > 0.0 ? 10.0 * std::log10(var / shot_var)
                                    : -std::numeric_limits<double>::infinity();
  out.n_cycles_averaged = static_cast<int>(n_cycles);
  return out;
}

source::TwinBeamTrace source_trace(const source::FwmParams& detected, SourceMode mode,
                                   std::size_t n_bins, double bin_duration, std::uint64_t seed,
                                   std::uint32_t stream_index) {
  if (mode == SourceMode::squeezed) {
    return source::sample_twin_beams(detected, n_bins, bin_duration, seed, stream_index);
  }
  detected.validate();
  const double flux_p = detected.eta_p * detected.gain * detected.seed_flux;
  const double flux_c = detected.eta_c * (detected.gain - 1.0) * detected.seed_flux;
  return source::sample_coherent_pair(flux_p, flux_c, n_bins, bin_duration, seed, stream_index);
}

double predicted_relative_uncertainty(const source::FwmParams& detected, SourceMode mode,
                                      double duration, double gate_fraction, double duty) {
  if (!(duration > 0.0)) throw DomainError("duration must be positive");
  const double v = mode == SourceMode::squeezed ? source::total_normalized_variance(detected) : 1.0;
  const double flux_p = detected.eta_p * detected.gain * detected.seed_flux;
  const double flux_c = detected.eta_c * (detected.gain - 1.0) * detected.seed_flux;
  if (!(flux_p > 0.0)) throw DomainError("no probe light reaches the detector");
  const double t_hot = gate_fraction * duty * duration;
  const double t_cold = gate_fraction * (1.0 - duty) * duration;
  return std::sqrt(v * (flux_p + flux_c) * (1.0 / t_hot + 1.0 / t_cold)) / flux_p;
}

}  // namespace qthermo::detect
