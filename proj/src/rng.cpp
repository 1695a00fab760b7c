#include "qthermo/rng.hpp"

#include <cmath>

namespace qthermo::rng {

namespace {
constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void philox_round(Block& ctr, const std::array<std::uint32_t, 2>& key) {
  const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * ctr[0];
  const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * ctr[2];
  ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
         static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
}
}  // namespace

Block philox4x32_10(Block counter, std::array<std::uint32_t, 2> key) {
  for (int r = 0; r < 10; ++r) {
    if (r > 0) {
      key[0] += kWeyl0;
      key[1] += kWeyl1;
    }
    philox_round(counter, key);
  }
  return counter;
}

std::uint32_t Draws::next_word() {
  if (used_ == 4) {
    buffer_ = rng_->block(index_, draw_++);
    used_ = 0;
  }
  return buffer_[used_++];
}

double Draws::uniform() {
  // 32-bit resolution, never exactly 0 or 1.
  return (static_cast<double>(next_word()) + 0.5) * 0x1p-32;
}

std::array<double, 2> Draws::normal_pair() {
  for (;;) {
    const double u = 2.0 * uniform() - 1.0;
    const double v = 2.0 * uniform() - 1.0;
    const double s = u * u + v * v;
    if (s >= 1.0 || s == 0.0) continue;
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    return {u * f, v * f};
  }
}

double Draws::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const auto pair = normal_pair();
  spare_ = pair[1];
  has_spare_ = true;
  return pair[0];
}

double poisson(Draws& draws, double mean) {
  if (!(mean > 0.0)) return 0.0;
  if (mean >= kPoissonGaussianMean) {
    const double x = std::round(mean + std::sqrt(mean) * draws.normal());
    return x < 0.0 ? 0.0 : x;
  }
  if (mean < 10.0) {
    const double limit = std::exp(-mean);
    double k = 0.0;
    double prod = draws.uniform();
    while (prod > limit) {
      k += 1.0;
      prod *= draws.uniform();
    }
    return k;
  }
  // Hormann's transformed rejection with squeeze (PTRS).
  const double slam = std::sqrt(mean);
  const double loglam = std::log(mean);
  const double b = 0.931 + 2.53 * slam;
  const double a = -0.059 + 0.02483 * b;
  const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
  const double vr = 0.9277 - 3.6224 / (b - 2.0);
  for (;;) {
    const double u = draws.uniform() - 0.5;
    const double v = draws.uniform();
    const double us = 0.5 - std::fabs(u);
    const double k = std::floor((2.0 * a / us + b) * u + mean + 0.43);
    if (us >= 0.07 && v <= vr) return k;
    if (k < 0.0 || (us < 0.013 && v > us)) continue;
    if (std::log(v) + std::log(inv_alpha) - std::log(a / (us * us) + b) <=
        -mean + k * loglam - std::lgamma(k + 1.0)) {
      return k;
    }
  }
}

}  // namespace qthermo::rng
