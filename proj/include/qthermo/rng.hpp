#pragma once

// Counter-based random numbers (Philox4x32-10).
//
// Every variate is a pure function of (seed, stream, index, draw), so a trace
// bin or an image pixel produces the same numbers no matter which thread
// evaluates it or in which order.

#include <array>
#include <cstdint>

namespace qthermo::rng {

using Block = std::array<std::uint32_t, 4>;

/// Philox4x32 with 10 rounds. Counter words: {index lo, index hi, stream, draw}.
Block philox4x32_10(Block counter, std::array<std::uint32_t, 2> key);

/// Stream purposes; combined with a caller index (pixel, repeat) into a stream id.
enum class Purpose : std::uint32_t {
  twin_beams = 1,
  coherent_pair = 2,
  detector_thinning = 3,
  test_noise = 15,
};

/// Stream id layout: high 28 bits caller index, low 4 bits purpose.
constexpr std::uint32_t stream_id(std::uint32_t index, Purpose purpose) {
  return (index << 4) | static_cast<std::uint32_t>(purpose);
}

class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint32_t stream)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        stream_(stream) {}

  Block block(std::uint64_t index, std::uint32_t draw) const {
    return philox4x32_10({static_cast<std::uint32_t>(index),
                          static_cast<std::uint32_t>(index >> 32), stream_, draw},
                         key_);
  }

 private:
  std::array<std::uint32_t, 2> key_;
  std::uint32_t stream_;
};

/// Sequential variates belonging to one counter index (one trace bin).
class Draws {
 public:
  Draws(const CounterRng& rng, std::uint64_t index) : rng_(&rng), index_(index) {}

  /// Uniform on the open interval (0, 1).
  double uniform();
  /// Standard normal pair (Marsaglia polar method).
  std::array<double, 2> normal_pair();
  double normal();

 private:
  std::uint32_t next_word();

  const CounterRng* rng_;
  std::uint64_t index_;
  std::uint32_t draw_ = 0;
  Block buffer_{};
  int used_ = 4;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Poisson variate. Exact (inversion / PTRS) below `kPoissonGaussianMean`,
/// rounded Gaussian above it.
double poisson(Draws& draws, double mean);

inline constexpr double kPoissonGaussianMean = 1e4;

}  // namespace qthermo::rng
