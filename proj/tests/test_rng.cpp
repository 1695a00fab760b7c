#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

#include "qthermo/rng.hpp"

using namespace qthermo::rng;

// Known-answer vectors published with the Random123 library.
TEST_CASE("philox4x32-10 known answers") {
  CHECK(philox4x32_10({0, 0, 0, 0}, {0, 0}) ==
        Block{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
  CHECK(philox4x32_10({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                      {0xffffffffu, 0xffffffffu}) ==
        Block{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
  CHECK(philox4x32_10({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                      {0xa4093822u, 0x299f31d0u}) ==
        Block{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("stream ids keep purpose and index apart") {
  CHECK(stream_id(0, Purpose::twin_beams) == 1u);
  CHECK(stream_id(3, Purpose::detector_thinning) == (3u << 4 | 3u));
  std::set<std::uint32_t> ids;
  for (std::uint32_t i = 0; i < 50; ++i) {
    for (auto p : {Purpose::twin_beams, Purpose::coherent_pair, Purpose::detector_thinning}) {
      ids.insert(stream_id(i, p));
    }
  }
  CHECK(ids.size() == 150);
}

TEST_CASE("draws are a pure function of seed, stream and index") {
  const CounterRng a(42, 7), b(42, 7), c(42, 8);
  Draws da(a, 1000), db(b, 1000), dc(c, 1000);
  const double ua = da.uniform();
  CHECK(ua == db.uniform());
  CHECK(ua != dc.uniform());
}

TEST_CASE("uniform and normal moments") {
  const CounterRng rng(1, 2);
  const int n = 200000;
  double su = 0, su2 = 0, sn = 0, sn2 = 0, sn4 = 0;
  for (int k = 0; k < n; ++k) {
    Draws d(rng, static_cast<std::uint64_t>(k));
    const double u = d.uniform();
    REQUIRE(u > 0.0);
    REQUIRE(u < 1.0);
    su += u;
    su2 += u * u;
    const double z = d.normal();
    sn += z;
    sn2 += z * z;
    sn4 += z * z * z * z;
  }
  CHECK(su / n == doctest::Approx(0.5).epsilon(0.005));
  CHECK(su2 / n - std::pow(su / n, 2) == doctest::Approx(1.0 / 12).epsilon(0.01));
  CHECK(std::fabs(sn / n) < 0.01);
  CHECK(sn2 / n == doctest::Approx(1.0).epsilon(0.01));
  CHECK(sn4 / n == doctest::Approx(3.0).epsilon(0.03));
}

TEST_CASE("poisson mean and variance across regimes") {
  const CounterRng rng(9, 3);
  for (double mean : {0.3, 4.0, 25.0, 700.0, 5e4}) {
    const int n = 100000;
    double s = 0, s2 = 0;
    for (int k = 0; k < n; ++k) {
      Draws d(rng, static_cast<std::uint64_t>(k));
      const double x = poisson(d, mean);
      REQUIRE(x >= 0.0);
      REQUIRE(x == std::floor(x));
      s += x;
      s2 += x * x;
    }
    const double m = s / n, v = s2 / n - m * m;
    CAPTURE(mean);
    CHECK(std::fabs(m - mean) < 5.0 * std::sqrt(mean / n));
    CHECK(v / mean == doctest::Approx(1.0).epsilon(0.03));
  }
  Draws d(rng, 0);
  CHECK(poisson(d, 0.0) == 0.0);
}
