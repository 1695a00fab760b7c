#include <doctest.h>

#include <cmath>

#include "qthermo/errors.hpp"
#include "qthermo/imaging.hpp"
#include "qthermo/scene_io.hpp"
#include "test_support.hpp"

using namespace qthermo;
using namespace qthermo::imaging;

namespace {

// 150 x 80 um: 40 um wide wire with a 10 um wide, 10 um long constriction
// centered at (75, 40) um.
thermal::ThermalScene small_bridge() {
  auto s = testing::blank_scene(60, 32);
  testing::add_metal(s, 0, 28, 8, 24);
  testing::add_metal(s, 28, 32, 14, 18);
  testing::add_metal(s, 32, 60, 8, 24);
  return s;
}

thermal::DriveWaveform drive(double amps = 0.05) {
  thermal::DriveWaveform d;
  d.amplitude = amps;
  return d;
}

}  // namespace

TEST_CASE("acquisition budget arithmetic") {
  ScanConfig scan;
  const auto b = acquisition_budget(scan);
  CHECK(b.total_time == doctest::Approx(5.03).epsilon(1e-14));
  CHECK(b.per_pixel_dT == doctest::Approx(42e-3));
  scan.nx = scan.ny = 256;
  CHECK(acquisition_budget(scan).total_time == doctest::Approx(65536 * 0.0503));
  CHECK(NoiseModel{}.at(10e-6) == doctest::Approx(42e-3 * std::sqrt(5000.0)));
  CHECK_THROWS_AS(NoiseModel{}.at(0), DomainError);
}

TEST_CASE("noise model from photon statistics") {
  source::FwmParams p;
  const auto det = source::with_extra_loss(p, 0.95, 0.95);
  const auto sq = noise_model_for(det, detect::SourceMode::squeezed, 1.8e-4, 0.6);
  const auto co = noise_model_for(det, detect::SourceMode::coherent, 1.8e-4, 0.6);
  CHECK(sq.reference_time == 50e-3);
  CHECK(sq.reference_dT / co.reference_dT ==
        doctest::Approx(std::sqrt(source::total_normalized_variance(det))));
  CHECK(sq.reference_dT == doctest::Approx(42e-3).epsilon(0.02));
}

TEST_CASE("scan pixel centers and window checks") {
  ScanConfig s;
  s.origin_x = 10e-6;
  s.step = 5e-6;
  CHECK(s.pixel_x(0) == doctest::Approx(12.5e-6));
  CHECK(s.pixel_x(3) == doctest::Approx(27.5e-6));
  s.nx = 0;
  CHECK_THROWS_AS(s.validate(), DomainError);
  const auto scene = small_bridge();
  ScanConfig big;
  big.nx = 40;
  CHECK_THROWS_AS(acquire_image(scene, drive(), big, {}, 1), DomainError);
}

TEST_CASE("thermal response reaches periodic steady state") {
  const auto scene = small_bridge();
  const auto r = prepare_thermal(scene, drive(), 0.1e-6);
  CHECK(r.run.converged);
  CHECK(r.bins_per_cycle == 250);
  CHECK(r.run.cycle.size() == 250);
  CHECK(r.warmup_cycles >= 2);
}

TEST_CASE("small scan finds the constriction and flags off-device pixels") {
  const auto scene = small_bridge();
  const auto response = prepare_thermal(scene, drive(), 0.1e-6);
  ScanConfig scan;
  scan.nx = 5;
  scan.ny = 5;
  scan.step = 10e-6;
  scan.origin_x = 50e-6;
  scan.origin_y = 15e-6;
  scan.dwell = 5e-3;
  DetectionConfig det;
  det.spot_diameter = 10e-6;
  const auto img = acquire_image(scene, response, scan, {}, 3, det);
  REQUIRE(img.pixels.size() == 25);
  CHECK(img.thermal_converged);
  CHECK(img.total_acquisition_time == doctest::Approx(25 * (5e-3 + 0.3e-3)));
  std::size_t best = 0;
  for (std::size_t p = 0; p < 25; ++p) {
    if (img.truth_dT[p] > img.truth_dT[best] || std::isnan(img.truth_dT[best])) best = p;
  }
  CHECK(best == 12);  // (75, 40) um: middle of the constriction
  CHECK(img.at(2, 2).valid);
  CHECK(img.at(2, 2).delta_t == doctest::Approx(img.truth_dT[12]).epsilon(0.1));
  // (75, 5) um lies on bare substrate below the wire.
  const auto off = measure_pixel(scene, response, 75e-6, 5e-6, {}, detect::SourceMode::squeezed,
                                 1e-3, det, 3, 0);
  CHECK_FALSE(off.valid);
  CHECK(std::isnan(off.delta_t));
}

TEST_CASE("image bytes do not depend on the thread count") {
  const auto scene = small_bridge();
  const auto response = prepare_thermal(scene, drive(), 0.1e-6);
  ScanConfig scan;
  scan.nx = 4;
  scan.ny = 3;
  scan.step = 8e-6;
  scan.origin_x = 55e-6;
  scan.origin_y = 28e-6;
  scan.dwell = 1e-3;
  DetectionConfig det;
  det.threads = 1;
  const auto a = acquire_image(scene, response, scan, {}, 9, det);
  det.threads = 4;
  const auto b = acquire_image(scene, response, scan, {}, 9, det);
  for (std::size_t p = 0; p < a.pixels.size(); ++p) {
    CHECK(a.pixels[p].delta_t == b.pixels[p].delta_t);
    CHECK(a.pixels[p].std_error == b.pixels[p].std_error);
  }
  const auto c = acquire_image(scene, response, scan, {}, 10, det);
  CHECK(a.pixels[5].delta_t != c.pixels[5].delta_t);
}

TEST_CASE("laser heating estimate stays well below the thermal signal") {
  const auto scene = small_bridge();
  const auto response = prepare_thermal(scene, drive(), 0.1e-6);
  ScanConfig scan;
  scan.nx = scan.ny = 1;
  scan.origin_x = 70e-6;
  scan.origin_y = 35e-6;
  scan.step = 10e-6;
  scan.dwell = 1e-3;
  DetectionConfig det;
  det.laser_heating = true;
  const auto img = acquire_image(scene, response, scan, {}, 1, det);
  CHECK(img.pixels[0].probe_heating > 0.0);
  CHECK(img.pixels[0].probe_heating < 20e-3);
}

TEST_CASE("squeezed and coherent images share a seed") {
  const auto scene = small_bridge();
  const auto response = prepare_thermal(scene, drive(), 0.1e-6);
  ScanConfig scan;
  scan.nx = 2;
  scan.ny = 2;
  scan.step = 10e-6;
  scan.origin_x = 40e-6;
  scan.origin_y = 30e-6;
  scan.dwell = 5e-3;
  const auto cmp = compare_modalities(scene, response, scan, {}, 4);
  CHECK(cmp.std_error_ratio.size() == 4);
  CHECK(cmp.median_ratio == doctest::Approx(std::pow(10.0, -4.0 / 20)).epsilon(0.1));
}
