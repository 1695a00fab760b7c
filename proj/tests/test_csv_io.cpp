#include <doctest.h>

#include <cmath>
#include <sstream>

#include "qthermo/csv_io.hpp"
#include "qthermo/errors.hpp"

using namespace qthermo;

TEST_CASE("number formatting") {
  CHECK(io::format_number(0.1) == "0.1");
  CHECK(io::format_number(1.0 / 3) == "0.333333333333");
  CHECK(io::format_number(std::nan("")) == "nan");
  CHECK(io::format_number(-1.0 / 0.0) == "-inf");
}

TEST_CASE("split trims fields") {
  const auto f = io::split_csv_line(" a, b ,c\r");
  REQUIRE(f.size() == 3);
  CHECK(f[0] == "a");
  CHECK(f[1] == "b");
  CHECK(f[2] == "c");
  CHECK(io::split_csv_line("x,").size() == 2);
}

TEST_CASE("trace round trip") {
  const auto twin = source::sample_twin_beams({}, 40, 1e-7, 1, 0);
  const std::vector<double> r(40, 1.0);
  const auto t = detect::synthesize_trace(twin, r, 1.0, 1.0 / (20 * 1e-7));
  std::stringstream ss;
  io::write_trace_csv(ss, t);
  const auto back = io::read_trace_csv(ss, t.modulation_frequency);
  REQUIRE(back.size() == 40);
  CHECK(back.bin_duration == doctest::Approx(1e-7));
  CHECK(back.bins_per_cycle() == 20);
  for (std::size_t k = 0; k < 40; ++k) {
    CHECK(back.probe[k] == doctest::Approx(t.probe[k]).epsilon(1e-11));
    CHECK(back.labels[k] == t.labels[k]);
  }
}

TEST_CASE("malformed traces name the line") {
  const auto expect_line = [](const std::string& text, std::size_t line) {
    std::istringstream in(text);
    try {
      io::read_trace_csv(in, 40e3);
      FAIL("no error");
    } catch (const InputError& e) {
      CHECK(e.line() == line);
    }
  };
  expect_line("time_s,probe,conjugate,frame\n0,1,1,hot\n1e-7,x,1,hot\n", 3);
  expect_line("time_s,probe,conjugate,frame\n0,1,1,hot\n1e-7,1,1\n", 3);
  expect_line("time_s,probe,conjugate,frame\n0,1,1,hot\n1e-7,1,1,warm\n", 3);
  expect_line("time_s,probe,conjugate,frame\n0,1,1,hot\n0,1,1,hot\n", 3);
  expect_line("time_s,probe,frame\n0,1,hot\n", 1);
  expect_line("time_s,probe,conjugate,frame\n0,1,1,hot\n1e-7,1,1,hot\n3e-7,1,1,hot\n", 3);
}

TEST_CASE("two-column series reader") {
  std::istringstream ok("t,v\n0,1\n1,2\n\n2,3\n");
  const auto s = io::read_series_csv(ok);
  CHECK(s.times.size() == 3);
  CHECK(s.values[2] == 3.0);
  std::istringstream bad("t,v\n0,1\n1,inf\n");
  CHECK_THROWS_AS(io::read_series_csv(bad), InputError);
  std::istringstream empty("t,v\n");
  CHECK_THROWS_AS(io::read_series_csv(empty), InputError);
}

TEST_CASE("pgm scaling and orientation") {
  imaging::HeatMapImage img;
  img.scan.nx = 2;
  img.scan.ny = 2;
  img.pixels.resize(4);
  img.pixels[0].delta_t = 1.0;  // (0, 0): bottom left
  img.pixels[1].delta_t = 0.5;
  img.pixels[2].delta_t = 2.0;  // (0, 1): top left
  img.pixels[3].valid = false;
  img.pixels[3].delta_t = 9.0;
  std::ostringstream out;
  io::write_image_pgm(out, img);
  const std::string bytes = out.str();
  const std::string header = "P5\n2 2\n255\n";
  REQUIRE(bytes.size() == header.size() + 4);
  CHECK(bytes.substr(0, header.size()) == header);
  const auto px = [&](int k) { return static_cast<unsigned char>(bytes[header.size() + k]); };
  CHECK(px(0) == 255);
  CHECK(px(1) == 0);
  CHECK(px(2) == 128);
  CHECK(px(3) == 64);
}
