// Acceptance checks: one PASS/FAIL line per criterion.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "qthermo/analysis.hpp"
#include "qthermo/cli/commands.hpp"
#include "qthermo/csv_io.hpp"
#include "qthermo/detection.hpp"
#include "qthermo/imaging.hpp"
#include "qthermo/scene_io.hpp"
#include "qthermo/thermal.hpp"
#include "qthermo/twin_beam.hpp"

namespace fs = std::filesystem;
using namespace qthermo;
using nlohmann::json;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

class Report {
 public:
  void check(bool ok, const std::string& what) {
    if (!ok) outcome_.pass = false;
    if (!outcome_.detail.empty()) outcome_.detail += "; ";
    outcome_.detail += what + (ok ? "" : " [failed]");
  }
  void note(const std::string& what) {
    if (!outcome_.detail.empty()) outcome_.detail += "; ";
    outcome_.detail += what;
  }
  Outcome take() { return std::exchange(outcome_, {}); }

 private:
  Outcome outcome_;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double sample_std(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

// Photon-number moments of an amplified seed after binomial loss.
double moment_variance(double g, double ep, double ec) {
  const double np = ep * g, nc = ec * (g - 1);
  const double vp = ep * ep * g * (2 * g - 1) + ep * (1 - ep) * g;
  const double vc = ec * ec * (g - 1) * (2 * g - 1) + ec * (1 - ec) * (g - 1);
  const double cov = ep * ec * 2 * g * (g - 1);
  return (vp + vc - 2 * cov) / (np + nc);
}

std::string data_dir() { return QTHERMO_DATA_DIR; }

thermal::ThermalScene al_bridge() {
  return scene::load_scene(scene::preset_path(data_dir(), "al_bridge"));
}

source::FwmParams calibrated_source() {
  return scene::fwm_from_json(
      scene::read_json_file(scene::preset_path(data_dir(), "source_calibrated")));
}

thermal::DriveWaveform bridge_drive() {
  thermal::DriveWaveform d;
  d.amplitude = 0.1;
  return d;
}

// ---------------------------------------------------------------------------

Outcome criterion_1() {
  Report r;
  double worst = 0.0;
  for (double g : {1.0, 1.5, 2.0, 5.0, 10.0}) {
    worst = std::max(worst, std::fabs(source::variance_with_loss(g, 1, 1) - 1.0 / (2 * g - 1)));
  }
  r.check(worst <= 1e-12, "max |V(G,1,1) - 1/(2G-1)| = " + fmt("%.2e", worst));
  const double v = source::variance_with_loss(5, 0.75, 0.75);
  r.check(std::fabs(v - 1.0 / 3) <= 1e-15, "V(5,.75,.75) = " + fmt("%.16f", v));
  return r.take();
}

Outcome criterion_2() {
  Report r;
  std::mt19937_64 gen(2024);
  std::uniform_real_distribution<double> ug(1.0, 10.0), ue(0.05, 1.0);
  double worst = 0.0;
  for (int k = 0; k < 20; ++k) {
    const double g = ug(gen), ep = ue(gen);
    double best_e = 1.0, best_v = moment_variance(g, ep, 1.0);
    for (int i = 1; i <= 10000; ++i) {
      const double e = i * 1e-4;
      const double v = moment_variance(g, ep, e);
      if (v < best_v) best_v = v, best_e = e;
    }
    worst = std::max(worst, std::fabs(source::optimize_conjugate_loss(g, ep).eta_c - best_e));
  }
  r.check(worst <= 1e-3, "20 random points, max |eta_c - grid| = " + fmt("%.2e", worst));
  const auto opt = source::optimize_conjugate_loss(5, 0.75);
  const double db = source::squeezing_db(opt.variance);
  r.check(std::fabs(opt.eta_c - 0.890) < 5e-3, "eta_c(5,.75) = " + fmt("%.4f", opt.eta_c));
  r.check(std::fabs(db + 6.2) < 0.05, "V = " + fmt("%.3f", db) + " dB");
  return r.take();
}

Outcome criterion_3() {
  Report r;
  const double points[9][3] = {{1.5, 1, 1},   {2, 0.9, 0.9}, {3, 0.7, 0.95},
                               {5, 0.75, 0.89}, {5, 0.75, 0.75}, {5, 0.5, 1},
                               {8, 0.95, 0.6}, {10, 1, 1},     {4, 0.3, 0.3}};
  double worst = 0.0;
  for (int k = 0; k < 9; ++k) {
    source::FwmParams p;
    p.gain = points[k][0];
    p.eta_p = points[k][1];
    p.eta_c = points[k][2];
    p.excess_noise_p = p.excess_noise_c = 0.0;
    const auto t = source::sample_twin_beams(p, 1000000, 1e-7, 77, static_cast<std::uint32_t>(k));
    const double err = std::fabs(source::squeezing_db(source::normalized_difference_variance(t)) -
                                 source::squeezing_db(source::variance_with_loss(p)));
    worst = std::max(worst, err);
  }
  r.check(worst <= 0.1, "9 points x 1e6 bins, max error " + fmt("%.4f", worst) + " dB");
  return r.take();
}

Outcome criterion_4() {
  Report r;
  const auto scene = al_bridge();
  const auto response = imaging::prepare_thermal(scene, bridge_drive(), 0.1e-6);
  imaging::ScanConfig scan;
  scan.nx = scan.ny = 1;
  scan.step = 4.8e-6;
  scan.origin_x = 240e-6 - 2.4e-6;
  scan.origin_y = 75e-6 - 2.4e-6;
  const auto source = calibrated_source();
  const double configured = source::squeezing_db(
      source::total_normalized_variance(source::with_extra_loss(source, 0.95, 0.95)));
  const double expected = std::pow(10.0, configured / 20.0);
  std::vector<double> ratios, sq, co;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const auto cmp = imaging::compare_modalities(scene, response, scan, source, seed);
    ratios.push_back(cmp.median_ratio);
    sq.push_back(cmp.squeezed.pixels[0].delta_t);
    co.push_back(cmp.coherent.pixels[0].delta_t);
  }
  const double reported = median(ratios);
  const double empirical = sample_std(sq) / sample_std(co);
  r.check(std::fabs(configured + 4.0) < 0.05, "detected squeezing " + fmt("%.2f", configured) + " dB");
  r.check(std::fabs(reported / 0.631 - 1) <= 0.10,
          "median std-error ratio " + fmt("%.3f", reported) + " (model " + fmt("%.3f", expected) + ")");
  r.note("scatter ratio over 100 seeds " + fmt("%.3f", empirical));
  return r.take();
}

Outcome criterion_5() {
  Report r;
  analysis::ResolutionConfig cfg;
  cfg.detected = source::with_extra_loss(calibrated_source(), 0.95, 0.95);
  const std::vector<double> durations{1e-5, 3e-5, 1e-4, 3e-4, 1e-3, 3e-3, 1e-2, 5e-2};
  const auto study = analysis::resolution_vs_averaging(cfg, durations, 100, 5);
  r.check(std::fabs(study.slope + 0.5) <= 0.05, "slope " + fmt("%.3f", study.slope));
  const double at_50ms = study.points.back().dT_std;
  const double at_10us = study.points.front().dT_std;
  r.check(at_50ms >= 14e-3 && at_50ms <= 126e-3, "dT(50 ms) = " + fmt("%.1f", at_50ms * 1e3) + " mK");
  r.check(at_10us >= 0.53 && at_10us <= 4.8, "dT(10 us) = " + fmt("%.2f", at_10us) + " K");
  return r.take();
}

Outcome criterion_6() {
  Report r;
  using namespace thermal;
  const Material al{"Al", 237.0, 2.42e6, 100e-9, 1.8e-4, 0.87};
  const auto make_scene = [&](int nx, int ny, double cell) {
    ThermalScene s;
    s.name = "check";
    s.nx = nx;
    s.ny = ny;
    s.cell_size = cell;
    s.mask.assign(s.cells(), Region::substrate);
    s.drive_region.assign(s.cells(), 0);
    s.sheet_resistance.assign(s.cells(), 0.0);
    s.metal = al;
    s.oxide = {"SiO2", 1.4, 1.65e6, 300e-9, 0, 0};
    s.substrate = {"Si", 148.0, 1.63e6, 30e-6, 0, 0};
    s.sink_conductance = 5e6;
    return s;
  };
  const auto metal = [](ThermalScene& s, int i0, int i1, int j0, int j1) {
    for (int j = j0; j < j1; ++j) {
      for (int i = i0; i < i1; ++i) {
        const auto c = s.index(i, j);
        s.mask[c] = Region::metal;
        s.drive_region[c] = 1;
        s.sheet_resistance[c] = 0.27;
      }
    }
  };

  // 1D slab: film rows decoupled from the substrate, fixed ends.
  auto slab = make_scene(100, 4, 1e-6);
  slab.oxide.thermal_conductivity = 0.0;
  slab.sink_conductance = 0.0;
  slab.boundary = LateralBoundary::fixed;
  metal(slab, 0, 100, 1, 3);
  SourceField q{std::vector<double>(slab.cells(), 0.0)};
  for (std::size_t c = 0; c < slab.cells(); ++c) {
    if (slab.is_metal(c)) q.power_density[c] = 1e15;
  }
  const auto t = steady_state(slab, q);
  const double peak = *std::max_element(t.film_dT.begin(), t.film_dT.end());
  const double oracle = 1e15 * 100e-6 * 100e-6 / (8 * 237.0);
  r.check(std::fabs(peak / oracle - 1) <= 0.01, "slab peak / (qL^2/8k) = " + fmt("%.5f", peak / oracle));

  // Energy audit: joule power against I^2 R and stored heat against injected heat.
  auto wire = make_scene(40, 20, 2.5e-6);
  wire.sink_conductance = 0.0;
  metal(wire, 0, 40, 6, 14);
  metal(wire, 18, 22, 2, 18);
  const auto joule = joule_source(wire, 0.05);
  const double i2r = 0.05 * 0.05 * joule.resistance;
  const double err_p = std::fabs(joule.source.total_power(wire) / i2r - 1);
  Stepper stepper(wire);
  auto field = zero_field(wire);
  const int steps = 3000;
  for (int k = 0; k < steps; ++k) stepper.advance(field, joule.source, stepper.default_dt());
  const double err_e =
      std::fabs(stepper.energy(field) / (i2r * steps * stepper.default_dt()) - 1);
  r.check(err_p <= 5e-3 && err_e <= 5e-3,
          "energy audit " + fmt("%.1e", err_p) + " (power), " + fmt("%.1e", err_e) + " (heat)");

  // Linearity and mirror symmetry of the steady state.
  auto sym = make_scene(40, 20, 2.5e-6);
  metal(sym, 0, 40, 6, 14);
  metal(sym, 18, 22, 2, 18);
  const auto src = joule_source(sym, 0.05).source;
  const SteadySolver solver(sym);
  const auto a = solver.solve(src);
  const auto b = solver.solve(src.scaled(2.5));
  const double top = *std::max_element(a.film_dT.begin(), a.film_dT.end());
  double lin = 0.0, mir = 0.0;
  for (int j = 0; j < sym.ny; ++j) {
    for (int i = 0; i < sym.nx; ++i) {
      const auto c = sym.index(i, j);
      lin = std::max(lin, std::fabs(b.film_dT[c] - 2.5 * a.film_dT[c]) / (2.5 * top));
      mir = std::max(mir, std::fabs(a.film_dT[c] - a.film_dT[sym.index(sym.nx - 1 - i, j)]) / top);
      mir = std::max(mir, std::fabs(a.film_dT[c] - a.film_dT[sym.index(i, sym.ny - 1 - j)]) / top);
    }
  }
  r.check(lin <= 1e-10, "linearity " + fmt("%.1e", lin));
  r.check(mir <= 1e-10, "mirror symmetry " + fmt("%.1e", mir));

  const auto resp = imaging::prepare_thermal(al_bridge(), bridge_drive(), 0.1e-6);
  r.check(resp.run.converged, "al_bridge 40 kHz periodic state after " +
                                  std::to_string(resp.run.cycles_run) + " cycles, last change " +
                                  fmt("%.1e", resp.run.last_cycle_change) + " K");
  return r.take();
}

Outcome criterion_7() {
  Report r;
  const auto scene = al_bridge();
  const auto features = scene::read_json_file(scene::preset_path(data_dir(), "al_bridge"))["features"];
  const auto bx = features["narrow_bridge_um"]["x"].get<std::vector<double>>();
  const auto by = features["narrow_bridge_um"]["y"].get<std::vector<double>>();
  const auto response = imaging::prepare_thermal(scene, bridge_drive(), 0.1e-6);
  imaging::ScanConfig scan;
  scan.origin_x = 186e-6;
  scan.origin_y = 51e-6;
  const auto source = calibrated_source();
  imaging::DetectionConfig det;
  det.threads = 8;

  const std::size_t n_pix = scan.pixels();
  std::vector<std::vector<double>> values(n_pix);
  std::vector<double> reported_sq(n_pix, 0.0);
  int on_bridge = 0;
  const int seeds = 100;
  for (int seed = 1; seed <= seeds; ++seed) {
    const auto img = imaging::acquire_image(scene, response, scan, source,
                                            static_cast<std::uint64_t>(seed), det);
    std::size_t best = n_pix;
    for (std::size_t p = 0; p < n_pix; ++p) {
      const auto& px = img.pixels[p];
      if (!px.valid) continue;
      values[p].push_back(px.delta_t);
      reported_sq[p] += px.std_error * px.std_error / seeds;
      if (best == n_pix || px.delta_t > img.pixels[best].delta_t) best = p;
    }
    const double x = scan.pixel_x(static_cast<int>(best % scan.nx)) * 1e6;
    const double y = scan.pixel_y(static_cast<int>(best / scan.nx)) * 1e6;
    if (x > bx[0] && x < bx[1] && y > by[0] && y < by[1]) ++on_bridge;
  }
  r.check(on_bridge == seeds, "argmax on the bridge in " + std::to_string(on_bridge) + "/100 seeds");

  double emp = 0.0, rep = 0.0;
  std::vector<double> per_pixel;
  for (std::size_t p = 0; p < n_pix; ++p) {
    if (values[p].size() < 2) continue;
    const double s = sample_std(values[p]);
    emp += s * s;
    rep += reported_sq[p];
    per_pixel.push_back(std::sqrt(reported_sq[p]) / s);
  }
  const double ratio = std::sqrt(rep / emp);
  r.check(std::fabs(ratio - 1) <= 0.15, "reported/empirical std error " + fmt("%.3f", ratio) +
                                            " (pixel median " + fmt("%.3f", median(per_pixel)) + ")");

  imaging::ScanConfig budget_scan;
  const double total = imaging::acquisition_budget(budget_scan).total_time;
  r.check(std::fabs(total - 5.03) <= 1e-12, "budget 10x10 @ 50 ms + 0.3 ms = " + fmt("%.12g", total) + " s");
  return r.take();
}

Outcome criterion_8() {
  Report r;
  // One 40 kHz half-cycle at 0.1 us bins.
  std::vector<double> t(125);
  for (int i = 0; i < 125; ++i) t[i] = i * 0.1e-6;
  const auto model = [](double s) {
    return 1.0 * std::exp(-s / 1e-6) + 0.5 * std::exp(-s / 10e-6);
  };
  std::vector<double> y;
  for (double s : t) y.push_back(model(s));
  const auto f = analysis::fit_double_exponential(t, y);
  const double err = std::max({std::fabs(f.a0), std::fabs(f.a1 / 1.0 - 1),
                               std::fabs(f.tau1 / 1e-6 - 1), std::fabs(f.a2 / 0.5 - 1),
                               std::fabs(f.tau2 / 10e-6 - 1)});
  r.check(f.converged && err <= 1e-6, "noiseless recovery, max relative error " + fmt("%.1e", err));

  // Additive Gaussian noise at 5% of the peak signal.
  std::vector<double> tau1, tau2;
  for (int seed = 0; seed < 100; ++seed) {
    std::mt19937_64 gen(static_cast<std::uint64_t>(seed));
    std::normal_distribution<double> noise(0.0, 0.05 * 1.5);
    std::vector<double> yn;
    for (double s : t) yn.push_back(model(s) + noise(gen));
    const auto g = analysis::fit_double_exponential(t, yn);
    tau1.push_back(g.tau1);
    tau2.push_back(g.tau2);
  }
  const double m1 = median(tau1) / 1e-6, m2 = median(tau2) / 10e-6;
  r.check(std::fabs(m1 - 1) <= 0.05 && std::fabs(m2 - 1) <= 0.05,
          "5% noise medians tau1 x" + fmt("%.3f", m1) + ", tau2 x" + fmt("%.3f", m2));

  std::vector<double> ys;
  for (double s : t) ys.push_back(1.0 + 2.0 * std::exp(-s / 3e-6));
  const auto single = analysis::fit_double_exponential(t, ys);
  r.check(single.single_exponential && single.a2 == 0.0 && std::fabs(single.tau1 / 3e-6 - 1) < 1e-6,
          "single exponential flagged with a2 = 0");
  r.check(!f.single_exponential, "double exponential not flagged");
  return r.take();
}

Outcome criterion_9() {
  Report r;
  const auto scene = al_bridge();
  const auto response = imaging::prepare_thermal(scene, bridge_drive(), 0.1e-6);
  const auto source = calibrated_source();
  auto trace = imaging::simulate_pixel_trace(scene, response, 240e-6, 75e-6, source,
                                             detect::SourceMode::squeezed, 10000, {}, 9, 0);
  const auto v = analysis::variance_transient(trace, 10);
  const auto [lo, hi] = std::minmax_element(v.noise_db.begin(), v.noise_db.end());
  r.check(*hi - *lo <= 0.1, "1e4 cycles, span " + fmt("%.3f", *hi - *lo) + " dB around " +
                                fmt("%.2f", v.noise_db[0]) + " dB");

  // Excess noise equal to 20% of shot noise in the hot frames only.
  std::mt19937_64 gen(4);
  std::normal_distribution<double> z(0.0, 1.0);
  for (std::size_t k = 0; k < trace.size(); ++k) {
    if (trace.labels[k] != detect::FrameLabel::hot) continue;
    trace.differential[k] += std::sqrt(0.2 * (trace.probe[k] + trace.conjugate[k])) * z(gen);
  }
  const auto w = analysis::variance_transient(trace, 10);
  double hot = 0.0, cold = 0.0, se = 0.0;
  int nh = 0, nc = 0;
  for (std::size_t g = 0; g < w.noise_db.size(); ++g) {
    se = std::max(se, w.std_error_db[g]);
    if (w.labels[g] == detect::FrameLabel::hot) hot += w.noise_db[g], ++nh;
    if (w.labels[g] == detect::FrameLabel::cold) cold += w.noise_db[g], ++nc;
  }
  const double excess = hot / nh - cold / nc;
  r.check(excess > 5 * se, "injected hot-frame excess seen as +" + fmt("%.2f", excess) + " dB (" +
                               fmt("%.0f", excess / se) + " sigma)");
  return r.take();
}

Outcome criterion_10() {
  Report r;
  const fs::path root = fs::path(QTHERMO_TEST_TMP) / "determinism";
  fs::remove_all(root);
  fs::create_directories(root);
  const auto configs = fs::path(data_dir()) / "configs";

  const auto run = [&](const std::string& cmd, const fs::path& config, const fs::path& out,
                       int threads, std::optional<std::string> input = std::nullopt) {
    cli::CommandRequest req;
    req.command = cmd;
    req.config_path = config.string();
    req.input_path = std::move(input);
    req.overrides.output_dir = out.string();
    req.overrides.threads = threads;
    req.data_dir = data_dir();
    std::ostringstream log;
    return cli::run_command(req, log);
  };
  const auto outputs = [](const fs::path& dir) {
    std::map<std::string, std::string> files;
    for (const auto& e : fs::directory_iterator(dir)) {
      if (e.path().filename() == "manifest.json") continue;
      std::ifstream in(e.path(), std::ios::binary);
      files[e.path().filename().string()] =
          std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    }
    return files;
  };

  // Reduced noise config so the check stays quick.
  json noise = scene::read_json_file((configs / "noise.json").string());
  noise["noise"]["repeats"] = 20;
  std::ofstream(root / "noise.json") << noise.dump(2);
  json transient = scene::read_json_file((configs / "transient_al_bridge.json").string());
  transient["transient"]["cycles"] = 400;
  transient["transient"]["write_traces"] = true;
  std::ofstream(root / "transient.json") << transient.dump(2);

  const std::vector<std::pair<std::string, fs::path>> jobs{
      {"optimize", configs / "optimize.json"},
      {"scan", configs / "scan_8x8.json"},
      {"transient", root / "transient.json"},
      {"noise", root / "noise.json"},
  };
  int identical = 0, total = 0;
  for (const auto& [cmd, config] : jobs) {
    const auto first = root / (cmd + "_t1");
    const int code = run(cmd, config, first, 1);
    if (code != cli::kOk && code != cli::kNotConverged) {
      r.check(false, cmd + " exited with " + std::to_string(code));
      continue;
    }
    const auto reference = outputs(first);
    for (int threads : {4, 8}) {
      const auto dir = root / (cmd + "_t" + std::to_string(threads));
      run(cmd, first / "manifest.json", dir, threads);
      ++total;
      if (outputs(dir) == reference && !reference.empty()) ++identical;
    }
  }
  // The fitter replays a recorded trace.
  const auto trace = (root / "transient_t1" / "trace_p0.csv").string();
  run("fit", configs / "fit.json", root / "fit_t1", 1, trace);
  const auto fit_ref = outputs(root / "fit_t1");
  for (int threads : {4, 8}) {
    const auto dir = root / ("fit_t" + std::to_string(threads));
    run("fit", root / "fit_t1" / "manifest.json", dir, threads, trace);
    ++total;
    if (outputs(dir) == fit_ref && !fit_ref.empty()) ++identical;
  }
  r.check(identical == total, std::to_string(identical) + "/" + std::to_string(total) +
                                  " manifest reruns byte-identical across threads {1, 4, 8}");
  return r.take();
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"variance model closed form", criterion_1},
      {"conjugate-loss optimizer", criterion_2},
      {"Monte-Carlo twin-beam statistics", criterion_3},
      {"squeezed/coherent std-error ratio", criterion_4},
      {"averaging law and sensitivity brackets", criterion_5},
      {"thermal solver", criterion_6},
      {"al_bridge imaging", criterion_7},
      {"double-exponential fitting", criterion_8},
      {"variance transient", criterion_9},
      {"determinism across thread counts", criterion_10},
  };
  // --strict: nonzero exit when any criterion fails.
  bool strict = false;
  std::vector<int> only;
  for (int i = 1; i < argc; ++i) {
    if (std::string(argv[i]) == "--strict") {
      strict = true;
    } else {
      only.push_back(std::atoi(argv[i]));
    }
  }

  int failures = 0, run = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int id = static_cast<int>(k + 1);
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    ++run;
    if (!o.pass) ++failures;
    std::printf("criterion %2d %s: %s (%s) [%.1f s]\n", id, o.pass ? "PASS" : "FAIL",
                criteria[k].first.c_str(), o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d/%d criteria passed\n", run - failures, run);
  return strict && failures > 0 ? 1 : 0;
}
