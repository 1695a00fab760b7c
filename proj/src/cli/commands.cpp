#include "qthermo/cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "qthermo/analysis.hpp"
#include "qthermo/csv_io.hpp"
#include "qthermo/errors.hpp"
#include "qthermo/imaging.hpp"
#include "qthermo/scene_io.hpp"

namespace qthermo::cli {

using nlohmann::json;

namespace {

// Outputs are buffered and written only after the command has succeeded.
class Outputs {
 public:
  std::ostringstream& open(const std::string& name) {
    auto& s = files_[name];
    s.str({});
    return s;
  }

  json flush(const std::string& dir) const {
    std::filesystem::create_directories(dir);
    json listing = json::array();
    for (const auto& [name, stream] : files_) {
      const std::string bytes = stream.str();
      std::ofstream out(std::filesystem::path(dir) / name, std::ios::binary);
      out << bytes;
      if (!out) throw std::runtime_error("cannot write " + name);
      listing.push_back({{"file", name}, {"bytes", bytes.size()}, {"fnv1a64", hex64(fnv1a64(bytes))}});
    }
    return listing;
  }

 private:
  std::map<std::string, std::ostringstream> files_;
};

struct Result {
  json summary = json::object();
  bool converged = true;
};

source::FwmParams detected_source(const RunConfig& cfg) {
  const double eff = cfg.detection.detector_efficiency;
  return source::with_extra_loss(cfg.source, eff, eff);
}

// ---------------------------------------------------------------------------

Result cmd_optimize(const RunConfig& cfg, Outputs& out) {
  const auto& o = cfg.optimize;
  std::vector<double> etas;
  for (int k = 1; k <= o.eta_points; ++k) etas.push_back(static_cast<double>(k) / o.eta_points);
  const auto gain_at = [&](int i) {
    return o.gain_min + (o.gain_max - o.gain_min) * i / (o.gain_points - 1);
  };

  auto& s1 = out.open("surface_gain_eta_c.csv");
  s1 << "gain,eta_c,variance,squeezing_db\n";
  auto& ridge = out.open("ridge_gain.csv");
  ridge << "gain,eta_c_opt,variance,squeezing_db\n";
  for (int i = 0; i < o.gain_points; ++i) {
    const double g = gain_at(i);
    for (double ec : etas) {
      const double v = source::variance_with_loss(g, o.eta_p, ec);
      s1 << io::format_number(g) << ',' << io::format_number(ec) << ',' << io::format_number(v)
         << ',' << io::format_number(source::squeezing_db(v)) << '\n';
    }
    const auto opt = source::optimize_conjugate_loss(g, o.eta_p);
    ridge << io::format_number(g) << ',' << io::format_number(opt.eta_c) << ','
          << io::format_number(opt.variance) << ','
          << io::format_number(source::squeezing_db(opt.variance)) << '\n';
  }

  auto& s2 = out.open("surface_eta_p_eta_c.csv");
  s2 << "eta_p,eta_c,variance,squeezing_db\n";
  auto& ridge2 = out.open("ridge_eta_p.csv");
  ridge2 << "eta_p,eta_c_opt,variance,squeezing_db\n";
  for (double ep : etas) {
    for (double ec : etas) {
      const double v = source::variance_with_loss(o.gain, ep, ec);
      s2 << io::format_number(ep) << ',' << io::format_number(ec) << ',' << io::format_number(v)
         << ',' << io::format_number(source::squeezing_db(v)) << '\n';
    }
    const auto opt = source::optimize_conjugate_loss(o.gain, ep);
    ridge2 << io::format_number(ep) << ',' << io::format_number(opt.eta_c) << ','
           << io::format_number(opt.variance) << ','
           << io::format_number(source::squeezing_db(opt.variance)) << '\n';
  }

  const auto best = source::optimize_conjugate_loss(o.gain, o.eta_p);
  Result r;
  r.summary["optimum"] = {{"gain", o.gain},
                          {"eta_p", o.eta_p},
                          {"eta_c", best.eta_c},
                          {"variance", best.variance},
                          {"squeezing_db", source::squeezing_db(best.variance)}};
  return r;
}

// ---------------------------------------------------------------------------

json thermal_summary(const imaging::ThermalResponse& response) {
  return {{"converged", response.run.converged},
          {"cycles_run", response.run.cycles_run},
          {"converged_cycle", response.run.converged_cycle},
          {"last_cycle_change_K", response.run.last_cycle_change},
          {"dt_s", response.run.dt}};
}

Result cmd_scan(const RunConfig& cfg, Outputs& out) {
  const auto response = imaging::prepare_thermal(cfg.scene, cfg.drive, cfg.detection.bin_duration);
  const auto image =
      imaging::acquire_image(cfg.scene, response, cfg.scan, cfg.source, cfg.seed, cfg.detection);
  io::write_image_csv(out.open("image.csv"), image);
  io::write_image_pgm(out.open("image.pgm"), image);

  const auto& s = cfg.scan;
  auto& truth = out.open("ground_truth.csv");
  truth << "x_um,y_um,truth_dT_mK,metal_fraction\n";
  for (int j = 0; j < s.ny; ++j) {
    for (int i = 0; i < s.nx; ++i) {
      const std::size_t p = static_cast<std::size_t>(j) * s.nx + i;
      truth << io::format_number(s.pixel_x(i) * 1e6) << ',' << io::format_number(s.pixel_y(j) * 1e6)
            << ',' << io::format_number(image.truth_dT[p] * 1e3) << ','
            << io::format_number(image.metal_fraction[p]) << '\n';
    }
  }
  const std::size_t hot_sample =
      static_cast<std::size_t>(std::max(0.0, std::round(response.duty * response.bins_per_cycle) - 1));
  io::write_field_csv(out.open("field_hot.csv"), cfg.scene, response.run.cycle.at(hot_sample));

  const auto argmax = [&](const auto& value) {
    std::size_t best = s.pixels();
    for (std::size_t p = 0; p < s.pixels(); ++p) {
      const double v = value(p);
      if (!std::isfinite(v)) continue;
      if (best == s.pixels() || v > value(best)) best = p;
    }
    return best;
  };
  const auto describe = [&](std::size_t p, double v) -> json {
    if (p >= s.pixels()) return nullptr;
    const int i = static_cast<int>(p % s.nx), j = static_cast<int>(p / s.nx);
    return {{"i", i}, {"j", j}, {"x_um", s.pixel_x(i) * 1e6}, {"y_um", s.pixel_y(j) * 1e6},
            {"dT_mK", v * 1e3}};
  };
  const std::size_t meas = argmax([&](std::size_t p) {
    return image.pixels[p].valid ? image.pixels[p].delta_t : std::nan("");
  });
  const std::size_t tru = argmax([&](std::size_t p) { return image.truth_dT[p]; });

  std::size_t valid = 0;
  for (const auto& p : image.pixels) valid += p.valid ? 1 : 0;
  const auto model = imaging::noise_model_for(detected_source(cfg), s.source_mode,
                                              cfg.scene.metal.c_tr, cfg.detection.gate_fraction);
  const auto budget = imaging::acquisition_budget(s, model);

  Result r;
  r.converged = response.run.converged;
  r.summary["thermal"] = thermal_summary(response);
  r.summary["valid_pixels"] = valid;
  r.summary["argmax_measured"] = describe(meas, meas < s.pixels() ? image.pixels[meas].delta_t : 0);
  r.summary["argmax_truth"] = describe(tru, tru < s.pixels() ? image.truth_dT[tru] : 0);
  r.summary["budget"] = {{"total_time_s", budget.total_time},
                         {"per_pixel_dT_K", budget.per_pixel_dT},
                         {"reference_dT_K", model.reference_dT},
                         {"reference_time_s", model.reference_time}};
  if (cfg.detection.laser_heating) {
    double peak = 0.0;
    for (const auto& p : image.pixels) {
      if (p.valid) peak = std::max(peak, p.probe_heating);
    }
    r.summary["probe_heating_peak_K"] = peak;
  }
  return r;
}

// ---------------------------------------------------------------------------

Result transient_from_trace(const detect::DetectorTrace& trace, const thermal::Material& metal,
                            int rebin, int variance_groups, const std::string& id,
                            std::vector<io::FitRow>& fits, Outputs& out) {
  Result r;
  json entry = json::object();
  for (auto phase : {analysis::Phase::heating, analysis::Phase::cooling}) {
    const auto curve = analysis::cycle_resolved_transient(trace, metal, phase, rebin);
    io::write_curve_csv(out.open("curve_" + id + "_" + analysis::phase_name(phase) + ".csv"), curve);
    const auto fit = analysis::fit_double_exponential(curve);
    fits.push_back({id, phase, fit});
    r.converged = r.converged && fit.converged;
    entry[analysis::phase_name(phase)] = {{"tau1_s", fit.tau1},
                                          {"tau2_s", fit.tau2},
                                          {"converged", fit.converged},
                                          {"single_exponential", fit.single_exponential}};
  }
  if (trace.full_cycles() >= 100) {
    const auto v = analysis::variance_transient(trace, variance_groups);
    io::write_variance_csv(out.open("variance_" + id + ".csv"), v);
    const auto [lo, hi] = std::minmax_element(v.noise_db.begin(), v.noise_db.end());
    entry["variance_span_db"] = *hi - *lo;
    entry["variance_mean_db"] = [&] {
      double sum = 0.0;
      for (double d : v.noise_db) sum += d;
      return sum / static_cast<double>(v.noise_db.size());
    }();
  }
  r.summary = entry;
  return r;
}

Result cmd_transient(const RunConfig& cfg, Outputs& out) {
  const auto& t = cfg.transient;
  // Position checks before any simulation work.
  for (std::size_t k = 0; k < t.positions.size(); ++k) {
    const detect::ProbeSpot spot{t.positions[k][0], t.positions[k][1], cfg.detection.spot_diameter,
                                 cfg.detection.probe_power};
    if (detect::SpotFootprint(spot, cfg.scene).metal_fraction() < detect::kMinMetalFraction) {
      throw ConfigError("transient.positions_um[" + std::to_string(k) + "]",
                        "probe spot misses the metal");
    }
  }
  const double bins = 1.0 / (cfg.drive.modulation_frequency * cfg.detection.bin_duration);
  if (t.variance_groups > std::lround(bins)) {
    throw ConfigError("transient.variance_groups", "exceeds the bins per cycle");
  }
  const auto response = imaging::prepare_thermal(cfg.scene, cfg.drive, cfg.detection.bin_duration);
  Result r;
  r.converged = response.run.converged;
  r.summary["thermal"] = thermal_summary(response);
  r.summary["c_tr"] = cfg.scene.metal.c_tr;
  std::vector<io::FitRow> fits;
  json positions = json::array();
  for (std::size_t k = 0; k < t.positions.size(); ++k) {
    const std::string id = "p" + std::to_string(k);
    const auto trace = imaging::simulate_pixel_trace(
        cfg.scene, response, t.positions[k][0], t.positions[k][1], cfg.source,
        cfg.scan.source_mode, static_cast<std::size_t>(t.cycles), cfg.detection, cfg.seed,
        static_cast<std::uint32_t>(k));
    if (t.write_traces) io::write_trace_csv(out.open("trace_" + id + ".csv"), trace);
    auto sub = transient_from_trace(trace, cfg.scene.metal, t.rebin, t.variance_groups, id, fits, out);
    r.converged = r.converged && sub.converged;
    sub.summary["id"] = id;
    sub.summary["x_um"] = t.positions[k][0] * 1e6;
    sub.summary["y_um"] = t.positions[k][1] * 1e6;
    const auto est = detect::lock_in_demodulate(trace, cfg.scene.metal, cfg.detection.gate_fraction);
    sub.summary["lock_in_dT_mK"] = est.delta_t * 1e3;
    sub.summary["lock_in_stderr_mK"] = est.std_error * 1e3;
    positions.push_back(sub.summary);
  }
  io::write_fits_csv(out.open("fits.csv"), fits);
  r.summary["positions"] = positions;
  return r;
}

// ---------------------------------------------------------------------------

Result cmd_noise(const RunConfig& cfg, Outputs& out) {
  const auto& n = cfg.noise;
  const auto detected = detected_source(cfg);
  const auto spectrum = source::noise_spectrum(detected, n.technical_corner, n.f_max, n.points);
  io::write_spectrum_csv(out.open("spectrum.csv"), spectrum);

  analysis::ResolutionConfig rc;
  rc.detected = detected;
  rc.c_tr = cfg.scene.metal.c_tr;
  rc.bin_duration = cfg.detection.bin_duration;
  rc.modulation_frequency = cfg.drive.modulation_frequency;
  rc.duty = cfg.drive.duty;
  rc.gate_fraction = cfg.detection.gate_fraction;
  rc.mode = detect::SourceMode::squeezed;
  const auto study = analysis::resolution_vs_averaging(rc, n.durations, n.repeats, cfg.seed);
  io::write_resolution_csv(out.open("resolution.csv"), study);

  Result r;
  const double floor = source::squeezing_db(source::total_normalized_variance(detected));
  r.summary["floor_db"] = floor;
  r.summary["noise_at_modulation_db"] =
      source::noise_spectrum_value(detected, n.technical_corner, cfg.drive.modulation_frequency);
  r.summary["slope"] = study.slope;
  json points = json::array();
  for (const auto& p : study.points) points.push_back({{"duration_s", p.duration}, {"dT_std_K", p.dT_std}});
  r.summary["squeezed"] = points;

  if (n.compare_coherent) {
    rc.mode = detect::SourceMode::coherent;
    const auto coherent = analysis::resolution_vs_averaging(rc, n.durations, n.repeats, cfg.seed);
    io::write_resolution_csv(out.open("resolution_coherent.csv"), coherent);
    json ratios = json::array();
    for (std::size_t k = 0; k < study.points.size(); ++k) {
      ratios.push_back(study.points[k].dT_std / coherent.points[k].dT_std);
    }
    r.summary["coherent_slope"] = coherent.slope;
    r.summary["squeezed_to_coherent_ratio"] = ratios;
  }
  return r;
}

// ---------------------------------------------------------------------------

Result cmd_fit(const RunConfig& cfg, const std::string& input, Outputs& out) {
  std::ifstream in(input);
  if (!in) throw ConfigError("--input", "cannot open '" + input + "'");
  std::string header;
  std::getline(in, header);
  in.clear();
  in.seekg(0);
  const auto columns = io::split_csv_line(header);
  const bool is_trace = std::find(columns.begin(), columns.end(), "frame") != columns.end();

  std::vector<io::FitRow> fits;
  Result r;
  if (is_trace) {
    const auto trace = io::read_trace_csv(in, cfg.fit.modulation_frequency, cfg.fit.duty);
    try {
      trace.bins_per_cycle();
    } catch (const DomainError& e) {
      throw InputError(0, e.what());
    }
    const int groups = std::min(10, trace.bins_per_cycle());
    r = transient_from_trace(trace, cfg.scene.metal, cfg.fit.rebin, groups, "input", fits, out);
    r.summary["kind"] = "trace";
  } else {
    const auto series = io::read_series_csv(in);
    if (series.times.size() < 8) throw InputError(0, "fit needs at least 8 data rows");
    const auto fit = analysis::fit_double_exponential(series.times, series.values);
    fits.push_back({"input", cfg.fit.phase, fit});
    r.converged = fit.converged;
    r.summary = {{"kind", "series"},
                 {"a0", fit.a0},
                 {"a1", fit.a1},
                 {"tau1_s", fit.tau1},
                 {"a2", fit.a2},
                 {"tau2_s", fit.tau2},
                 {"residual_rms", fit.residual_rms},
                 {"converged", fit.converged},
                 {"single_exponential", fit.single_exponential}};
  }
  io::write_fits_csv(out.open("fits.csv"), fits);
  return r;
}

}  // namespace

int run_command(const CommandRequest& request, std::ostream& log) {
  static const char* kCommands[] = {"optimize", "scan", "transient", "noise", "fit"};
  if (std::find(std::begin(kCommands), std::end(kCommands), request.command) ==
      std::end(kCommands)) {
    log << "error: unknown command '" << request.command << "'\n";
    return kConfigError;
  }
  RunConfig cfg;
  try {
    json doc = json::object();
    if (request.config_path) {
      doc = load_config_document(*request.config_path);
    } else if (request.command != "fit") {
      throw ConfigError("--config", "a config file is required for '" + request.command + "'");
    }
    cfg = parse_run_config(std::move(doc), request.overrides, request.data_dir);
    if (request.command == "fit" && !request.input_path) {
      throw ConfigError("--input", "the fit command needs an input CSV");
    }
  } catch (const ConfigError& e) {
    log << "error: " << e.what() << '\n';
    return kConfigError;
  }

  Outputs out;
  Result result;
  try {
    if (request.command == "optimize") result = cmd_optimize(cfg, out);
    if (request.command == "scan") result = cmd_scan(cfg, out);
    if (request.command == "transient") result = cmd_transient(cfg, out);
    if (request.command == "noise") result = cmd_noise(cfg, out);
    if (request.command == "fit") result = cmd_fit(cfg, *request.input_path, out);
  } catch (const ConfigError& e) {
    log << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const InputError& e) {
    log << "error: " << *request.input_path << ": " << e.what() << '\n';
    return kConfigError;
  } catch (const DomainError& e) {
    log << "error: " << e.what() << '\n';
    return kConfigError;
  }

  json manifest;
  manifest["manifest_version"] = 1;
  manifest["command"] = request.command;
  manifest["status"] = result.converged ? "ok" : "not_converged";
  manifest["seed"] = cfg.seed;
  manifest["threads"] = cfg.threads;
  manifest["config_hash"] = config_hash(cfg.document);
  manifest["config"] = cfg.document;
  if (request.input_path) manifest["input"] = *request.input_path;
  manifest["summary"] = result.summary;
  manifest["outputs"] = out.flush(cfg.output_dir);
  {
    std::ofstream m(std::filesystem::path(cfg.output_dir) / "manifest.json", std::ios::binary);
    m << manifest.dump(2) << '\n';
  }
  if (!result.converged) {
    log << "warning: numerical non-convergence; outputs flagged in manifest.json\n";
    return kNotConverged;
  }
  log << request.command << ": wrote " << manifest["outputs"].size() << " files to "
      << cfg.output_dir << '\n';
  return kOk;
}

}  // namespace qthermo::cli
