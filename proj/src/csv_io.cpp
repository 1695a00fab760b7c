#include "qthermo/csv_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <ostream>

#include "qthermo/errors.hpp"

namespace qthermo::io {

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

const char* label_name(detect::FrameLabel label) {
  switch (label) {
    case detect::FrameLabel::hot: return "hot";
    case detect::FrameLabel::cold: return "cold";
    default: return "transition";
  }
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    std::string field = line.substr(start, comma == std::string::npos ? std::string::npos
                                                                      : comma - start);
    const auto first = field.find_first_not_of(" \t\r");
    const auto last = field.find_last_not_of(" \t\r");
    out.push_back(first == std::string::npos ? std::string{} : field.substr(first, last - first + 1));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

namespace {

double parse_number(const std::string& s, std::size_t line, const std::string& column) {
  if (s.empty()) throw InputError(line, "empty value in column '" + column + "'");
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || !std::isfinite(v)) {
    throw InputError(line, "column '" + column + "': '" + s + "' is not a finite number");
  }
  return v;
}

detect::FrameLabel parse_label(const std::string& s, std::size_t line) {
  if (s == "hot" || s == "1") return detect::FrameLabel::hot;
  if (s == "cold" || s == "0") return detect::FrameLabel::cold;
  if (s == "transition" || s == "2") return detect::FrameLabel::transition;
  throw InputError(line, "unknown frame label '" + s + "'");
}

bool blank(const std::string& line) {
  return line.find_first_not_of(" \t\r") == std::string::npos;
}

}  // namespace

void write_trace_csv(std::ostream& out, const detect::DetectorTrace& trace) {
  out << "time_s,probe,conjugate,differential,frame\n";
  for (std::size_t k = 0; k < trace.size(); ++k) {
    out << format_number(k * trace.bin_duration) << ',' << format_number(trace.probe[k]) << ','
        << format_number(trace.conjugate[k]) << ',' << format_number(trace.differential[k])
        << ',' << label_name(trace.labels[k]) << '\n';
  }
}

detect::DetectorTrace read_trace_csv(std::istream& in, double modulation_frequency, double duty) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw InputError(1, "empty trace file");
  ++line_no;
  const auto header = split_csv_line(line);
  const auto column = [&](const std::string& name) -> std::size_t {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw InputError(1, "missing column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t c_time = column("time_s"), c_probe = column("probe"),
                    c_conj = column("conjugate"), c_frame = column("frame");
  const auto diff_it = std::find(header.begin(), header.end(), "differential");

  detect::DetectorTrace trace;
  trace.modulation_frequency = modulation_frequency;
  trace.duty = duty;
  std::vector<double> times;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank(line)) continue;
    const auto f = split_csv_line(line);
    if (f.size() != header.size()) {
      throw InputError(line_no, "expected " + std::to_string(header.size()) + " fields, found " +
                                    std::to_string(f.size()));
    }
    times.push_back(parse_number(f[c_time], line_no, "time_s"));
    const double p = parse_number(f[c_probe], line_no, "probe");
    const double c = parse_number(f[c_conj], line_no, "conjugate");
    trace.probe.push_back(p);
    trace.conjugate.push_back(c);
    trace.differential.push_back(
        diff_it == header.end()
            ? p - c
            : parse_number(f[static_cast<std::size_t>(diff_it - header.begin())], line_no,
                           "differential"));
    trace.labels.push_back(parse_label(f[c_frame], line_no));
    if (times.size() >= 2 && !(times.back() > times[times.size() - 2])) {
      throw InputError(line_no, "time_s must increase");
    }
  }
  if (times.size() < 2) throw InputError(line_no, "trace needs at least two rows");
  trace.bin_duration = (times.back() - times.front()) / static_cast<double>(times.size() - 1);
  for (std::size_t k = 1; k < times.size(); ++k) {
    if (std::fabs(times[k] - times[k - 1] - trace.bin_duration) > 1e-3 * trace.bin_duration) {
      throw InputError(k + 2, "time_s is not uniformly sampled");
    }
  }
  return trace;
}

void write_image_csv(std::ostream& out, const imaging::HeatMapImage& image) {
  out << "x_um,y_um,dT_mK,stderr_mK,noise_db,valid\n";
  const auto& s = image.scan;
  for (int j = 0; j < s.ny; ++j) {
    for (int i = 0; i < s.nx; ++i) {
      const auto& p = image.at(i, j);
      out << format_number(s.pixel_x(i) * 1e6) << ',' << format_number(s.pixel_y(j) * 1e6) << ','
          << format_number(p.delta_t * 1e3) << ',' << format_number(p.std_error * 1e3) << ','
          << format_number(p.noise_rel_shot_db) << ',' << (p.valid ? 1 : 0) << '\n';
    }
  }
}

void write_image_pgm(std::ostream& out, const imaging::HeatMapImage& image) {
  const auto& s = image.scan;
  double top = 0.0;
  for (const auto& p : image.pixels) {
    if (p.valid && std::isfinite(p.delta_t)) top = std::max(top, p.delta_t);
  }
  out << "P5\n" << s.nx << ' ' << s.ny << "\n255\n";
  for (int j = s.ny - 1; j >= 0; --j) {
    for (int i = 0; i < s.nx; ++i) {
      const auto& p = image.at(i, j);
      double g = 0.0;
      if (p.valid && top > 0.0 && std::isfinite(p.delta_t)) {
        g = std::clamp(std::round(255.0 * p.delta_t / top), 0.0, 255.0);
      }
      out.put(static_cast<char>(static_cast<unsigned char>(g)));
    }
  }
}

void write_curve_csv(std::ostream& out, const analysis::TransientCurve& curve) {
  out << "time_s,dT_K,band_K\n";
  for (std::size_t k = 0; k < curve.times.size(); ++k) {
    out << format_number(curve.times[k]) << ',' << format_number(curve.dT_mean[k]) << ','
        << format_number(curve.dT_band[k]) << '\n';
  }
}

void write_fits_csv(std::ostream& out, const std::vector<FitRow>& rows) {
  out << "pixel_id,phase,a0,a1,tau1,a2,tau2,residual,converged,single_exp\n";
  for (const auto& r : rows) {
    const auto& f = r.fit;
    out << r.pixel_id << ',' << analysis::phase_name(r.phase) << ',' << format_number(f.a0) << ','
        << format_number(f.a1) << ',' << format_number(f.tau1) << ',' << format_number(f.a2)
        << ',' << format_number(f.tau2) << ',' << format_number(f.residual_rms) << ','
        << (f.converged ? 1 : 0) << ',' << (f.single_exponential ? 1 : 0) << '\n';
  }
}

void write_variance_csv(std::ostream& out, const analysis::VarianceTransient& v) {
  out << "time_s,noise_db,std_error_db,frame\n";
  for (std::size_t k = 0; k < v.times.size(); ++k) {
    out << format_number(v.times[k]) << ',' << format_number(v.noise_db[k]) << ','
        << format_number(v.std_error_db[k]) << ',' << label_name(v.labels[k]) << '\n';
  }
}

void write_spectrum_csv(std::ostream& out, const std::vector<source::SpectrumPoint>& spectrum) {
  out << "frequency_hz,noise_db\n";
  for (const auto& p : spectrum) {
    out << format_number(p.frequency_hz) << ',' << format_number(p.noise_db) << '\n';
  }
}

void write_resolution_csv(std::ostream& out, const analysis::ResolutionStudy& study) {
  out << "duration_s,dT_std_K,dT_mean_K,repeats\n";
  for (const auto& p : study.points) {
    out << format_number(p.duration) << ',' << format_number(p.dT_std) << ','
        << format_number(p.dT_mean) << ',' << p.repeats << '\n';
  }
}

void write_field_csv(std::ostream& out, const thermal::ThermalScene& scene,
                     const thermal::TemperatureField& field) {
  out << "x_um,y_um,film_dT_K,substrate_dT_K\n";
  for (int j = 0; j < scene.ny; ++j) {
    for (int i = 0; i < scene.nx; ++i) {
      const std::size_t c = scene.index(i, j);
      out << format_number(scene.x_center(i) * 1e6) << ',' << format_number(scene.y_center(j) * 1e6)
          << ',' << format_number(field.film_dT[c]) << ',' << format_number(field.substrate_dT[c])
          << '\n';
    }
  }
}

Series read_series_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line)) throw InputError(1, "empty file");
  const auto header = split_csv_line(line);
  if (header.size() < 2) throw InputError(1, "expected a header with two columns");
  Series s;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank(line)) continue;
    const auto f = split_csv_line(line);
    if (f.size() != header.size()) {
      throw InputError(line_no, "expected " + std::to_string(header.size()) + " fields, found " +
                                    std::to_string(f.size()));
    }
    s.times.push_back(parse_number(f[0], line_no, header[0]));
    s.values.push_back(parse_number(f[1], line_no, header[1]));
  }
  if (s.times.empty()) throw InputError(line_no, "no data rows");
  return s;
}

}  // namespace qthermo::io
