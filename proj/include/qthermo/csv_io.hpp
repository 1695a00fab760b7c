#pragma once

// CSV/PGM writers and the CSV readers used to replay recorded data.
// All writers use a fixed number format, so identical inputs give identical bytes.

#include <iosfwd>
#include <string>
#include <vector>

#include "qthermo/analysis.hpp"
#include "qthermo/detection.hpp"
#include "qthermo/imaging.hpp"
#include "qthermo/thermal.hpp"
#include "qthermo/twin_beam.hpp"

namespace qthermo::io {

std::string format_number(double v);

const char* label_name(detect::FrameLabel label);

/// time_s,probe,conjugate,differential,frame
void write_trace_csv(std::ostream& out, const detect::DetectorTrace& trace);

/// Reads a trace written by write_trace_csv (or recorded data in the same
/// layout). The bin duration comes from the time column. Throws InputError.
detect::DetectorTrace read_trace_csv(std::istream& in, double modulation_frequency,
                                     double duty = 0.5);

/// x_um,y_um,dT_mK,stderr_mK,noise_db,valid (invalid pixels print "nan").
void write_image_csv(std::ostream& out, const imaging::HeatMapImage& image);

/// Binary 8-bit PGM, top row = largest y. Grey level = 255 * dT / max valid dT,
/// clamped to [0, 255]; invalid pixels are 0.
void write_image_pgm(std::ostream& out, const imaging::HeatMapImage& image);

/// time_s,dT_K,band_K
void write_curve_csv(std::ostream& out, const analysis::TransientCurve& curve);

struct FitRow {
  std::string pixel_id;
  analysis::Phase phase = analysis::Phase::heating;
  analysis::DoubleExpFit fit;
};

/// pixel_id,phase,a0,a1,tau1,a2,tau2,residual,converged,single_exp
void write_fits_csv(std::ostream& out, const std::vector<FitRow>& rows);

/// time_s,noise_db,std_error_db,frame
void write_variance_csv(std::ostream& out, const analysis::VarianceTransient& v);

/// frequency_hz,noise_db
void write_spectrum_csv(std::ostream& out, const std::vector<source::SpectrumPoint>& spectrum);

/// duration_s,dT_std_K,dT_mean_K,repeats
void write_resolution_csv(std::ostream& out, const analysis::ResolutionStudy& study);

/// x_um,y_um,film_dT_K,substrate_dT_K
void write_field_csv(std::ostream& out, const thermal::ThermalScene& scene,
                     const thermal::TemperatureField& field);

/// Two numeric columns (time, value) with a header row. Throws InputError.
struct Series {
  std::vector<double> times;
  std::vector<double> values;
};
Series read_series_csv(std::istream& in);

/// Splits on commas and trims surrounding whitespace.
std::vector<std::string> split_csv_line(const std::string& line);

}  // namespace qthermo::io
