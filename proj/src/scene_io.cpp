#include "qthermo/scene_io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "qthermo/errors.hpp"

namespace qthermo::scene {

using nlohmann::json;

namespace {

const json& require(const json& j, const std::string& key, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) throw ConfigError(where + "." + key, "missing required field");
  return *it;
}

double number(const json& j, const std::string& key, const std::string& where) {
  const json& v = require(j, key, where);
  if (!v.is_number()) throw ConfigError(where + "." + key, "expected a number");
  return v.get<double>();
}

double number_or(const json& j, const std::string& key, const std::string& where, double fallback) {
  if (!j.contains(key)) return fallback;
  return number(j, key, where);
}

std::pair<double, double> range(const json& j, const std::string& key, const std::string& where) {
  const json& v = require(j, key, where);
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
    throw ConfigError(where + "." + key, "expected [min, max] in micrometres");
  }
  const double a = v[0].get<double>(), b = v[1].get<double>();
  if (!(b > a)) throw ConfigError(where + "." + key, "max must exceed min");
  return {a * 1e-6, b * 1e-6};
}

thermal::Region region_from(const std::string& s, const std::string& where) {
  if (s == "metal") return thermal::Region::metal;
  if (s == "substrate") return thermal::Region::substrate;
  if (s == "off_device") return thermal::Region::off_device;
  throw ConfigError(where, "unknown region '" + s + "'");
}

}  // namespace

thermal::Material material_from_json(const json& j, const std::string& where) {
  thermal::Material m;
  m.name = j.value("name", std::string{});
  m.thermal_conductivity = number(j, "thermal_conductivity", where);
  m.volumetric_heat_capacity = number(j, "volumetric_heat_capacity", where);
  m.thickness = number(j, "thickness", where);
  m.c_tr = number_or(j, "c_tr", where, 0.0);
  m.base_reflectivity = number_or(j, "base_reflectivity", where, 0.0);
  try {
    m.validate(where);
  } catch (const DomainError& e) {
    throw ConfigError(where, e.what());
  }
  return m;
}

thermal::ThermalScene scene_from_json(const json& j, const std::string& where) {
  thermal::ThermalScene s;
  s.name = j.value("name", std::string{"inline"});
  const double cell = number(j, "cell_size_um", where) * 1e-6;
  const double width = number(j, "width_um", where) * 1e-6;
  const double height = number(j, "height_um", where) * 1e-6;
  if (!(cell > 0.0)) throw ConfigError(where + ".cell_size_um", "must be positive");
  s.cell_size = cell;
  s.nx = static_cast<int>(std::lround(width / cell));
  s.ny = static_cast<int>(std::lround(height / cell));
  if (s.nx < 4 || s.ny < 4) throw ConfigError(where, "grid must be at least 4x4 cells");

  const json& mats = require(j, "materials", where);
  s.metal = material_from_json(require(mats, "metal", where + ".materials"),
                               where + ".materials.metal");
  s.oxide = material_from_json(require(mats, "oxide", where + ".materials"),
                               where + ".materials.oxide");
  s.substrate = material_from_json(require(mats, "substrate", where + ".materials"),
                                   where + ".materials.substrate");
  s.sink_conductance = number(j, "sink_conductance", where);
  s.sink_temperature = number_or(j, "sink_temperature", where, 295.0);
  const std::string boundary = j.value("boundary", std::string{"adiabatic"});
  if (boundary == "adiabatic") {
    s.boundary = thermal::LateralBoundary::adiabatic;
  } else if (boundary == "fixed") {
    s.boundary = thermal::LateralBoundary::fixed;
  } else {
    throw ConfigError(where + ".boundary", "expected 'adiabatic' or 'fixed'");
  }

  const double default_rs = number_or(j, "sheet_resistance", where, 0.0);
  const std::string background = j.value("background", std::string{"substrate"});
  s.mask.assign(s.cells(), region_from(background, where + ".background"));
  s.drive_region.assign(s.cells(), 0);
  s.sheet_resistance.assign(s.cells(), 0.0);

  const json& shapes = require(j, "shapes", where);
  if (!shapes.is_array()) throw ConfigError(where + ".shapes", "expected an array");
  for (std::size_t k = 0; k < shapes.size(); ++k) {
    const std::string at = where + ".shapes[" + std::to_string(k) + "]";
    const json& r = shapes[k];
    const auto [x0, x1] = range(r, "x_um", at);
    const auto [y0, y1] = range(r, "y_um", at);
    const auto region = region_from(require(r, "region", at).get<std::string>(), at + ".region");
    const bool drive = r.value("drive", false);
    const double rs = number_or(r, "sheet_resistance", at, default_rs);
    if (drive && region != thermal::Region::metal) {
      throw ConfigError(at + ".drive", "only metal shapes can carry the drive");
    }
    for (int jy = 0; jy < s.ny; ++jy) {
      const double y = s.y_center(jy);
      if (y < y0 || y > y1) continue;
      for (int ix = 0; ix < s.nx; ++ix) {
        const double x = s.x_center(ix);
        if (x < x0 || x > x1) continue;
        const std::size_t c = s.index(ix, jy);
        s.mask[c] = region;
        s.drive_region[c] = drive ? 1 : 0;
        s.sheet_resistance[c] = region == thermal::Region::metal ? rs : 0.0;
      }
    }
  }
  try {
    s.validate();
  } catch (const DomainError& e) {
    throw ConfigError(where, e.what());
  }
  return s;
}

source::FwmParams fwm_from_json(const json& j, const std::string& where, source::FwmParams p) {
  if (!j.is_object()) throw ConfigError(where, "expected an object");
  p.gain = number_or(j, "gain", where, p.gain);
  p.eta_p = number_or(j, "eta_p", where, p.eta_p);
  p.eta_c = number_or(j, "eta_c", where, p.eta_c);
  p.seed_flux = number_or(j, "seed_flux", where, p.seed_flux);
  p.excess_noise_p = number_or(j, "excess_noise_p", where, p.excess_noise_p);
  p.excess_noise_c = number_or(j, "excess_noise_c", where, p.excess_noise_c);
  try {
    p.validate();
  } catch (const DomainError& e) {
    throw ConfigError(where, e.what());
  }
  return p;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, "cannot open file");
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return json::parse(buf.str());
  } catch (const json::parse_error& e) {
    throw ConfigError(path, std::string("invalid JSON: ") + e.what());
  }
}

std::string preset_path(const std::string& data_dir, const std::string& name) {
  if (name.empty() || name.find('/') != std::string::npos || name.find("..") != std::string::npos) {
    throw ConfigError("scene.preset", "invalid preset name '" + name + "'");
  }
  return data_dir + "/presets/" + name + ".json";
}

thermal::ThermalScene load_scene(const std::string& path) {
  return scene_from_json(read_json_file(path));
}

}  // namespace qthermo::scene
