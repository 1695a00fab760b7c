#pragma once

// Scene description files: materials plus a list of rectangles rasterized
// onto the lateral grid. Geometry is given in micrometres, everything else SI.

#include <string>

#include <json.hpp>

#include "qthermo/thermal.hpp"
#include "qthermo/twin_beam.hpp"

namespace qthermo::scene {

/// Throws ConfigError naming the offending field (prefixed by `where`).
thermal::Material material_from_json(const nlohmann::json& j, const std::string& where);
thermal::ThermalScene scene_from_json(const nlohmann::json& j, const std::string& where = "scene");
source::FwmParams fwm_from_json(const nlohmann::json& j, const std::string& where = "source",
                                source::FwmParams defaults = {});

/// Reads and parses a JSON file; ConfigError on I/O or syntax problems.
nlohmann::json read_json_file(const std::string& path);

/// `<data_dir>/presets/<name>.json`
std::string preset_path(const std::string& data_dir, const std::string& name);

thermal::ThermalScene load_scene(const std::string& path);

}  // namespace qthermo::scene
