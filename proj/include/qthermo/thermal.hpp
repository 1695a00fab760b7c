#pragma once

// Two-layer finite-difference heat model of a patterned metal film.
//
// Every lateral cell carries a substrate node; metal cells additionally carry
// a film node coupled to the substrate through the interlayer (oxide)
// conductance k/t. Substrate nodes leak to the heat sink through a lumped
// spreading conductance. Temperatures are rises above the sink.

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "qthermo/probe_spot.hpp"

namespace qthermo::thermal {

struct Material {
  std::string name;
  double thermal_conductivity = 0.0;       // W/(m K)
  double volumetric_heat_capacity = 0.0;   // J/(m^3 K)
  double thickness = 0.0;                  // m
  double c_tr = 0.0;                       // 1/K, thermoreflectance coefficient
  double base_reflectivity = 0.0;

  void validate(const std::string& role) const;
};

enum class Region : std::uint8_t { off_device = 0, substrate = 1, metal = 2 };

enum class LateralBoundary : std::uint8_t { adiabatic, fixed };

struct ThermalScene {
  std::string name;
  int nx = 0;
  int ny = 0;
  double cell_size = 0.0;  // m, square cells
  std::vector<Region> mask;
  std::vector<std::uint8_t> drive_region;  // metal cells carrying current / absorbing RF
  std::vector<double> sheet_resistance;    // ohm/sq on metal cells
  Material metal;
  Material oxide;      // interlayer between film and substrate node
  Material substrate;  // effective substrate layer (thermal penetration depth)
  double sink_conductance = 0.0;   // W/(m^2 K), substrate node to sink
  double sink_temperature = 295.0; // K, metadata; fields are rises above it
  LateralBoundary boundary = LateralBoundary::adiabatic;

  std::size_t cells() const { return static_cast<std::size_t>(nx) * ny; }
  std::size_t index(int i, int j) const { return static_cast<std::size_t>(j) * nx + i; }
  bool is_metal(std::size_t c) const { return mask[c] == Region::metal; }
  double x_center(int i) const { return (i + 0.5) * cell_size; }
  double y_center(int j) const { return (j + 0.5) * cell_size; }
  double width() const { return nx * cell_size; }
  double height() const { return ny * cell_size; }
  double interlayer_conductance() const;  // W/(m^2 K)

  /// Throws DomainError on inconsistent grids, labels, or materials.
  void validate() const;
};

struct DriveWaveform {
  enum class Kind { dc_square, rf_square };
  Kind kind = Kind::dc_square;
  double amplitude = 0.0;              // A for dc_square, absorbed W for rf_square
  double modulation_frequency = 40e3;  // Hz
  double duty = 0.5;                   // hot fraction of each cycle

  double period() const { return 1.0 / modulation_frequency; }
  void validate() const;
};

struct TemperatureField {
  std::vector<double> film_dT;       // K; zero on cells without a film node
  std::vector<double> substrate_dT;  // K
  double timestamp = 0.0;            // s
};

TemperatureField zero_field(const ThermalScene& scene);

/// Heat deposited in the metal film, W/m^3 per cell (zero off-metal).
struct SourceField {
  std::vector<double> power_density;

  double total_power(const ThermalScene& scene) const;
  SourceField scaled(double factor) const;
};

struct JouleSolution {
  SourceField source;
  double resistance = 0.0;   // ohm between the terminals
  double total_power = 0.0;  // W
};

/// Current flows between the drive-region cells in the first and last grid
/// columns. Throws DomainError when no drive path connects them.
JouleSolution joule_source(const ThermalScene& scene, double current);

/// Absorbed probe light, (1 - R) of the power landing on metal.
SourceField laser_source(const ThermalScene& scene, const detect::ProbeSpot& spot);

/// Uniform absorbed RF power over the drive region.
SourceField rf_source(const ThermalScene& scene, double absorbed_power);

/// Source during the hot half of the drive waveform.
SourceField drive_source(const ThermalScene& scene, const DriveWaveform& drive);

/// Explicit integrator with coefficients precomputed from a scene.
class Stepper {
 public:
  explicit Stepper(const ThermalScene& scene);

  /// Largest dt keeping every update a convex combination (positivity bound).
  double stability_limit() const { return stability_limit_; }
  /// Default step: 0.4 x the stability limit.
  double default_dt() const { return 0.4 * stability_limit_; }

  /// Advances `field` in place. Throws DomainError when dt exceeds the limit.
  void advance(TemperatureField& field, const SourceField& source, double dt);

  /// Stored heat above the sink, J.
  double energy(const TemperatureField& field) const;

  const ThermalScene& scene() const { return *scene_; }

 private:
  const ThermalScene* scene_;
  double film_capacity_ = 0.0;  // J/K per cell
  double sub_capacity_ = 0.0;
  double film_lateral_ = 0.0;   // W/K per edge
  double sub_lateral_ = 0.0;
  double vertical_ = 0.0;
  double sink_ = 0.0;
  double film_thickness_ = 0.0;
  double cell_area_ = 0.0;
  double stability_limit_ = 0.0;
  std::vector<double> scratch_film_;
  std::vector<double> scratch_sub_;
};

/// One explicit update (convenience wrapper around Stepper).
TemperatureField step(const TemperatureField& field, const ThermalScene& scene,
                      const SourceField& source, double dt);

/// Factorized steady-state operator. Needs a sink or fixed boundaries.
class SteadySolver {
 public:
  explicit SteadySolver(const ThermalScene& scene);
  ~SteadySolver();
  SteadySolver(SteadySolver&&) noexcept;
  SteadySolver& operator=(SteadySolver&&) noexcept;

  TemperatureField solve(const SourceField& source) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

TemperatureField steady_state(const ThermalScene& scene, const SourceField& source);

/// Slowest lumped time constant, used to size warm-up.
double slowest_time_constant(const ThermalScene& scene);

struct ModulatedOptions {
  double tolerance = 1e-3;        // K, successive-cycle max difference
  int min_cycles = 2;
  bool stop_at_convergence = true;
};

struct ModulatedRun {
  /// Samples over the final simulated cycle, taken at the midpoints of
  /// `samples_per_cycle` equal intervals starting at the hot-frame edge.
  std::vector<TemperatureField> cycle;
  int cycles_run = 0;
  int converged_cycle = -1;  // 1-based cycle where the tolerance was first met
  bool converged = false;
  double last_cycle_change = 0.0;  // K
  double dt = 0.0;
  int steps_per_sample = 0;
};

ModulatedRun run_modulated(const ThermalScene& scene, const DriveWaveform& drive, int n_cycles,
                           int samples_per_cycle, const ModulatedOptions& options = {});

}  // namespace qthermo::thermal
