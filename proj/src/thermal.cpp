#include "qthermo/thermal.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <string>

#include "qthermo/errors.hpp"

namespace qthermo::thermal {

void Material::validate(const std::string& role) const {
  const auto fail = [&](const std::string& what) { throw DomainError(role + " material: " + what); };
  if (!(thermal_conductivity >= 0.0)) fail("thermal_conductivity must be >= 0");
  if (!(volumetric_heat_capacity > 0.0)) fail("volumetric_heat_capacity must be > 0");
  if (!(thickness > 0.0)) fail("thickness must be > 0");
  if (!(base_reflectivity >= 0.0 && base_reflectivity <= 1.0)) fail("reflectivity must lie in [0, 1]");
  if (!std::isfinite(c_tr)) fail("c_tr must be finite");
}

double ThermalScene::interlayer_conductance() const {
  return oxide.thermal_conductivity / oxide.thickness;
}

void ThermalScene::validate() const {
  if (nx < 4 || ny < 4) throw DomainError("scene grid must be at least 4x4");
  if (!(cell_size > 0.0)) throw DomainError("cell_size must be positive");
  const std::size_t n = cells();
  if (mask.size() != n || drive_region.size() != n || sheet_resistance.size() != n) {
    throw DomainError("scene arrays must have nx*ny entries");
  }
  for (std::size_t c = 0; c < n; ++c) {
    if (static_cast<int>(mask[c]) > 2) throw DomainError("invalid region label");
    if (drive_region[c] && mask[c] != Region::metal) {
      throw DomainError("drive region must lie on metal");
    }
    if (mask[c] == Region::metal && !(sheet_resistance[c] > 0.0)) {
      throw DomainError("metal cells need a positive sheet resistance");
    }
  }
  metal.validate("metal");
  oxide.validate("oxide");
  substrate.validate("substrate");
  if (!(sink_conductance >= 0.0)) throw DomainError("sink_conductance must be >= 0");
}

void DriveWaveform::validate() const {
  if (!(modulation_frequency > 0.0)) throw DomainError("modulation_frequency must be positive");
  if (!(duty > 0.0 && duty < 1.0)) throw DomainError("duty must lie in (0, 1)");
  if (!std::isfinite(amplitude)) throw DomainError("drive amplitude must be finite");
  if (kind == Kind::rf_square && amplitude < 0.0) {
    throw DomainError("absorbed RF power must be non-negative");
  }
}

TemperatureField zero_field(const ThermalScene& scene) {
  return {std::vector<double>(scene.cells(), 0.0), std::vector<double>(scene.cells(), 0.0), 0.0};
}

double SourceField::total_power(const ThermalScene& scene) const {
  double sum = 0.0;
  for (double q : power_density) sum += q;
  return sum * scene.cell_size * scene.cell_size * scene.metal.thickness;
}

SourceField SourceField::scaled(double factor) const {
  SourceField out{power_density};
  for (double& q : out.power_density) q *= factor;
  return out;
}

JouleSolution joule_source(const ThermalScene& scene, double current) {
  scene.validate();
  const int nx = scene.nx, ny = scene.ny;
  const std::size_t n = scene.cells();

  // Component reachable from the left terminal.
  std::vector<int> node(n, -1);
  std::deque<std::size_t> queue;
  int n_nodes = 0;
  for (int j = 0; j < ny; ++j) {
    const std::size_t c = scene.index(0, j);
    if (scene.drive_region[c]) {
      node[c] = n_nodes++;
      queue.push_back(c);
    }
  }
  std::vector<std::size_t> order(queue.begin(), queue.end());
  while (!queue.empty()) {
    const std::size_t c = queue.front();
    queue.pop_front();
    const int i = static_cast<int>(c % nx), j = static_cast<int>(c / nx);
    const int di[4] = {1, -1, 0, 0}, dj[4] = {0, 0, 1, -1};
    for (int k = 0; k < 4; ++k) {
      const int a = i + di[k], b = j + dj[k];
      if (a < 0 || a >= nx || b < 0 || b >= ny) continue;
      const std::size_t nb = scene.index(a, b);
      if (!scene.drive_region[nb] || node[nb] >= 0) continue;
      node[nb] = n_nodes++;
      order.push_back(nb);
      queue.push_back(nb);
    }
  }
  bool reaches_right = false;
  for (int j = 0; j < ny; ++j) reaches_right |= node[scene.index(nx - 1, j)] >= 0;
  if (n_nodes == 0 || !reaches_right) {
    throw DomainError("no connected metal drive path between the left and right terminals");
  }

  const auto edge_g = [&](std::size_t a, std::size_t b) {
    return 2.0 / (scene.sheet_resistance[a] + scene.sheet_resistance[b]);
  };
  const auto terminal_g = [&](std::size_t a) { return 2.0 / scene.sheet_resistance[a]; };

  std::vector<Eigen::Triplet<double>> triplets;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n_nodes);
  for (std::size_t c : order) {
    const int r = node[c];
    const int i = static_cast<int>(c % nx), j = static_cast<int>(c / nx);
    double diag = 0.0;
    if (i + 1 < nx && node[c + 1] >= 0) {
      const double g = edge_g(c, c + 1);
      diag += g;
      triplets.emplace_back(r, node[c + 1], -g);
    }
    if (i > 0 && node[c - 1] >= 0) {
      const double g = edge_g(c, c - 1);
      diag += g;
      triplets.emplace_back(r, node[c - 1], -g);
    }
    if (j + 1 < ny && node[c + nx] >= 0) {
      const double g = edge_g(c, c + nx);
      diag += g;
      triplets.emplace_back(r, node[c + nx], -g);
    }
    if (j > 0 && node[c - nx] >= 0) {
      const double g = edge_g(c, c - nx);
      diag += g;
      triplets.emplace_back(r, node[c - nx], -g);
    }
    if (i == 0) {
      diag += terminal_g(c);
      rhs[r] += terminal_g(c);  // left electrode at 1 V
    }
    if (i == nx - 1) diag += terminal_g(c);  // right electrode at 0 V
    triplets.emplace_back(r, r, diag);
  }
  Eigen::SparseMatrix<double> k(n_nodes, n_nodes);
  k.setFromTriplets(triplets.begin(), triplets.end());
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(k);
  if (solver.info() != Eigen::Success) throw DomainError("potential solve failed");
  const Eigen::VectorXd v = solver.solve(rhs);

  double unit_current = 0.0;
  std::vector<double> power(n, 0.0);  // W per cell at 1 V
  for (std::size_t c : order) {
    const int i = static_cast<int>(c % nx), j = static_cast<int>(c / nx);
    const double vc = v[node[c]];
    if (i + 1 < nx && node[c + 1] >= 0) {
      const double dv = vc - v[node[c + 1]];
      const double p = edge_g(c, c + 1) * dv * dv;
      power[c] += 0.5 * p;
      power[c + 1] += 0.5 * p;
    }
    if (j + 1 < ny && node[c + nx] >= 0) {
      const double dv = vc - v[node[c + nx]];
      const double p = edge_g(c, c + nx) * dv * dv;
      power[c] += 0.5 * p;
      power[c + nx] += 0.5 * p;
    }
    if (i == 0) {
      const double dv = 1.0 - vc;
      unit_current += terminal_g(c) * dv;
      power[c] += terminal_g(c) * dv * dv;
    }
    if (i == nx - 1) power[c] += terminal_g(c) * vc * vc;
  }
  if (!(unit_current > 0.0)) throw DomainError("drive path carries no current");

  JouleSolution out;
  out.resistance = 1.0 / unit_current;
  const double volts = current * out.resistance;
  const double cell_volume = scene.cell_size * scene.cell_size * scene.metal.thickness;
  out.source.power_density.assign(n, 0.0);
  double total = 0.0;
  for (std::size_t c = 0; c < n; ++c) {
    const double p = power[c] * volts * volts;
    out.source.power_density[c] = p / cell_volume;
    total += p;
  }
  out.total_power = total;
  return out;
}

SourceField laser_source(const ThermalScene& scene, const detect::ProbeSpot& spot) {
  scene.validate();
  spot.validate();
  SourceField out{std::vector<double>(scene.cells(), 0.0)};
  const double cell_volume = scene.cell_size * scene.cell_size * scene.metal.thickness;
  const double absorbed = (1.0 - scene.metal.base_reflectivity) * spot.power_at_sample;
  for (const auto& w : detect::spot_weights(spot, scene.nx, scene.ny, scene.cell_size)) {
    if (scene.is_metal(w.cell)) out.power_density[w.cell] = absorbed * w.weight / cell_volume;
  }
  return out;
}

SourceField rf_source(const ThermalScene& scene, double absorbed_power) {
  scene.validate();
  std::size_t n_drive = 0;
  for (auto d : scene.drive_region) n_drive += d ? 1 : 0;
  if (n_drive == 0) throw DomainError("scene has no drive region to absorb RF power");
  const double cell_volume = scene.cell_size * scene.cell_size * scene.metal.thickness;
  const double q = absorbed_power / (static_cast<double>(n_drive) * cell_volume);
  SourceField out{std::vector<double>(scene.cells(), 0.0)};
  for (std::size_t c = 0; c < scene.cells(); ++c) {
    if (scene.drive_region[c]) out.power_density[c] = q;
  }
  return out;
}

SourceField drive_source(const ThermalScene& scene, const DriveWaveform& drive) {
  drive.validate();
  if (drive.kind == DriveWaveform::Kind::rf_square) return rf_source(scene, drive.amplitude);
  if (drive.amplitude == 0.0) return SourceField{std::vector<double>(scene.cells(), 0.0)};
  return joule_source(scene, drive.amplitude).source;
}

// ---------------------------------------------------------------------------

Stepper::Stepper(const ThermalScene& scene) : scene_(&scene) {
  scene.validate();
  const double area = scene.cell_size * scene.cell_size;
  cell_area_ = area;
  film_thickness_ = scene.metal.thickness;
  film_capacity_ = scene.metal.volumetric_heat_capacity * scene.metal.thickness * area;
  sub_capacity_ = scene.substrate.volumetric_heat_capacity * scene.substrate.thickness * area;
  film_lateral_ = scene.metal.thermal_conductivity * scene.metal.thickness;
  sub_lateral_ = scene.substrate.thermal_conductivity * scene.substrate.thickness;
  vertical_ = scene.interlayer_conductance() * area;
  sink_ = scene.sink_conductance * area;

  const bool fixed = scene.boundary == LateralBoundary::fixed;
  double limit = std::numeric_limits<double>::infinity();
  for (int j = 0; j < scene.ny; ++j) {
    for (int i = 0; i < scene.nx; ++i) {
      const std::size_t c = scene.index(i, j);
      const int edges = (i > 0) + (i + 1 < scene.nx) + (j > 0) + (j + 1 < scene.ny);
      const int walls = 4 - edges;
      double g_sub = sink_ + sub_lateral_ * edges + (fixed ? 2.0 * sub_lateral_ * walls : 0.0);
      if (scene.is_metal(c)) {
        g_sub += vertical_;
        int metal_edges = 0;
        if (i > 0 && scene.is_metal(c - 1)) ++metal_edges;
        if (i + 1 < scene.nx && scene.is_metal(c + 1)) ++metal_edges;
        if (j > 0 && scene.is_metal(c - scene.nx)) ++metal_edges;
        if (j + 1 < scene.ny && scene.is_metal(c + scene.nx)) ++metal_edges;
        const double g_film = vertical_ + film_lateral_ * metal_edges +
                              (fixed ? 2.0 * film_lateral_ * walls : 0.0);
        if (g_film > 0.0) limit = std::min(limit, film_capacity_ / g_film);
      }
      if (g_sub > 0.0) limit = std::min(limit, sub_capacity_ / g_sub);
    }
  }
  stability_limit_ = limit;
  scratch_film_.resize(scene.cells());
  scratch_sub_.resize(scene.cells());
}

void Stepper::advance(TemperatureField& field, const SourceField& source, double dt) {
  const ThermalScene& s = *scene_;
  if (!(dt > 0.0) || dt > stability_limit_) {
    throw DomainError("time step " + std::to_string(dt) + " s violates the stability limit " +
                      std::to_string(stability_limit_) + " s");
  }
  const std::size_t n = s.cells();
  if (field.film_dT.size() != n || field.substrate_dT.size() != n ||
      source.power_density.size() != n) {
    throw DomainError("field/source size does not match the scene");
  }
  const bool fixed = s.boundary == LateralBoundary::fixed;
  const int nx = s.nx, ny = s.ny;
  const double* tf = field.film_dT.data();
  const double* ts = field.substrate_dT.data();
  const double heat_scale = cell_area_ * film_thickness_;
  const double film_rate = dt / film_capacity_;
  const double sub_rate = dt / sub_capacity_;

  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const std::size_t c = s.index(i, j);
      const bool metal = s.is_metal(c);
      // Substrate node.
      double flux = -sink_ * ts[c];
      int walls = 0;
      if (i > 0) flux += sub_lateral_ * (ts[c - 1] - ts[c]); else ++walls;
      if (i + 1 < nx) flux += sub_lateral_ * (ts[c + 1] - ts[c]); else ++walls;
      if (j > 0) flux += sub_lateral_ * (ts[c - nx] - ts[c]); else ++walls;
      if (j + 1 < ny) flux += sub_lateral_ * (ts[c + nx] - ts[c]); else ++walls;
      if (fixed) flux -= 2.0 * sub_lateral_ * walls * ts[c];
      if (metal) flux += vertical_ * (tf[c] - ts[c]);
      scratch_sub_[c] = ts[c] + sub_rate * flux;

      if (!metal) {
        scratch_film_[c] = 0.0;
        continue;
      }
      double ff = vertical_ * (ts[c] - tf[c]) + source.power_density[c] * heat_scale;
      if (i > 0 && s.is_metal(c - 1)) ff += film_lateral_ * (tf[c - 1] - tf[c]);
      if (i + 1 < nx && s.is_metal(c + 1)) ff += film_lateral_ * (tf[c + 1] - tf[c]);
      if (j > 0 && s.is_metal(c - nx)) ff += film_lateral_ * (tf[c - nx] - tf[c]);
      if (j + 1 < ny && s.is_metal(c + nx)) ff += film_lateral_ * (tf[c + nx] - tf[c]);
      if (fixed) ff -= 2.0 * film_lateral_ * walls * tf[c];
      scratch_film_[c] = tf[c] + film_rate * ff;
    }
  }
  field.film_dT.swap(scratch_film_);
  field.substrate_dT.swap(scratch_sub_);
  field.timestamp += dt;
}

double Stepper::energy(const TemperatureField& field) const {
  double film = 0.0, sub = 0.0;
  for (std::size_t c = 0; c < scene_->cells(); ++c) {
    if (scene_->is_metal(c)) film += field.film_dT[c];
    sub += field.substrate_dT[c];
  }
  return film_capacity_ * film + sub_capacity_ * sub;
}

TemperatureField step(const TemperatureField& field, const ThermalScene& scene,
                      const SourceField& source, double dt) {
  Stepper stepper(scene);
  TemperatureField out = field;
  stepper.advance(out, source, dt);
  return out;
}

struct SteadySolver::Impl {
  const ThermalScene* scene;
  std::vector<int> film_node;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver;
};

SteadySolver::SteadySolver(const ThermalScene& scene) : impl_(std::make_unique<Impl>()) {
  scene.validate();
  const std::size_t n = scene.cells();
  const bool fixed = scene.boundary == LateralBoundary::fixed;
  if (!fixed && !(scene.sink_conductance > 0.0)) {
    throw DomainError("steady state needs a heat sink or fixed boundaries");
  }
  const double area = scene.cell_size * scene.cell_size;
  const double gf = scene.metal.thermal_conductivity * scene.metal.thickness;
  const double gs = scene.substrate.thermal_conductivity * scene.substrate.thickness;
  const double gv = scene.interlayer_conductance() * area;
  const double gk = scene.sink_conductance * area;

  // Unknowns: substrate nodes 0..n-1, then film nodes for metal cells.
  impl_->scene = &scene;
  auto& film_node = impl_->film_node;
  film_node.assign(n, -1);
  int n_unknowns = static_cast<int>(n);
  for (std::size_t c = 0; c < n; ++c) {
    if (scene.is_metal(c)) film_node[c] = n_unknowns++;
  }
  std::vector<Eigen::Triplet<double>> trip;
  const auto couple = [&](int a, int b, double g) {
    trip.emplace_back(a, a, g);
    trip.emplace_back(b, b, g);
    trip.emplace_back(a, b, -g);
    trip.emplace_back(b, a, -g);
  };
  for (int j = 0; j < scene.ny; ++j) {
    for (int i = 0; i < scene.nx; ++i) {
      const std::size_t c = scene.index(i, j);
      const int sc = static_cast<int>(c);
      const int walls = (i == 0) + (i == scene.nx - 1) + (j == 0) + (j == scene.ny - 1);
      if (i + 1 < scene.nx) couple(sc, sc + 1, gs);
      if (j + 1 < scene.ny) couple(sc, sc + scene.nx, gs);
      trip.emplace_back(sc, sc, gk + (fixed ? 2.0 * gs * walls : 0.0));
      if (film_node[c] < 0) continue;
      const int fc = film_node[c];
      if (gv > 0.0) couple(sc, fc, gv);
      if (i + 1 < scene.nx && film_node[c + 1] >= 0) couple(fc, film_node[c + 1], gf);
      if (j + 1 < scene.ny && film_node[c + scene.nx] >= 0) {
        couple(fc, film_node[c + scene.nx], gf);
      }
      if (fixed) trip.emplace_back(fc, fc, 2.0 * gf * walls);
    }
  }
  Eigen::SparseMatrix<double> k(n_unknowns, n_unknowns);
  k.setFromTriplets(trip.begin(), trip.end());
  impl_->solver.compute(k);
  if (impl_->solver.info() != Eigen::Success) throw DomainError("steady-state system is singular");
}

SteadySolver::~SteadySolver() = default;
SteadySolver::SteadySolver(SteadySolver&&) noexcept = default;
SteadySolver& SteadySolver::operator=(SteadySolver&&) noexcept = default;

TemperatureField SteadySolver::solve(const SourceField& source) const {
  const ThermalScene& scene = *impl_->scene;
  const std::size_t n = scene.cells();
  if (source.power_density.size() != n) throw DomainError("source size does not match the scene");
  const auto& film_node = impl_->film_node;
  const int n_unknowns = static_cast<int>(impl_->solver.rows());
  const double heat_scale = scene.cell_size * scene.cell_size * scene.metal.thickness;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n_unknowns);
  for (std::size_t c = 0; c < n; ++c) {
    if (film_node[c] >= 0) rhs[film_node[c]] = source.power_density[c] * heat_scale;
  }
  const Eigen::VectorXd t = impl_->solver.solve(rhs);
  TemperatureField out = zero_field(scene);
  for (std::size_t c = 0; c < n; ++c) {
    out.substrate_dT[c] = t[static_cast<int>(c)];
    if (film_node[c] >= 0) out.film_dT[c] = t[film_node[c]];
  }
  return out;
}

TemperatureField steady_state(const ThermalScene& scene, const SourceField& source) {
  return SteadySolver(scene).solve(source);
}

double slowest_time_constant(const ThermalScene& scene) {
  const double c_sub = scene.substrate.volumetric_heat_capacity * scene.substrate.thickness;
  const double c_film = scene.metal.volumetric_heat_capacity * scene.metal.thickness;
  const double tau_film = scene.interlayer_conductance() > 0.0
                              ? c_film / scene.interlayer_conductance()
                              : 0.0;
  const double tau_sub = scene.sink_conductance > 0.0 ? c_sub / scene.sink_conductance : 0.0;
  return std::max(tau_film, tau_sub);
}

ModulatedRun run_modulated(const ThermalScene& scene, const DriveWaveform& drive, int n_cycles,
                           int samples_per_cycle, const ModulatedOptions& options) {
  if (n_cycles < 1) throw DomainError("n_cycles must be >= 1");
  if (samples_per_cycle < 2) throw DomainError("samples_per_cycle must be >= 2");
  drive.validate();
  Stepper stepper(scene);
  const SourceField hot = drive_source(scene, drive);
  const SourceField cold{std::vector<double>(scene.cells(), 0.0)};

  const double period = drive.period();
  const double sample_interval = period / samples_per_cycle;
  int half_steps = static_cast<int>(std::ceil(sample_interval / stepper.default_dt() / 2.0));
  half_steps = std::max(half_steps, 1);
  const int steps_per_sample = 2 * half_steps;
  const double dt = sample_interval / steps_per_sample;
  const long steps_per_cycle = static_cast<long>(steps_per_sample) * samples_per_cycle;

  ModulatedRun run;
  run.dt = dt;
  run.steps_per_sample = steps_per_sample;
  TemperatureField field = zero_field(scene);
  std::vector<TemperatureField> previous;
  std::vector<TemperatureField> current;
  current.reserve(samples_per_cycle);

  for (int cycle = 0; cycle < n_cycles; ++cycle) {
    current.clear();
    for (long n = 0; n < steps_per_cycle; ++n) {
      const double phase = (static_cast<double>(n) + 0.5) / static_cast<double>(steps_per_cycle);
      stepper.advance(field, phase < drive.duty ? hot : cold, dt);
      if ((n + 1) % steps_per_sample == half_steps) {
        TemperatureField snap = field;
        snap.timestamp = (static_cast<double>(current.size()) + 0.5) * sample_interval;
        current.push_back(std::move(snap));
      }
    }
    run.cycles_run = cycle + 1;
    if (!previous.empty()) {
      double change = 0.0;
      for (std::size_t s = 0; s < current.size(); ++s) {
        for (std::size_t c = 0; c < scene.cells(); ++c) {
          change = std::max(change, std::fabs(current[s].film_dT[c] - previous[s].film_dT[c]));
          change = std::max(change,
                            std::fabs(current[s].substrate_dT[c] - previous[s].substrate_dT[c]));
        }
      }
      run.last_cycle_change = change;
      if (change < options.tolerance && run.cycles_run >= options.min_cycles) {
        if (!run.converged) run.converged_cycle = run.cycles_run;
        run.converged = true;
        if (options.stop_at_convergence) break;
      }
    }
    previous.swap(current);
  }
  // After a break `current` holds the final cycle; otherwise it was swapped into `previous`.
  run.cycle = (run.converged && options.stop_at_convergence) ? std::move(current)
                                                             : std::move(previous);
  return run;
}

}  // namespace qthermo::thermal
