#include "effgrow/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numbers>
#include <sstream>
#include <string>

#include "effgrow/errors.hpp"

namespace effgrow {

double PopulationState::mass() const {
  double s = 0.0;
  for (const auto& n : densities) s += trapezoid(grid, n);
  return s;
}

namespace {

void check_type(std::size_t types, std::size_t type) {
  if (types == 0 || type >= types) throw DomainError("initial state: trait index out of range");
}

}  // namespace

PopulationState initial_gaussian(const SizeGrid& grid, std::size_t types, std::size_t type,
                                 double center, double width) {
  check_type(types, type);
  if (!(width > 0.0)) throw DomainError("initial_gaussian: width must be > 0");
  PopulationState s{0.0, grid, std::vector<std::vector<double>>(types, std::vector<double>(grid.size(), 0.0))};
  const double norm = 1.0 / (width * std::sqrt(2.0 * std::numbers::pi));
  for (std::size_t j = 1; j < grid.size(); ++j) {
    const double z = (grid.x(j) - center) / width;
    s.densities[type][j] = norm * std::exp(-0.5 * z * z);
  }
  return s;
}

PopulationState initial_indicator(const SizeGrid& grid, std::size_t types, std::size_t type,
                                  double a, double b) {
  check_type(types, type);
  if (!(a >= 0.0 && b > a)) throw DomainError("initial_indicator: need 0 <= a < b");
  PopulationState s{0.0, grid, std::vector<std::vector<double>>(types, std::vector<double>(grid.size(), 0.0))};
  for (std::size_t j = 1; j < grid.size(); ++j)
    if (grid.x(j) >= a && grid.x(j) <= b) s.densities[type][j] = 1.0 / (b - a);
  return s;
}

PopulationState initial_from_profile(const SizeProfile& profile, double scale) {
  if (!(scale >= 0.0)) throw DomainError("initial_from_profile: scale must be >= 0");
  PopulationState s{0.0, profile.grid, profile.values};
  for (auto& n : s.densities)
    for (double& e : n) e *= scale;
  return s;
}

PopulationState read_initial_csv(std::istream& in, const SizeGrid& grid) {
  std::string line;
  std::vector<std::vector<double>> rows;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      if (!line.starts_with("x,")) throw DomainError("initial CSV: header must start with 'x,'");
      header = true;
      continue;
    }
    rows.push_back(csv::parse_list(line));
  }
  if (rows.size() != grid.size())
    throw DomainError("initial CSV: " + std::to_string(rows.size()) + " rows for " +
                      std::to_string(grid.size()) + " grid nodes");
  const std::size_t M = rows[0].size() - 1;
  if (M == 0) throw DomainError("initial CSV: no density columns");
  PopulationState s{0.0, grid, std::vector<std::vector<double>>(M, std::vector<double>(grid.size()))};
  for (std::size_t j = 0; j < rows.size(); ++j) {
    if (rows[j].size() != M + 1) throw DomainError("initial CSV: ragged row " + std::to_string(j + 1));
    if (std::abs(rows[j][0] - grid.x(j)) > 1e-9 * (1.0 + grid.x_max()))
      throw DomainError("initial CSV: x column does not match the grid at row " + std::to_string(j + 1));
    for (std::size_t i = 0; i < M; ++i) {
      if (!(rows[j][i + 1] >= 0.0)) throw DomainError("initial CSV: negative density");
      s.densities[i][j] = rows[j][i + 1];
    }
  }
  return s;
}

double stable_dt(const DiscreteOperator& op) { return 0.9 / op.shift(); }

Trajectory simulate(const ModelSpec& model, const PopulationState& initial,
                    const SimulationOptions& options) {
  DiscreteOperator op(model, initial.grid);
  if (initial.types() != op.types())
    throw DomainError("simulate: initial state has " + std::to_string(initial.types()) +
                      " traits, model has " + std::to_string(op.types()));
  if (!(options.t_end > 0.0)) throw DomainError("simulate: t_end must be > 0");
  const double dx = initial.grid.dx();
  const double bound_transport = 0.9 * dx / op.max_speed();
  const double bound_loss = op.max_loss_rate() > 0.0 ? 0.9 / op.max_loss_rate() : INFINITY;
  const double bound_positive = 1.0 / op.shift();
  double dt = options.dt;
  if (dt == 0.0) {
    dt = stable_dt(op);
  } else if (!(dt > 0.0) || dt > bound_transport || dt > bound_loss || dt > bound_positive) {
    throw DomainError("simulate: dt = " + csv::format(dt) + " violates the stability bound (transport " +
                      csv::format(bound_transport) + ", loss " + csv::format(bound_loss) +
                      ", positivity " + csv::format(bound_positive) + ")");
  }
  const auto steps = static_cast<std::size_t>(std::ceil(options.t_end / dt - 1e-9));
  dt = options.t_end / static_cast<double>(steps);

  std::size_t every = steps;
  if (options.snapshot_interval > 0.0)
    every = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(options.snapshot_interval / dt)));

  const std::size_t n = op.nodes(), j0 = op.first_unknown();
  std::vector<double> x(op.size()), y(op.size());
  for (std::size_t i = 0; i < op.types(); ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double e = initial.densities[i][j];
      if (!(e >= 0.0)) throw DomainError("simulate: initial densities must be nonnegative");
      x[i * n + j] = j < j0 ? 0.0 : e;
    }

  auto emit = [&](std::size_t step) {
    PopulationState s{static_cast<double>(step) * dt, initial.grid,
                      std::vector<std::vector<double>>(op.types())};
    for (std::size_t i = 0; i < op.types(); ++i)
      s.densities[i].assign(x.begin() + static_cast<std::ptrdiff_t>(i * n),
                            x.begin() + static_cast<std::ptrdiff_t>((i + 1) * n));
    return s;
  };

  Trajectory traj;
  traj.dt = dt;
  traj.steps = steps;
  traj.snapshots.push_back(emit(0));
  for (std::size_t step = 1; step <= steps; ++step) {
    options.parallel ? op.apply(x, y) : op.apply_serial(x, y);
    for (std::size_t k = 0; k < x.size(); ++k) {
      // Positive combination up to rounding at exact cancellation.
      double e = x[k] + dt * y[k];
      if (e < 0.0) {
        if (e < -1e-12 * std::abs(x[k]) - 1e-300) {
          std::ostringstream dump;
          dump << "simulate: negative density " << csv::format(e) << " at step " << step
               << ", type " << k / n + 1 << ", x = " << csv::format(initial.grid.x(k % n));
          throw InconsistencyError(dump.str());
        }
        e = 0.0;
      }
      x[k] = e;
    }
    if (step % every == 0 || step == steps) traj.snapshots.push_back(emit(step));
  }
  return traj;
}

double compute_rho(const PopulationState& initial, const SizeProfile& adjoint) {
  if (!(initial.grid == adjoint.grid) || initial.types() != adjoint.types())
    throw DomainError("compute_rho: grid or trait count mismatch");
  double rho = 0.0;
  std::vector<double> w(initial.grid.size());
  for (std::size_t i = 0; i < initial.types(); ++i) {
    for (std::size_t j = 0; j < w.size(); ++j) w[j] = initial.densities[i][j] * adjoint.values[i][j];
    rho += trapezoid(initial.grid, w);
  }
  return rho;
}

double discrete_growth_rate(double lambda, double dt) { return std::log1p(lambda * dt) / dt; }

double fit_growth_rate(const std::vector<double>& times, const std::vector<double>& values) {
  if (times.size() != values.size() || times.size() < 4)
    throw DomainError("fit_growth_rate: need at least four samples");
  const std::size_t start = times.size() / 2;
  double st = 0, sy = 0, stt = 0, sty = 0, cnt = 0;
  for (std::size_t k = start; k < times.size(); ++k) {
    const double t = times[k], yv = std::log(values[k]);
    st += t;
    sy += yv;
    stt += t * t;
    sty += t * yv;
    cnt += 1;
  }
  return (cnt * sty - st * sy) / (cnt * stt - st * st);
}

ConvergenceDiagnostics diagnostics(const Trajectory& trajectory, const NumericEigen& eigen) {
  if (trajectory.snapshots.empty()) throw DomainError("diagnostics: empty trajectory");
  const auto& grid = eigen.profile.grid;
  ConvergenceDiagnostics d;
  d.lambda = eigen.lambda;
  d.growth_rate = discrete_growth_rate(eigen.lambda, trajectory.dt);
  d.rho = compute_rho(trajectory.snapshots.front(), eigen.adjoint);
  d.conservation_tolerance = 1e-2 * (trajectory.dt + grid.dx());

  std::vector<double> w(grid.size()), a(grid.size());
  for (const auto& s : trajectory.snapshots) {
    if (!(s.grid == grid)) throw DomainError("diagnostics: grid mismatch");
    const double scale = std::exp(-d.growth_rate * s.time);
    double weighted = 0.0, dist = 0.0;
    for (std::size_t i = 0; i < s.types(); ++i) {
      for (std::size_t j = 0; j < w.size(); ++j) {
        const double phi = eigen.adjoint.values[i][j];
        w[j] = scale * s.densities[i][j] * phi;
        a[j] = std::abs(scale * s.densities[i][j] - d.rho * eigen.profile.values[i][j]) * phi;
      }
      weighted += trapezoid(grid, w);
      dist += trapezoid(grid, a);
    }
    d.times.push_back(s.time);
    d.phi_weighted_mass.push_back(weighted);
    d.l1_phi_distance.push_back(dist);
    d.raw_mass.push_back(s.mass());
    d.conservation_drift = std::max(d.conservation_drift, std::abs(weighted / d.rho - 1.0));
  }
  if (d.times.size() >= 4) d.fitted_growth_rate = fit_growth_rate(d.times, d.raw_mass);
  return d;
}

csv::Table trajectory_table(const Trajectory& trajectory) {
  csv::Table t({"t", "type", "x", "n"});
  t.preamble.push_back("dt=" + csv::format(trajectory.dt));
  for (const auto& s : trajectory.snapshots)
    for (std::size_t i = 0; i < s.types(); ++i)
      for (std::size_t j = 0; j < s.grid.size(); ++j)
        t.add_row({csv::format(s.time), std::to_string(i + 1), csv::format(s.grid.x(j)),
                   csv::format(s.densities[i][j])});
  return t;
}

csv::Table diagnostics_table(const ConvergenceDiagnostics& d) {
  csv::Table t({"t", "phi_weighted_mass", "l1_phi_distance", "raw_mass"});
  t.preamble = {"rho=" + csv::format(d.rho), "lambda=" + csv::format(d.lambda),
                "growth_rate=" + csv::format(d.growth_rate),
                "conservation_drift=" + csv::format(d.conservation_drift),
                "conservation_tolerance=" + csv::format(d.conservation_tolerance),
                "fitted_growth_rate=" + csv::format(d.fitted_growth_rate)};
  for (std::size_t k = 0; k < d.times.size(); ++k)
    t.add_row({csv::format(d.times[k]), csv::format(d.phi_weighted_mass[k]),
               csv::format(d.l1_phi_distance[k]), csv::format(d.raw_mass[k])});
  return t;
}

}  // namespace effgrow
