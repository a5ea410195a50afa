#pragma once

#include <cstddef>
#include <iosfwd>
#include <vector>

#include "effgrow/csv.hpp"
#include "effgrow/discrete_operator.hpp"
#include "effgrow/eigensolver.hpp"
#include "effgrow/profiles.hpp"

namespace effgrow {

struct PopulationState {
  double time = 0.0;
  SizeGrid grid;
  std::vector<std::vector<double>> densities;  // densities[i][j] = n_i(t, x_j)

  std::size_t types() const noexcept { return densities.size(); }
  double mass() const;  // sum_i int n_i
};

/// Gaussian bump of unit mass (before grid truncation) in trait `type`.
PopulationState initial_gaussian(const SizeGrid& grid, std::size_t types, std::size_t type,
                                 double center, double width);
/// Indicator of [a, b] with unit mass in trait `type`.
PopulationState initial_indicator(const SizeGrid& grid, std::size_t types, std::size_t type,
                                  double a, double b);
/// scale * profile.
PopulationState initial_from_profile(const SizeProfile& profile, double scale = 1.0);
/// Reads the profile CSV layout (x, N_1..N_M; '#' lines ignored). The x column
/// must match `grid` node by node.
PopulationState read_initial_csv(std::istream& in, const SizeGrid& grid);

struct SimulationOptions {
  double t_end = 1.0;
  double dt = 0.0;               // 0: automatic, 0.9 / shift
  double snapshot_interval = 0.0;  // 0: initial and final state only
  bool parallel = true;
};

struct Trajectory {
  std::vector<PopulationState> snapshots;  // copies taken at emission
  double dt = 0.0;
  std::size_t steps = 0;
};

/// Largest explicit Euler step keeping the scheme positive, with the 0.9
/// safety factor: 0.9 / c, c = max v_i (tau beta + tau / dx). It also satisfies
/// dt <= 0.9 dx / (v_M max tau) and dt <= 0.9 / (v_M max tau beta).
double stable_dt(const DiscreteOperator& op);

/// Explicit Euler n <- n + dt L n with the eigensolver's operator. dt is
/// reduced so that a whole number of steps reaches t_end. Throws DomainError
/// when an explicit dt exceeds the stability bound and InconsistencyError if a
/// density turns negative.
Trajectory simulate(const ModelSpec& model, const PopulationState& initial,
                    const SimulationOptions& options);

/// rho = sum_i int n_i(0, x) phi_i(x) dx (trapezoid).
double compute_rho(const PopulationState& initial, const SizeProfile& adjoint);

/// Per-step growth factor of explicit Euler on the eigenvector is 1 + lambda dt;
/// its continuous-time rate log(1 + lambda dt)/dt -> lambda as dt -> 0.
double discrete_growth_rate(double lambda, double dt);

struct ConvergenceDiagnostics {
  double rho = 0.0;
  double lambda = 0.0;         // eigenvalue of the discrete operator
  double growth_rate = 0.0;    // discrete_growth_rate(lambda, dt), used to renormalize
  std::vector<double> times;
  std::vector<double> phi_weighted_mass;  // e^{-rate t} sum int n phi
  std::vector<double> l1_phi_distance;    // sum int |e^{-rate t} n - rho N| phi
  std::vector<double> raw_mass;           // sum int n
  double conservation_drift = 0.0;        // max |phi_weighted_mass / rho - 1|
  double conservation_tolerance = 0.0;    // 1e-2 (dt + dx)
  double fitted_growth_rate = 0.0;        // slope of log raw mass, final half
};

ConvergenceDiagnostics diagnostics(const Trajectory& trajectory, const NumericEigen& eigen);

/// Least-squares slope of log(values) against times over the final half.
double fit_growth_rate(const std::vector<double>& times, const std::vector<double>& values);

/// Columns t, type, x, n (type 1-based).
csv::Table trajectory_table(const Trajectory& trajectory);
/// Columns t, phi_weighted_mass, l1_phi_distance, raw_mass.
csv::Table diagnostics_table(const ConvergenceDiagnostics& d);

}  // namespace effgrow
