#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "effgrow/csv.hpp"
#include "effgrow/grid.hpp"
#include "effgrow/kernel.hpp"
#include "effgrow/model.hpp"
#include "effgrow/traits.hpp"

namespace effgrow {

/// Tabulated per-type densities N_i(x_j) on a grid.
struct SizeProfile {
  SizeGrid grid;
  std::vector<std::vector<double>> values;  // values[i][j] = N_i(x_j)
  double normalization = 0.0;               // sum_i trapezoid(N_i)
  double tolerance = 0.0;                   // declared |normalization - 1| bound
  std::vector<std::pair<std::string, std::string>> metadata;

  std::size_t types() const noexcept { return values.size(); }
  double mass(std::size_t i) const { return trapezoid(grid, values[i]); }

  /// Columns x, N_1..N_M; metadata and the tolerance go to the preamble.
  csv::Table table() const;
};

/// Builds a profile, scaling to unit trapezoid mass when `renormalize`.
/// Throws InconsistencyError on a negative value and when the resulting mass
/// misses 1 by more than `tolerance`.
SizeProfile make_profile(SizeGrid grid, std::vector<std::vector<double>> values,
                         double tolerance, bool renormalize);

/// alpha_n = 2^n / prod_{k=1..n} (2^k - 1) up to the last term >= 1e-15.
std::vector<double> mitosis_series_coefficients();

/// Homogeneous Case A profile for equal mitosis,
/// N(x) = C sum_n (-1)^n alpha_n exp(-2^(n+1) beta x), C from quadrature.
SizeProfile profile_mitosis_series(double beta, const SizeGrid& grid);

/// Homogeneous Case A profile for uniform division, 4 beta^2 x exp(-2 beta x).
SizeProfile profile_uniform_division(double beta, const SizeGrid& grid);

/// Case B shape C exp(-int_0^x beta) for the power family (closed-form
/// cumulative integral).
SizeProfile profile_caseB_homogeneous(const DivisionRate& beta, const SizeGrid& grid);

/// Same for an arbitrary rate function, cumulative integral by trapezoid.
SizeProfile profile_caseB_homogeneous(const std::function<double(double)>& beta,
                                      const SizeGrid& grid);

/// Case B heterogeneous profiles N_i = Nbar_i N_shape, Nbar from the reduced
/// matrix system with beta = 1.
SizeProfile profiles_caseB_heterogeneous(const TraitSet& traits, const HeredityKernel& kernel,
                                         const DivisionRate& beta, const SizeGrid& grid);

/// Default uniform grid for an analytic profile: dx = 0.01/beta and x_max
/// where the exponential envelope falls below 1e-12 (rounded up to an even
/// number of steps).
SizeGrid default_grid(const DivisionRate& beta);

}  // namespace effgrow
