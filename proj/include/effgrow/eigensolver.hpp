#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

#include "effgrow/discrete_operator.hpp"
#include "effgrow/profiles.hpp"
#include "effgrow/spectral.hpp"

namespace effgrow {

/// shifted_power: power iteration on L + c Id (and its transpose).
/// renewal: writes L = G - B and finds the lambda > 0 at which the spectral
///   radius of (lambda + B)^{-1} G equals 1 (TOMS 748 on its logarithm, each
///   radius by power iteration); the profile is that operator's Perron vector.
///   Far fewer operator applications when c is large (tau = x, fine grids).
enum class EigenMethod { shifted_power, renewal };

std::string_view to_string(EigenMethod m);
EigenMethod parse_eigen_method(std::string_view text);

struct EigenSolverOptions {
  /// Relative eigenvalue change below tolerance and relative residual
  /// ||L N - lambda N||_1 / (|lambda| ||N||_1) below 10 * tolerance.
  double tolerance = 1e-10;
  std::size_t max_iterations = 1'000'000;
  /// Residuals are recorded every `history_stride` iterations.
  std::size_t history_stride = 1000;
  /// Use the OpenMP operator (true) or the serial reference.
  bool parallel = true;
  EigenMethod method = EigenMethod::shifted_power;
};

struct NumericEigen {
  double lambda = 0.0;
  SizeProfile profile;  // sum_i int N_i = 1
  SizeProfile adjoint;  // sum_i int N_i phi_i = 1
  std::size_t iterations = 0;          // forward + transpose
  double residual = 0.0;
  std::vector<double> residual_history;  // forward iteration
};

/// Dominant eigenpair of L (right vector) and of its transpose (left).
/// Throws ConvergenceError with the residual history at the iteration cap.
NumericEigen solve_eigen(const DiscreteOperator& op, const EigenSolverOptions& options = {});

struct HeterogeneousResult {
  NumericEigen eigen;
  /// fractions = int N_i; adjoint = int N_i phi_i / int N_i; effective_trait
  /// lambda/beta (Case A), lambda (Case B), NaN otherwise.
  EigenTriplet summary;
};

HeterogeneousResult solve_heterogeneous(const ModelSpec& model, const SizeGrid& grid,
                                        const EigenSolverOptions& options = {});

}  // namespace effgrow
