#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "effgrow/traits.hpp"

namespace effgrow {

/// Mother-daughter trait correlation under the alpha-family kernel.
struct CorrelationReport {
  double gamma = 0.0;          // Pearson coefficient, in [-1, 1]
  double alpha = 0.0;
  std::size_t M = 0;
  std::vector<double> mother_law;
  double covariance = 0.0;     // Cov(V_d, V_m)
  double var_mother = 0.0;     // Var(V_m)
  double var_daughter = 0.0;   // Var(V_d)
};

/// Closed-form Pearson correlation between the trait of a mother drawn from
/// `mother_law` and that of a daughter under make_kernel_alpha(M, alpha).
///
/// The daughter keeps the mother's trait with probability alpha, otherwise
/// draws uniformly among the M - 1 other traits (W_m). With R = 1/(M-1):
///   Cov(V_d, V_m) = (alpha M - 1) R Var(V_m)
///   Var(V_d)      = alpha Var(V_m) + (1 - alpha) Var(W_m) + alpha (1 - alpha) Delta^2,
///   Delta = E[W_m] - E[V_m],  E[W_m^k] = R (M E[U^k] - E[V_m^k]),
/// U uniform on the traits.
CorrelationReport pearson_correlation_alpha(std::size_t M, double alpha,
                                            std::span<const double> mother_law,
                                            const TraitSet& traits);

}  // namespace effgrow
