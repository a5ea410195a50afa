#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "effgrow/kernel.hpp"
#include "effgrow/model_case.hpp"
#include "effgrow/traits.hpp"

namespace effgrow {

/// A = beta (-Id + 2 kappa^T) Diag(v): the population-fraction system whose
/// Perron eigenpair gives the Malthus parameter when the adjoint is constant in
/// size (Case A; Case B with beta = 1).
struct GrowthMatrix {
  SquareMatrix a;
  double beta = 1.0;
  TraitSet traits;
  HeredityKernel kernel;

  /// 2 beta v_M; A + shift * Id is nonnegative with positive diagonal.
  double shift() const noexcept { return 2.0 * beta * traits.max(); }
};

GrowthMatrix build_growth_matrix(const TraitSet& traits, const HeredityKernel& kernel,
                                 double beta);

struct EigenTriplet {
  double lambda = 0.0;
  std::vector<double> fractions;  // sum to 1
  std::vector<double> adjoint;    // sum fractions_i * adjoint_i = 1
  double effective_trait = 0.0;
  double beta = 1.0;
  ModelCase model_case = ModelCase::A;
  std::size_t iterations = 0;
  double residual = 0.0;
};

struct PowerIterationOptions {
  double tolerance = 1e-12;
  std::size_t max_iterations = 1'000'000;
  /// Residual progress check interval for the squared-matrix fallback.
  std::size_t stall_window = 2000;
};

/// Dominant eigentriplet of A via power iteration on A + 2 beta v_M Id (right
/// vector -> fractions) and its transpose (left vector -> adjoint).
EigenTriplet dominant_eigentriplet(const GrowthMatrix& matrix,
                                   const PowerIterationOptions& options = {},
                                   ModelCase model_case = ModelCase::A);

/// Closed-form effective trait for M = 2 with kernel rows (1-k1, k1), (k2, 1-k2).
double effective_trait_bimodal(double v1, double v2, double k1, double k2);

/// k1 -> 0 limit of effective_trait_bimodal: max(v1, (1 - 2 k2) v2).
double bimodal_limit_k1_to_zero(double v1, double v2, double k2);

/// P(u) = prod_k (u + v_k) - 2u sum_j kappa_j prod_{k != j} (u + v_k), whose
/// unique positive root is the effective trait of a no-heredity kernel.
struct NoHeredityPolynomial {
  std::vector<double> coefficients;          // coefficients[n] multiplies u^n
  std::vector<double> elementary_symmetric;  // S_0 .. S_M
  std::vector<double> traits;
  std::vector<double> weights;

  std::size_t degree() const noexcept { return coefficients.size() - 1; }
  /// Horner evaluation of the expanded coefficients.
  double operator()(double u) const;
  /// Same polynomial evaluated from the factored products; well conditioned
  /// for u > 0 and used for root isolation.
  double evaluate_factored(double u) const;
};

NoHeredityPolynomial noheredity_polynomial(const TraitSet& traits,
                                           std::span<const double> weights);

/// Effective trait as the positive root of the no-heredity polynomial, by
/// bisection on [v_1, v_M] to 1e-13 v_M; lambda = beta v.
EigenTriplet solve_noheredity(const TraitSet& traits, std::span<const double> weights,
                              double beta = 1.0);

/// Effective trait for the alpha-family kernel as the root of the secular
/// equation sum_i 2 b v / (v + c v_i) = 1 (b the off-diagonal entry,
/// c = 1 - 2(alpha - b)), by bisection on [v_1, v_M].
EigenTriplet solve_alpha_family(const TraitSet& traits, double alpha, double beta = 1.0);

struct FractionsCheck {
  std::vector<double> fractions;
  double fixed_point_residual = 0.0;     // max_i |N_i - 2/(v+v_i) sum_j k_ji v_j N_j|
  double closed_form_residual = -1.0;    // < 0 when no closed form applies
  std::string closed_form;               // "alpha", "uniform", "neutral" or empty
};

/// Returns the fractions of `triplet` after checking the fixed-point relation
/// (and the applicable closed form) to 1e-9. Throws InconsistencyError otherwise.
FractionsCheck population_fractions(const TraitSet& traits, const HeredityKernel& kernel,
                                    const EigenTriplet& triplet);

/// Case A: lambda / beta. Case B: lambda.
double effective_trait(const EigenTriplet& triplet, ModelCase model_case);

/// Header and row "M,beta,case,lambda,v_eff,N_1..N_M,phi_1..phi_M".
std::string eigentriplet_csv_header(std::size_t M);
std::string eigentriplet_csv_row(const EigenTriplet& triplet);

}  // namespace effgrow
