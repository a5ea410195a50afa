#include "effgrow/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "effgrow/csv.hpp"
#include "effgrow/errors.hpp"

namespace effgrow {

GrowthMatrix build_growth_matrix(const TraitSet& traits, const HeredityKernel& kernel,
                                 double beta) {
  if (kernel.size() != traits.size())
    throw DomainError("build_growth_matrix: kernel is " + std::to_string(kernel.size()) + "x" +
                      std::to_string(kernel.size()) + " but there are " +
                      std::to_string(traits.size()) + " traits");
  if (!(beta > 0.0)) throw DomainError("build_growth_matrix: beta must be > 0");
  const std::size_t M = traits.size();
  SquareMatrix a{M, std::vector<double>(M * M)};
  for (std::size_t i = 0; i < M; ++i)
    for (std::size_t j = 0; j < M; ++j)
      a(i, j) = beta * (2.0 * kernel(j, i) - (i == j ? 1.0 : 0.0)) * traits[j];
  return GrowthMatrix{std::move(a), beta, traits, kernel};
}

namespace {

// y = B x with B = (A + shift Id) or its transpose.
void shifted_multiply(const SquareMatrix& a, double shift, bool transpose,
                      std::span<const double> x, std::span<double> y) {
  const std::size_t M = a.dim;
  for (std::size_t i = 0; i < M; ++i) {
    double s = shift * x[i];
    for (std::size_t j = 0; j < M; ++j) s += (transpose ? a(j, i) : a(i, j)) * x[j];
    y[i] = s;
  }
}

double l1(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += std::abs(v);
  return s;
}

struct PerronVector {
  std::vector<double> vector;  // positive, sums to 1
  std::size_t iterations = 0;
  double residual = 0.0;
};

// Power iteration for the Perron vector of the nonnegative matrix A + shift Id.
// If the residual fails to halve over a stall window, iterate with the
// squared matrix instead (period-like slow modes).
PerronVector perron_vector(const SquareMatrix& a, double shift, bool transpose,
                           const PowerIterationOptions& opt) {
  const std::size_t M = a.dim;
  std::vector<double> x(M, 1.0 / static_cast<double>(M)), y(M), tmp(M);
  double prev = std::numeric_limits<double>::quiet_NaN();
  bool squared = false;
  double window_residual = std::numeric_limits<double>::infinity();
  double residual = std::numeric_limits<double>::infinity();
  std::vector<double> history;

  for (std::size_t it = 1; it <= opt.max_iterations; ++it) {
    if (squared) {
      shifted_multiply(a, shift, transpose, x, tmp);
      shifted_multiply(a, shift, transpose, tmp, y);
    } else {
      shifted_multiply(a, shift, transpose, x, y);
    }
    const double mu = l1(y);  // x sums to 1 and everything is >= 0
    residual = 0.0;
    for (std::size_t i = 0; i < M; ++i) residual += std::abs(y[i] - mu * x[i]);
    residual /= mu;
    for (std::size_t i = 0; i < M; ++i) x[i] = y[i] / mu;
    const double change = std::abs(mu - prev) / mu;
    prev = mu;
    if (change < opt.tolerance && residual < opt.tolerance) return {x, it, residual};

    if (it % opt.stall_window == 0) {
      history.push_back(residual);
      if (!squared && residual > 0.5 * window_residual) squared = true;
      window_residual = residual;
    }
  }
  throw ConvergenceError("power iteration did not converge in " +
                             std::to_string(opt.max_iterations) + " iterations (residual " +
                             csv::format(residual) + ")",
                         residual, std::move(history));
}

}  // namespace

EigenTriplet dominant_eigentriplet(const GrowthMatrix& matrix, const PowerIterationOptions& options,
                                   ModelCase model_case) {
  const SquareMatrix& a = matrix.a;
  const std::size_t M = a.dim;
  const double shift = matrix.shift();

  auto right = perron_vector(a, shift, false, options);
  auto left = perron_vector(a, shift, true, options);

  EigenTriplet t;
  t.beta = matrix.beta;
  t.model_case = model_case;
  t.fractions = std::move(right.vector);
  t.iterations = std::max(right.iterations, left.iterations);
  t.residual = std::max(right.residual, left.residual);

  // Two-sided Rayleigh quotient of the unshifted matrix: error quadratic in
  // the eigenvector errors, and no cancellation against the shift.
  double num = 0.0, dot = 0.0;
  for (std::size_t i = 0; i < M; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < M; ++j) row += a(i, j) * t.fractions[j];
    num += left.vector[i] * row;
    dot += left.vector[i] * t.fractions[i];
  }
  t.lambda = num / dot;

  t.adjoint.resize(M);
  for (std::size_t i = 0; i < M; ++i) t.adjoint[i] = left.vector[i] / dot;

  t.effective_trait = effective_trait(t, model_case);
  return t;
}

double effective_trait_bimodal(double v1, double v2, double k1, double k2) {
  if (!(v1 > 0.0) || !(v2 > 0.0)) throw DomainError("effective_trait_bimodal: traits must be > 0");
  if (!(k1 > 0.0 && k1 < 1.0)) throw DomainError("effective_trait_bimodal: k1 must lie in (0, 1)");
  if (!(k2 > 0.0 && k2 < 1.0)) throw DomainError("effective_trait_bimodal: k2 must lie in (0, 1)");
  if (v1 > v2) {
    std::swap(v1, v2);
    std::swap(k1, k2);
  }
  const double p = (0.5 - k1) * v1;
  const double q = (0.5 - k2) * v2;
  const double s = p + q;
  const double root = std::sqrt((p - q) * (p - q) + 4.0 * k1 * k2 * v1 * v2);
  if (s >= 0.0) return s + root;
  // s + root cancels; use the product of the two roots, v1 v2 (1 - 2(k1 + k2)).
  return v1 * v2 * (1.0 - 2.0 * (k1 + k2)) / (s - root);
}

double bimodal_limit_k1_to_zero(double v1, double v2, double k2) {
  if (!(v1 > 0.0) || !(v2 > v1)) throw DomainError("bimodal_limit_k1_to_zero: need 0 < v1 < v2");
  if (!(k2 > 0.0 && k2 < 1.0)) throw DomainError("bimodal_limit_k1_to_zero: k2 must lie in (0, 1)");
  return std::max(v1, (1.0 - 2.0 * k2) * v2);
}

namespace {

// Coefficients (index = power of u) of prod_{k != skip} (u + v_k).
std::vector<double> product_expansion(std::span<const double> v, std::size_t skip) {
  std::vector<double> c{1.0};
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (k == skip) continue;
    std::vector<double> next(c.size() + 1, 0.0);
    for (std::size_t n = 0; n < c.size(); ++n) {
      next[n] += v[k] * c[n];
      next[n + 1] += c[n];
    }
    c = std::move(next);
  }
  return c;
}

void check_weights(std::span<const double> weights, std::size_t M) {
  if (weights.size() != M) throw DomainError("no-heredity weights must have one entry per trait");
  // Reuse the constructor's validation.
  (void)make_kernel_noheredity(weights);
}

}  // namespace

double NoHeredityPolynomial::operator()(double u) const {
  double acc = 0.0;
  for (std::size_t n = coefficients.size(); n-- > 0;) acc = acc * u + coefficients[n];
  return acc;
}

double NoHeredityPolynomial::evaluate_factored(double u) const {
  const std::size_t M = traits.size();
  double full = 1.0;
  for (double v : traits) full *= (u + v);
  double partial = 0.0;
  for (std::size_t j = 0; j < M; ++j) {
    double prod = 1.0;
    for (std::size_t k = 0; k < M; ++k)
      if (k != j) prod *= (u + traits[k]);
    partial += weights[j] * prod;
  }
  return full - 2.0 * u * partial;
}

NoHeredityPolynomial noheredity_polynomial(const TraitSet& traits, std::span<const double> weights) {
  const std::size_t M = traits.size();
  check_weights(weights, M);
  const auto v = traits.values();

  NoHeredityPolynomial p;
  p.traits.assign(v.begin(), v.end());
  p.weights.assign(weights.begin(), weights.end());

  const auto full = product_expansion(v, M);  // [u^n] = S_{M-n}
  p.elementary_symmetric.resize(M + 1);
  for (std::size_t k = 0; k <= M; ++k) p.elementary_symmetric[k] = full[M - k];

  p.coefficients = full;
  for (std::size_t j = 0; j < M; ++j) {
    const auto partial = product_expansion(v, j);  // degree M - 1
    for (std::size_t n = 0; n < partial.size(); ++n)
      p.coefficients[n + 1] -= 2.0 * weights[j] * partial[n];
  }
  return p;
}

EigenTriplet solve_noheredity(const TraitSet& traits, std::span<const double> weights, double beta) {
  if (!(beta > 0.0)) throw DomainError("solve_noheredity: beta must be > 0");
  const auto poly = noheredity_polynomial(traits, weights);
  const std::size_t M = traits.size();

  double root = traits.min();
  if (M > 1) {
    double lo = traits.min(), hi = traits.max();
    const double plo = poly.evaluate_factored(lo), phi = poly.evaluate_factored(hi);
    if (!(plo >= 0.0) || !(phi <= 0.0))
      throw InconsistencyError("solve_noheredity: P(v_1) = " + csv::format(plo) +
                               " and P(v_M) = " + csv::format(phi) + " do not bracket a root");
    const double tol = 1e-13 * traits.max();
    while (hi - lo > tol) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      (poly.evaluate_factored(mid) > 0.0 ? lo : hi) = mid;
    }
    root = 0.5 * (lo + hi);
  }

  EigenTriplet t;
  t.beta = beta;
  t.model_case = ModelCase::A;
  t.effective_trait = root;
  t.lambda = beta * root;
  t.fractions.resize(M);
  t.adjoint.resize(M);
  double dot = 0.0;
  for (std::size_t i = 0; i < M; ++i) {
    t.fractions[i] = 2.0 * root * weights[i] / (root + traits[i]);
    t.adjoint[i] = traits[i] / (traits[i] + root);
    dot += t.fractions[i] * t.adjoint[i];
  }
  for (double& phi : t.adjoint) phi /= dot;
  return t;
}

EigenTriplet solve_alpha_family(const TraitSet& traits, double alpha, double beta) {
  const std::size_t M = traits.size();
  if (M < 2) throw DomainError("solve_alpha_family: M must be >= 2");
  if (!(alpha >= 0.0 && alpha < 1.0)) throw DomainError("solve_alpha_family: alpha must lie in [0, 1)");
  if (!(beta > 0.0)) throw DomainError("solve_alpha_family: beta must be > 0");
  const double b = (1.0 - alpha) / static_cast<double>(M - 1);
  const double c = 1.0 - 2.0 * (alpha - b);

  // h(v) = sum_i 2 b v_i / (v + c v_i) - 1, decreasing wherever every
  // denominator is positive; +inf at the left edge of that region.
  auto h = [&](double v) {
    double s = 0.0;
    for (double vi : traits.values()) {
      const double d = v + c * vi;
      if (!(d > 0.0)) return std::numeric_limits<double>::infinity();
      s += 2.0 * b * vi / d;
    }
    return s - 1.0;
  };
  double lo = traits.min(), hi = traits.max();
  if (!(h(lo) >= 0.0) || !(h(hi) <= 0.0))
    throw InconsistencyError("solve_alpha_family: secular equation does not bracket [v_1, v_M]");
  const double tol = 1e-13 * traits.max();
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (h(mid) > 0.0 ? lo : hi) = mid;
  }
  const double v = 0.5 * (lo + hi);

  EigenTriplet t;
  t.beta = beta;
  t.model_case = ModelCase::A;
  t.effective_trait = v;
  t.lambda = beta * v;
  t.fractions.resize(M);
  t.adjoint.resize(M);
  double dot = 0.0;
  for (std::size_t i = 0; i < M; ++i) {
    t.fractions[i] = 2.0 * b * v / (v + c * traits[i]);
    t.adjoint[i] = traits[i] / (v + c * traits[i]);
    dot += t.fractions[i] * t.adjoint[i];
  }
  for (double& phi : t.adjoint) phi /= dot;
  return t;
}

namespace {

// Diagonal alpha / off-diagonal value when the kernel is in the alpha-family.
bool alpha_family_parameter(const HeredityKernel& kernel, double& alpha) {
  const std::size_t M = kernel.size();
  if (M < 2) return false;
  const double diag = kernel(0, 0), off = kernel(0, 1);
  for (std::size_t i = 0; i < M; ++i)
    for (std::size_t j = 0; j < M; ++j)
      if (kernel(i, j) != (i == j ? diag : off)) return false;
  alpha = diag;
  return true;
}

}  // namespace

FractionsCheck population_fractions(const TraitSet& traits, const HeredityKernel& kernel,
                                    const EigenTriplet& triplet) {
  const std::size_t M = traits.size();
  if (kernel.size() != M || triplet.fractions.size() != M)
    throw DomainError("population_fractions: dimension mismatch");
  const double v = triplet.lambda / triplet.beta;
  const auto& n = triplet.fractions;
  constexpr double tol = 1e-9;

  FractionsCheck out;
  out.fractions = n;
  for (std::size_t i = 0; i < M; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < M; ++j) s += kernel(j, i) * traits[j] * n[j];
    out.fixed_point_residual = std::max(out.fixed_point_residual,
                                        std::abs(n[i] - 2.0 * s / (v + traits[i])));
  }
  if (out.fixed_point_residual > tol)
    throw InconsistencyError("population_fractions: fixed-point residual " +
                             csv::format(out.fixed_point_residual));

  double alpha = 0.0;
  if (alpha_family_parameter(kernel, alpha)) {
    const double Md = static_cast<double>(M);
    const double a0 = neutral_alpha(M);
    out.closed_form = "alpha";
    if (std::abs(alpha - 1.0 / Md) <= 1e-15) out.closed_form = "uniform";
    if (std::abs(alpha - a0) <= 1e-15) out.closed_form = "neutral";
    out.closed_form_residual = 0.0;
    for (std::size_t i = 0; i < M; ++i) {
      double expected = 0.0;
      if (out.closed_form == "neutral")
        expected = 1.0 / Md;
      else if (out.closed_form == "uniform")
        expected = 2.0 / Md * v / (v + traits[i]);
      else
        expected = (1.0 - alpha) / Md * v /
                   ((Md - 1.0) / (2.0 * Md) * v + ((Md + 1.0) / (2.0 * Md) - alpha) * traits[i]);
      out.closed_form_residual = std::max(out.closed_form_residual, std::abs(n[i] - expected));
    }
    if (out.closed_form_residual > tol)
      throw InconsistencyError("population_fractions: " + out.closed_form +
                               " closed form violated by " + csv::format(out.closed_form_residual));
  }
  return out;
}

double effective_trait(const EigenTriplet& triplet, ModelCase model_case) {
  switch (model_case) {
    case ModelCase::A: return triplet.lambda / triplet.beta;
    case ModelCase::B: return triplet.lambda;
    case ModelCase::custom: break;
  }
  throw DomainError("effective_trait: only defined for Cases A and B");
}

std::string eigentriplet_csv_header(std::size_t M) {
  std::ostringstream os;
  os << "M,beta,case,lambda,v_eff";
  for (std::size_t i = 1; i <= M; ++i) os << ",N_" << i;
  for (std::size_t i = 1; i <= M; ++i) os << ",phi_" << i;
  return os.str();
}

std::string eigentriplet_csv_row(const EigenTriplet& t) {
  std::ostringstream os;
  os << t.fractions.size() << ',' << csv::format(t.beta) << ',' << to_string(t.model_case) << ','
     << csv::format(t.lambda) << ',' << csv::format(t.effective_trait);
  for (double x : t.fractions) os << ',' << csv::format(x);
  for (double x : t.adjoint) os << ',' << csv::format(x);
  return os.str();
}

}  // namespace effgrow
