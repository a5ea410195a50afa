#include "effgrow/profiles.hpp"

#include <cmath>

#include "effgrow/errors.hpp"
#include "effgrow/spectral.hpp"

namespace effgrow {

namespace {

// Tail mass beyond x_max above this triggers TruncationError.
constexpr double kTailTolerance = 1e-8;

void check_tail(double tail, double mass, const SizeGrid& grid) {
  if (tail > kTailTolerance * mass)
    throw TruncationError("profile tail beyond x_max = " + csv::format(grid.x_max()) +
                          " carries " + csv::format(tail / mass) +
                          " of the mass; increase x_max");
}

}  // namespace

csv::Table SizeProfile::table() const {
  std::vector<std::string> header{"x"};
  for (std::size_t i = 1; i <= types(); ++i) header.push_back("N_" + std::to_string(i));
  csv::Table t(std::move(header));
  for (const auto& [k, v] : metadata) t.preamble.push_back(k + "=" + v);
  t.preamble.push_back("normalization=" + csv::format(normalization));
  t.preamble.push_back("normalization_tolerance=" + csv::format(tolerance));
  for (std::size_t j = 0; j < grid.size(); ++j) {
    std::vector<std::string> row{csv::format(grid.x(j))};
    for (const auto& n : values) row.push_back(csv::format(n[j]));
    t.add_row(std::move(row));
  }
  return t;
}

SizeProfile make_profile(SizeGrid grid, std::vector<std::vector<double>> values,
                         double tolerance, bool renormalize) {
  double total = 0.0;
  for (const auto& n : values) {
    if (n.size() != grid.size()) throw DomainError("make_profile: vector does not match the grid");
    for (double x : n)
      if (!(x >= 0.0)) throw InconsistencyError("make_profile: negative or NaN density");
    total += trapezoid(grid, n);
  }
  if (renormalize) {
    if (!(total > 0.0)) throw InconsistencyError("make_profile: zero mass");
    for (auto& n : values)
      for (double& x : n) x /= total;
    total = 0.0;
    for (const auto& n : values) total += trapezoid(grid, n);
  }
  if (std::abs(total - 1.0) > tolerance)
    throw InconsistencyError("make_profile: mass " + csv::format(total) + " misses 1 by more than " +
                             csv::format(tolerance));
  return SizeProfile{std::move(grid), std::move(values), total, tolerance, {}};
}

std::vector<double> mitosis_series_coefficients() {
  std::vector<double> alpha{1.0};
  for (int n = 1;; ++n) {
    const double next = alpha.back() * 2.0 / (std::ldexp(1.0, n) - 1.0);
    if (next < 1e-15) break;
    alpha.push_back(next);
  }
  return alpha;
}

SizeProfile profile_mitosis_series(double beta, const SizeGrid& grid) {
  if (!(beta > 0.0)) throw DomainError("profile_mitosis_series: beta must be > 0");
  const auto alpha = mitosis_series_coefficients();
  std::vector<double> n(grid.size());
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const double x = grid.x(j);
    double s = 0.0;
    for (std::size_t k = alpha.size(); k-- > 0;)
      s += ((k % 2) ? -alpha[k] : alpha[k]) * std::exp(-std::ldexp(2.0 * beta, static_cast<int>(k)) * x);
    // The alternating sum cancels to ~1e-16 near x = 0, where N vanishes.
    n[j] = std::max(s, 0.0);
  }
  // Leading tail term exp(-2 beta x) integrates to exp(-2 beta x_max)/(2 beta).
  double raw_mass = trapezoid(grid, n);
  check_tail(std::exp(-2.0 * beta * grid.x_max()) / (2.0 * beta), raw_mass, grid);
  auto p = make_profile(grid, {std::move(n)}, 1e-12, true);
  p.metadata = {{"case", "A"}, {"fragmentation", "mitosis"}, {"beta", csv::format(beta)}};
  return p;
}

SizeProfile profile_uniform_division(double beta, const SizeGrid& grid) {
  if (!(beta > 0.0)) throw DomainError("profile_uniform_division: beta must be > 0");
  std::vector<double> n(grid.size());
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const double x = grid.x(j);
    n[j] = 4.0 * beta * beta * x * std::exp(-2.0 * beta * x);
  }
  const double bx = 2.0 * beta * grid.x_max();
  check_tail((1.0 + bx) * std::exp(-bx), 1.0, grid);
  // Exact values; the declared tolerance covers trapezoid error
  // (dx^2/12) |N'(x_max) - N'(0)| plus the tail.
  const double tol = grid.dx() * grid.dx() / 12.0 * 4.0 * beta * beta * 1.01 + kTailTolerance;
  auto p = make_profile(grid, {std::move(n)}, tol, false);
  p.metadata = {{"case", "A"}, {"fragmentation", "uniform"}, {"beta", csv::format(beta)}};
  return p;
}

namespace {

SizeProfile caseB_from_cumulative(std::vector<double> cumulative, double beta_at_max,
                                  const SizeGrid& grid) {
  std::vector<double> n(grid.size());
  for (std::size_t j = 0; j < grid.size(); ++j) n[j] = std::exp(-cumulative[j]);
  const double mass = trapezoid(grid, n);
  // For the shape exp(-B(x)) the tail is about N(x_max) / beta(x_max).
  const double tail = beta_at_max > 0.0 ? n.back() / beta_at_max : INFINITY;
  check_tail(tail, mass, grid);
  return make_profile(grid, {std::move(n)}, 1e-12, true);
}

}  // namespace

SizeProfile profile_caseB_homogeneous(const DivisionRate& beta, const SizeGrid& grid) {
  std::vector<double> c(grid.size());
  for (std::size_t j = 0; j < grid.size(); ++j) c[j] = beta.cumulative(grid.x(j));
  auto p = caseB_from_cumulative(std::move(c), beta(grid.x_max()), grid);
  p.metadata = {{"case", "B"}, {"fragmentation", "uniform"}, {"beta", beta.describe()}};
  return p;
}

SizeProfile profile_caseB_homogeneous(const std::function<double(double)>& beta,
                                      const SizeGrid& grid) {
  std::vector<double> c(grid.size(), 0.0);
  double prev = beta(0.0);
  if (!(prev >= 0.0)) throw DomainError("profile_caseB_homogeneous: beta must be >= 0");
  for (std::size_t j = 1; j < grid.size(); ++j) {
    const double b = beta(grid.x(j));
    if (!(b >= 0.0)) throw DomainError("profile_caseB_homogeneous: beta must be >= 0");
    c[j] = c[j - 1] + 0.5 * grid.dx() * (prev + b);
    prev = b;
  }
  auto p = caseB_from_cumulative(std::move(c), prev, grid);
  p.metadata = {{"case", "B"}, {"fragmentation", "uniform"}, {"beta", "function"}};
  return p;
}

SizeProfile profiles_caseB_heterogeneous(const TraitSet& traits, const HeredityKernel& kernel,
                                         const DivisionRate& beta, const SizeGrid& grid) {
  const auto shape = profile_caseB_homogeneous(beta, grid);
  const auto triplet =
      dominant_eigentriplet(build_growth_matrix(traits, kernel, 1.0), {}, ModelCase::B);
  std::vector<std::vector<double>> values(traits.size(), shape.values[0]);
  for (std::size_t i = 0; i < traits.size(); ++i)
    for (double& x : values[i]) x *= triplet.fractions[i];
  auto p = make_profile(grid, std::move(values), 1e-10, false);
  p.metadata = shape.metadata;
  p.metadata.emplace_back("traits", csv::join(traits.values(), ' '));
  p.metadata.emplace_back("kernel", csv::join(kernel.matrix().entries, ' '));
  p.metadata.emplace_back("effective_trait", csv::format(triplet.effective_trait));
  return p;
}

SizeGrid default_grid(const DivisionRate& beta) {
  const double dx = 0.01 / beta.beta;
  // Envelope exp(-beta x^n / n) < 1e-12.
  const double target = 12.0 * std::log(10.0);
  double x_max = std::pow(target * beta.exponent / beta.beta, 1.0 / beta.exponent);
  std::size_t K = static_cast<std::size_t>(std::ceil(x_max / dx));
  K += K % 2;
  return SizeGrid(dx, K);
}

}  // namespace effgrow
