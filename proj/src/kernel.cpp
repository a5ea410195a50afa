#include "effgrow/kernel.hpp"

#include <cmath>
#include <sstream>

#include "effgrow/counter_rng.hpp"
#include "effgrow/errors.hpp"

namespace effgrow {

namespace {

// Every node reachable from `start` following edges i -> j with m(i, j) > 0
// (or the reversed edges when `reverse`).
std::vector<bool> reachable(const SquareMatrix& m, std::size_t start, bool reverse) {
  std::vector<bool> seen(m.dim, false);
  std::vector<std::size_t> stack{start};
  seen[start] = true;
  while (!stack.empty()) {
    const std::size_t i = stack.back();
    stack.pop_back();
    for (std::size_t j = 0; j < m.dim; ++j) {
      const double w = reverse ? m(j, i) : m(i, j);
      if (w > 0.0 && !seen[j]) {
        seen[j] = true;
        stack.push_back(j);
      }
    }
  }
  return seen;
}

}  // namespace

KernelValidation validate_kernel(const SquareMatrix& m) {
  KernelValidation report;
  std::ostringstream msg;
  if (m.dim == 0 || m.entries.size() != m.dim * m.dim) {
    report.nonnegative = report.stochastic = report.irreducible = false;
    report.message = "kernel must be a non-empty square matrix";
    return report;
  }
  for (std::size_t i = 0; i < m.dim; ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < m.dim; ++j) {
      const double w = m(i, j);
      if (!(w >= 0.0) || !std::isfinite(w)) {
        if (report.nonnegative) msg << "entry (" << i + 1 << "," << j + 1 << ") is negative; ";
        report.nonnegative = false;
      }
      sum += w;
    }
    const double err = std::abs(sum - 1.0);
    report.max_row_sum_error = std::max(report.max_row_sum_error, err);
    if (!(err <= kRowSumTolerance)) {
      if (report.stochastic) msg << "row " << i + 1 << " sums to " << sum << "; ";
      report.stochastic = false;
    }
  }
  // Strongly connected iff node 0 reaches everything forwards and backwards.
  const auto fwd = reachable(m, 0, false);
  const auto bwd = reachable(m, 0, true);
  for (std::size_t j = 0; j < m.dim; ++j) {
    if (!fwd[j] || !bwd[j]) {
      report.irreducible = false;
      msg << "kernel is reducible (trait " << j + 1 << " not connected to trait 1); ";
      break;
    }
  }
  report.message = msg.str();
  return report;
}

HeredityKernel::HeredityKernel(SquareMatrix m) : m_(std::move(m)) {
  const auto report = validate_kernel(m_);
  if (!report.valid()) throw DomainError("invalid heredity kernel: " + report.message);
}

KernelValidation validate_kernel(const HeredityKernel& kernel) {
  return validate_kernel(kernel.matrix());
}

HeredityKernel make_kernel_bimodal(double k1, double k2) {
  if (!(k1 > 0.0 && k1 < 1.0)) throw DomainError("make_kernel_bimodal: k1 must lie in (0, 1)");
  if (!(k2 > 0.0 && k2 < 1.0)) throw DomainError("make_kernel_bimodal: k2 must lie in (0, 1)");
  return HeredityKernel(SquareMatrix{2, {1.0 - k1, k1, k2, 1.0 - k2}});
}

double neutral_alpha(std::size_t M) { return 0.5 + 0.5 / static_cast<double>(M); }

HeredityKernel make_kernel_alpha(std::size_t M, double alpha) {
  if (M < 2) throw DomainError("make_kernel_alpha: M must be >= 2");
  if (!(alpha >= 0.0 && alpha < 1.0))
    throw DomainError("make_kernel_alpha: alpha must lie in [0, 1) (alpha = 1 isolates every trait)");
  const double off = (1.0 - alpha) / static_cast<double>(M - 1);
  SquareMatrix m{M, std::vector<double>(M * M, off)};
  for (std::size_t i = 0; i < M; ++i) m(i, i) = alpha;
  return HeredityKernel(std::move(m));
}

HeredityKernel make_kernel_noheredity(std::span<const double> weights) {
  const std::size_t M = weights.size();
  if (M == 0) throw DomainError("make_kernel_noheredity: weights must be non-empty");
  double sum = 0.0;
  for (std::size_t j = 0; j < M; ++j) {
    if (!(weights[j] > 0.0))
      throw DomainError("make_kernel_noheredity: weight " + std::to_string(j + 1) + " must be > 0");
    sum += weights[j];
  }
  if (!(std::abs(sum - 1.0) <= kRowSumTolerance))
    throw DomainError("make_kernel_noheredity: weights sum to " + std::to_string(sum) + ", not 1");
  SquareMatrix m{M, std::vector<double>(M * M)};
  for (std::size_t i = 0; i < M; ++i)
    for (std::size_t j = 0; j < M; ++j) m(i, j) = weights[j];
  return HeredityKernel(std::move(m));
}

HeredityKernel make_kernel_uniform(std::size_t M) {
  if (M == 0) throw DomainError("make_kernel_uniform: M must be >= 1");
  return HeredityKernel(
      SquareMatrix{M, std::vector<double>(M * M, 1.0 / static_cast<double>(M))});
}

HeredityKernel make_kernel_random(std::size_t M, std::uint64_t seed) {
  if (M < 2) throw DomainError("make_kernel_random: M must be >= 2");
  const CounterRng rng(seed);
  SquareMatrix m{M, std::vector<double>(M * M)};
  for (std::size_t i = 0; i < M; ++i) {
    for (std::uint64_t attempt = 0;; ++attempt) {
      double sum = 0.0;
      for (std::size_t j = 0; j < M; ++j) {
        m(i, j) = rng.uniform(attempt * M * M + i * M + j);
        sum += m(i, j);
      }
      if (sum > 0.0) {
        for (std::size_t j = 0; j < M; ++j) m(i, j) /= sum;
        break;
      }
    }
  }
  const auto report = validate_kernel(m);
  if (!report.valid())
    throw InconsistencyError("make_kernel_random: generated kernel invalid: " + report.message);
  return HeredityKernel(std::move(m));
}

bool is_noheredity(const HeredityKernel& kernel) {
  const std::size_t M = kernel.size();
  for (std::size_t i = 1; i < M; ++i)
    for (std::size_t j = 0; j < M; ++j)
      if (kernel(i, j) != kernel(0, j)) return false;
  return true;
}

}  // namespace effgrow
