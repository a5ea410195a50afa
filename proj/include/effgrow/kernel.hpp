#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace effgrow {

/// Row sums of a heredity kernel must equal 1 to this tolerance.
inline constexpr double kRowSumTolerance = 1e-12;

struct KernelValidation {
  bool nonnegative = true;
  bool stochastic = true;    // every row sums to 1 within kRowSumTolerance
  bool irreducible = true;   // positivity graph strongly connected
  double max_row_sum_error = 0.0;
  std::string message;       // empty when valid

  bool valid() const noexcept { return nonnegative && stochastic && irreducible; }
};

/// Row-major M x M matrix without invariants; input to validate_kernel.
struct SquareMatrix {
  std::size_t dim = 0;
  std::vector<double> entries;

  double operator()(std::size_t i, std::size_t j) const { return entries[i * dim + j]; }
  double& operator()(std::size_t i, std::size_t j) { return entries[i * dim + j]; }
};

KernelValidation validate_kernel(const SquareMatrix& m);

/// Stochastic irreducible M x M matrix; kappa(i, j) is the probability that a
/// mother of trait i has a daughter of trait j.
class HeredityKernel {
public:
  /// Throws DomainError if `m` fails validation.
  explicit HeredityKernel(SquareMatrix m);

  std::size_t size() const noexcept { return m_.dim; }
  double operator()(std::size_t i, std::size_t j) const { return m_(i, j); }
  std::span<const double> row(std::size_t i) const {
    return {m_.entries.data() + i * m_.dim, m_.dim};
  }
  const SquareMatrix& matrix() const noexcept { return m_; }

  friend bool operator==(const HeredityKernel& a, const HeredityKernel& b) {
    return a.m_.dim == b.m_.dim && a.m_.entries == b.m_.entries;
  }

private:
  SquareMatrix m_;
};

KernelValidation validate_kernel(const HeredityKernel& kernel);

/// Rows (1 - k1, k1) and (k2, 1 - k2), k1, k2 in (0, 1).
HeredityKernel make_kernel_bimodal(double k1, double k2);

/// Diagonal alpha, off-diagonal (1 - alpha)/(M - 1); M >= 2, alpha in [0, 1).
HeredityKernel make_kernel_alpha(std::size_t M, double alpha);

/// Neutral value of the alpha-family: 1/2 + 1/(2M).
double neutral_alpha(std::size_t M);

/// Every row equals `weights` (daughter trait independent of the mother's).
HeredityKernel make_kernel_noheredity(std::span<const double> weights);

/// Uniform 1/M entries.
HeredityKernel make_kernel_uniform(std::size_t M);

/// Entries uniform on [0, 1) from CounterRng(seed), rows normalized to 1.
/// Entry (i, j) uses counter i*M + j; a row that sums to zero is redrawn with
/// counters offset by M*M per attempt.
HeredityKernel make_kernel_random(std::size_t M, std::uint64_t seed);

/// True when every row of the kernel is the same probability vector.
bool is_noheredity(const HeredityKernel& kernel);

}  // namespace effgrow
