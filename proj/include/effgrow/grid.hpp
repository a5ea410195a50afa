#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace effgrow {

/// Uniform size grid x_j = j dx, j = 0..K.
class SizeGrid {
public:
  SizeGrid(double dx, std::size_t K);

  /// Grid reaching x_max; throws DomainError unless x_max / dx is an integer
  /// (to 1e-9 relative).
  static SizeGrid uniform(double dx, double x_max);

  double dx() const noexcept { return dx_; }
  std::size_t last() const noexcept { return K_; }  // index of x_max
  std::size_t size() const noexcept { return K_ + 1; }
  double x(std::size_t j) const noexcept { return static_cast<double>(j) * dx_; }
  double x_max() const noexcept { return x(K_); }
  const std::vector<double>& nodes() const noexcept { return nodes_; }

  /// Doubling maps nodes to nodes with x_max/dx even.
  bool dyadic_compatible() const noexcept { return K_ % 2 == 0; }

  friend bool operator==(const SizeGrid& a, const SizeGrid& b) {
    return a.dx_ == b.dx_ && a.K_ == b.K_;
  }

private:
  double dx_;
  std::size_t K_;
  std::vector<double> nodes_;
};

/// Composite trapezoid rule over the whole grid.
double trapezoid(const SizeGrid& grid, std::span<const double> f);

}  // namespace effgrow
