#include "effgrow/grid.hpp"

#include <cmath>
#include <string>

#include "effgrow/errors.hpp"

namespace effgrow {

SizeGrid::SizeGrid(double dx, std::size_t K) : dx_(dx), K_(K) {
  if (!(dx > 0.0) || !std::isfinite(dx)) throw DomainError("SizeGrid: dx must be > 0");
  if (K < 2) throw DomainError("SizeGrid: at least three nodes are required");
  nodes_.resize(K + 1);
  for (std::size_t j = 0; j <= K; ++j) nodes_[j] = x(j);
}

SizeGrid SizeGrid::uniform(double dx, double x_max) {
  if (!(dx > 0.0) || !(x_max > dx)) throw DomainError("SizeGrid: need 0 < dx < x_max");
  const double ratio = x_max / dx;
  const double K = std::round(ratio);
  if (std::abs(ratio - K) > 1e-9 * ratio)
    throw DomainError("SizeGrid: x_max = " + std::to_string(x_max) +
                      " is not a multiple of dx = " + std::to_string(dx));
  return SizeGrid(dx, static_cast<std::size_t>(K));
}

double trapezoid(const SizeGrid& grid, std::span<const double> f) {
  if (f.size() != grid.size()) throw DomainError("trapezoid: vector does not match the grid");
  double s = 0.5 * (f.front() + f.back());
  for (std::size_t j = 1; j + 1 < f.size(); ++j) s += f[j];
  return s * grid.dx();
}

}  // namespace effgrow
