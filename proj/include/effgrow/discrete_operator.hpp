#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "effgrow/grid.hpp"
#include "effgrow/model.hpp"

namespace effgrow {

/// First-order upwind discretization of
///
///   L N_i = -v_i (tau N_i)' - v_i tau beta N_i + 2 int tau beta b(y, x) sum_j k_ji v_j N_j(y) dy
///
/// on per-type grid vectors stored type-major: x[i * nodes() + j] = N_i(x_j).
/// When tau(0) > 0 node 0 carries the boundary value N_i(0) = 0 and is not an
/// unknown (first_unknown() == 1); apply() writes zeros there.
///
/// Fragmentation gain:
///   mitosis  G_i(x_j) = 4 s_i(x_{2j}), s_i = sum_l k_li v_l tau beta N_l (zero for 2j > K);
///   uniform  G_i(x_j) = 2 T_j, T_j = dx [h_j/2 + sum_{j<k<K} h_k + h_K/2], h = s/x,
///            one backward pass per type. With the Dirichlet node, h_0 := h_1 and
///            the gain falling in the half cell [0, dx/2] (mass dx T_0) is
///            credited to node 1.
///
/// apply_serial / apply_transpose_serial are the reference loops; apply /
/// apply_transpose are the OpenMP versions and produce bitwise identical results
/// (every output entry is summed in the same fixed order).
class DiscreteOperator {
public:
  /// Throws DomainError for mitosis on a grid with odd K.
  DiscreteOperator(ModelSpec model, SizeGrid grid);

  const ModelSpec& model() const noexcept { return model_; }
  const SizeGrid& grid() const noexcept { return grid_; }
  std::size_t types() const noexcept { return M_; }
  std::size_t nodes() const noexcept { return grid_.size(); }
  std::size_t size() const noexcept { return M_ * grid_.size(); }
  std::size_t first_unknown() const noexcept { return j0_; }

  /// c = max_{i,j} v_i tau_j beta_j + v_i tau_j / dx; L + c Id maps nonnegative
  /// vectors to nonnegative vectors.
  double shift() const noexcept { return shift_; }

  /// Largest transport speed v_M max tau and loss rate v_M max tau beta on the
  /// grid (explicit time-step bounds).
  double max_speed() const noexcept { return max_speed_; }
  double max_loss_rate() const noexcept { return max_loss_; }

  void apply(std::span<const double> x, std::span<double> y) const;
  void apply_serial(std::span<const double> x, std::span<double> y) const;
  void apply_transpose(std::span<const double> x, std::span<double> y) const;
  void apply_transpose_serial(std::span<const double> x, std::span<double> y) const;

  /// Splitting L = G - B into the fragmentation gain G and the transport plus
  /// loss part B (lower bidiagonal within each type). All four are serial.
  void apply_gain(std::span<const double> x, std::span<double> y) const;
  void apply_gain_transpose(std::span<const double> x, std::span<double> y) const;
  /// out = (lambda + B)^{-1} rhs by forward substitution (lambda > 0).
  void solve_transport(double lambda, std::span<const double> rhs, std::span<double> out) const;
  /// out = (lambda + B^T)^{-1} rhs by backward substitution.
  void solve_transport_transpose(double lambda, std::span<const double> rhs,
                                 std::span<double> out) const;

private:
  void check(std::span<const double> x, std::span<double> y) const;
  void gain_mitosis(const double* s, double* g) const;
  void gain_uniform(const double* h, double* g) const;
  void gain_mitosis_transpose(const double* y, double* out) const;
  void gain_uniform_transpose(const double* y, double* out) const;

  ModelSpec model_;
  SizeGrid grid_;
  std::size_t M_;
  std::size_t K_;
  std::size_t j0_;
  std::vector<double> tau_;     // tau(x_j)
  std::vector<double> loss_;    // tau(x_j) beta(x_j)
  std::vector<double> source_;  // per-node weight turning N into s (mitosis) or h (uniform)
  std::vector<double> kernel_t_;  // kernel_t_[i * M + l] = k_li
  double shift_ = 0.0;
  double max_speed_ = 0.0;
  double max_loss_ = 0.0;
};

}  // namespace effgrow
