#include "effgrow/discrete_operator.hpp"

#include <algorithm>
#include <string>

#include "effgrow/errors.hpp"

namespace effgrow {

DiscreteOperator::DiscreteOperator(ModelSpec model, SizeGrid grid)
    : model_(std::move(model)),
      grid_(std::move(grid)),
      M_(model_.traits.size()),
      K_(grid_.last()),
      j0_(model_.tau_at(0.0) > 0.0 ? 1 : 0) {
  if (model_.frag == Fragmentation::mitosis && !grid_.dyadic_compatible())
    throw DomainError("DiscreteOperator: mitosis needs an even number of grid steps (K = " +
                      std::to_string(K_) + ")");
  const std::size_t n = grid_.size();
  tau_.resize(n);
  loss_.resize(n);
  source_.assign(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    const double x = grid_.x(j);
    tau_[j] = model_.tau_at(x);
    loss_[j] = tau_[j] * model_.beta(x);
    if (model_.frag == Fragmentation::mitosis)
      source_[j] = loss_[j];
    else if (j > 0)
      source_[j] = loss_[j] / x;
    else if (j0_ == 0)
      source_[j] = model_.beta(0.0);  // tau = x: tau/x = 1
  }
  kernel_t_.resize(M_ * M_);
  for (std::size_t i = 0; i < M_; ++i)
    for (std::size_t l = 0; l < M_; ++l) kernel_t_[i * M_ + l] = model_.kernel(l, i);

  const double vmax = model_.traits.max();
  for (std::size_t j = j0_; j < n; ++j) {
    shift_ = std::max(shift_, vmax * (loss_[j] + tau_[j] / grid_.dx()));
    max_speed_ = std::max(max_speed_, vmax * tau_[j]);
    max_loss_ = std::max(max_loss_, vmax * loss_[j]);
  }
}

void DiscreteOperator::check(std::span<const double> x, std::span<double> y) const {
  if (x.size() != size() || y.size() != size())
    throw DomainError("DiscreteOperator: vector size " + std::to_string(x.size()) + " != " +
                      std::to_string(size()));
}

// g[j] for one type from its source s (nodes j0..K).
void DiscreteOperator::gain_mitosis(const double* s, double* g) const {
  for (std::size_t j = 0; j <= K_; ++j) g[j] = (j >= j0_ && 2 * j <= K_) ? 4.0 * s[2 * j] : 0.0;
}

void DiscreteOperator::gain_uniform(const double* h, double* g) const {
  const double dx = grid_.dx();
  const double half_last = 0.5 * h[K_];
  g[K_] = 0.0;
  double inner = 0.0;  // sum_{j<k<K} h_k
  for (std::size_t j = K_; j-- > j0_;) {
    g[j] = 2.0 * dx * (0.5 * h[j] + inner + half_last);
    inner += h[j];
  }
  if (j0_ == 1) {
    g[0] = 0.0;
    // inner now holds sum_{0<k<K} h_k; h_0 := h_1.
    const double t0 = dx * (0.5 * h[1] + inner + half_last);
    g[1] += t0;
  }
}

void DiscreteOperator::gain_mitosis_transpose(const double* y, double* out) const {
  for (std::size_t k = 0; k <= K_; ++k)
    out[k] = (k % 2 == 0 && k / 2 >= j0_) ? 4.0 * y[k / 2] : 0.0;
}

void DiscreteOperator::gain_uniform_transpose(const double* y, double* out) const {
  const double dx = grid_.dx();
  double prefix = 0.0;  // sum_{j0<=j<k} y_j
  for (std::size_t k = 0; k < j0_; ++k) out[k] = 0.0;
  for (std::size_t k = j0_; k < K_; ++k) {
    out[k] = 2.0 * dx * (0.5 * y[k] + prefix);
    prefix += y[k];
  }
  out[K_] = 2.0 * dx * 0.5 * prefix;
  if (j0_ == 1) {
    out[1] += 1.5 * dx * y[1];
    for (std::size_t k = 2; k < K_; ++k) out[k] += dx * y[1];
    out[K_] += 0.5 * dx * y[1];
  }
}

void DiscreteOperator::apply_serial(std::span<const double> x, std::span<double> y) const {
  check(x, y);
  const std::size_t n = nodes();
  const double inv_dx = 1.0 / grid_.dx();
  const auto v = model_.traits.values();
  const bool mitosis = model_.frag == Fragmentation::mitosis;
  std::vector<double> z(size()), s(n), g(n);

  for (std::size_t l = 0; l < M_; ++l)
    for (std::size_t k = 0; k < n; ++k) z[l * n + k] = v[l] * source_[k] * x[l * n + k];

  for (std::size_t i = 0; i < M_; ++i) {
    for (std::size_t k = 0; k < n; ++k) {
      double acc = 0.0;
      for (std::size_t l = 0; l < M_; ++l) acc += kernel_t_[i * M_ + l] * z[l * n + k];
      s[k] = acc;
    }
    if (mitosis)
      gain_mitosis(s.data(), g.data());
    else
      gain_uniform(s.data(), g.data());

    const double* xi = x.data() + i * n;
    double* yi = y.data() + i * n;
    for (std::size_t j = 0; j < j0_; ++j) yi[j] = 0.0;
    for (std::size_t j = j0_; j < n; ++j) {
      const double inflow = j > j0_ ? tau_[j - 1] * xi[j - 1] : 0.0;
      yi[j] = -v[i] * inv_dx * (tau_[j] * xi[j] - inflow) - v[i] * loss_[j] * xi[j] + g[j];
    }
  }
}

void DiscreteOperator::apply(std::span<const double> x, std::span<double> y) const {
  check(x, y);
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(nodes());
  const std::ptrdiff_t MM = static_cast<std::ptrdiff_t>(M_);
  const std::ptrdiff_t j0 = static_cast<std::ptrdiff_t>(j0_);
  const double inv_dx = 1.0 / grid_.dx();
  const auto v = model_.traits.values();
  const bool mitosis = model_.frag == Fragmentation::mitosis;
  std::vector<double> z(size()), s(size()), g(size());

#pragma omp parallel
  {
#pragma omp for collapse(2) schedule(static)
    for (std::ptrdiff_t l = 0; l < MM; ++l)
      for (std::ptrdiff_t k = 0; k < n; ++k) z[l * n + k] = v[l] * source_[k] * x[l * n + k];
#pragma omp for collapse(2) schedule(static)
    for (std::ptrdiff_t i = 0; i < MM; ++i)
      for (std::ptrdiff_t k = 0; k < n; ++k) {
        double acc = 0.0;
        for (std::ptrdiff_t l = 0; l < MM; ++l) acc += kernel_t_[i * MM + l] * z[l * n + k];
        s[i * n + k] = acc;
      }
#pragma omp for schedule(static)
    for (std::ptrdiff_t i = 0; i < MM; ++i) {
      if (mitosis)
        gain_mitosis(s.data() + i * n, g.data() + i * n);
      else
        gain_uniform(s.data() + i * n, g.data() + i * n);
    }
#pragma omp for collapse(2) schedule(static)
    for (std::ptrdiff_t i = 0; i < MM; ++i)
      for (std::ptrdiff_t j = 0; j < n; ++j) {
        const std::ptrdiff_t idx = i * n + j;
        if (j < j0) {
          y[idx] = 0.0;
          continue;
        }
        const double inflow = j > j0 ? tau_[j - 1] * x[idx - 1] : 0.0;
        y[idx] = -v[i] * inv_dx * (tau_[j] * x[idx] - inflow) - v[i] * loss_[j] * x[idx] + g[idx];
      }
  }
}

void DiscreteOperator::apply_transpose_serial(std::span<const double> x,
                                              std::span<double> y) const {
  check(x, y);
  const std::size_t n = nodes();
  const double inv_dx = 1.0 / grid_.dx();
  const auto v = model_.traits.values();
  const bool mitosis = model_.frag == Fragmentation::mitosis;
  std::vector<double> G(size());

  for (std::size_t i = 0; i < M_; ++i) {
    if (mitosis)
      gain_mitosis_transpose(x.data() + i * n, G.data() + i * n);
    else
      gain_uniform_transpose(x.data() + i * n, G.data() + i * n);
  }
  for (std::size_t l = 0; l < M_; ++l) {
    const double* xl = x.data() + l * n;
    double* yl = y.data() + l * n;
    for (std::size_t k = 0; k < j0_; ++k) yl[k] = 0.0;
    for (std::size_t k = j0_; k < n; ++k) {
      double mix = 0.0;
      for (std::size_t i = 0; i < M_; ++i) mix += model_.kernel(l, i) * G[i * n + k];
      const double next = k + 1 < n ? xl[k + 1] : 0.0;
      yl[k] = v[l] * inv_dx * tau_[k] * (next - xl[k]) - v[l] * loss_[k] * xl[k] +
              v[l] * source_[k] * mix;
    }
  }
}

void DiscreteOperator::apply_transpose(std::span<const double> x, std::span<double> y) const {
  check(x, y);
  const std::size_t n = nodes();
  const double inv_dx = 1.0 / grid_.dx();
  const auto v = model_.traits.values();
  const bool mitosis = model_.frag == Fragmentation::mitosis;
  std::vector<double> G(size());
  const std::ptrdiff_t total = static_cast<std::ptrdiff_t>(size());
  const std::ptrdiff_t nn = static_cast<std::ptrdiff_t>(n);
  const std::ptrdiff_t MM = static_cast<std::ptrdiff_t>(M_);

#pragma omp parallel
  {
#pragma omp for schedule(static)
    for (std::ptrdiff_t i = 0; i < MM; ++i) {
      if (mitosis)
        gain_mitosis_transpose(x.data() + i * nn, G.data() + i * nn);
      else
        gain_uniform_transpose(x.data() + i * nn, G.data() + i * nn);
    }
#pragma omp for schedule(static)
    for (std::ptrdiff_t idx = 0; idx < total; ++idx) {
      const std::size_t l = static_cast<std::size_t>(idx) / n, k = static_cast<std::size_t>(idx) % n;
      if (k < j0_) {
        y[idx] = 0.0;
        continue;
      }
      double mix = 0.0;
      for (std::size_t i = 0; i < M_; ++i) mix += kernel_t_[i * M_ + l] * G[i * n + k];
      const double next = k + 1 < n ? x[idx + 1] : 0.0;
      y[idx] = v[l] * inv_dx * tau_[k] * (next - x[idx]) - v[l] * loss_[k] * x[idx] +
               v[l] * source_[k] * mix;
    }
  }
}

void DiscreteOperator::apply_gain(std::span<const double> x, std::span<double> y) const {
  check(x, y);
  const std::size_t n = nodes();
  const auto v = model_.traits.values();
  std::vector<double> z(size()), s(n);
  for (std::size_t l = 0; l < M_; ++l)
    for (std::size_t k = 0; k < n; ++k) z[l * n + k] = v[l] * source_[k] * x[l * n + k];
  for (std::size_t i = 0; i < M_; ++i) {
    for (std::size_t k = 0; k < n; ++k) {
      double acc = 0.0;
      for (std::size_t l = 0; l < M_; ++l) acc += kernel_t_[i * M_ + l] * z[l * n + k];
      s[k] = acc;
    }
    if (model_.frag == Fragmentation::mitosis)
      gain_mitosis(s.data(), y.data() + i * n);
    else
      gain_uniform(s.data(), y.data() + i * n);
  }
}

void DiscreteOperator::apply_gain_transpose(std::span<const double> x,
                                            std::span<double> y) const {
  check(x, y);
  const std::size_t n = nodes();
  const auto v = model_.traits.values();
  std::vector<double> G(size());
  for (std::size_t i = 0; i < M_; ++i) {
    if (model_.frag == Fragmentation::mitosis)
      gain_mitosis_transpose(x.data() + i * n, G.data() + i * n);
    else
      gain_uniform_transpose(x.data() + i * n, G.data() + i * n);
  }
  for (std::size_t l = 0; l < M_; ++l)
    for (std::size_t k = 0; k < n; ++k) {
      if (k < j0_) {
        y[l * n + k] = 0.0;
        continue;
      }
      double mix = 0.0;
      for (std::size_t i = 0; i < M_; ++i) mix += kernel_t_[i * M_ + l] * G[i * n + k];
      y[l * n + k] = v[l] * source_[k] * mix;
    }
}

void DiscreteOperator::solve_transport(double lambda, std::span<const double> rhs,
                                       std::span<double> out) const {
  check(rhs, out);
  if (!(lambda > 0.0)) throw DomainError("solve_transport: lambda must be positive");
  const std::size_t n = nodes();
  const double inv_dx = 1.0 / grid_.dx();
  const auto v = model_.traits.values();
  for (std::size_t i = 0; i < M_; ++i) {
    const double* r = rhs.data() + i * n;
    double* o = out.data() + i * n;
    for (std::size_t j = 0; j < j0_; ++j) o[j] = 0.0;
    for (std::size_t j = j0_; j < n; ++j) {
      const double inflow = j > j0_ ? v[i] * inv_dx * tau_[j - 1] * o[j - 1] : 0.0;
      o[j] = (r[j] + inflow) / (lambda + v[i] * (inv_dx * tau_[j] + loss_[j]));
    }
  }
}

void DiscreteOperator::solve_transport_transpose(double lambda, std::span<const double> rhs,
                                                 std::span<double> out) const {
  check(rhs, out);
  if (!(lambda > 0.0)) throw DomainError("solve_transport_transpose: lambda must be positive");
  const std::size_t n = nodes();
  const double inv_dx = 1.0 / grid_.dx();
  const auto v = model_.traits.values();
  for (std::size_t i = 0; i < M_; ++i) {
    const double* r = rhs.data() + i * n;
    double* o = out.data() + i * n;
    double next = 0.0;
    for (std::size_t k = n; k-- > j0_;) {
      o[k] = (r[k] + v[i] * inv_dx * tau_[k] * next) /
             (lambda + v[i] * (inv_dx * tau_[k] + loss_[k]));
      next = o[k];
    }
    for (std::size_t k = 0; k < j0_; ++k) o[k] = 0.0;
  }
}

}  // namespace effgrow
