#include "effgrow/traits.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "effgrow/errors.hpp"

namespace effgrow {

std::string_view to_string(MeanKind kind) {
  switch (kind) {
    case MeanKind::arithmetic: return "arithmetic";
    case MeanKind::geometric: return "geometric";
    case MeanKind::harmonic: return "harmonic";
  }
  return "?";
}

MeanKind parse_mean_kind(std::string_view text) {
  if (text == "arithmetic" || text == "A" || text == "m_A") return MeanKind::arithmetic;
  if (text == "geometric" || text == "G" || text == "m_G") return MeanKind::geometric;
  if (text == "harmonic" || text == "H" || text == "m_H") return MeanKind::harmonic;
  throw DomainError("unknown mean kind '" + std::string(text) + "'");
}

TraitSet::TraitSet(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty()) throw DomainError("TraitSet: at least one trait is required");
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!(values_[i] > 0.0) || !std::isfinite(values_[i]))
      throw DomainError("TraitSet: trait " + std::to_string(i + 1) + " must be finite and > 0");
    if (i > 0 && !(values_[i] > values_[i - 1]))
      throw DomainError("TraitSet: traits must be strictly increasing (v_" + std::to_string(i) +
                        " >= v_" + std::to_string(i + 1) + ")");
  }
}

double mean(const TraitSet& traits, MeanKind kind) {
  const auto v = traits.values();
  const double M = static_cast<double>(v.size());
  switch (kind) {
    case MeanKind::arithmetic:
      return std::accumulate(v.begin(), v.end(), 0.0) / M;
    case MeanKind::geometric: {
      double log_sum = 0.0;
      for (double x : v) log_sum += std::log(x);
      return std::exp(log_sum / M);
    }
    case MeanKind::harmonic: {
      double inv_sum = 0.0;
      for (double x : v) inv_sum += 1.0 / x;
      return M / inv_sum;
    }
  }
  return std::numeric_limits<double>::quiet_NaN();
}

double max_sigma(double vbar, MeanKind kind) {
  if (kind == MeanKind::arithmetic) return 2.0 * vbar;
  return std::numeric_limits<double>::infinity();
}

namespace {

// t_i = i/(M-1) on [0, 1]; the endpoints are hit exactly.
double node(std::size_t i, std::size_t M) {
  return static_cast<double>(i) / static_cast<double>(M - 1);
}

}  // namespace

TraitSet make_trait_set(std::size_t M, double sigma, double vbar, MeanKind kind) {
  if (M == 0) throw DomainError("make_trait_set: M must be >= 1");
  if (!(vbar > 0.0)) throw DomainError("make_trait_set: vbar must be > 0");
  if (!(sigma >= 0.0)) throw DomainError("make_trait_set: sigma must be >= 0");
  if (M == 1) {
    if (sigma > 0.0) throw DomainError("make_trait_set: M = 1 requires sigma = 0");
    return TraitSet({vbar});
  }
  if (sigma == 0.0)
    throw DomainError("make_trait_set: sigma = 0 collapses M > 1 traits onto vbar; use M = 1");
  if (!(sigma < max_sigma(vbar, kind)))
    throw DomainError("make_trait_set: sigma = " + std::to_string(sigma) + " outside (0, " +
                      std::to_string(max_sigma(vbar, kind)) + ") for the " +
                      std::string(to_string(kind)) + " mean");

  std::vector<double> v(M);
  switch (kind) {
    case MeanKind::arithmetic: {
      const double a = vbar - 0.5 * sigma;
      for (std::size_t i = 0; i < M; ++i) v[i] = a + sigma * node(i, M);
      break;
    }
    case MeanKind::geometric: {
      const double b = 0.5 * (sigma + std::sqrt(sigma * sigma + 4.0 * vbar * vbar));
      const double a = b - sigma;
      const double la = std::log(a), lb = std::log(b);
      for (std::size_t i = 0; i < M; ++i) v[i] = std::exp(la + (lb - la) * node(i, M));
      v.front() = a;
      v.back() = b;
      break;
    }
    case MeanKind::harmonic: {
      const double s = vbar + std::sqrt(vbar * vbar + sigma * sigma);
      const double a = 0.5 * (s - sigma), b = 0.5 * (s + sigma);
      const double ia = 1.0 / a, ib = 1.0 / b;
      // 1/v decreasing in i so that v stays increasing.
      for (std::size_t i = 0; i < M; ++i) v[i] = 1.0 / (ia + (ib - ia) * node(i, M));
      v.front() = a;
      v.back() = b;
      break;
    }
  }
  return TraitSet(std::move(v));
}

double coefficient_of_variation(const TraitSet& traits) {
  const double m = mean(traits, MeanKind::arithmetic);
  double var = 0.0;
  for (double x : traits.values()) var += (x - m) * (x - m);
  var /= static_cast<double>(traits.size());
  return std::sqrt(var) / m;
}

}  // namespace effgrow
