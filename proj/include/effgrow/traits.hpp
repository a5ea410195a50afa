#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace effgrow {

enum class MeanKind { arithmetic, geometric, harmonic };

std::string_view to_string(MeanKind kind);
MeanKind parse_mean_kind(std::string_view text);

/// Strictly increasing, strictly positive growth-rate multipliers v_1 < ... < v_M.
class TraitSet {
public:
  explicit TraitSet(std::vector<double> values);

  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  std::span<const double> values() const noexcept { return values_; }
  double min() const noexcept { return values_.front(); }
  double max() const noexcept { return values_.back(); }
  double range() const noexcept { return values_.back() - values_.front(); }

  friend bool operator==(const TraitSet&, const TraitSet&) = default;

private:
  std::vector<double> values_;
};

double mean(const TraitSet& traits, MeanKind kind);

/// M traits of range sigma whose `kind`-mean is exactly vbar.
///
/// arithmetic: v_i equally spaced on [vbar - sigma/2, vbar + sigma/2];
/// geometric:  log v_i equally spaced on [log a, log b], ab = vbar^2, b - a = sigma;
/// harmonic:   1/v_i equally spaced, 2ab/(a+b) = vbar, b - a = sigma.
TraitSet make_trait_set(std::size_t M, double sigma, double vbar, MeanKind kind);

/// Largest admissible sigma (exclusive) for make_trait_set; +inf when unbounded.
double max_sigma(double vbar, MeanKind kind);

/// Coefficient of variation of the traits (population std / arithmetic mean).
double coefficient_of_variation(const TraitSet& traits);

}  // namespace effgrow
