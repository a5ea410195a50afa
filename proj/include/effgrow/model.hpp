#pragma once

#include <string>
#include <string_view>

#include "effgrow/kernel.hpp"
#include "effgrow/model_case.hpp"
#include "effgrow/traits.hpp"

namespace effgrow {

/// Growth shape tau(x).
enum class Growth { constant, linear };

/// Fragmentation kernel b(y, x).
enum class Fragmentation {
  mitosis,  // delta_{y = 2x}
  uniform,  // 1/y on [0, y]
};

std::string_view to_string(Growth g);
std::string_view to_string(Fragmentation f);
Growth parse_growth(std::string_view text);
Fragmentation parse_fragmentation(std::string_view text);

/// Division rate per unit size beta(x) = beta x^(n-1), n >= 1.
struct DivisionRate {
  double beta = 1.0;
  int exponent = 1;

  double operator()(double x) const;
  /// int_0^x beta(s) ds = beta x^n / n.
  double cumulative(double x) const;
  bool constant() const noexcept { return exponent == 1; }
  /// "const:1" or "pow:2:1" style descriptor.
  std::string describe() const;
};

/// Parses "F" (constant), "const:F" or "pow:N[:F]".
DivisionRate parse_division_rate(std::string_view text);

struct ModelSpec {
  Growth tau = Growth::constant;
  DivisionRate beta;
  Fragmentation frag = Fragmentation::uniform;
  TraitSet traits{{1.0}};
  HeredityKernel kernel{SquareMatrix{1, {1.0}}};

  double tau_at(double x) const noexcept { return tau == Growth::constant ? 1.0 : x; }

  /// A when tau = 1 and beta is constant; B when tau = x with uniform
  /// fragmentation; custom otherwise.
  ModelCase model_case() const noexcept;
};

/// Throws DomainError on invalid parameters or mismatched kernel size.
ModelSpec make_model(Growth tau, DivisionRate beta, Fragmentation frag, TraitSet traits,
                     HeredityKernel kernel);

}  // namespace effgrow
