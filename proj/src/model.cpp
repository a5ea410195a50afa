#include "effgrow/model.hpp"

#include <charconv>
#include <cmath>

#include "effgrow/csv.hpp"
#include "effgrow/errors.hpp"

namespace effgrow {

std::string_view to_string(Growth g) { return g == Growth::constant ? "constant" : "linear"; }

std::string_view to_string(Fragmentation f) {
  return f == Fragmentation::mitosis ? "mitosis" : "uniform";
}

Growth parse_growth(std::string_view text) {
  if (text == "constant" || text == "1") return Growth::constant;
  if (text == "linear" || text == "x") return Growth::linear;
  throw DomainError("unknown growth shape '" + std::string(text) + "'");
}

Fragmentation parse_fragmentation(std::string_view text) {
  if (text == "mitosis") return Fragmentation::mitosis;
  if (text == "uniform") return Fragmentation::uniform;
  throw DomainError("unknown fragmentation kernel '" + std::string(text) + "'");
}

double DivisionRate::operator()(double x) const {
  if (exponent == 1) return beta;
  return beta * std::pow(x, exponent - 1);
}

double DivisionRate::cumulative(double x) const {
  return beta * std::pow(x, exponent) / exponent;
}

std::string DivisionRate::describe() const {
  if (exponent == 1) return "const:" + csv::format(beta);
  return "pow:" + std::to_string(exponent) + ":" + csv::format(beta);
}

DivisionRate parse_division_rate(std::string_view text) {
  DivisionRate r;
  auto number = [&](std::string_view s) {
    auto v = csv::parse_list(s, ':');
    if (v.size() != 1) throw DomainError("bad division rate '" + std::string(text) + "'");
    return v[0];
  };
  if (text.starts_with("pow:")) {
    auto rest = text.substr(4);
    auto colon = rest.find(':');
    double n = number(rest.substr(0, colon));
    if (n != std::floor(n) || n < 1)
      throw DomainError("division rate exponent must be an integer >= 1");
    r.exponent = static_cast<int>(n);
    if (colon != std::string_view::npos) r.beta = number(rest.substr(colon + 1));
  } else if (text.starts_with("const:")) {
    r.beta = number(text.substr(6));
  } else {
    r.beta = number(text);
  }
  if (!(r.beta > 0.0)) throw DomainError("division rate factor must be > 0");
  return r;
}

ModelCase ModelSpec::model_case() const noexcept {
  if (tau == Growth::constant && beta.constant()) return ModelCase::A;
  if (tau == Growth::linear && frag == Fragmentation::uniform) return ModelCase::B;
  return ModelCase::custom;
}

ModelSpec make_model(Growth tau, DivisionRate beta, Fragmentation frag, TraitSet traits,
                     HeredityKernel kernel) {
  if (!(beta.beta > 0.0) || beta.exponent < 1)
    throw DomainError("make_model: division rate must be beta x^(n-1) with beta > 0, n >= 1");
  if (kernel.size() != traits.size())
    throw DomainError("make_model: kernel size does not match the number of traits");
  return ModelSpec{tau, beta, frag, std::move(traits), std::move(kernel)};
}

}  // namespace effgrow
