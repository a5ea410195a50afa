#include "effgrow/model_case.hpp"

#include <string>

#include "effgrow/errors.hpp"

namespace effgrow {

std::string_view to_string(ModelCase c) {
  switch (c) {
    case ModelCase::A: return "A";
    case ModelCase::B: return "B";
    case ModelCase::custom: return "custom";
  }
  return "?";
}

ModelCase parse_model_case(std::string_view text) {
  if (text == "A" || text == "a") return ModelCase::A;
  if (text == "B" || text == "b") return ModelCase::B;
  if (text == "custom") return ModelCase::custom;
  throw DomainError("unknown model case '" + std::string(text) + "'");
}

}  // namespace effgrow
