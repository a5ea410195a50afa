#pragma once

#include <string_view>

namespace effgrow {

/// A: tau = 1, constant beta (lambda_w = beta w).
/// B: tau = x, uniform fragmentation (lambda_w = w).
/// custom: anything else; no effective trait is defined.
enum class ModelCase { A, B, custom };

std::string_view to_string(ModelCase c);
ModelCase parse_model_case(std::string_view text);

}  // namespace effgrow
