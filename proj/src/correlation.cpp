#include "effgrow/correlation.hpp"

#include <cmath>

#include "effgrow/errors.hpp"
#include "effgrow/kernel.hpp"

namespace effgrow {

CorrelationReport pearson_correlation_alpha(std::size_t M, double alpha,
                                            std::span<const double> mother_law,
                                            const TraitSet& traits) {
  if (M < 2) throw DomainError("pearson_correlation_alpha: M must be >= 2");
  if (!(alpha > 0.0 && alpha < 1.0))
    throw DomainError("pearson_correlation_alpha: alpha must lie in (0, 1)");
  if (traits.size() != M || mother_law.size() != M)
    throw DomainError("pearson_correlation_alpha: traits and mother law must have M entries");
  double total = 0.0;
  for (double p : mother_law) {
    if (!(p >= 0.0)) throw DomainError("pearson_correlation_alpha: negative mother-law entry");
    total += p;
  }
  if (!(std::abs(total - 1.0) <= kRowSumTolerance))
    throw DomainError("pearson_correlation_alpha: mother law must sum to 1");

  const double Md = static_cast<double>(M);
  const double R = 1.0 / (Md - 1.0);
  double ev = 0.0, ev2 = 0.0, eu = 0.0, eu2 = 0.0;
  for (std::size_t i = 0; i < M; ++i) {
    const double v = traits[i];
    ev += mother_law[i] * v;
    ev2 += mother_law[i] * v * v;
    eu += v / Md;
    eu2 += v * v / Md;
  }
  const double var_m = ev2 - ev * ev;
  if (!(var_m > 1e-300 * ev2))
    throw DomainError("pearson_correlation_alpha: degenerate mother law (Var(V_m) = 0)");

  const double ew = R * (Md * eu - ev);
  const double ew2 = R * (Md * eu2 - ev2);
  const double var_w = ew2 - ew * ew;
  const double delta = ew - ev;

  CorrelationReport report;
  report.alpha = alpha;
  report.M = M;
  report.mother_law.assign(mother_law.begin(), mother_law.end());
  report.var_mother = var_m;
  report.covariance = (alpha * Md - 1.0) * R * var_m;
  report.var_daughter = alpha * var_m + (1.0 - alpha) * var_w + alpha * (1.0 - alpha) * delta * delta;
  report.gamma = report.covariance / std::sqrt(report.var_daughter * var_m);
  return report;
}

}  // namespace effgrow
