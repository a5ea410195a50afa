#include "effgrow/eigensolver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>

#include <boost/math/tools/toms748_solve.hpp>

#include "effgrow/csv.hpp"
#include "effgrow/errors.hpp"

namespace effgrow {

namespace {

struct PowerResult {
  std::vector<double> vector;
  double lambda = 0.0;
  double residual = 0.0;
  std::size_t iterations = 0;
  std::vector<double> history;
};

PowerResult power_iteration(const DiscreteOperator& op, bool transpose,
                            const EigenSolverOptions& opt) {
  const std::size_t n = op.nodes(), size = op.size(), j0 = op.first_unknown();
  const double c = op.shift();
  std::vector<double> x(size, 0.0), y(size);
  for (std::size_t i = 0; i < op.types(); ++i)
    for (std::size_t j = j0; j < n; ++j) x[i * n + j] = 1.0;
  double total = 0.0;
  for (double e : x) total += e;
  for (double& e : x) e /= total;

  auto multiply = [&](std::span<const double> in, std::span<double> out) {
    if (transpose)
      opt.parallel ? op.apply_transpose(in, out) : op.apply_transpose_serial(in, out);
    else
      opt.parallel ? op.apply(in, out) : op.apply_serial(in, out);
  };

  PowerResult r;
  double prev = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t it = 1; it <= opt.max_iterations; ++it) {
    multiply(x, y);
    // (L + c) x with sum(x) = 1 and everything nonnegative.
    double mu = c;
    for (double e : y) mu += e;
    double res = 0.0;
    for (std::size_t k = 0; k < size; ++k) {
      // Exact zeros can come out as -1e-19 after the cancellation.
      const double shifted = std::max(0.0, y[k] + c * x[k]);
      res += std::abs(shifted - mu * x[k]);
      x[k] = shifted / mu;
    }
    const double lambda = mu - c;
    res /= std::abs(lambda);
    const double change = std::abs(lambda - prev) / std::abs(lambda);
    prev = lambda;
    r.residual = res;
    if (it % opt.history_stride == 0) r.history.push_back(res);
    if (change < opt.tolerance && res < 10.0 * opt.tolerance) {
      r.vector = std::move(x);
      r.lambda = lambda;
      r.iterations = it;
      return r;
    }
  }
  throw ConvergenceError(std::string(transpose ? "adjoint" : "profile") +
                             " power iteration did not converge in " +
                             std::to_string(opt.max_iterations) + " iterations (residual " +
                             csv::format(r.residual) + ")",
                         r.residual, std::move(r.history));
}

// Perron root of (lambda + B)^{-1} G (or of (lambda + B^T)^{-1} G^T) by power
// iteration from the L1-normalized nonnegative vector v, which is updated.
struct Renewal {
  const DiscreteOperator& op;
  const EigenSolverOptions& opt;
  std::vector<double> g, y;
  std::size_t iterations = 0;
  std::vector<double> history;

  Renewal(const DiscreteOperator& o, const EigenSolverOptions& options)
      : op(o), opt(options), g(o.size()), y(o.size()) {}

  double radius(double lambda, std::vector<double>& v, bool transpose) {
    const std::size_t cap = opt.max_iterations;
    double change = 0.0;
    for (std::size_t it = 0; it < cap; ++it) {
      if (++iterations > cap) break;
      if (transpose) {
        op.apply_gain_transpose(v, g);
        op.solve_transport_transpose(lambda, g, y);
      } else {
        op.apply_gain(v, g);
        op.solve_transport(lambda, g, y);
      }
      double rho = 0.0;
      for (double e : y) rho += e;
      change = 0.0;
      for (std::size_t k = 0; k < y.size(); ++k) {
        const double next = y[k] / rho;
        change += std::abs(next - v[k]);
        v[k] = next;
      }
      if (iterations % opt.history_stride == 0) history.push_back(change);
      if (change < 1e-3 * opt.tolerance) return rho;
    }
    throw ConvergenceError("renewal power iteration did not converge in " +
                               std::to_string(cap) + " iterations (change " +
                               csv::format(change) + ")",
                           change, history);
  }
};

std::vector<double> uniform_start(const DiscreteOperator& op) {
  const std::size_t n = op.nodes(), j0 = op.first_unknown();
  std::vector<double> x(op.size(), 0.0);
  const double w = 1.0 / static_cast<double>(op.types() * (n - j0));
  for (std::size_t i = 0; i < op.types(); ++i)
    for (std::size_t j = j0; j < n; ++j) x[i * n + j] = w;
  return x;
}

double relative_residual(const DiscreteOperator& op, const std::vector<double>& x,
                         double lambda, bool transpose) {
  std::vector<double> y(x.size());
  transpose ? op.apply_transpose(x, y) : op.apply(x, y);
  double res = 0.0, norm = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    res += std::abs(y[k] - lambda * x[k]);
    norm += std::abs(x[k]);
  }
  return res / (std::abs(lambda) * norm);
}

struct RenewalResult {
  PowerResult right, left;
};

RenewalResult renewal_solve(const DiscreteOperator& op, const EigenSolverOptions& opt) {
  Renewal r(op, opt);
  std::vector<double> v = uniform_start(op);
  auto f = [&](double lambda) { return std::log(r.radius(lambda, v, false)); };

  // The radius decreases in lambda; bracket the root starting from the mean trait.
  double a = mean(op.model().traits, MeanKind::arithmetic);
  double fa = f(a);
  double b = a, fb = fa;
  for (int k = 0; k < 200 && fb >= 0.0; ++k) {
    a = b;
    fa = fb;
    b *= 2.0;
    fb = f(b);
  }
  for (int k = 0; k < 200 && fa <= 0.0; ++k) {
    b = a;
    fb = fa;
    a *= 0.5;
    fa = f(a);
  }
  if (!(fa > 0.0 && fb < 0.0))
    throw ConvergenceError("renewal: could not bracket the eigenvalue", std::abs(fa), r.history);

  std::uintmax_t max_iter = 200;
  const double tol = 1e-2 * opt.tolerance;
  auto [lo, hi] = boost::math::tools::toms748_solve(
      f, a, b, fa, fb,
      [tol](double x, double y) { return std::abs(x - y) <= tol * std::min(x, y); }, max_iter);
  const double lambda = 0.5 * (lo + hi);

  RenewalResult out;
  r.radius(lambda, v, false);
  out.right.vector = v;
  std::vector<double> w = uniform_start(op);
  r.radius(lambda, w, true);
  out.left.vector = std::move(w);
  out.right.lambda = out.left.lambda = lambda;
  out.right.residual = relative_residual(op, out.right.vector, lambda, false);
  out.left.residual = relative_residual(op, out.left.vector, lambda, true);
  out.right.iterations = r.iterations;
  out.right.history = std::move(r.history);
  return out;
}

std::vector<std::vector<double>> split(const std::vector<double>& flat, std::size_t types,
                                       std::size_t n) {
  std::vector<std::vector<double>> out(types);
  for (std::size_t i = 0; i < types; ++i)
    out[i].assign(flat.begin() + static_cast<std::ptrdiff_t>(i * n),
                  flat.begin() + static_cast<std::ptrdiff_t>((i + 1) * n));
  return out;
}

std::vector<std::pair<std::string, std::string>> describe(const DiscreteOperator& op) {
  const auto& m = op.model();
  return {{"case", std::string(to_string(m.model_case()))},
          {"tau", std::string(to_string(m.tau))},
          {"beta", m.beta.describe()},
          {"fragmentation", std::string(to_string(m.frag))},
          {"traits", csv::join(m.traits.values(), ' ')},
          {"kernel", csv::join(m.kernel.matrix().entries, ' ')},
          {"dx", csv::format(op.grid().dx())},
          {"x_max", csv::format(op.grid().x_max())}};
}

}  // namespace

std::string_view to_string(EigenMethod m) {
  return m == EigenMethod::renewal ? "renewal" : "shifted_power";
}

EigenMethod parse_eigen_method(std::string_view text) {
  if (text == "shifted_power" || text == "power") return EigenMethod::shifted_power;
  if (text == "renewal") return EigenMethod::renewal;
  throw DomainError("unknown eigen method '" + std::string(text) + "'");
}

NumericEigen solve_eigen(const DiscreteOperator& op, const EigenSolverOptions& options) {
  PowerResult right, left;
  if (options.method == EigenMethod::renewal) {
    auto r = renewal_solve(op, options);
    right = std::move(r.right);
    left = std::move(r.left);
  } else {
    right = power_iteration(op, false, options);
    left = power_iteration(op, true, options);
  }
  const std::size_t M = op.types(), n = op.nodes();
  const auto& grid = op.grid();

  auto N = split(right.vector, M, n);
  auto phi = split(left.vector, M, n);
  auto profile = make_profile(grid, std::move(N), 1e-12, true);
  double pairing = 0.0;
  std::vector<double> w(n);
  for (std::size_t i = 0; i < M; ++i) {
    for (std::size_t j = 0; j < n; ++j) w[j] = profile.values[i][j] * phi[i][j];
    pairing += trapezoid(grid, w);
  }
  for (auto& p : phi)
    for (double& e : p) e /= pairing;
  SizeProfile adjoint{grid, std::move(phi), 1.0, 0.0, {}};

  profile.metadata = describe(op);
  profile.metadata.emplace_back("method", std::string(to_string(options.method)));
  profile.metadata.emplace_back("lambda", csv::format(right.lambda));
  adjoint.metadata = profile.metadata;
  adjoint.metadata.emplace_back("normalization_kind", "sum_i int N_i phi_i = 1");
  NumericEigen out{right.lambda,
                   std::move(profile),
                   std::move(adjoint),
                   right.iterations + left.iterations,
                   std::max(right.residual, left.residual),
                   std::move(right.history)};
  return out;
}

HeterogeneousResult solve_heterogeneous(const ModelSpec& model, const SizeGrid& grid,
                                        const EigenSolverOptions& options) {
  DiscreteOperator op(model, grid);
  HeterogeneousResult r{solve_eigen(op, options), {}};
  const std::size_t M = op.types(), n = op.nodes();
  auto& t = r.summary;
  t.lambda = r.eigen.lambda;
  t.beta = model.beta.beta;
  t.model_case = model.model_case();
  t.iterations = r.eigen.iterations;
  t.residual = r.eigen.residual;
  t.fractions.resize(M);
  t.adjoint.resize(M);
  std::vector<double> w(n);
  for (std::size_t i = 0; i < M; ++i) {
    t.fractions[i] = r.eigen.profile.mass(i);
    for (std::size_t j = 0; j < n; ++j)
      w[j] = r.eigen.profile.values[i][j] * r.eigen.adjoint.values[i][j];
    t.adjoint[i] = trapezoid(grid, w) / t.fractions[i];
  }
  t.effective_trait = t.model_case == ModelCase::custom
                          ? std::numeric_limits<double>::quiet_NaN()
                          : effective_trait(t, t.model_case);
  return r;
}

}  // namespace effgrow
