#include <omp.h>

#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "effgrow/errors.hpp"
#include "effgrow/experiments.hpp"
#include "effgrow/model.hpp"
#include "effgrow/spectral.hpp"

namespace {

constexpr int kExitCheck = 1;
constexpr int kExitConfig = 2;
constexpr int kExitConvergence = 3;

struct RunOptions {
  std::string out = "out";
  std::string config;
  std::uint64_t seed = 0;
  double dx = 0.0, xmax = 0.0, tol = 0.0;
  int threads = 0;
};

struct SolveOptions {
  std::string model_case;
  std::string traits;
  std::string kernel;
  std::string beta = "1";
};

int run(const std::string& id, const RunOptions& o, const CLI::App& sub) {
  auto params = o.config.empty() ? effgrow::Parameters{} : effgrow::Parameters::from_ini(o.config);
  if (sub.count("--seed")) params.set("general.seed", std::to_string(o.seed));
  if (sub.count("--dx")) params.set("general.dx", effgrow::csv::format(o.dx));
  if (sub.count("--xmax")) params.set("general.xmax", effgrow::csv::format(o.xmax));
  if (sub.count("--tol")) params.set("general.tol", effgrow::csv::format(o.tol));
  if (o.threads > 0) omp_set_num_threads(o.threads);

  auto result = effgrow::run_experiment(id, params);
  auto manifest = effgrow::write_outputs(result, params, o.out);
  for (const auto& f : result.files) std::cerr << "wrote " << (std::filesystem::path(o.out) / f.name).string() << '\n';
  for (const auto& w : result.warnings) std::cerr << "warning: " << w << '\n';
  for (const auto& c : result.checks)
    std::cerr << (c.passed ? "check ok: " : "CHECK FAILED: ") << c.name << " (" << c.detail << ")\n";
  std::cout << manifest.string() << '\n';
  return result.checks_passed() ? 0 : kExitCheck;
}

int solve(const SolveOptions& o) {
  using namespace effgrow;
  const ModelCase c = parse_model_case(o.model_case);
  if (c == ModelCase::custom) throw ConfigError("solve: --case must be A or B");
  const auto traits = parse_traits(o.traits);
  const auto kernel = parse_kernel_spec(o.kernel, traits.size());
  const auto rate = parse_division_rate(o.beta);
  double beta = 1.0;
  if (c == ModelCase::A) {
    if (!rate.constant()) throw ConfigError("solve: Case A needs a constant beta");
    beta = rate.beta;
  }
  // Case B: lambda and the fractions do not depend on beta.
  const auto t = dominant_eigentriplet(build_growth_matrix(traits, kernel, beta), {}, c);
  std::cout << eigentriplet_csv_header(traits.size()) << '\n' << eigentriplet_csv_row(t) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Effective growth rate of heterogeneous size-structured populations"};
  app.require_subcommand(1);

  RunOptions run_opts;
  for (const auto& id : effgrow::experiment_ids()) {
    auto* sub = app.add_subcommand(id, "Write the " + id + " dataset(s) and a manifest");
    sub->add_option("--out", run_opts.out, "Output directory")->capture_default_str();
    sub->add_option("--config", run_opts.config, "INI file with [general] and per-experiment sections")
        ->check(CLI::ExistingFile);
    sub->add_option("--seed", run_opts.seed, "Seed for random kernels");
    sub->add_option("--dx", run_opts.dx, "Size step for PDE experiments")->check(CLI::PositiveNumber);
    sub->add_option("--xmax", run_opts.xmax, "Size domain end for PDE experiments")->check(CLI::PositiveNumber);
    sub->add_option("--tol", run_opts.tol, "Eigensolver tolerance")->check(CLI::PositiveNumber);
    sub->add_option("--threads", run_opts.threads, "OpenMP threads for sweep points")->check(CLI::PositiveNumber);
  }

  SolveOptions solve_opts;
  auto* solve_cmd = app.add_subcommand("solve", "Print the eigentriplet row of one Case A/B instance");
  solve_cmd->add_option("--case", solve_opts.model_case, "A or B")->required();
  solve_cmd->add_option("--traits", solve_opts.traits, "Comma-separated traits")->required();
  solve_cmd->add_option("--kernel", solve_opts.kernel,
                        "uniform | bimodal:k1,k2 | alpha:a | noheredity:w,.. | random:SEED | "
                        "matrix:r;r | file:PATH")
      ->required();
  solve_cmd->add_option("--beta", solve_opts.beta, "F, const:F or pow:N[:F]")->capture_default_str();

  app.add_subcommand("list", "List experiment ids");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    auto* sub = app.get_subcommands().front();
    const std::string name = sub->get_name();
    if (name == "list") {
      for (const auto& id : effgrow::experiment_ids()) std::cout << id << '\n';
      return 0;
    }
    if (name == "solve") return solve(solve_opts);
    return run(name, run_opts, *sub);
  } catch (const effgrow::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const effgrow::DomainError& e) {
    std::cerr << "invalid parameter: " << e.what() << '\n';
    return kExitConfig;
  } catch (const effgrow::ConvergenceError& e) {
    std::cerr << "convergence failure: " << e.what() << '\n';
    return kExitConvergence;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitCheck;
  }
}
