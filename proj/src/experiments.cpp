#include "effgrow/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <json.hpp>

#include "effgrow/correlation.hpp"
#include "effgrow/errors.hpp"
#include "effgrow/model.hpp"
#include "effgrow/profiles.hpp"
#include "effgrow/spectral.hpp"

namespace effgrow {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return std::string(s);
}

std::vector<std::string> split(std::string_view text, char sep) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t end = text.find(sep, pos);
    out.push_back(trim(text.substr(pos, end == std::string_view::npos ? end : end - pos)));
    if (end == std::string_view::npos) break;
    pos = end + 1;
  }
  return out;
}

std::vector<double> numbers(std::string_view text) {
  try {
    return csv::parse_list(text);
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
}

std::string fmt(double x) { return csv::format(x); }

}  // namespace

// ---------------------------------------------------------------- parameters

Parameters Parameters::from_ini(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  return from_ini(in);
}

Parameters Parameters::from_ini(std::istream& in) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  Parameters p;
  for (const auto& [section, node] : tree) {
    if (node.empty()) {
      p.set(section, trim(node.data()));
      continue;
    }
    for (const auto& [key, leaf] : node) p.set(section + "." + key, trim(leaf.data()));
  }
  return p;
}

std::string Parameters::get_string(const std::string& key, const std::string& fallback) {
  auto it = given_.find(key);
  const std::string value = it == given_.end() ? fallback : it->second;
  used_[key] = value;
  return value;
}

double Parameters::get_double(const std::string& key, double fallback) {
  auto it = given_.find(key);
  double value = fallback;
  if (it != given_.end()) {
    auto v = numbers(it->second);
    if (v.size() != 1) throw ConfigError("parameter " + key + " expects one number");
    value = v[0];
  }
  used_[key] = fmt(value);
  return value;
}

std::uint64_t Parameters::get_uint(const std::string& key, std::uint64_t fallback) {
  auto it = given_.find(key);
  std::uint64_t value = fallback;
  if (it != given_.end()) {
    const std::string& s = it->second;
    std::size_t used = 0;
    try {
      if (s.empty() || s.front() == '-') throw std::invalid_argument(s);
      value = std::stoull(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != s.size() || used == 0)
      throw ConfigError("parameter " + key + " expects a nonnegative integer, got '" + s + "'");
  }
  used_[key] = std::to_string(value);
  return value;
}

std::vector<double> Parameters::get_list(const std::string& key, const std::string& fallback) {
  const std::string text = get_string(key, fallback);
  return numbers(text);
}

std::vector<std::string> Parameters::unused() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : given_)
    if (!used_.count(k)) out.push_back(k);
  return out;
}

std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string config_hash(std::string_view experiment,
                        const std::map<std::string, std::string>& used) {
  std::string text = "experiment=" + std::string(experiment) + "\n";
  for (const auto& [k, v] : used) text += k + "=" + v + "\n";
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(text)));
  return buf;
}

// ---------------------------------------------------------------- specs

double parse_alpha_token(std::string_view token, std::size_t M) {
  const std::string t = trim(token);
  if (t == "alpha0" || t == "neutral") return neutral_alpha(M);
  if (t == "1/M") return 1.0 / static_cast<double>(M);
  auto v = numbers(t);
  if (v.size() != 1) throw ConfigError("bad alpha '" + t + "'");
  return v[0];
}

TraitSet parse_traits(std::string_view text) {
  auto v = numbers(text);
  std::sort(v.begin(), v.end());
  try {
    return TraitSet(std::move(v));
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
}

HeredityKernel parse_kernel_spec(std::string_view spec, std::size_t M) {
  const std::string s = trim(spec);
  const auto colon = s.find(':');
  const std::string kind = s.substr(0, colon);
  const std::string arg = colon == std::string::npos ? "" : s.substr(colon + 1);
  auto need_arg = [&] {
    if (arg.empty()) throw ConfigError("kernel spec '" + s + "' needs an argument");
  };

  if (kind == "uniform") return make_kernel_uniform(M);
  if (kind == "bimodal") {
    need_arg();
    auto k = numbers(arg);
    if (k.size() != 2) throw ConfigError("bimodal kernel expects k1,k2");
    if (M != 2) throw ConfigError("bimodal kernel needs exactly 2 traits");
    return make_kernel_bimodal(k[0], k[1]);
  }
  if (kind == "alpha") {
    need_arg();
    return make_kernel_alpha(M, parse_alpha_token(arg, M));
  }
  if (kind == "noheredity") {
    need_arg();
    auto w = numbers(arg);
    if (w.size() != M) throw ConfigError("noheredity kernel expects " + std::to_string(M) + " weights");
    return make_kernel_noheredity(w);
  }
  if (kind == "random") {
    need_arg();
    std::size_t used = 0;
    std::uint64_t seed = 0;
    try {
      seed = std::stoull(arg, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != arg.size() || used == 0) throw ConfigError("random kernel expects an integer seed");
    return make_kernel_random(M, seed);
  }
  if (kind == "matrix" || kind == "file") {
    need_arg();
    std::vector<std::string> rows;
    if (kind == "matrix") {
      rows = split(arg, ';');
    } else {
      std::ifstream in(arg);
      if (!in) throw ConfigError("cannot open kernel file '" + arg + "'");
      for (std::string line; std::getline(in, line);) {
        line = trim(line);
        if (!line.empty() && line.front() != '#') rows.push_back(line);
      }
    }
    if (rows.size() != M)
      throw ConfigError("kernel has " + std::to_string(rows.size()) + " rows, expected " + std::to_string(M));
    SquareMatrix m{M, {}};
    for (const auto& r : rows) {
      auto v = numbers(r);
      if (v.size() != M) throw ConfigError("kernel row '" + r + "' does not have " + std::to_string(M) + " entries");
      m.entries.insert(m.entries.end(), v.begin(), v.end());
    }
    return HeredityKernel(std::move(m));
  }
  throw ConfigError("unknown kernel spec '" + s + "'");
}

// ---------------------------------------------------------------- helpers

bool ExperimentResult::checks_passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
}

const std::vector<std::string>& experiment_ids() {
  static const std::vector<std::string> ids = {
      "fig2",          "fig3",           "fig4",           "fig5_heatmap",     "fig5_surfaces",
      "fig6_Mconvergence", "fig7_sigma_alpha", "fig8_neutrality", "figS1_fractions", "figS2_mitosis"};
  return ids;
}

namespace {

EigenSolverOptions solver_options(Parameters& p) {
  EigenSolverOptions o;
  o.tolerance = p.get_double("general.tol", 1e-10);
  o.max_iterations = p.get_uint("general.max_iterations", 1'000'000);
  try {
    o.method = parse_eigen_method(p.get_string("general.method", "renewal"));
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  return o;
}

// dx and x_max: general.* when given, otherwise "<prefix>.dx" / "<prefix>.xmax"
// with x_max where exp(-int_0^x beta) < 1e-12. K is rounded up to even.
SizeGrid experiment_grid(Parameters& p, const std::string& prefix, const DivisionRate& beta,
                         double default_dx) {
  const double dx = p.has("general.dx") ? p.get_double("general.dx", default_dx)
                                        : p.get_double(prefix + ".dx", default_dx);
  const double envelope = std::pow(12.0 * std::log(10.0) * beta.exponent / beta.beta,
                                   1.0 / beta.exponent);
  const double x_max = p.has("general.xmax") ? p.get_double("general.xmax", envelope)
                                             : p.get_double(prefix + ".xmax", envelope);
  if (!(dx > 0.0) || !(x_max > dx)) throw ConfigError("grid needs 0 < dx < xmax");
  auto K = static_cast<std::size_t>(std::ceil(x_max / dx - 1e-9));
  K += K % 2;
  return SizeGrid(dx, K);
}

DivisionRate rate(Parameters& p, const std::string& key, const std::string& fallback) {
  try {
    return parse_division_rate(p.get_string(key, fallback));
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
}

Fragmentation fragmentation(Parameters& p, const std::string& key, const std::string& fallback) {
  try {
    return parse_fragmentation(p.get_string(key, fallback));
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
}

std::vector<MeanKind> mean_kinds(Parameters& p, const std::string& key, const std::string& fallback) {
  std::vector<MeanKind> out;
  try {
    for (const auto& s : split(p.get_string(key, fallback), ',')) out.push_back(parse_mean_kind(s));
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  return out;
}

std::vector<std::size_t> sizes(Parameters& p, const std::string& key, const std::string& fallback) {
  std::vector<std::size_t> out;
  for (double m : p.get_list(key, fallback)) {
    if (!(m >= 1.0) || m != std::floor(m)) throw ConfigError(key + ": population sizes must be positive integers");
    out.push_back(static_cast<std::size_t>(m));
  }
  return out;
}

// n points spanning [lo, hi].
std::vector<double> linspace(double lo, double hi, std::size_t n) {
  if (n < 2) return {lo};
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i)
    out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  out.back() = hi;
  return out;
}

// Pairs "a,b;c,d" -> {{a,b},{c,d}}.
std::vector<std::pair<double, double>> pairs(const std::string& text) {
  std::vector<std::pair<double, double>> out;
  for (const auto& item : split(text, ';')) {
    auto v = numbers(item);
    if (v.size() != 2) throw ConfigError("expected 'a,b' pairs separated by ';', got '" + item + "'");
    out.emplace_back(v[0], v[1]);
  }
  return out;
}

struct Means {
  double a, g, h;
};

Means two_means(double x, double y) { return {0.5 * (x + y), std::sqrt(x * y), 2.0 * x * y / (x + y)}; }

// Runs body(i) for i in [0, n) on an OpenMP pool; the first exception is
// rethrown after the loop. Output order is fixed by the index.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
  std::exception_ptr error;
  const std::ptrdiff_t count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
#pragma omp critical(effgrow_parallel_for)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
}

void add_check(ExperimentResult& r, std::string name, bool passed, std::string detail) {
  if (!passed) r.warnings.push_back("check failed: " + name + " (" + detail + ")");
  r.checks.push_back({std::move(name), passed, std::move(detail)});
}

// Case A heterogeneous profile for one kernel; rows appended to `table`.
struct ProfilePoint {
  std::vector<std::vector<double>> values;
  std::vector<double> mass, mass_matrix;
  double lambda = 0.0;
};

ProfilePoint caseA_profile(const TraitSet& traits, const HeredityKernel& kernel, double beta,
                           Fragmentation frag, const SizeGrid& grid, const EigenSolverOptions& opt) {
  auto r = solve_heterogeneous(make_model(Growth::constant, {beta, 1}, frag, traits, kernel), grid, opt);
  auto m = dominant_eigentriplet(build_growth_matrix(traits, kernel, beta));
  return {std::move(r.eigen.profile.values), r.summary.fractions, m.fractions, r.eigen.lambda};
}

ProfilePoint caseB_profile(const TraitSet& traits, const HeredityKernel& kernel,
                           const DivisionRate& beta, const SizeGrid& grid) {
  auto prof = profiles_caseB_heterogeneous(traits, kernel, beta, grid);
  auto m = dominant_eigentriplet(build_growth_matrix(traits, kernel, 1.0), {}, ModelCase::B);
  ProfilePoint out;
  for (std::size_t i = 0; i < prof.types(); ++i) out.mass.push_back(prof.mass(i));
  out.values = std::move(prof.values);
  out.mass_matrix = m.fractions;
  out.lambda = m.lambda;
  return out;
}

// Long-format rows (label..., type, x, N, mass, mass_matrix) every `stride`
// nodes up to x_plot_max.
void profile_rows(csv::Table& t, const std::vector<std::string>& label, const ProfilePoint& p,
                  const SizeGrid& grid, std::size_t stride, double x_plot_max) {
  for (std::size_t i = 0; i < p.values.size(); ++i)
    for (std::size_t j = 0; j < grid.size() && grid.x(j) <= x_plot_max; j += stride) {
      auto row = label;
      row.push_back(std::to_string(i + 1));
      row.push_back(fmt(grid.x(j)));
      row.push_back(fmt(p.values[i][j]));
      row.push_back(fmt(p.mass[i]));
      row.push_back(fmt(p.mass_matrix[i]));
      t.add_row(std::move(row));
    }
}

}  // namespace

// ---------------------------------------------------------------- experiments

ExperimentResult run_fig2_profiles(Parameters& p) {
  ExperimentResult r{"fig2", {}, {}, {}, 0};
  const auto traits = parse_traits(p.get_string("fig2.traits", "0.5,2.5"));
  const auto kernel = parse_kernel_spec(p.get_string("fig2.kernel", "bimodal:0.3,0.5"), traits.size());
  const double beta = p.get_double("fig2.beta", 1.0);
  const auto frag = fragmentation(p, "fig2.fragmentation", "uniform");
  const auto grid = experiment_grid(p, "fig2", {beta, 1}, 0.01 / beta);
  const auto opt = solver_options(p);

  auto het = caseA_profile(traits, kernel, beta, frag, grid, opt);
  auto homo = frag == Fragmentation::uniform ? profile_uniform_division(beta, grid)
                                             : profile_mitosis_series(beta, grid);
  auto matrix = dominant_eigentriplet(build_growth_matrix(traits, kernel, beta));
  const std::size_t M = traits.size();

  std::vector<std::string> header{"x"};
  for (std::size_t i = 1; i <= M; ++i) header.push_back("N_" + std::to_string(i));
  header.push_back("N_v");
  header.push_back("mean_N");
  csv::Table profiles(header);
  profiles.preamble = {"N_i normalized to unit mass; N_v homogeneous profile; mean_N = sum_i mass_i N_i",
                       "lambda_numeric=" + fmt(het.lambda), "lambda_matrix=" + fmt(matrix.lambda),
                       "v_eff=" + fmt(matrix.effective_trait)};
  for (std::size_t j = 0; j < grid.size(); ++j) {
    std::vector<std::string> row{fmt(grid.x(j))};
    double total = 0.0;
    for (std::size_t i = 0; i < M; ++i) {
      row.push_back(fmt(het.values[i][j] / het.mass[i]));
      total += het.values[i][j];
    }
    row.push_back(fmt(homo.values[0][j]));
    row.push_back(fmt(total));
    profiles.add_row(std::move(row));
  }

  csv::Table masses({"type", "trait", "mass", "mass_matrix"});
  double sum = 0.0;
  for (std::size_t i = 0; i < M; ++i) {
    masses.add_row({std::to_string(i + 1), fmt(traits[i]), fmt(het.mass[i]), fmt(matrix.fractions[i])});
    sum += het.mass[i];
  }
  add_check(r, "masses sum to 1", std::abs(sum - 1.0) < 1e-10, "sum=" + fmt(sum));
  add_check(r, "numeric lambda matches matrix", std::abs(het.lambda - matrix.lambda) < 5e-3,
            "numeric=" + fmt(het.lambda) + " matrix=" + fmt(matrix.lambda));
  r.files.push_back({"fig2_profiles.csv", std::move(profiles)});
  r.files.push_back({"fig2_masses.csv", std::move(masses)});
  return r;
}

ExperimentResult run_fig3_sweep(Parameters& p) {
  ExperimentResult r{"fig3", {}, {}, {}, 0};
  const std::size_t points = p.get_uint("fig3.points", 201);
  const double lo = p.get_double("fig3.v_star_min", 1.0);
  const double hi = p.get_double("fig3.v_star_max", 8.0);
  const double fixed = p.get_double("fig3.fixed_trait", 4.0);
  const auto kernels = pairs(p.get_string("fig3.kernels", "0.5,0.5;0.25,0.25;0.2,0.2;0.8,0.8;0.2,0.8;0.8,0.2"));
  if (!(lo > 0.0) || !(hi > lo) || points < 2) throw ConfigError("fig3: need 0 < v_star_min < v_star_max, points >= 2");

  auto grid = linspace(lo, hi, points);
  // The fixed trait itself is always a sweep point (equal traits).
  if (fixed >= lo && fixed <= hi && std::find(grid.begin(), grid.end(), fixed) == grid.end()) {
    grid.push_back(fixed);
    std::sort(grid.begin(), grid.end());
  }

  csv::Table t({"v_star", "k1", "k2", "v_eff", "m_A", "m_G", "m_H"});
  t.preamble = {"traits (min(fixed, v_star), max(fixed, v_star)), fixed=" + fmt(fixed)};
  bool bounded = true;
  for (auto [k1, k2] : kernels)
    for (double vs : grid) {
      const double v1 = std::min(fixed, vs), v2 = std::max(fixed, vs);
      const double v = effective_trait_bimodal(v1, v2, k1, k2);
      const auto m = two_means(v1, v2);
      bounded = bounded && v >= v1 * (1 - 1e-12) && v <= v2 * (1 + 1e-12);
      t.add_row({fmt(vs), fmt(k1), fmt(k2), fmt(v), fmt(m.a), fmt(m.g), fmt(m.h)});
    }
  add_check(r, "v_eff within trait range", bounded, "all rows");
  r.files.push_back({"fig3.csv", std::move(t)});
  return r;
}

namespace {

ExperimentResult k_surface_experiment(Parameters& p, const std::string& id,
                                      std::vector<std::pair<std::string, std::function<std::pair<double, double>(double)>>> panels,
                                      const std::string& default_case) {
  ExperimentResult r{id, {}, {}, {}, 0};
  const auto traits = parse_traits(p.get_string(id + ".traits", "0.5,2.5"));
  if (traits.size() != 2) throw ConfigError(id + ": two traits expected");
  const std::size_t points = p.get_uint(id + ".k_points", 50);
  const auto ks = linspace(p.get_double(id + ".k_min", 0.01), p.get_double(id + ".k_max", 0.99), points);
  const std::size_t stride = std::max<std::uint64_t>(1, p.get_uint(id + ".x_stride", 5));
  const double x_plot_max = p.get_double(id + ".x_plot_max", 10.0);
  const ModelCase mcase = [&] {
    try {
      return parse_model_case(p.get_string(id + ".case", default_case));
    } catch (const DomainError& e) {
      throw ConfigError(e.what());
    }
  }();
  if (mcase == ModelCase::custom) throw ConfigError(id + ": case must be A or B");

  DivisionRate beta{1.0, 1};
  Fragmentation frag = Fragmentation::uniform;
  EigenSolverOptions opt;
  if (mcase == ModelCase::A) {
    beta.beta = p.get_double(id + ".beta", 1.0);
    frag = fragmentation(p, id + ".fragmentation", "uniform");
    opt = solver_options(p);
  } else {
    beta = rate(p, id + ".beta", "const:1");
  }
  const auto grid = experiment_grid(p, id, beta, 0.01 / beta.beta);

  struct Job {
    std::string panel;
    double sweep, k1, k2;
  };
  std::vector<Job> jobs;
  for (const auto& [name, kernel_of] : panels)
    for (double k : ks) {
      auto [k1, k2] = kernel_of(k);
      jobs.push_back({name, k, k1, k2});
    }
  std::vector<ProfilePoint> results(jobs.size());
  parallel_for(jobs.size(), [&](std::size_t n) {
    const auto kernel = make_kernel_bimodal(jobs[n].k1, jobs[n].k2);
    results[n] = mcase == ModelCase::A ? caseA_profile(traits, kernel, beta.beta, frag, grid, opt)
                                       : caseB_profile(traits, kernel, beta, grid);
  });

  csv::Table t({"panel", "sweep_param", "k1", "k2", "type", "x", "N", "mass", "mass_matrix"});
  t.preamble = {"case=" + std::string(to_string(mcase)), "traits=" + csv::join(traits.values(), ' '),
                "beta=" + beta.describe(), "x_stride=" + std::to_string(stride),
                "mass and mass_matrix: numeric and matrix fractions int N_i"};
  double worst_mass = 0.0, worst_sum = 0.0;
  for (std::size_t n = 0; n < jobs.size(); ++n) {
    profile_rows(t, {jobs[n].panel, fmt(jobs[n].sweep), fmt(jobs[n].k1), fmt(jobs[n].k2)}, results[n], grid, stride, x_plot_max);
    double sum = 0.0;
    for (std::size_t i = 0; i < 2; ++i) {
      worst_mass = std::max(worst_mass, std::abs(results[n].mass[i] - results[n].mass_matrix[i]));
      sum += results[n].mass[i];
    }
    worst_sum = std::max(worst_sum, std::abs(sum - 1.0));
  }
  add_check(r, "masses sum to 1", worst_sum < 1e-10, "max deviation " + fmt(worst_sum));
  add_check(r, "masses match the matrix fractions", worst_mass < 5e-3, "max deviation " + fmt(worst_mass));
  r.files.push_back({id + ".csv", std::move(t)});
  return r;
}

}  // namespace

ExperimentResult run_fig4_surfaces(Parameters& p) {
  return k_surface_experiment(
      p, "fig4",
      {{"k2=k1", [](double k) { return std::pair{k, k}; }},
       {"k2=1-k1", [](double k) { return std::pair{k, 1.0 - k}; }}},
      "A");
}

ExperimentResult run_figS1_fractions(Parameters& p) {
  std::vector<std::pair<std::string, std::function<std::pair<double, double>(double)>>> panels;
  for (const auto& spec : split(p.get_string("figS1_fractions.panels", "k2=0.2;k2=0.8;k1=0.2;k1=0.8"), ';')) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos) throw ConfigError("figS1 panel '" + spec + "' must look like k2=0.2");
    const std::string which = trim(spec.substr(0, eq));
    auto v = numbers(spec.substr(eq + 1));
    if (v.size() != 1 || (which != "k1" && which != "k2"))
      throw ConfigError("figS1 panel '" + spec + "' must fix k1 or k2");
    const double fixed = v[0];
    if (which == "k2")
      panels.emplace_back(spec, [fixed](double k) { return std::pair{k, fixed}; });
    else
      panels.emplace_back(spec, [fixed](double k) { return std::pair{fixed, k}; });
  }
  return k_surface_experiment(p, "figS1_fractions", std::move(panels), "A");
}

ExperimentResult run_fig5_heatmap(Parameters& p) {
  ExperimentResult r{"fig5_heatmap", {}, {}, {}, 0};
  const auto traits = parse_traits(p.get_string("fig5_heatmap.traits", "0.5,2.5"));
  if (traits.size() != 2) throw ConfigError("fig5_heatmap: two traits expected");
  const std::size_t steps = p.get_uint("fig5_heatmap.steps", 99);
  csv::Table t({"k1", "k2", "v_eff"});
  t.preamble = {"traits=" + csv::join(traits.values(), ' ')};
  bool bounded = true;
  for (std::size_t a = 1; a <= steps; ++a)
    for (std::size_t b = 1; b <= steps; ++b) {
      const double k1 = static_cast<double>(a) / static_cast<double>(steps + 1);
      const double k2 = static_cast<double>(b) / static_cast<double>(steps + 1);
      const double v = effective_trait_bimodal(traits[0], traits[1], k1, k2);
      bounded = bounded && v >= traits[0] * (1 - 1e-12) && v <= traits[1] * (1 + 1e-12);
      t.add_row({fmt(k1), fmt(k2), fmt(v)});
    }
  add_check(r, "v_eff within trait range", bounded, "all rows");
  r.files.push_back({"fig5_heatmap.csv", std::move(t)});
  return r;
}

ExperimentResult run_fig5_surfaces(Parameters& p) {
  ExperimentResult r{"fig5_surfaces", {}, {}, {}, 0};
  const auto trait_pairs = pairs(p.get_string("fig5_surfaces.trait_pairs", "0.5,2.5;1,4;1,7"));
  const std::size_t steps = p.get_uint("fig5_surfaces.steps", 49);
  csv::Table t({"v1", "v2", "k1", "k2", "v_eff", "m_A", "m_G", "m_H"});
  bool bounded = true;
  for (auto [v1, v2] : trait_pairs) {
    if (!(v1 > 0.0) || !(v2 > v1)) throw ConfigError("fig5_surfaces: trait pairs need 0 < v1 < v2");
    const auto m = two_means(v1, v2);
    for (std::size_t a = 1; a <= steps; ++a)
      for (std::size_t b = 1; b <= steps; ++b) {
        const double k1 = static_cast<double>(a) / static_cast<double>(steps + 1);
        const double k2 = static_cast<double>(b) / static_cast<double>(steps + 1);
        const double v = effective_trait_bimodal(v1, v2, k1, k2);
        bounded = bounded && v >= v1 * (1 - 1e-12) && v <= v2 * (1 + 1e-12);
        t.add_row({fmt(v1), fmt(v2), fmt(k1), fmt(k2), fmt(v), fmt(m.a), fmt(m.g), fmt(m.h)});
      }
  }
  add_check(r, "v_eff within trait range", bounded, "all rows");
  r.files.push_back({"fig5_surfaces.csv", std::move(t)});
  return r;
}

ExperimentResult run_fig6_Mconvergence(Parameters& p) {
  ExperimentResult r{"fig6_Mconvergence", {}, {}, {}, 0};
  const std::size_t M_min = p.get_uint("fig6_Mconvergence.M_min", 2);
  const std::size_t M_max = p.get_uint("fig6_Mconvergence.M_max", 60);
  const double lo = p.get_double("fig6_Mconvergence.trait_min", 1.0);
  const double hi = p.get_double("fig6_Mconvergence.trait_max", 7.0);
  const auto alphas = p.get_list("fig6_Mconvergence.alphas", "0.25,0.75");
  const std::uint64_t seed = p.get_uint("general.seed", 1);
  if (M_min < 2 || M_max < M_min || !(lo > 0.0) || !(hi > lo)) throw ConfigError("fig6: bad M or trait range");

  std::vector<std::string> ids{"uniform"};
  for (double a : alphas) ids.push_back("alpha=" + fmt(a));
  ids.push_back("random:" + std::to_string(seed));

  csv::Table t({"M", "kernel_id", "v_eff", "m_A", "m_G", "m_H"});
  t.preamble = {"traits equally spaced on [" + fmt(lo) + ", " + fmt(hi) + "]"};
  std::map<std::string, std::map<std::size_t, double>> curve;
  bool bounded = true;
  for (std::size_t M = M_min; M <= M_max; ++M) {
    const auto traits = make_trait_set(M, hi - lo, 0.5 * (lo + hi), MeanKind::arithmetic);
    const double mA = mean(traits, MeanKind::arithmetic), mG = mean(traits, MeanKind::geometric),
                 mH = mean(traits, MeanKind::harmonic);
    for (std::size_t k = 0; k < ids.size(); ++k) {
      double v;
      if (k == 0)
        v = solve_alpha_family(traits, 1.0 / static_cast<double>(M)).effective_trait;
      else if (k <= alphas.size())
        v = solve_alpha_family(traits, alphas[k - 1]).effective_trait;
      else
        v = dominant_eigentriplet(build_growth_matrix(traits, make_kernel_random(M, seed), 1.0)).effective_trait;
      curve[ids[k]][M] = v;
      bounded = bounded && v >= lo * (1 - 1e-10) && v <= hi * (1 + 1e-10);
      t.add_row({std::to_string(M), ids[k], fmt(v), fmt(mA), fmt(mG), fmt(mH)});
    }
  }
  add_check(r, "v_eff within trait range", bounded, "all rows");
  if (M_min <= 50 && M_max >= 60) {
    for (const auto& id : ids) {
      const double d = std::abs(curve[id][60] - curve[id][50]);
      add_check(r, "plateau " + id, d < 0.01, "|v(60) - v(50)| = " + fmt(d));
    }
  }
  r.files.push_back({"fig6_Mconvergence.csv", std::move(t)});
  return r;
}

namespace {

std::vector<double> sigma_grid(Parameters& p, const std::string& id, double default_max, std::size_t default_points) {
  const std::size_t n = p.get_uint(id + ".sigma_points", default_points);
  const double max = p.get_double(id + ".sigma_max", default_max);
  if (n < 2 || !(max > 0.0)) throw ConfigError(id + ": need sigma_points >= 2 and sigma_max > 0");
  return linspace(0.0, max, n);
}

const std::string kSkipped = "skipped: sigma outside admissible range";

}  // namespace

ExperimentResult run_fig7_sigma_alpha(Parameters& p) {
  ExperimentResult r{"fig7_sigma_alpha", {}, {}, {}, 0};
  const std::string id = "fig7_sigma_alpha";
  const auto Ms = sizes(p, id + ".M", "10,100");
  const auto kinds = mean_kinds(p, id + ".mean_kinds", "arithmetic,geometric,harmonic");
  const auto alpha_tokens = split(p.get_string(id + ".alphas", "1/M,0.2,0.4,alpha0,0.7,0.9"), ',');
  const double vbar = p.get_double(id + ".vbar", 4.0);
  const auto sigmas = sigma_grid(p, id, 8.0, 41);

  csv::Table t({"M", "alpha", "mean_kind", "sigma", "v_eff", "gamma", "status"});
  double neutral_err = 0.0;
  bool neutral_seen = false, monotone = true;
  std::size_t skipped = 0;
  for (std::size_t M : Ms) {
    if (M < 2) throw ConfigError(id + ": M must be >= 2");
    std::vector<double> alphas;
    for (const auto& tok : alpha_tokens) alphas.push_back(parse_alpha_token(tok, M));
    for (MeanKind kind : kinds) {
      // v_eff per (sigma, alpha) for the monotonicity check.
      std::map<double, std::map<double, double>> by_sigma;
      for (double alpha : alphas)
        for (double sigma : sigmas) {
          const std::vector<std::string> key{std::to_string(M), fmt(alpha), std::string(to_string(kind)), fmt(sigma)};
          auto row = key;
          if (sigma >= max_sigma(vbar, kind)) {
            row.insert(row.end(), {fmt(kNaN), fmt(kNaN), kSkipped});
            t.add_row(std::move(row));
            ++skipped;
            continue;
          }
          double v = vbar, gamma = kNaN;
          if (sigma > 0.0) {
            const auto traits = make_trait_set(M, sigma, vbar, kind);
            v = solve_alpha_family(traits, alpha).effective_trait;
            if (alpha > 0.0 && alpha < 1.0) {
              std::vector<double> law(M, 1.0 / static_cast<double>(M));
              gamma = pearson_correlation_alpha(M, alpha, law, traits).gamma;
            }
          }
          by_sigma[sigma][alpha] = v;
          if (kind == MeanKind::arithmetic && std::abs(alpha - neutral_alpha(M)) < 1e-15) {
            neutral_seen = true;
            neutral_err = std::max(neutral_err, std::abs(v - vbar));
          }
          row.insert(row.end(), {fmt(v), fmt(gamma), "ok"});
          t.add_row(std::move(row));
        }
      if (kind == MeanKind::arithmetic)
        for (const auto& [sigma, line] : by_sigma) {
          double prev = -std::numeric_limits<double>::infinity();
          for (const auto& [alpha, v] : line) {
            monotone = monotone && v >= prev - 1e-12 * vbar;
            prev = v;
          }
        }
    }
  }
  if (skipped) r.warnings.push_back(std::to_string(skipped) + " rows skipped: sigma outside admissible range");
  if (neutral_seen)
    add_check(r, "neutral alpha keeps v_eff at the arithmetic mean", neutral_err <= 1e-9,
              "max |v_eff - vbar| = " + fmt(neutral_err));
  add_check(r, "v_eff nondecreasing in alpha (arithmetic)", monotone, "all sigma");
  r.files.push_back({id + ".csv", std::move(t)});
  return r;
}

ExperimentResult run_fig8_neutrality(Parameters& p) {
  ExperimentResult r{"fig8_neutrality", {}, {}, {}, 0};
  const std::string id = "fig8_neutrality";
  const auto Ms = sizes(p, id + ".M", "10,100");
  const auto specs = split(p.get_string(id + ".kernels", "uniform;alpha:alpha0;random;alpha:0.2;alpha:0.9"), ';');
  const double vbar = p.get_double(id + ".vbar", 4.0);
  const auto sigmas = sigma_grid(p, id, 7.8, 40);
  const std::uint64_t seed = p.get_uint("general.seed", 1);

  csv::Table t({"M", "kernel_id", "alpha", "sigma", "v_eff", "m_A", "status"});
  double neutral_err = 0.0;
  bool neutral_seen = false;
  for (std::size_t M : Ms) {
    if (M < 2) throw ConfigError(id + ": M must be >= 2");
    for (const auto& spec0 : specs) {
      const std::string spec = spec0 == "random" ? "random:" + std::to_string(seed) : spec0;
      const auto kernel = parse_kernel_spec(spec, M);
      double alpha = kNaN;
      if (spec.rfind("alpha:", 0) == 0) alpha = parse_alpha_token(spec.substr(6), M);
      if (spec == "uniform") alpha = 1.0 / static_cast<double>(M);
      const bool neutral = std::abs(alpha - neutral_alpha(M)) < 1e-15;
      for (double sigma : sigmas) {
        std::vector<std::string> row{std::to_string(M), spec, fmt(alpha), fmt(sigma)};
        if (sigma >= max_sigma(vbar, MeanKind::arithmetic)) {
          row.insert(row.end(), {fmt(kNaN), fmt(vbar), kSkipped});
          t.add_row(std::move(row));
          r.warnings.push_back("M=" + std::to_string(M) + " " + spec + " sigma=" + fmt(sigma) + ": " + kSkipped);
          continue;
        }
        double v = vbar;
        if (sigma > 0.0) {
          const auto traits = make_trait_set(M, sigma, vbar, MeanKind::arithmetic);
          v = std::isnan(alpha) ? dominant_eigentriplet(build_growth_matrix(traits, kernel, 1.0)).effective_trait
                                : solve_alpha_family(traits, alpha).effective_trait;
        }
        if (neutral) {
          neutral_seen = true;
          neutral_err = std::max(neutral_err, std::abs(v - vbar));
        }
        row.insert(row.end(), {fmt(v), fmt(vbar), "ok"});
        t.add_row(std::move(row));
      }
    }
  }
  if (neutral_seen)
    add_check(r, "neutral alpha keeps v_eff at the arithmetic mean", neutral_err <= 1e-9,
              "max |v_eff - vbar| = " + fmt(neutral_err));
  r.files.push_back({id + ".csv", std::move(t)});
  return r;
}

ExperimentResult run_figS2_mitosis(Parameters& p) {
  ExperimentResult r{"figS2_mitosis", {}, {}, {}, 0};
  const std::string id = "figS2_mitosis";
  std::vector<DivisionRate> betas;
  try {
    for (const auto& s : split(p.get_string(id + ".betas", "const:1;pow:2"), ';')) betas.push_back(parse_division_rate(s));
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  const std::size_t M = p.get_uint(id + ".M", 10);
  const auto kinds = mean_kinds(p, id + ".mean_kinds", "arithmetic,geometric,harmonic");
  const auto alpha_tokens = split(p.get_string(id + ".alphas", "1/M,0.2,0.4,alpha0,0.7,0.9"), ',');
  const double vbar = p.get_double(id + ".vbar", 4.0);
  const auto sigmas = sigma_grid(p, id, 6.0, 13);
  const auto opt = solver_options(p);
  if (M < 2) throw ConfigError(id + ": M must be >= 2");
  std::vector<double> alphas;
  for (const auto& tok : alpha_tokens) alphas.push_back(parse_alpha_token(tok, M));

  std::vector<SizeGrid> grids;
  for (const auto& b : betas) grids.push_back(experiment_grid(p, id + "." + b.describe(), b, 0.02));

  struct Job {
    std::size_t beta;
    MeanKind kind;
    double sigma, alpha;
  };
  struct Outcome {
    double lambda = kNaN, residual = kNaN, vmin = kNaN, vmax = kNaN;
    std::size_t iterations = 0;
    std::string status = "ok";
  };
  std::vector<Job> jobs;
  for (std::size_t b = 0; b < betas.size(); ++b)
    for (MeanKind kind : kinds)
      for (double alpha : alphas)
        for (double sigma : sigmas) jobs.push_back({b, kind, sigma, alpha});

  std::vector<Outcome> out(jobs.size());
  parallel_for(jobs.size(), [&](std::size_t n) {
    const auto& job = jobs[n];
    auto& o = out[n];
    if (job.sigma >= max_sigma(vbar, job.kind)) {
      o.status = kSkipped;
      return;
    }
    // sigma = 0 is the homogeneous population (a single trait).
    const TraitSet traits = job.sigma > 0.0 ? make_trait_set(M, job.sigma, vbar, job.kind) : TraitSet({vbar});
    const auto kernel = job.sigma > 0.0 ? make_kernel_alpha(M, job.alpha) : make_kernel_uniform(1);
    o.vmin = traits.min();
    o.vmax = traits.max();
    try {
      auto res = solve_heterogeneous(make_model(Growth::linear, betas[job.beta], Fragmentation::mitosis, traits, kernel),
                                     grids[job.beta], opt);
      o.lambda = res.eigen.lambda;
      o.residual = res.eigen.residual;
      o.iterations = res.eigen.iterations;
    } catch (const ConvergenceError& e) {
      o.residual = e.last_residual();
      o.status = std::string("convergence_error: ") + e.what();
    }
  });

  csv::Table t({"beta", "mean_kind", "sigma", "alpha", "lambda", "v_eff_reported", "residual", "iterations", "status"});
  t.preamble = {"tau=x, equal mitosis, M=" + std::to_string(M) + ", vbar=" + fmt(vbar),
                "method=" + std::string(to_string(opt.method))};
  for (std::size_t b = 0; b < betas.size(); ++b)
    t.preamble.push_back("grid " + betas[b].describe() + ": dx=" + fmt(grids[b].dx()) + " x_max=" + fmt(grids[b].x_max()));
  double homog_err = 0.0;
  bool bounded = true;
  for (std::size_t n = 0; n < jobs.size(); ++n) {
    const auto& job = jobs[n];
    const auto& o = out[n];
    if (o.status.rfind("convergence_error", 0) == 0) {
      ++r.convergence_failures;
      r.warnings.push_back("beta=" + betas[job.beta].describe() + " sigma=" + fmt(job.sigma) +
                           " alpha=" + fmt(job.alpha) + ": " + o.status);
    }
    if (o.status == "ok") {
      if (job.sigma == 0.0) homog_err = std::max(homog_err, std::abs(o.lambda - vbar) / vbar);
      bounded = bounded && o.lambda >= o.vmin * (1 - 1e-3) && o.lambda <= o.vmax * (1 + 1e-3);
    }
    t.add_row({betas[job.beta].describe(), std::string(to_string(job.kind)), fmt(job.sigma), fmt(job.alpha),
               fmt(o.lambda), fmt(o.lambda), fmt(o.residual), std::to_string(o.iterations), o.status});
  }
  if (std::find(sigmas.begin(), sigmas.end(), 0.0) != sigmas.end())
    add_check(r, "homogeneous rows give lambda = vbar", homog_err < 1e-3, "max relative error " + fmt(homog_err));
  add_check(r, "lambda within trait range", bounded, "converged rows");
  r.files.push_back({id + ".csv", std::move(t)});
  return r;
}

ExperimentResult run_experiment(std::string_view id, Parameters& params) {
  params.get_uint("general.seed", 1);
  if (id == "fig2") return run_fig2_profiles(params);
  if (id == "fig3") return run_fig3_sweep(params);
  if (id == "fig4") return run_fig4_surfaces(params);
  if (id == "fig5_heatmap") return run_fig5_heatmap(params);
  if (id == "fig5_surfaces") return run_fig5_surfaces(params);
  if (id == "fig6_Mconvergence") return run_fig6_Mconvergence(params);
  if (id == "fig7_sigma_alpha") return run_fig7_sigma_alpha(params);
  if (id == "fig8_neutrality") return run_fig8_neutrality(params);
  if (id == "figS1_fractions") return run_figS1_fractions(params);
  if (id == "figS2_mitosis") return run_figS2_mitosis(params);
  throw ConfigError("unknown experiment '" + std::string(id) + "'");
}

std::filesystem::path write_outputs(const ExperimentResult& result, const Parameters& params,
                                    const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto& used = params.used();
  const std::string hash = config_hash(result.id, used);
  auto seed = used.find("general.seed");

  nlohmann::ordered_json manifest;
  manifest["experiment"] = result.id;
  manifest["config_hash"] = hash;
  manifest["seed"] = seed == used.end() ? "" : seed->second;
  manifest["parameters"] = nlohmann::json(used);
  manifest["files"] = nlohmann::json::array();
  for (const auto& f : result.files) {
    csv::Table t = f.table;
    t.preamble.insert(t.preamble.begin(), {"experiment=" + result.id, "config_hash=" + hash});
    const std::string text = t.str();
    std::ofstream out(dir / f.name, std::ios::binary);
    out << text;
    if (!out) throw std::runtime_error("cannot write " + (dir / f.name).string());
    char h[17];
    std::snprintf(h, sizeof h, "%016llx", static_cast<unsigned long long>(fnv1a64(text)));
    manifest["files"].push_back({{"name", f.name}, {"rows", t.rows().size()}, {"columns", t.header()},
                                 {"fnv1a64", h}, {"config_hash", hash}});
  }
  manifest["checks"] = nlohmann::json::array();
  for (const auto& c : result.checks)
    manifest["checks"].push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
  auto warnings = result.warnings;
  for (const auto& k : params.unused()) warnings.push_back("unused parameter " + k);
  manifest["warnings"] = warnings;
  manifest["convergence_failures"] = result.convergence_failures;

  const auto path = dir / (result.id + "_manifest.json");
  std::ofstream out(path, std::ios::binary);
  out << manifest.dump(2) << '\n';
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return path;
}

}  // namespace effgrow
