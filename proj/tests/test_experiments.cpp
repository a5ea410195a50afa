#include "doctest.h"

#include <omp.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "effgrow/errors.hpp"
#include "effgrow/experiments.hpp"
#include "effgrow/spectral.hpp"

using namespace effgrow;
namespace fs = std::filesystem;

namespace {

// Cell access by column name.
struct View {
  const csv::Table& t;

  double num(std::size_t row, std::string_view col) const { return std::stod(t.rows()[row][t.column(col)]); }
  const std::string& str(std::size_t row, std::string_view col) const { return t.rows()[row][t.column(col)]; }
  std::size_t size() const { return t.rows().size(); }
};

const ExperimentCheck* find_check(const ExperimentResult& r, std::string_view prefix) {
  for (const auto& c : r.checks)
    if (c.name.rfind(prefix, 0) == 0) return &c;
  return nullptr;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("effgrow_test_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("FNV-1a reference vectors") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("INI parameters record every value used") {
  std::istringstream ini("[general]\nseed = 7\n[fig3]\npoints=11\ntypo = 1\n");
  auto p = Parameters::from_ini(ini);
  CHECK(p.get_uint("general.seed", 1) == 7);
  CHECK(p.get_uint("fig3.points", 201) == 11);
  CHECK(p.get_double("fig3.v_star_min", 1.0) == 1.0);
  CHECK(p.used().at("fig3.v_star_min") == "1");
  CHECK(p.unused() == std::vector<std::string>{"fig3.typo"});
  const auto h = config_hash("fig3", p.used());
  CHECK(h.size() == 16);
  CHECK(h != config_hash("fig4", p.used()));

  Parameters bad;
  bad.set("a.n", "-3");
  CHECK_THROWS_AS(bad.get_uint("a.n", 1), ConfigError);
  bad.set("a.x", "1,2");
  CHECK_THROWS_AS(bad.get_double("a.x", 1), ConfigError);
  std::istringstream broken("[general\nseed=1\n");
  CHECK_THROWS_AS(Parameters::from_ini(broken), ConfigError);
}

TEST_CASE("kernel specs") {
  CHECK(parse_kernel_spec("uniform", 3) == make_kernel_uniform(3));
  CHECK(parse_kernel_spec("bimodal:0.3,0.5", 2) == make_kernel_bimodal(0.3, 0.5));
  CHECK(parse_kernel_spec("alpha:alpha0", 10) == make_kernel_alpha(10, 0.55));
  CHECK(parse_kernel_spec("alpha:1/M", 4) == make_kernel_uniform(4));
  CHECK(parse_kernel_spec("random:5", 4) == make_kernel_random(4, 5));
  const double w[] = {0.2, 0.8};
  CHECK(parse_kernel_spec("noheredity:0.2,0.8", 2) == make_kernel_noheredity(w));
  CHECK(parse_kernel_spec("matrix:0.7,0.3;0.5,0.5", 2) == make_kernel_bimodal(0.3, 0.5));

  auto file = scratch("kernel.csv");
  std::ofstream(file) << "# rows\n0.7,0.3\n0.5, 0.5\n";
  CHECK(parse_kernel_spec("file:" + file.string(), 2) == make_kernel_bimodal(0.3, 0.5));
  fs::remove(file);

  CHECK_THROWS_AS(parse_kernel_spec("bimodal:0.3,0.5", 3), ConfigError);
  CHECK_THROWS_AS(parse_kernel_spec("alpha", 3), ConfigError);
  CHECK_THROWS_AS(parse_kernel_spec("random:x", 3), ConfigError);
  CHECK_THROWS_AS(parse_kernel_spec("matrix:1,0", 2), ConfigError);
  CHECK_THROWS_AS(parse_kernel_spec("gaussian", 2), ConfigError);
  CHECK_THROWS_AS(parse_kernel_spec("matrix:1,0;1,0", 2), DomainError);  // reducible
  CHECK(parse_traits("2.5, 0.5") == TraitSet({0.5, 2.5}));
  CHECK_THROWS_AS(parse_traits("1,1"), ConfigError);
}

TEST_CASE("fig3 rows at the mean coincidences") {
  Parameters p;
  auto r = run_experiment("fig3", p);
  View v{r.files.at(0).table};
  CHECK(v.size() == 6 * 202);
  int found = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double vs = v.num(i, "v_star"), k1 = v.num(i, "k1"), k2 = v.num(i, "k2"), ve = v.num(i, "v_eff");
    if (k1 == 0.5 && k2 == 0.5 && vs == 4.0) found += ve == doctest::Approx(4.0).epsilon(1e-14);
    if (k1 == 0.5 && k2 == 0.5 && vs == 1.0) found += ve == doctest::Approx(2.0).epsilon(1e-13);
    if (k1 == 0.25 && k2 == 0.25 && vs == 8.0) found += ve == doctest::Approx(6.0).epsilon(1e-13);
    CHECK(ve >= std::min(vs, 4.0) * (1 - 1e-12));
    CHECK(ve <= std::max(vs, 4.0) * (1 + 1e-12));
  }
  CHECK(found == 3);
  CHECK(r.checks_passed());
}

TEST_CASE("fig5 heatmap examples") {
  Parameters p;
  auto r = run_experiment("fig5_heatmap", p);
  View v{r.files.at(0).table};
  CHECK(v.size() == 99 * 99);
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double k1 = v.num(i, "k1"), k2 = v.num(i, "k2"), ve = v.num(i, "v_eff");
    if (std::abs(k2 - 0.01) < 1e-12) CHECK(std::abs(ve - 2.5) < 0.05);
    if (std::abs(k1 - 0.5) < 1e-12 && std::abs(k2 - 0.5) < 1e-12) CHECK(ve == doctest::Approx(std::sqrt(1.25)).epsilon(1e-13));
    // k1 = 0.01 is still 0.06 above the k1 -> 0 limit max(v1, (1 - 2 k2) v2) = 0.5.
    if (std::abs(k1 - 0.01) < 1e-12 && std::abs(k2 - 0.45) < 1e-12) {
      CHECK(ve > bimodal_limit_k1_to_zero(0.5, 2.5, 0.45));
      CHECK(ve - bimodal_limit_k1_to_zero(0.5, 2.5, 0.45) < 0.1);
    }
  }
}

TEST_CASE("fig6 M sweep") {
  Parameters p;
  auto r = run_experiment("fig6_Mconvergence", p);
  View v{r.files.at(0).table};
  double uniform2 = 0, uniform60 = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    CHECK(v.num(i, "v_eff") >= 1.0);
    CHECK(v.num(i, "v_eff") <= 7.0);
    if (v.str(i, "kernel_id") == "uniform" && v.str(i, "M") == "2") uniform2 = v.num(i, "v_eff");
    if (v.str(i, "kernel_id") == "uniform" && v.str(i, "M") == "60") uniform60 = v.num(i, "v_eff");
  }
  CHECK(uniform2 == doctest::Approx(std::sqrt(7.0)).epsilon(1e-12));
  CHECK(std::abs(uniform60 - uniform2) > 0.1);
  // Deterministic families reach the plateau; the random one is reported.
  CHECK(find_check(r, "plateau uniform")->passed);
  CHECK(find_check(r, "plateau alpha=0.25")->passed);
  CHECK(find_check(r, "plateau alpha=0.75")->passed);
  CHECK(find_check(r, "plateau random:1") != nullptr);
}

TEST_CASE("fig7 neutrality, monotonicity and skipped rows") {
  Parameters p;
  p.set("fig7_sigma_alpha.sigma_points", "9");
  auto r = run_experiment("fig7_sigma_alpha", p);
  View v{r.files.at(0).table};
  std::size_t skipped = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v.str(i, "status") != "ok") {
      ++skipped;
      CHECK(v.str(i, "mean_kind") == "arithmetic");
      CHECK(v.num(i, "sigma") >= 8.0);
      continue;
    }
    if (v.num(i, "sigma") == 0.0) CHECK(v.num(i, "v_eff") == 4.0);
    const std::size_t M = std::stoul(v.str(i, "M"));
    if (v.str(i, "mean_kind") == "arithmetic" && v.num(i, "alpha") == neutral_alpha(M))
      CHECK(std::abs(v.num(i, "v_eff") - 4.0) <= 1e-9);
    if (v.num(i, "sigma") > 0 && v.num(i, "alpha") > 0)
      CHECK(v.num(i, "gamma") == doctest::Approx((v.num(i, "alpha") * M - 1) / (M - 1)).epsilon(1e-10));
  }
  CHECK(skipped == 2 * 6);
  CHECK(r.checks_passed());
  CHECK(find_check(r, "neutral alpha") != nullptr);
}

TEST_CASE("fig8 kernels including random") {
  Parameters p;
  p.set("fig8_neutrality.sigma_points", "6");
  p.set("fig8_neutrality.M", "10");
  auto r = run_experiment("fig8_neutrality", p);
  View v{r.files.at(0).table};
  CHECK(v.size() == 5 * 6);
  for (std::size_t i = 0; i < v.size(); ++i) {
    CHECK(v.num(i, "v_eff") >= 4.0 - 0.5 * v.num(i, "sigma") - 1e-12);
    CHECK(v.num(i, "v_eff") <= 4.0 + 0.5 * v.num(i, "sigma") + 1e-12);
  }
  CHECK(r.checks_passed());
}

TEST_CASE("fig2 masses and profiles") {
  Parameters p;
  p.set("general.dx", "0.02");
  auto r = run_experiment("fig2", p);
  REQUIRE(r.files.size() == 2);
  View m{r.files[1].table};
  CHECK(m.num(0, "mass") + m.num(1, "mass") == doctest::Approx(1.0).epsilon(1e-10));
  View prof{r.files[0].table};
  // Heterogeneous total differs from the homogeneous profile N_v.
  double gap = 0;
  for (std::size_t i = 0; i < prof.size(); ++i) gap = std::max(gap, std::abs(prof.num(i, "mean_N") - prof.num(i, "N_v")));
  CHECK(gap > 1e-2);
  CHECK(r.checks_passed());
}

TEST_CASE("figS1: strong heredity of the larger trait starves type 1") {
  Parameters p;
  p.set("figS1_fractions.panels", "k2=0.01");
  p.set("figS1_fractions.k_points", "9");
  p.set("general.dx", "0.02");
  auto r = run_experiment("figS1_fractions", p);
  View v{r.files.at(0).table};
  CHECK(v.size() > 0);
  for (std::size_t i = 0; i < v.size(); ++i)
    if (v.str(i, "type") == "1") CHECK(v.num(i, "mass") < 0.05);
  CHECK(r.checks_passed());
}

TEST_CASE("figS1 Case B uses the analytic profiles") {
  Parameters p;
  p.set("figS1_fractions.panels", "k1=0.2");
  p.set("figS1_fractions.k_points", "5");
  p.set("figS1_fractions.case", "B");
  p.set("figS1_fractions.beta", "pow:2");
  auto r = run_experiment("figS1_fractions", p);
  CHECK(r.checks_passed());
  View v{r.files.at(0).table};
  for (std::size_t i = 0; i < v.size(); ++i) CHECK(std::abs(v.num(i, "mass") - v.num(i, "mass_matrix")) < 1e-12);
}

TEST_CASE("figS2: homogeneous rows give lambda = vbar for every alpha") {
  Parameters p;
  p.set("figS2_mitosis.sigma_points", "2");
  p.set("figS2_mitosis.sigma_max", "1");
  p.set("figS2_mitosis.mean_kinds", "arithmetic");
  p.set("figS2_mitosis.alphas", "1/M,0.9");
  p.set("general.dx", "0.04");
  auto r = run_experiment("figS2_mitosis", p);
  View v{r.files.at(0).table};
  CHECK(v.size() == 2 * 2 * 2);
  for (std::size_t i = 0; i < v.size(); ++i) {
    CHECK(v.str(i, "status") == "ok");
    CHECK(v.num(i, "v_eff_reported") == v.num(i, "lambda"));
    if (v.num(i, "sigma") == 0.0) CHECK(v.num(i, "lambda") == doctest::Approx(4.0).epsilon(1e-3));
  }
  CHECK(r.convergence_failures == 0);
  CHECK(r.checks_passed());
}

TEST_CASE("figS2 records non-convergence per row") {
  Parameters p;
  p.set("figS2_mitosis.sigma_points", "2");
  p.set("figS2_mitosis.sigma_max", "1");
  p.set("figS2_mitosis.mean_kinds", "arithmetic");
  p.set("figS2_mitosis.alphas", "0.5");
  p.set("figS2_mitosis.betas", "pow:2");
  p.set("general.dx", "0.04");
  p.set("general.max_iterations", "3");
  auto r = run_experiment("figS2_mitosis", p);
  View v{r.files.at(0).table};
  CHECK(v.size() == 2);
  CHECK(r.convergence_failures == 2);
  for (std::size_t i = 0; i < v.size(); ++i) CHECK(v.str(i, "status").rfind("convergence_error", 0) == 0);
}

TEST_CASE("reruns are byte-identical and the manifest is complete") {
  auto run = [](const fs::path& dir, const std::string& seed, int threads) {
    omp_set_num_threads(threads);
    Parameters p;
    p.set("general.seed", seed);
    p.set("fig8_neutrality.sigma_points", "5");
    p.set("fig8_neutrality.M", "10");
    auto r = run_experiment("fig8_neutrality", p);
    return write_outputs(r, p, dir);
  };
  auto a = scratch("run_a"), b = scratch("run_b"), c = scratch("run_c");
  auto ma = run(a, "3", 1), mb = run(b, "3", 2), mc = run(c, "4", 1);
  omp_set_num_threads(1);
  CHECK(slurp(ma) == slurp(mb));
  CHECK(slurp(a / "fig8_neutrality.csv") == slurp(b / "fig8_neutrality.csv"));
  CHECK(slurp(a / "fig8_neutrality.csv") != slurp(c / "fig8_neutrality.csv"));

  auto manifest = nlohmann::json::parse(slurp(ma));
  const std::string hash = manifest["config_hash"];
  CHECK(manifest["seed"] == "3");
  CHECK(hash != nlohmann::json::parse(slurp(mc))["config_hash"]);
  for (const auto& f : manifest["files"]) {
    const auto text = slurp(a / f["name"].get<std::string>());
    CHECK(!text.empty());
    CHECK(text.find("# config_hash=" + hash + "\n") != std::string::npos);
  }
  for (const auto& d : {a, b, c}) fs::remove_all(d);
}

TEST_CASE("PDE sweeps do not depend on the thread count") {
  auto run = [](int threads) {
    omp_set_num_threads(threads);
    Parameters p;
    p.set("fig4.k_points", "4");
    p.set("general.dx", "0.05");
    return run_experiment("fig4", p).files.at(0).table.str();
  };
  const auto one = run(1), three = run(3);
  omp_set_num_threads(1);
  CHECK(one == three);
}

TEST_CASE("unknown experiment id") {
  Parameters p;
  CHECK_THROWS_AS(run_experiment("fig9", p), ConfigError);
  CHECK(experiment_ids().size() == 10);
}
