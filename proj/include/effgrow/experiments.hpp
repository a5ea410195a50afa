#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "effgrow/csv.hpp"
#include "effgrow/eigensolver.hpp"
#include "effgrow/kernel.hpp"
#include "effgrow/traits.hpp"

namespace effgrow {

/// Flat "section.key" parameters, typically from an INI file. Every lookup
/// records the value actually used (given or default); that record is what the
/// manifest lists and the config hash covers.
class Parameters {
public:
  Parameters() = default;
  /// Throws ConfigError on unreadable or malformed input.
  static Parameters from_ini(const std::filesystem::path& path);
  static Parameters from_ini(std::istream& in);

  void set(const std::string& key, std::string value) { given_[key] = std::move(value); }
  bool has(const std::string& key) const { return given_.count(key) > 0; }

  std::string get_string(const std::string& key, const std::string& fallback);
  double get_double(const std::string& key, double fallback);
  std::uint64_t get_uint(const std::string& key, std::uint64_t fallback);
  std::vector<double> get_list(const std::string& key, const std::string& fallback);

  const std::map<std::string, std::string>& used() const noexcept { return used_; }
  /// Given keys never read by the experiment (likely typos).
  std::vector<std::string> unused() const;

private:
  std::map<std::string, std::string> given_;
  std::map<std::string, std::string> used_;
};

std::uint64_t fnv1a64(std::string_view data);

/// FNV-1a over the experiment id and the sorted "key=value" lines of `used`.
std::string config_hash(std::string_view experiment,
                        const std::map<std::string, std::string>& used);

/// Kernel specs: uniform | bimodal:k1,k2 | alpha:a (a may be "alpha0" or "1/M") |
/// noheredity:w1,..,wM | random:SEED | matrix:r11,..;r21,.. | file:PATH (one
/// comma-separated row per line, '#' comments). Throws ConfigError on syntax
/// errors and DomainError on an invalid kernel.
HeredityKernel parse_kernel_spec(std::string_view spec, std::size_t M);

/// Comma-separated traits, sorted strictly increasing.
TraitSet parse_traits(std::string_view text);

/// Number, "1/M" or "alpha0" (1/2 + 1/(2M)).
double parse_alpha_token(std::string_view token, std::size_t M);

struct ExperimentFile {
  std::string name;  // file name inside the output directory
  csv::Table table;
};

struct ExperimentCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct ExperimentResult {
  std::string id;
  std::vector<ExperimentFile> files;
  std::vector<ExperimentCheck> checks;
  std::vector<std::string> warnings;
  std::size_t convergence_failures = 0;

  bool checks_passed() const;
};

const std::vector<std::string>& experiment_ids();

/// Dispatches on the id; throws ConfigError for an unknown id.
ExperimentResult run_experiment(std::string_view id, Parameters& params);

ExperimentResult run_fig2_profiles(Parameters& params);
ExperimentResult run_fig3_sweep(Parameters& params);
ExperimentResult run_fig4_surfaces(Parameters& params);
ExperimentResult run_fig5_heatmap(Parameters& params);
ExperimentResult run_fig5_surfaces(Parameters& params);
ExperimentResult run_fig6_Mconvergence(Parameters& params);
ExperimentResult run_fig7_sigma_alpha(Parameters& params);
ExperimentResult run_fig8_neutrality(Parameters& params);
ExperimentResult run_figS1_fractions(Parameters& params);
ExperimentResult run_figS2_mitosis(Parameters& params);

/// Writes every table (config hash and id prepended to its preamble) and
/// "<id>_manifest.json" into `dir`, creating it. Returns the manifest path.
std::filesystem::path write_outputs(const ExperimentResult& result, const Parameters& params,
                                    const std::filesystem::path& dir);

}  // namespace effgrow
