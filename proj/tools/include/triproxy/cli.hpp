#pragma once

#include "triproxy/io.hpp"
#include "triproxy/npsem.hpp"
#include "triproxy/pipelines.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace triproxy::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitIdentification = 3;
inline constexpr int kReportFormat = 1;

struct Tolerances {
  double eigen_gap = 1e-6;
  double imag = 1e-7;
  double rank = 1e-8;
  double negativity = 1e-6;
  double max_condition = 1e8;
  double max_projection = 1e-4;
  double golden = 1e-6;
};

struct RunConfig {
  std::string verb;
  std::string model;    // model file, or a builtin figure id for generated models
  std::string graph;    // graph file or builtin figure id
  std::string joint;    // tensor file
  std::string fixture;  // end-to-end fixture name
  std::optional<std::string> design;
  std::size_t latent_dim = 2;
  std::optional<std::uint64_t> seed;
  std::size_t samples = 0;
  std::string rule = "mean-unbiased";
  std::vector<double> tau = {0.25, 0.5, 0.75};
  std::vector<std::size_t> w_coordinates;
  std::vector<std::vector<double>> z_coordinates;
  std::map<std::string, std::string> roles;  // role letter -> axis name
  std::string z_shape = "generic";
  std::string outcome_shape = "generic";
  int proposition = 0;  // 0: every proposition (or the figure's own)
  std::size_t seeds = 30;
  bool strict = false;
  Tolerances tol;
  std::filesystem::path out;       // report; stdout when empty
  std::filesystem::path csv_dir;   // CSV tables, when set
  std::filesystem::path model_out;
  std::filesystem::path golden_dir;
  bool write_golden = false;

  /// Everything that determines the result (output paths excluded).
  Json to_json() const;
};

/// FNV-1a, 64 bit.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 14695981039346656037ull);
std::string hex64(std::uint64_t v);

/// Worker cap from TRIPROXY_THREADS (default: hardware concurrency).
std::size_t thread_cap();

/// Runs one verb. Reports go to `config.out` or `out`; failures print a JSON
/// diagnostic on `err`. Returns the process exit code.
int run(const RunConfig& config, std::ostream& out, std::ostream& err);

/// Parses argv (CLI11) and runs. Usage errors exit 2.
int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

// Shared pieces, exposed for tests.

/// RFC-4180: CRLF records, fields quoted when they hold a comma, quote or newline.
std::string csv_table(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows);
std::string csv_number(double v);

/// Ground truth from exhaustive counterfactual enumeration of a model whose
/// W node is present (latent or not).
Json oracle_report(const Npsem& m, const std::vector<double>& tau = {0.25, 0.5, 0.75});

struct Fixture {
  std::string name;
  std::string figure;
  std::optional<DesignTag> design;  // empty: the graph admits no triple-proxy design
  std::size_t latent_dim = 2;
  std::uint64_t seed = 0;
  GeneratorOptions generator;
  std::optional<std::string> rule;
  bool bounds = false;
  /// The graph implies the outcome ignores (X, W) given the strata used.
  bool confounder_effects = false;
  std::string description;
};
const std::vector<Fixture>& fixtures();
const Fixture& fixture(std::string_view name);

}  // namespace triproxy::cli
