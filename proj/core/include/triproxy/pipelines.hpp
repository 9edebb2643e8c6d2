#pragma once

#include "triproxy/error.hpp"
#include "triproxy/io.hpp"
#include "triproxy/prob.hpp"
#include "triproxy/spectral.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace triproxy {

enum class DesignTag { Outcome, Treatment, CondTreatment, Auxiliary };
std::string_view to_string(DesignTag d);
DesignTag design_from_string(std::string_view s);

/// Axis names playing each role in an observed joint; W names the latent axis.
struct Roles {
  std::string y = "Y";
  std::string x = "X";
  std::string w = "W";
  std::string z = "Z";
  std::string v = "V";
  std::string c = "C";
};

struct PipelineOptions {
  HsOptions hs;
  double max_condition = 1e8;
  double max_projection = 1e-4;
  Roles roles;
};

struct StageDiagnostic {
  std::string stratum;
  std::string kind;  // "spectral" or "solve"
  double condition = 0;
  double projection_distance = 0;
  std::optional<HsDiagnostics> hs;
};

struct PipelineDiagnostics {
  std::string reference_stratum;
  std::vector<StageDiagnostic> stages;
  double max_projection_distance = 0;
  double max_condition = 0;
};

/// Latent outcome law recovered by a pipeline, with one latent ordering shared
/// by every kernel. The auxiliary design also carries f_{Y|WVX} and f_{VWX}.
struct LatentOutcomeModel {
  DesignTag design = DesignTag::Outcome;
  MarkovKernel y_given_wx;  // given (W, X)
  ProbTensor wx_joint;      // (W, X)
  std::optional<MarkovKernel> y_given_wvx;  // given (W, V, X)
  std::optional<ProbTensor> vwx_joint;      // (V, W, X)
  MarkovKernel z_given_w;
  Alignment alignment = Alignment::AlignedToReference;
  PipelineDiagnostics diagnostics;

  std::size_t latent_dim() const { return z_given_w.given().front().cardinality; }
  const VarSpace& outcome_space() const { return y_given_wx.target(); }
  const VarSpace& treatment_space() const { return y_given_wx.given()[1]; }
};

/// Joint must contain the role axes (others are summed out).
LatentOutcomeModel identify_outcome_proxy(const ProbTensor& joint, const PipelineOptions& opt);
LatentOutcomeModel identify_treatment_proxy(const ProbTensor& joint, const PipelineOptions& opt);
LatentOutcomeModel identify_cond_treatment_proxy(const ProbTensor& joint, const PipelineOptions& opt);
LatentOutcomeModel identify_auxiliary_proxy(const ProbTensor& joint, const PipelineOptions& opt);
LatentOutcomeModel identify(DesignTag design, const ProbTensor& joint, const PipelineOptions& opt);

/// Assumption whose numerical shadow `code` is, for the given design.
std::string assumption_for(DesignTag design, ErrorCode code);

/// f_{Y(x1) W X}(y, w, x2); first axis named like "Y(X=1)".
ProbTensor potential_joint(const LatentOutcomeModel& m, std::size_t x1);

/// Latent state i of the result is state p[i] of `m`.
LatentOutcomeModel permute_latent(const LatentOutcomeModel& m, const Permutation& p);
/// Latent states sorted lexicographically by their f_{Z|W} columns.
LatentOutcomeModel canonicalize(const LatentOutcomeModel& m);

struct Atom {
  double value = 0;
  double mass = 0;
  double cdf = 0;
};

/// Atoms closer than this are merged in distribution tables.
inline constexpr double kAtomTolerance = 1e-9;
/// Sorted atoms with cumulative masses.
std::vector<Atom> distribution_table(const std::vector<double>& values, const std::vector<double>& masses);
/// Left-continuous inverse of a pmf over numeric levels: min{y : F(y) >= tau}.
double quantile(const std::vector<double>& levels, const std::vector<double>& pmf, double tau);

struct QuantileRow {
  double tau = 0;
  double q0 = 0;
  double q1 = 0;
  double qte = 0;
};

struct EstimandOptions {
  std::vector<double> tau_grid = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  /// Throw MissingLevels / NonBinaryTreatment instead of omitting those objects.
  bool strict = true;
};

struct EstimandReport {
  DesignTag design = DesignTag::Outcome;
  std::vector<double> y_levels;
  std::vector<std::vector<double>> potential_pmf;                   // [x1][y]
  std::vector<std::vector<std::vector<double>>> potential_given_x;  // [x1][x2][y]
  std::vector<double> latent_pmf;                                   // f_W, canonical order
  std::vector<std::vector<double>> latent_given_x;                  // [x][w]
  std::vector<double> treatment_pmf;                                // f_X
  std::optional<std::vector<double>> potential_mean;                // E[Y(x)]
  std::optional<double> ate, att, atu;
  std::vector<QuantileRow> qte;
  std::optional<std::vector<double>> cate;  // beta(w)
  std::optional<std::vector<Atom>> cate_distribution;
  std::optional<std::vector<std::vector<Atom>>> cate_distribution_given_x;
  std::optional<double> cate_variance;
  PipelineDiagnostics diagnostics;
};

EstimandReport estimands(const LatentOutcomeModel& m, const EstimandOptions& opt = {});

Json to_json(const PipelineDiagnostics& d);
Json to_json(const HsDiagnostics& d);
Json to_json(const EstimandReport& r);
Json to_json(const LatentOutcomeModel& m);

}  // namespace triproxy
