#pragma once

#include "triproxy/npsem.hpp"
#include "triproxy/pipelines.hpp"

#include <optional>
#include <vector>

namespace triproxy {

/// One treatment arm fitted on its own latent ordering.
struct ArmFit {
  std::size_t x = 0;
  /// means[w][v] = E[Y(x) | W=w, V=v]; a single column for the outcome design.
  std::vector<std::vector<double>> means;
  /// mass[w][v] = f_{W|V,X}(w | v, x); a single column holds f_{W|X}.
  std::vector<std::vector<double>> mass;
  HsDiagnostics diagnostics;
};

struct Interval {
  double lower = 0;
  double upper = 0;
  double width() const { return upper - lower; }
  bool contains(double v, double tol = 1e-9) const { return v >= lower - tol && v <= upper + tol; }
};

struct BoundsReport {
  DesignTag design = DesignTag::Outcome;
  double s_lower = 0;
  double s_upper = 0;
  /// Auxiliary design: [s_lower(v), s_upper(v)] per level of V.
  std::vector<Interval> per_v;
  Interval att, atu;
  bool point_identified = false;
  /// s_lower exceeded s_upper: the data contradict rank invariance.
  bool inverted = false;
  std::vector<ArmFit> arms;
};

/// Essential sup/inf ignore latent states lighter than this.
inline constexpr double kBoundMassTolerance = 1e-10;
inline constexpr double kPointIdentifiedTolerance = 1e-7;

/// Joint over (Y, Z, V, X) roles (other axes summed out).
BoundsReport bounds_outcome_proxy(const ProbTensor& joint, const PipelineOptions& opt);
/// Joint over (Y, C, Z, V, X) roles.
BoundsReport bounds_auxiliary_proxy(const ProbTensor& joint, const PipelineOptions& opt);
BoundsReport bounds(DesignTag design, const ProbTensor& joint, const PipelineOptions& opt);

/// Combines two arm fits; fvx[x][v] = f_{VX}(v, x), a single entry f_X(x) per
/// x for the outcome design. s_lower and s_upper bound the ATE.
BoundsReport bounds_from_arms(DesignTag design, std::vector<ArmFit> arms,
                              const std::vector<std::vector<double>>& fvx);

/// Checks the rank-invariance implication over every pair of latent states
/// of the node playing W, by counterfactual enumeration. With `given_v`, the
/// check runs within each level of V.
bool check_rank_invariance(const Npsem& m, bool given_v = false);

Json to_json(const BoundsReport& r);

}  // namespace triproxy
