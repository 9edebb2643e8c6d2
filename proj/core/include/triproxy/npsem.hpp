#pragma once

#include "triproxy/dag.hpp"
#include "triproxy/io.hpp"
#include "triproxy/prob.hpp"

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace triproxy {

/// Structural equation of one node: value = table[config * noise_card + noise],
/// where config is the row-major index of the parents' levels.
struct NodeSpec {
  VarSpace space;
  std::vector<std::string> parents;
  std::size_t noise_card = 1;
  std::vector<std::size_t> table;
  std::vector<double> noise_pmf;
  bool latent = false;
};

class Npsem {
 public:
  Npsem(std::vector<NodeSpec> nodes, std::map<std::string, std::string> roles = {});

  const Dag& graph() const { return graph_; }
  const std::vector<NodeSpec>& nodes() const { return nodes_; }
  const NodeSpec& node(std::string_view name) const { return nodes_[graph_.index_of(name)]; }
  std::vector<VarSpace> spaces() const;
  /// Node playing `role`; throws MissingRole.
  std::string role_node(std::string_view role) const;
  /// Conditional law of a node given its parents implied by table and noise.
  MarkovKernel kernel(std::string_view name) const;

 private:
  std::vector<NodeSpec> nodes_;
  Dag graph_;
};

Json to_json(const Npsem& m);
Npsem npsem_from_json(const Json& j);

/// Effective enumeration leaves allowed before EnumerationTooLarge.
inline constexpr std::size_t kEnumerationLimit = 10'000'000;

/// Exact joint over every node (latent ones included), axes in declaration order.
ProbTensor observable_joint(const Npsem& m);

/// Cross-world joint: one axis per intervention setting holding the outcome in
/// that world, followed by the kept factual nodes. Noise is shared across worlds.
struct CounterfactualJoint {
  ProbTensor joint;
  std::string outcome;
  std::vector<std::string> intervene;
  std::vector<std::vector<std::size_t>> arms;
  std::vector<std::string> arm_axes;

  /// Axis name of the outcome under the given setting of the intervened nodes.
  const std::string& arm_axis(const std::vector<std::size_t>& levels) const;
};

/// `outcome` defaults to the node playing Y; `keep` defaults to every node.
CounterfactualJoint counterfactual_joint(const Npsem& m, const std::vector<std::string>& intervene,
                                         std::string outcome = {}, std::vector<std::string> keep = {});

/// outcome(intervene) ⫫ right | given, checked arm by arm on the cross-world joint.
struct CounterfactualQuery {
  std::vector<std::string> intervene;
  std::set<std::string> right;
  std::set<std::string> given;
  std::string outcome;
};
bool check_counterfactual_ci(const Npsem& m, const CounterfactualQuery& q, double tol = 1e-10);

/// left ⫫ right | given in an exact tensor: p(l,r,g) p(g) = p(l,g) p(r,g) on every cell.
bool factorizes(const ProbTensor& t, const std::set<std::string>& left, const std::set<std::string>& right,
                const std::set<std::string>& given, double tol = 1e-10);

struct Dataset {
  std::vector<VarSpace> columns;
  std::vector<std::size_t> cells;  // row-major, rows x columns

  std::size_t rows() const { return columns.empty() ? 0 : cells.size() / columns.size(); }
};

Dataset sample(const Npsem& m, std::size_t n, std::uint64_t seed);
/// Frequency tensor over `keep` (all columns when empty).
ProbTensor empirical_tensor(const Dataset& d, const std::vector<std::string>& keep = {});

// ---------------------------------------------------------------------------
// random models

enum class ProxyDesign { Outcome, Treatment, CondTreatment, Auxiliary };
std::string_view to_string(ProxyDesign d);

enum class ZShape { Generic, Unbiased, MonotoneIncreasing, MonotoneDecreasing };
enum class OutcomeShape { Generic, RankInvariant, RankViolating, ConstantEffect };

struct GeneratorOptions {
  std::size_t latent_dim = 2;
  std::size_t y_card = 3;
  std::size_t c_card = 3;
  std::size_t other_card = 3;
  ZShape z_shape = ZShape::Generic;
  OutcomeShape outcome = OutcomeShape::Generic;
  double constant_effect = 0.2;
  /// Regenerate until the exact joint is well conditioned for this design.
  std::optional<ProxyDesign> validate_for;
  int max_tries = 100;
  std::set<std::string> latent_nodes;
};

/// Thresholds the regeneration loop enforces on the exact joint.
struct ConditioningReport {
  double min_zw_singular = 0;
  double min_vw_singular = 0;
  double min_stratum_mass = 0;
  double min_c_separation = 0;
  double min_cell_mass = 0;
  bool ok = false;
};
ConditioningReport design_conditioning(const Npsem& m, ProxyDesign design);

/// Kernels drawn from Dirichlet(1) and encoded exactly by quantile coupling.
/// Role nodes get |W|=K, |Z|=|V|=K+1, |X|=2, |Y|=y_card, |C|=c_card; others other_card.
/// Throws InvalidArgument when no draw passes validation within max_tries.
Npsem random_npsem(const Dag& g, std::uint64_t seed, const GeneratorOptions& opt);
/// Design a builtin figure supports, used as the default validation target.
std::optional<ProxyDesign> figure_design(std::string_view figure_id);
Npsem random_figure_model(std::string_view figure_id, std::uint64_t seed, GeneratorOptions opt);

/// Encodes column-stochastic kernels (one pmf per parent config) as a table
/// plus a shared noise law. Exact: the implied kernel equals the input up to
/// floating-point summation.
NodeSpec encode_kernel(VarSpace space, std::vector<std::string> parents, const std::vector<std::vector<double>>& pmfs);

}  // namespace triproxy
