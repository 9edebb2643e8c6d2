#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace triproxy {

/// Directed acyclic graph over named nodes. `roles` maps role letters
/// (Y, X, W, V, Z, C) onto node names; a node named like a role plays that
/// role unless the map says otherwise.
class Dag {
 public:
  using Edge = std::pair<std::string, std::string>;

  Dag(std::vector<std::string> nodes, std::vector<Edge> edges, std::map<std::string, std::string> roles = {});

  const std::vector<std::string>& nodes() const { return nodes_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::map<std::string, std::string>& roles() const { return roles_; }

  bool has_node(std::string_view name) const;
  std::size_t index_of(std::string_view name) const;
  const std::vector<std::size_t>& parents(std::size_t node) const { return parents_[node]; }
  const std::vector<std::size_t>& children(std::size_t node) const { return children_[node]; }
  std::vector<std::string> parent_names(std::string_view node) const;
  /// Node indices in a topological order (ties broken by declaration order).
  const std::vector<std::size_t>& topological_order() const { return topo_; }
  /// Strict descendants of the given nodes.
  std::set<std::size_t> descendants(const std::set<std::size_t>& from) const;
  /// The given nodes plus all their ancestors.
  std::set<std::size_t> ancestors_inclusive(const std::set<std::size_t>& of) const;

  /// Node playing `role`, if any.
  std::optional<std::string> node_for_role(std::string_view role) const;
  Dag with_roles(std::map<std::string, std::string> roles) const;

 private:
  std::vector<std::string> nodes_;
  std::vector<Edge> edges_;
  std::map<std::string, std::string> roles_;
  std::vector<std::vector<std::size_t>> parents_;
  std::vector<std::vector<std::size_t>> children_;
  std::vector<std::size_t> topo_;
};

/// left ⫫ right | given, over node names (or role letters, depending on use).
struct CiQuery {
  std::set<std::string> left;
  std::set<std::string> right;
  std::set<std::string> given;
};

/// Reachability ("Bayes-ball") d-separation.
bool d_separated(const Dag& g, const CiQuery& q);

/// d-separation of a counterfactual outcome in the twin network: factual graph
/// plus starred copies of every descendant of `intervene`, each sharing an
/// explicit noise parent with its factual twin. Tests `outcome(intervene) ⫫
/// right | given` where right/given are factual nodes. Sound but not complete.
bool twin_d_separated(const Dag& g, const std::set<std::string>& intervene, const std::string& outcome,
                      const std::set<std::string>& right, const std::set<std::string>& given);

/// One conclusion of a proposition, written over role letters. Counterfactual
/// conclusions have a non-empty `intervene` set and read
/// `Y(intervene) ⫫ right | given` (query.left is {"Y"}).
struct Conclusion {
  std::string label;
  CiQuery query;
  std::vector<std::string> intervene;

  bool counterfactual() const { return !intervene.empty(); }
  std::string text() const;
};

/// Conclusions of propositions 1..7, in the order they are stated.
const std::vector<Conclusion>& proposition_conclusions(int prop_id);
/// Role letters a proposition refers to.
std::set<std::string> proposition_roles(int prop_id);

enum class CertStatus { Certified, NotCertified, SimulationOnly };
std::string_view to_string(CertStatus s);

struct ConclusionCheck {
  Conclusion conclusion;
  CertStatus status;
};

struct CheckReport {
  int prop_id = 0;
  std::vector<ConclusionCheck> items;

  bool all_observational_certified() const;
  const ConclusionCheck& item(std::string_view label) const;
};

/// Certifies each observational conclusion by d-separation on `g` (using its
/// role map); counterfactual ones are marked SimulationOnly.
CheckReport check_proposition(const Dag& g, int prop_id);

enum class Design {
  OutcomeProxy,
  TreatmentProxy,
  CondTreatmentProxy,
  AuxiliaryProxy,
  OutcomeProxyRankInvariance,
  AuxiliaryProxyRankInvariance,
  DoubleProxy,
};
std::string_view to_string(Design d);
bool is_triple_proxy(Design d);

struct DesignMatch {
  Design design;
  /// role letter -> node name for V, Z (and C)
  std::map<std::string, std::string> assignment;
};

struct DesignSet {
  std::vector<DesignMatch> matches;

  bool contains(Design d) const;
  bool any_triple_proxy() const;
  const DesignMatch* find(Design d) const;
};

/// Designs whose prerequisites are certified for some assignment of the
/// non-core nodes to the proxy roles. Observational conclusions use
/// d-separation; counterfactual ones use the twin-network screen.
DesignSet classify_designs(const Dag& g);

namespace builtin {

/// Figure graphs: "fig1a".."fig1d", "fig2a".."fig2c", "fig3a".."fig3c",
/// "fig4a", "fig4b", "fig5a".."fig5c", "fig6a".."fig6c", "fig7a", "fig7b".
Dag figure(std::string_view id);
const std::vector<std::string>& figure_ids();
/// Proposition whose conclusions the figure's graphs imply (fig2 -> 1, ...).
int proposition_for(std::string_view figure_id);
/// Which conclusion of Proposition 5 the figure implies ("i." or "ii.").
std::string proposition5_conclusion_for(std::string_view figure_id);

}  // namespace builtin

}  // namespace triproxy
