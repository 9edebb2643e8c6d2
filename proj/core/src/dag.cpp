#include "triproxy/dag.hpp"

#include "triproxy/error.hpp"

#include <algorithm>
#include <cctype>
#include <deque>

namespace triproxy {

Dag::Dag(std::vector<std::string> nodes, std::vector<Edge> edges, std::map<std::string, std::string> roles)
    : nodes_(std::move(nodes)), edges_(std::move(edges)), roles_(std::move(roles)) {
  {
    std::set<std::string> seen;
    for (const auto& n : nodes_) {
      if (n.empty()) throw Error(ErrorCode::InvalidArgument, "node names must be non-empty");
      if (!seen.insert(n).second) throw Error(ErrorCode::InvalidArgument, "duplicate node '" + n + "'");
    }
  }
  parents_.assign(nodes_.size(), {});
  children_.assign(nodes_.size(), {});
  std::set<std::pair<std::size_t, std::size_t>> seen_edges;
  for (const auto& [from, to] : edges_) {
    const std::size_t a = index_of(from);
    const std::size_t b = index_of(to);
    if (a == b) throw Error(ErrorCode::InvalidArgument, "self loop on '" + from + "'");
    if (!seen_edges.insert({a, b}).second) {
      throw Error(ErrorCode::InvalidArgument, "duplicate edge " + from + " -> " + to);
    }
    parents_[b].push_back(a);
    children_[a].push_back(b);
  }
  for (const auto& [role, node] : roles_) {
    if (!has_node(node)) throw Error(ErrorCode::UnknownNode, "role " + role + " refers to unknown node '" + node + "'");
  }

  // Kahn's algorithm, smallest declaration index first.
  std::vector<std::size_t> indegree(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i) indegree[i] = parents_[i].size();
  std::set<std::size_t> ready;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (indegree[i] == 0) ready.insert(i);
  }
  while (!ready.empty()) {
    const std::size_t n = *ready.begin();
    ready.erase(ready.begin());
    topo_.push_back(n);
    for (auto c : children_[n]) {
      if (--indegree[c] == 0) ready.insert(c);
    }
  }
  if (topo_.size() != nodes_.size()) throw Error(ErrorCode::InvalidArgument, "graph has a directed cycle");
}

bool Dag::has_node(std::string_view name) const {
  return std::find(nodes_.begin(), nodes_.end(), name) != nodes_.end();
}

std::size_t Dag::index_of(std::string_view name) const {
  const auto it = std::find(nodes_.begin(), nodes_.end(), name);
  if (it == nodes_.end()) throw Error(ErrorCode::UnknownNode, "unknown node '" + std::string(name) + "'");
  return static_cast<std::size_t>(it - nodes_.begin());
}

std::vector<std::string> Dag::parent_names(std::string_view node) const {
  std::vector<std::string> out;
  for (auto p : parents_[index_of(node)]) out.push_back(nodes_[p]);
  return out;
}

std::set<std::size_t> Dag::descendants(const std::set<std::size_t>& from) const {
  std::set<std::size_t> out;
  std::deque<std::size_t> queue(from.begin(), from.end());
  while (!queue.empty()) {
    const auto n = queue.front();
    queue.pop_front();
    for (auto c : children_[n]) {
      if (out.insert(c).second) queue.push_back(c);
    }
  }
  return out;
}

std::set<std::size_t> Dag::ancestors_inclusive(const std::set<std::size_t>& of) const {
  std::set<std::size_t> out(of.begin(), of.end());
  std::deque<std::size_t> queue(of.begin(), of.end());
  while (!queue.empty()) {
    const auto n = queue.front();
    queue.pop_front();
    for (auto p : parents_[n]) {
      if (out.insert(p).second) queue.push_back(p);
    }
  }
  return out;
}

std::optional<std::string> Dag::node_for_role(std::string_view role) const {
  if (auto it = roles_.find(std::string(role)); it != roles_.end()) return it->second;
  if (has_node(role)) {
    // A node named like a role plays it only if no other node was mapped there.
    return std::string(role);
  }
  return std::nullopt;
}

Dag Dag::with_roles(std::map<std::string, std::string> roles) const { return Dag(nodes_, edges_, std::move(roles)); }

// ---------------------------------------------------------------------------
// d-separation

namespace {

bool reachable_disjoint(const std::vector<std::vector<std::size_t>>& parents,
                        const std::vector<std::vector<std::size_t>>& children, const std::set<std::size_t>& left,
                        const std::set<std::size_t>& right, const std::set<std::size_t>& given) {
  const std::size_t n = parents.size();
  // Observed nodes and their ancestors: colliders in this set are open.
  std::vector<bool> in_given(n, false), anc(n, false);
  std::deque<std::size_t> queue;
  for (auto g : given) {
    in_given[g] = true;
    anc[g] = true;
    queue.push_back(g);
  }
  while (!queue.empty()) {
    const auto v = queue.front();
    queue.pop_front();
    for (auto p : parents[v]) {
      if (!anc[p]) {
        anc[p] = true;
        queue.push_back(p);
      }
    }
  }

  // (node, arrived_from_child) pairs.
  std::vector<bool> seen_up(n, false), seen_down(n, false);
  std::deque<std::pair<std::size_t, bool>> frontier;
  for (auto l : left) frontier.emplace_back(l, true);
  while (!frontier.empty()) {
    const auto [v, up] = frontier.front();
    frontier.pop_front();
    if (up ? seen_up[v] : seen_down[v]) continue;
    (up ? seen_up : seen_down)[v] = true;
    if (!in_given[v] && right.count(v)) return false;
    if (up) {
      if (!in_given[v]) {
        for (auto p : parents[v]) frontier.emplace_back(p, true);
        for (auto c : children[v]) frontier.emplace_back(c, false);
      }
    } else {
      if (!in_given[v]) {
        for (auto c : children[v]) frontier.emplace_back(c, false);
      }
      if (anc[v]) {
        for (auto p : parents[v]) frontier.emplace_back(p, true);
      }
    }
  }
  return true;
}

std::set<std::size_t> resolve(const Dag& g, const std::set<std::string>& names) {
  std::set<std::size_t> out;
  for (const auto& n : names) out.insert(g.index_of(n));
  return out;
}

void check_disjoint(const std::set<std::size_t>& a, const std::set<std::size_t>& b, const char* what) {
  for (auto x : a) {
    if (b.count(x)) throw Error(ErrorCode::InvalidArgument, std::string("query sets overlap: ") + what);
  }
}

}  // namespace

bool d_separated(const Dag& g, const CiQuery& q) {
  const auto l = resolve(g, q.left);
  const auto r = resolve(g, q.right);
  const auto z = resolve(g, q.given);
  check_disjoint(l, r, "left/right");
  check_disjoint(l, z, "left/given");
  check_disjoint(r, z, "right/given");
  std::vector<std::vector<std::size_t>> parents, children;
  for (std::size_t i = 0; i < g.nodes().size(); ++i) {
    parents.push_back(g.parents(i));
    children.push_back(g.children(i));
  }
  return reachable_disjoint(parents, children, l, r, z);
}

bool twin_d_separated(const Dag& g, const std::set<std::string>& intervene, const std::string& outcome,
                      const std::set<std::string>& right, const std::set<std::string>& given) {
  const std::size_t n = g.nodes().size();
  const auto fixed = resolve(g, intervene);
  const auto desc = g.descendants(fixed);
  std::vector<std::vector<std::size_t>> parents(n), children(n);
  auto add_edge = [&](std::size_t a, std::size_t b) {
    parents[b].push_back(a);
    children[a].push_back(b);
  };
  for (std::size_t i = 0; i < n; ++i) {
    for (auto p : g.parents(i)) add_edge(p, i);
  }
  // Starred copies for descendants of the intervened nodes, plus shared noise.
  std::map<std::size_t, std::size_t> star;
  for (auto d : desc) {
    if (fixed.count(d)) continue;
    star[d] = parents.size();
    parents.emplace_back();
    children.emplace_back();
  }
  for (auto [orig, copy] : star) {
    const std::size_t noise = parents.size();
    parents.emplace_back();
    children.emplace_back();
    add_edge(noise, orig);
    add_edge(noise, copy);
    for (auto p : g.parents(orig)) {
      if (fixed.count(p)) continue;
      if (auto it = star.find(p); it != star.end()) {
        add_edge(it->second, copy);
      } else {
        add_edge(p, copy);
      }
    }
  }
  const std::size_t y = g.index_of(outcome);
  const std::size_t target = star.count(y) ? star.at(y) : y;
  const auto r = resolve(g, right);
  const auto z = resolve(g, given);
  if (z.count(target) || r.count(target)) return false;
  return reachable_disjoint(parents, children, {target}, r, z);
}

// ---------------------------------------------------------------------------
// propositions

std::string Conclusion::text() const {
  auto join = [](const std::set<std::string>& s) {
    std::string out;
    for (const auto& x : s) out += (out.empty() ? "" : ",") + x;
    return s.size() > 1 ? "(" + out + ")" : out;
  };
  std::string lhs = join(query.left);
  if (counterfactual()) {
    std::string args;
    for (const auto& i : intervene) args += (args.empty() ? "" : ",") + std::string(1, static_cast<char>(std::tolower(i[0])));
    lhs = "Y(" + args + ")";
  }
  std::string out = lhs + " indep " + join(query.right);
  if (!query.given.empty()) out += " | " + join(query.given);
  return out;
}

namespace {

Conclusion obs(std::string label, std::set<std::string> l, std::set<std::string> r, std::set<std::string> z) {
  return Conclusion{std::move(label), CiQuery{std::move(l), std::move(r), std::move(z)}, {}};
}

Conclusion cf(std::string label, std::vector<std::string> intervene, std::set<std::string> r, std::set<std::string> z) {
  return Conclusion{std::move(label), CiQuery{{"Y"}, std::move(r), std::move(z)}, std::move(intervene)};
}

const std::map<int, std::vector<Conclusion>>& all_propositions() {
  static const std::map<int, std::vector<Conclusion>> props = {
      {1,
       {obs("i.", {"Y"}, {"V", "Z"}, {"W", "X"}), obs("ii.", {"V"}, {"Z"}, {"W", "X"}), obs("iii.", {"Z"}, {"X"}, {"W"}),
        cf("iv.", {"X"}, {"X", "V"}, {"W"})}},
      {2,
       {obs("i.", {"V"}, {"X", "Z"}, {"W"}), obs("ii.", {"X"}, {"Z"}, {"W"}), obs("iii.", {"Y"}, {"Z"}, {"W", "X"}),
        cf("iv.", {"X"}, {"X", "Z"}, {"W"})}},
      {3,
       {obs("i.", {"V"}, {"X", "Z"}, {"W", "Y"}), obs("ii.", {"X"}, {"Z"}, {"W", "Y"}), obs("iii.", {"Y"}, {"Z"}, {"W"}),
        cf("iv.", {"X"}, {"X"}, {"W"})}},
      {4,
       {obs("i.", {"C"}, {"V", "Z"}, {"W", "X"}), obs("ii.", {"V"}, {"Z"}, {"W", "X"}), obs("iii.", {"X"}, {"Z"}, {"W"}),
        obs("iv.", {"Y"}, {"Z"}, {"W", "V", "X"}), cf("v.", {"X"}, {"X"}, {"W", "V"})}},
      {5, {cf("i.", {"X", "W"}, {"X", "W"}, {}), cf("ii.", {"X", "W"}, {"X", "W"}, {"V"})}},
      {6,
       {obs("i.", {"Y"}, {"V", "Z"}, {"W", "X"}), obs("ii.", {"V"}, {"Z"}, {"W", "X"}),
        cf("iii.", {"X"}, {"X", "V"}, {"W"})}},
      {7,
       {obs("i.", {"C"}, {"V", "Z"}, {"W", "X"}), obs("ii.", {"V"}, {"Z"}, {"W", "X"}),
        obs("iii.", {"Y"}, {"Z"}, {"W", "V", "X"}), cf("iv.", {"X"}, {"X"}, {"W", "V"})}},
  };
  return props;
}

CiQuery map_roles(const CiQuery& q, const std::map<std::string, std::string>& assign) {
  auto m = [&](const std::set<std::string>& s) {
    std::set<std::string> out;
    for (const auto& r : s) out.insert(assign.at(r));
    return out;
  };
  return CiQuery{m(q.left), m(q.right), m(q.given)};
}

bool certify(const Dag& g, const Conclusion& c, const std::map<std::string, std::string>& assign) {
  if (!c.counterfactual()) return d_separated(g, map_roles(c.query, assign));
  std::set<std::string> intervene;
  for (const auto& i : c.intervene) intervene.insert(assign.at(i));
  const auto q = map_roles(c.query, assign);
  return twin_d_separated(g, intervene, assign.at("Y"), q.right, q.given);
}

}  // namespace

const std::vector<Conclusion>& proposition_conclusions(int prop_id) {
  const auto& props = all_propositions();
  const auto it = props.find(prop_id);
  if (it == props.end()) throw Error(ErrorCode::InvalidArgument, "propositions are numbered 1..7");
  return it->second;
}

std::set<std::string> proposition_roles(int prop_id) {
  std::set<std::string> roles;
  for (const auto& c : proposition_conclusions(prop_id)) {
    roles.insert(c.query.left.begin(), c.query.left.end());
    roles.insert(c.query.right.begin(), c.query.right.end());
    roles.insert(c.query.given.begin(), c.query.given.end());
    roles.insert(c.intervene.begin(), c.intervene.end());
  }
  return roles;
}

std::string_view to_string(CertStatus s) {
  switch (s) {
    case CertStatus::Certified: return "certified";
    case CertStatus::NotCertified: return "not-certified";
    case CertStatus::SimulationOnly: return "verified-by-simulation-only";
  }
  return "?";
}

bool CheckReport::all_observational_certified() const {
  return std::all_of(items.begin(), items.end(), [](const ConclusionCheck& c) {
    return c.status != CertStatus::NotCertified;
  });
}

const ConclusionCheck& CheckReport::item(std::string_view label) const {
  for (const auto& c : items) {
    if (c.conclusion.label == label) return c;
  }
  throw Error(ErrorCode::InvalidArgument, "no conclusion labelled '" + std::string(label) + "'");
}

CheckReport check_proposition(const Dag& g, int prop_id) {
  const auto& conclusions = proposition_conclusions(prop_id);
  std::map<std::string, std::string> assign;
  for (const auto& role : proposition_roles(prop_id)) {
    auto node = g.node_for_role(role);
    if (!node) throw Error(ErrorCode::MissingRole, "graph has no node for role " + role);
    assign[role] = *node;
  }
  CheckReport report{prop_id, {}};
  for (const auto& c : conclusions) {
    CertStatus status = CertStatus::SimulationOnly;
    if (!c.counterfactual()) status = certify(g, c, assign) ? CertStatus::Certified : CertStatus::NotCertified;
    report.items.push_back({c, status});
  }
  return report;
}

// ---------------------------------------------------------------------------
// design classification

std::string_view to_string(Design d) {
  switch (d) {
    case Design::OutcomeProxy: return "outcome-proxy";
    case Design::TreatmentProxy: return "treatment-proxy";
    case Design::CondTreatmentProxy: return "conditional-treatment-proxy";
    case Design::AuxiliaryProxy: return "auxiliary-proxy";
    case Design::OutcomeProxyRankInvariance: return "outcome-proxy-rank-invariance";
    case Design::AuxiliaryProxyRankInvariance: return "auxiliary-proxy-rank-invariance";
    case Design::DoubleProxy: return "double-proxy";
  }
  return "?";
}

bool is_triple_proxy(Design d) { return d != Design::DoubleProxy; }

bool DesignSet::contains(Design d) const { return find(d) != nullptr; }

bool DesignSet::any_triple_proxy() const {
  return std::any_of(matches.begin(), matches.end(), [](const DesignMatch& m) { return is_triple_proxy(m.design); });
}

const DesignMatch* DesignSet::find(Design d) const {
  for (const auto& m : matches) {
    if (m.design == d) return &m;
  }
  return nullptr;
}

DesignSet classify_designs(const Dag& g) {
  std::map<std::string, std::string> core;
  for (const char* role : {"Y", "X", "W"}) {
    auto node = g.node_for_role(role);
    if (!node) throw Error(ErrorCode::MissingRole, std::string("graph has no node for role ") + role);
    core[role] = *node;
  }
  std::vector<std::string> candidates;
  for (const auto& n : g.nodes()) {
    if (n != core["Y"] && n != core["X"] && n != core["W"]) candidates.push_back(n);
  }

  struct Requirement {
    Design design;
    int prop;
    std::vector<std::string> labels;
  };
  const std::vector<Requirement> reqs = {
      {Design::OutcomeProxy, 1, {"i.", "ii.", "iii.", "iv."}},
      {Design::TreatmentProxy, 2, {"i.", "ii.", "iii.", "iv."}},
      {Design::CondTreatmentProxy, 3, {"i.", "ii.", "iii.", "iv."}},
      {Design::AuxiliaryProxy, 4, {"i.", "ii.", "iii.", "iv.", "v."}},
      {Design::OutcomeProxyRankInvariance, 6, {"i.", "ii.", "iii."}},
      {Design::AuxiliaryProxyRankInvariance, 7, {"i.", "ii.", "iii.", "iv."}},
      {Design::DoubleProxy, 1, {"ii.", "iii.", "iv."}},
  };

  DesignSet out;
  for (const auto& req : reqs) {
    const auto roles = proposition_roles(req.prop);
    std::vector<std::string> proxy_roles;
    for (const char* r : {"V", "Z", "C"}) {
      if (roles.count(r)) proxy_roles.emplace_back(r);
    }
    if (candidates.size() < proxy_roles.size()) continue;

    // Enumerate injective assignments of candidate nodes to the proxy roles.
    std::vector<std::size_t> pick(proxy_roles.size(), 0);
    bool found = false;
    std::map<std::string, std::string> assign;
    auto rec = [&](auto&& self, std::size_t depth, std::vector<bool>& used) -> void {
      if (found) return;
      if (depth == proxy_roles.size()) {
        assign = core;
        for (std::size_t i = 0; i < proxy_roles.size(); ++i) assign[proxy_roles[i]] = candidates[pick[i]];
        bool ok = true;
        for (const auto& c : proposition_conclusions(req.prop)) {
          if (std::find(req.labels.begin(), req.labels.end(), c.label) == req.labels.end()) continue;
          if (!certify(g, c, assign)) {
            ok = false;
            break;
          }
        }
        if (ok) found = true;
        return;
      }
      for (std::size_t i = 0; i < candidates.size() && !found; ++i) {
        if (used[i]) continue;
        used[i] = true;
        pick[depth] = i;
        self(self, depth + 1, used);
        used[i] = false;
      }
    };
    std::vector<bool> used(candidates.size(), false);
    rec(rec, 0, used);
    if (found) {
      std::map<std::string, std::string> proxies;
      for (const auto& r : proxy_roles) proxies[r] = assign[r];
      out.matches.push_back({req.design, std::move(proxies)});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// builtin figures

namespace builtin {
namespace {

struct FigureSpec {
  std::vector<std::string> nodes;
  std::vector<Dag::Edge> edges;
  std::map<std::string, std::string> roles;
};

const std::map<std::string, FigureSpec, std::less<>>& figures() {
  const std::vector<std::string> xyzvw = {"W", "V", "Z", "X", "Y"};
  const std::vector<std::string> with_c = {"W", "V", "Z", "X", "C", "Y"};
  static const std::map<std::string, FigureSpec, std::less<>> figs = {
      {"fig1a",
       {{"ability", "early_tests", "late_tests", "intervention", "gpa"},
        {{"intervention", "gpa"}, {"ability", "intervention"}, {"ability", "gpa"}, {"ability", "early_tests"},
         {"ability", "late_tests"}, {"intervention", "late_tests"}},
        {{"Y", "gpa"}, {"X", "intervention"}, {"W", "ability"}, {"Z", "early_tests"}, {"V", "late_tests"}}}},
      {"fig1b",
       {{"ability", "early_tests_1", "early_tests_2", "intervention", "gpa"},
        {{"intervention", "gpa"}, {"ability", "intervention"}, {"ability", "gpa"}, {"ability", "early_tests_1"},
         {"ability", "early_tests_2"}, {"early_tests_1", "intervention"}, {"early_tests_2", "gpa"}},
        {{"Y", "gpa"}, {"X", "intervention"}, {"W", "ability"}, {"Z", "early_tests_1"}, {"V", "early_tests_2"}}}},
      {"fig1c",
       {{"ability", "early_tests", "intervention", "gpa", "late_tests"},
        {{"intervention", "gpa"}, {"ability", "intervention"}, {"ability", "gpa"}, {"ability", "early_tests"},
         {"ability", "late_tests"}, {"gpa", "late_tests"}},
        {{"Y", "gpa"}, {"X", "intervention"}, {"W", "ability"}, {"Z", "early_tests"}, {"V", "late_tests"}}}},
      {"fig1d",
       {{"ability", "early_tests_1", "early_tests_2", "intervention", "late_tests", "gpa"},
        {{"intervention", "gpa"}, {"ability", "intervention"}, {"ability", "gpa"}, {"ability", "early_tests_1"},
         {"ability", "early_tests_2"}, {"ability", "late_tests"}, {"early_tests_2", "gpa"}, {"late_tests", "gpa"},
         {"early_tests_2", "intervention"}, {"intervention", "late_tests"}},
        {{"Y", "gpa"},
         {"X", "intervention"},
         {"W", "ability"},
         {"Z", "early_tests_1"},
         {"V", "early_tests_2"},
         {"C", "late_tests"}}}},
      {"fig2a", {xyzvw, {{"X", "Y"}, {"W", "X"}, {"W", "Y"}, {"W", "Z"}, {"W", "V"}, {"V", "X"}}, {}}},
      {"fig2b", {xyzvw, {{"X", "Y"}, {"W", "X"}, {"W", "Y"}, {"W", "Z"}, {"V", "W"}, {"V", "X"}}, {}}},
      {"fig2c", {xyzvw, {{"X", "Y"}, {"W", "X"}, {"W", "Y"}, {"W", "Z"}, {"W", "V"}, {"X", "V"}}, {}}},
      {"fig3a", {xyzvw, {{"X", "Y"}, {"W", "X"}, {"W", "Y"}, {"W", "Z"}, {"W", "V"}, {"V", "Y"}}, {}}},
      {"fig3b", {xyzvw, {{"X", "Y"}, {"W", "X"}, {"W", "Y"}, {"Z", "W"}, {"W", "V"}, {"V", "Y"}}, {}}},
      {"fig3c", {xyzvw, {{"X", "Y"}, {"W", "X"}, {"W", "Y"}, {"W", "Z"}, {"V", "W"}, {"V", "Y"}}, {}}},
      {"fig4a", {xyzvw, {{"X", "Y"}, {"W", "X"}, {"W", "Y"}, {"W", "Z"}, {"W", "V"}, {"Y", "V"}}, {}}},
      {"fig4b", {xyzvw, {{"X", "Y"}, {"W", "X"}, {"W", "Y"}, {"Z", "W"}, {"W", "V"}, {"Y", "V"}}, {}}},
      {"fig5a",
       {with_c,
        {{"X", "Y"}, {"W", "X"}, {"W", "Y"}, {"W", "Z"}, {"W", "V"}, {"W", "C"}, {"V", "Y"}, {"C", "Y"}, {"V", "X"},
         {"X", "C"}},
        {}}},
      {"fig5b",
       {with_c,
        {{"X", "Y"}, {"W", "X"}, {"W", "Y"}, {"W", "Z"}, {"V", "W"}, {"W", "C"}, {"V", "Y"}, {"C", "Y"}, {"V", "X"},
         {"X", "C"}},
        {}}},
      {"fig5c",
       {with_c,
        {{"X", "Y"}, {"W", "X"}, {"W", "Y"}, {"Z", "W"}, {"W", "V"}, {"W", "C"}, {"V", "Y"}, {"C", "Y"}, {"V", "X"},
         {"X", "C"}},
        {}}},
      {"fig6a", {xyzvw, {{"X", "Y"}, {"W", "X"}, {"W", "Y"}, {"W", "Z"}, {"W", "V"}, {"V", "X"}, {"X", "Z"}}, {}}},
      {"fig6b", {xyzvw, {{"X", "Y"}, {"W", "X"}, {"W", "Y"}, {"W", "Z"}, {"V", "W"}, {"V", "X"}, {"X", "Z"}}, {}}},
      {"fig6c", {xyzvw, {{"X", "Y"}, {"W", "X"}, {"W", "Y"}, {"W", "Z"}, {"W", "V"}, {"X", "V"}, {"X", "Z"}}, {}}},
      {"fig7a",
       {with_c,
        {{"X", "Y"}, {"W", "X"}, {"W", "Y"}, {"W", "Z"}, {"W", "V"}, {"W", "C"}, {"V", "Y"}, {"C", "Y"}, {"X", "Z"},
         {"V", "X"}, {"X", "C"}},
        {}}},
      {"fig7b",
       {with_c,
        {{"X", "Y"}, {"W", "X"}, {"W", "Y"}, {"W", "Z"}, {"V", "W"}, {"W", "C"}, {"V", "Y"}, {"C", "Y"}, {"V", "X"},
         {"X", "Z"}, {"X", "C"}},
        {}}},
  };
  return figs;
}

}  // namespace

Dag figure(std::string_view id) {
  const auto& figs = figures();
  const auto it = figs.find(id);
  if (it == figs.end()) throw Error(ErrorCode::InvalidArgument, "unknown builtin graph '" + std::string(id) + "'");
  return Dag(it->second.nodes, it->second.edges, it->second.roles);
}

const std::vector<std::string>& figure_ids() {
  static const std::vector<std::string> ids = [] {
    std::vector<std::string> out;
    for (const auto& [k, v] : figures()) out.push_back(k);
    return out;
  }();
  return ids;
}

int proposition_for(std::string_view figure_id) {
  if (figure_id.size() < 4 || figure_id.substr(0, 3) != "fig") {
    throw Error(ErrorCode::InvalidArgument, "not a figure id: " + std::string(figure_id));
  }
  switch (figure_id[3]) {
    case '2': return 1;
    case '3': return 2;
    case '4': return 3;
    case '5': return 4;
    case '6': return 6;
    case '7': return 7;
    default: return 0;
  }
}

std::string proposition5_conclusion_for(std::string_view figure_id) {
  if (figure_id == "fig3c" || figure_id.starts_with("fig6")) return "ii.";
  if (figure_id.starts_with("fig2") || figure_id == "fig3a" || figure_id == "fig3b" || figure_id.starts_with("fig4")) {
    return "i.";
  }
  return {};
}

}  // namespace builtin

}  // namespace triproxy
