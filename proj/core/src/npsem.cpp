#include "triproxy/npsem.hpp"

#include "triproxy/error.hpp"
#include "triproxy/random.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace triproxy {

namespace {

Dag build_graph(const std::vector<NodeSpec>& nodes, std::map<std::string, std::string> roles) {
  std::vector<std::string> names;
  std::vector<Dag::Edge> edges;
  for (const auto& n : nodes) names.push_back(n.space.name);
  for (const auto& n : nodes) {
    for (const auto& p : n.parents) edges.emplace_back(p, n.space.name);
  }
  return Dag(std::move(names), std::move(edges), std::move(roles));
}

std::size_t parent_configs(const Npsem& m, const NodeSpec& n) {
  std::size_t c = 1;
  for (const auto& p : n.parents) c *= m.node(p).space.cardinality;
  return c;
}

}  // namespace

Npsem::Npsem(std::vector<NodeSpec> nodes, std::map<std::string, std::string> roles)
    : nodes_(std::move(nodes)), graph_(build_graph(nodes_, std::move(roles))) {
  for (const auto& n : nodes_) {
    n.space.validate();
    const std::size_t configs = parent_configs(*this, n);
    if (n.noise_card == 0) throw Error(ErrorCode::InvalidArgument, n.space.name + ": noise_card must be positive");
    if (n.table.size() != configs * n.noise_card) {
      throw Error(ErrorCode::InvalidArgument, n.space.name + ": table needs " + std::to_string(configs * n.noise_card) +
                                                  " entries, got " + std::to_string(n.table.size()));
    }
    for (auto v : n.table) {
      if (v >= n.space.cardinality) throw Error(ErrorCode::InvalidArgument, n.space.name + ": table entry out of range");
    }
    if (n.noise_pmf.size() != n.noise_card) {
      throw Error(ErrorCode::InvalidArgument, n.space.name + ": noise_pmf length differs from noise_card");
    }
    double total = 0;
    for (auto p : n.noise_pmf) {
      if (!(p >= 0) || !std::isfinite(p)) throw Error(ErrorCode::NegativeProbability, n.space.name + ": bad noise_pmf");
      total += p;
    }
    if (std::abs(total - 1.0) > kMassTolerance) {
      throw Error(ErrorCode::InvalidArgument, n.space.name + ": noise_pmf does not sum to 1");
    }
  }
}

std::vector<VarSpace> Npsem::spaces() const {
  std::vector<VarSpace> out;
  for (const auto& n : nodes_) out.push_back(n.space);
  return out;
}

std::string Npsem::role_node(std::string_view role) const {
  auto n = graph_.node_for_role(role);
  if (!n) throw Error(ErrorCode::MissingRole, "model has no node for role " + std::string(role));
  return *n;
}

MarkovKernel Npsem::kernel(std::string_view name) const {
  const auto& n = node(name);
  std::vector<VarSpace> given;
  for (const auto& p : n.parents) given.push_back(node(p).space);
  const std::size_t configs = parent_configs(*this, n);
  std::vector<double> values(configs * n.space.cardinality, 0.0);
  for (std::size_t g = 0; g < configs; ++g) {
    for (std::size_t e = 0; e < n.noise_card; ++e) {
      values[g * n.space.cardinality + n.table[g * n.noise_card + e]] += n.noise_pmf[e];
    }
  }
  return MarkovKernel(n.space, std::move(given), std::move(values));
}

// ---------------------------------------------------------------------------
// JSON

Json to_json(const Npsem& m) {
  Json nodes = Json::array();
  for (const auto& n : m.nodes()) {
    Json j = to_json(n.space);
    j["parents"] = n.parents;
    j["noise_card"] = n.noise_card;
    j["table"] = n.table;
    j["noise_pmf"] = n.noise_pmf;
    if (n.latent) j["latent"] = true;
    nodes.push_back(std::move(j));
  }
  Json out{{"nodes", nodes}};
  if (!m.graph().roles().empty()) out["roles"] = m.graph().roles();
  return out;
}

Npsem npsem_from_json(const Json& j) {
  std::vector<NodeSpec> nodes;
  std::map<std::string, std::string> roles;
  try {
    for (const auto& n : j.at("nodes")) {
      NodeSpec s;
      s.space = var_space_from_json(n);
      s.parents = n.value("parents", std::vector<std::string>{});
      s.noise_card = n.at("noise_card").get<std::size_t>();
      s.table = n.at("table").get<std::vector<std::size_t>>();
      s.noise_pmf = n.at("noise_pmf").get<std::vector<double>>();
      s.latent = n.value("latent", false);
      nodes.push_back(std::move(s));
    }
    if (j.contains("roles")) roles = j.at("roles").get<std::map<std::string, std::string>>();
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("bad model file: ") + e.what());
  }
  return Npsem(std::move(nodes), std::move(roles));
}

// ---------------------------------------------------------------------------
// enumeration

namespace {

struct Source {
  std::size_t world;
  std::size_t node;
};

class Enumerator {
 public:
  Enumerator(const Npsem& m, std::vector<std::vector<int>> clamp, std::vector<Source> outputs)
      : m_(m), clamp_(std::move(clamp)), outputs_(std::move(outputs)) {
    const auto& g = m.graph();
    std::set<std::size_t> needed;
    for (const auto& s : outputs_) needed.insert(s.node);
    const auto relevant = g.ancestors_inclusive(needed);
    for (auto n : g.topological_order()) {
      if (relevant.count(n)) order_.push_back(n);
    }
    const std::size_t worlds = clamp_.size();
    values_.assign(worlds, std::vector<std::size_t>(m.nodes().size(), 0));
    std::size_t cells = 1;
    strides_.resize(outputs_.size());
    for (std::size_t i = outputs_.size(); i-- > 0;) {
      strides_[i] = cells;
      cells *= m.nodes()[outputs_[i].node].space.cardinality;
    }
    out_.assign(cells, 0.0);
    configs_.resize(worlds);
  }

  std::vector<double> run() {
    rec(0, 1.0);
    return std::move(out_);
  }

 private:
  void rec(std::size_t depth, double p) {
    if (depth == order_.size()) {
      if (++leaves_ > kEnumerationLimit) {
        throw Error(ErrorCode::EnumerationTooLarge,
                    "more than " + std::to_string(kEnumerationLimit) + " distinct noise outcomes to enumerate");
      }
      std::size_t flat = 0;
      for (std::size_t i = 0; i < outputs_.size(); ++i) flat += values_[outputs_[i].world][outputs_[i].node] * strides_[i];
      out_[flat] += p;
      return;
    }
    const std::size_t n = order_[depth];
    const auto& spec = m_.nodes()[n];
    const std::size_t worlds = clamp_.size();
    for (std::size_t w = 0; w < worlds; ++w) {
      std::size_t cfg = 0;
      for (auto pi : m_.graph().parents(n)) cfg = cfg * m_.nodes()[pi].space.cardinality + values_[w][pi];
      configs_[w] = cfg;
    }

    // Group noise levels by the tuple of values they produce across worlds.
    std::vector<std::vector<std::size_t>> tuples;
    std::vector<double> mass;
    std::vector<std::size_t> tuple(worlds);
    for (std::size_t e = 0; e < spec.noise_card; ++e) {
      const double q = spec.noise_pmf[e];
      if (q == 0.0) continue;
      for (std::size_t w = 0; w < worlds; ++w) {
        tuple[w] = clamp_[w][n] >= 0 ? static_cast<std::size_t>(clamp_[w][n]) : spec.table[configs_[w] * spec.noise_card + e];
      }
      auto it = std::find(tuples.begin(), tuples.end(), tuple);
      if (it == tuples.end()) {
        tuples.push_back(tuple);
        mass.push_back(q);
      } else {
        mass[static_cast<std::size_t>(it - tuples.begin())] += q;
      }
    }
    for (std::size_t k = 0; k < tuples.size(); ++k) {
      for (std::size_t w = 0; w < worlds; ++w) values_[w][n] = tuples[k][w];
      rec(depth + 1, p * mass[k]);
    }
  }

  const Npsem& m_;
  std::vector<std::vector<int>> clamp_;
  std::vector<Source> outputs_;
  std::vector<std::size_t> order_;
  std::vector<std::vector<std::size_t>> values_;
  std::vector<std::size_t> configs_;
  std::vector<std::size_t> strides_;
  std::vector<double> out_;
  std::size_t leaves_ = 0;
};

}  // namespace

ProbTensor observable_joint(const Npsem& m) {
  std::vector<Source> outputs;
  for (std::size_t i = 0; i < m.nodes().size(); ++i) outputs.push_back({0, i});
  std::vector<std::vector<int>> clamp(1, std::vector<int>(m.nodes().size(), -1));
  auto values = Enumerator(m, std::move(clamp), std::move(outputs)).run();
  return ProbTensor(m.spaces(), std::move(values));
}

const std::string& CounterfactualJoint::arm_axis(const std::vector<std::size_t>& levels) const {
  for (std::size_t a = 0; a < arms.size(); ++a) {
    if (arms[a] == levels) return arm_axes[a];
  }
  throw Error(ErrorCode::InvalidArgument, "no such intervention setting");
}

CounterfactualJoint counterfactual_joint(const Npsem& m, const std::vector<std::string>& intervene, std::string outcome,
                                         std::vector<std::string> keep) {
  if (intervene.empty()) throw Error(ErrorCode::InvalidArgument, "intervention set is empty");
  if (outcome.empty()) outcome = m.role_node("Y");
  const std::size_t y = m.graph().index_of(outcome);
  if (keep.empty()) {
    for (const auto& n : m.nodes()) keep.push_back(n.space.name);
  }
  std::vector<std::size_t> fixed;
  for (const auto& i : intervene) {
    fixed.push_back(m.graph().index_of(i));
    if (fixed.back() == y) throw Error(ErrorCode::InvalidArgument, "cannot intervene on the outcome");
  }

  CounterfactualJoint cj{ProbTensor({VarSpace::categorical("_", 1)}, {1.0}), outcome, intervene, {}, {}};
  // Settings of the intervened nodes, row-major.
  std::size_t settings = 1;
  for (auto f : fixed) settings *= m.nodes()[f].space.cardinality;
  for (std::size_t a = 0; a < settings; ++a) {
    std::vector<std::size_t> levels(fixed.size());
    std::size_t rest = a;
    for (std::size_t k = fixed.size(); k-- > 0;) {
      levels[k] = rest % m.nodes()[fixed[k]].space.cardinality;
      rest /= m.nodes()[fixed[k]].space.cardinality;
    }
    cj.arms.push_back(std::move(levels));
  }

  const std::size_t worlds = 1 + cj.arms.size();
  std::vector<std::vector<int>> clamp(worlds, std::vector<int>(m.nodes().size(), -1));
  std::vector<Source> outputs;
  std::vector<VarSpace> axes;
  for (std::size_t a = 0; a < cj.arms.size(); ++a) {
    std::string name = outcome + "(";
    for (std::size_t k = 0; k < fixed.size(); ++k) {
      clamp[a + 1][fixed[k]] = static_cast<int>(cj.arms[a][k]);
      name += (k ? "," : "") + intervene[k] + "=" + std::to_string(cj.arms[a][k]);
    }
    name += ")";
    cj.arm_axes.push_back(name);
    outputs.push_back({a + 1, y});
    axes.push_back(m.nodes()[y].space.renamed(name));
  }
  for (const auto& k : keep) {
    const std::size_t i = m.graph().index_of(k);
    outputs.push_back({0, i});
    axes.push_back(m.nodes()[i].space);
  }
  auto values = Enumerator(m, std::move(clamp), std::move(outputs)).run();
  cj.joint = ProbTensor(std::move(axes), std::move(values));
  return cj;
}

bool factorizes(const ProbTensor& t, const std::set<std::string>& left, const std::set<std::string>& right,
                const std::set<std::string>& given, double tol) {
  std::vector<std::string> order;
  order.insert(order.end(), left.begin(), left.end());
  order.insert(order.end(), right.begin(), right.end());
  order.insert(order.end(), given.begin(), given.end());
  const auto p = marginal(t, order);
  auto count = [&](const std::set<std::string>& s) {
    std::size_t c = 1;
    for (const auto& n : s) c *= t.axis(n).cardinality;
    return c;
  };
  const std::size_t nl = count(left), nr = count(right), ng = count(given);
  std::vector<double> pg(ng, 0.0), plg(nl * ng, 0.0), prg(nr * ng, 0.0);
  for (std::size_t l = 0; l < nl; ++l) {
    for (std::size_t r = 0; r < nr; ++r) {
      for (std::size_t g = 0; g < ng; ++g) {
        const double v = p[(l * nr + r) * ng + g];
        pg[g] += v;
        plg[l * ng + g] += v;
        prg[r * ng + g] += v;
      }
    }
  }
  for (std::size_t l = 0; l < nl; ++l) {
    for (std::size_t r = 0; r < nr; ++r) {
      for (std::size_t g = 0; g < ng; ++g) {
        const double lhs = p[(l * nr + r) * ng + g] * pg[g];
        if (std::abs(lhs - plg[l * ng + g] * prg[r * ng + g]) > tol) return false;
      }
    }
  }
  return true;
}

bool check_counterfactual_ci(const Npsem& m, const CounterfactualQuery& q, double tol) {
  std::vector<std::string> keep;
  for (const auto& r : q.right) keep.push_back(r);
  for (const auto& g : q.given) {
    if (q.right.count(g)) throw Error(ErrorCode::InvalidArgument, "query sets overlap: right/given");
    keep.push_back(g);
  }
  const auto cj = counterfactual_joint(m, q.intervene, q.outcome, keep);
  for (const auto& axis : cj.arm_axes) {
    if (!factorizes(cj.joint, {axis}, q.right, q.given, tol)) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// sampling

Dataset sample(const Npsem& m, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "sample size must be at least 1");
  Dataset d{m.spaces(), {}};
  const std::size_t cols = m.nodes().size();
  d.cells.assign(n * cols, 0);
  Rng rng(seed);
  std::vector<std::vector<double>> cdfs;
  for (const auto& node : m.nodes()) {
    std::vector<double> cdf(node.noise_card);
    std::partial_sum(node.noise_pmf.begin(), node.noise_pmf.end(), cdf.begin());
    cdfs.push_back(std::move(cdf));
  }
  std::vector<std::vector<std::size_t>> parent_idx;
  for (const auto& node : m.nodes()) {
    std::vector<std::size_t> idx;
    for (const auto& p : node.parents) idx.push_back(m.graph().index_of(p));
    parent_idx.push_back(std::move(idx));
  }
  for (std::size_t r = 0; r < n; ++r) {
    std::size_t* row = d.cells.data() + r * cols;
    for (auto i : m.graph().topological_order()) {
      const auto& node = m.nodes()[i];
      const double u = uniform01(rng) * cdfs[i].back();
      auto e = static_cast<std::size_t>(std::upper_bound(cdfs[i].begin(), cdfs[i].end(), u) - cdfs[i].begin());
      e = std::min(e, node.noise_card - 1);
      std::size_t cfg = 0;
      for (auto p : parent_idx[i]) cfg = cfg * m.nodes()[p].space.cardinality + row[p];
      row[i] = node.table[cfg * node.noise_card + e];
    }
  }
  return d;
}

ProbTensor empirical_tensor(const Dataset& d, const std::vector<std::string>& keep) {
  std::vector<std::size_t> cols;
  std::vector<VarSpace> axes;
  if (keep.empty()) {
    for (std::size_t i = 0; i < d.columns.size(); ++i) cols.push_back(i);
  } else {
    for (const auto& k : keep) {
      auto it = std::find_if(d.columns.begin(), d.columns.end(), [&](const VarSpace& v) { return v.name == k; });
      if (it == d.columns.end()) throw Error(ErrorCode::UnknownAxis, "dataset has no column '" + k + "'");
      cols.push_back(static_cast<std::size_t>(it - d.columns.begin()));
    }
  }
  for (auto c : cols) axes.push_back(d.columns[c]);
  std::vector<double> counts(total_cells(axes), 0.0);
  const std::size_t ncol = d.columns.size();
  for (std::size_t r = 0; r < d.rows(); ++r) {
    std::size_t flat = 0;
    for (auto c : cols) flat = flat * d.columns[c].cardinality + d.cells[r * ncol + c];
    counts[flat] += 1.0;
  }
  return ProbTensor::from_weights(std::move(axes), std::move(counts));
}

// ---------------------------------------------------------------------------
// random models

std::string_view to_string(ProxyDesign d) {
  switch (d) {
    case ProxyDesign::Outcome: return "outcome";
    case ProxyDesign::Treatment: return "treatment";
    case ProxyDesign::CondTreatment: return "cond-treatment";
    case ProxyDesign::Auxiliary: return "auxiliary";
  }
  return "?";
}

NodeSpec encode_kernel(VarSpace space, std::vector<std::string> parents, const std::vector<std::vector<double>>& pmfs) {
  const std::size_t n = space.cardinality;
  std::vector<std::vector<double>> cdfs;
  std::vector<double> cuts;
  for (const auto& pmf : pmfs) {
    if (pmf.size() != n) throw Error(ErrorCode::InvalidArgument, space.name + ": pmf has the wrong length");
    std::vector<double> cdf(n);
    std::partial_sum(pmf.begin(), pmf.end(), cdf.begin());
    cdf.back() = 1.0;
    for (std::size_t v = 0; v + 1 < n; ++v) {
      cdf[v] = std::clamp(cdf[v], 0.0, 1.0);
      if (cdf[v] > 0.0 && cdf[v] < 1.0) cuts.push_back(cdf[v]);
    }
    cdfs.push_back(std::move(cdf));
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  cuts.push_back(1.0);

  NodeSpec spec{std::move(space), std::move(parents), cuts.size(), {}, {}, false};
  double lo = 0.0;
  for (double hi : cuts) spec.noise_pmf.push_back(hi - lo), lo = hi;
  spec.table.resize(pmfs.size() * spec.noise_card);
  for (std::size_t g = 0; g < pmfs.size(); ++g) {
    lo = 0.0;
    for (std::size_t e = 0; e < cuts.size(); ++e) {
      const double mid = 0.5 * (lo + cuts[e]);
      const auto v = static_cast<std::size_t>(std::upper_bound(cdfs[g].begin(), cdfs[g].end(), mid) - cdfs[g].begin());
      spec.table[g * spec.noise_card + e] = std::min(v, n - 1);
      lo = cuts[e];
    }
  }
  return spec;
}

namespace {

double min_singular(const Eigen::MatrixXd& a) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
  const auto& s = svd.singularValues();
  return s.size() ? s(s.size() - 1) : 0.0;
}

// Columns of f_{A|W} from a joint over (A, W), W second.
Eigen::MatrixXd columns_given(const Eigen::MatrixXd& joint_aw) {
  Eigen::MatrixXd out = joint_aw;
  for (Eigen::Index w = 0; w < out.cols(); ++w) {
    const double s = out.col(w).sum();
    if (s > 0) out.col(w) /= s;
  }
  return out;
}

}  // namespace

ConditioningReport design_conditioning(const Npsem& m, ProxyDesign design) {
  const auto joint = observable_joint(m);
  const std::string w = m.role_node("W"), z = m.role_node("Z"), v = m.role_node("V");
  std::string c, s;
  switch (design) {
    case ProxyDesign::Outcome: c = m.role_node("Y"), s = m.role_node("X"); break;
    case ProxyDesign::Treatment: c = m.role_node("X"); break;
    case ProxyDesign::CondTreatment: c = m.role_node("X"), s = m.role_node("Y"); break;
    case ProxyDesign::Auxiliary: c = m.role_node("C"), s = m.role_node("X"); break;
  }
  ConditioningReport r;
  r.min_zw_singular = r.min_vw_singular = r.min_stratum_mass = r.min_c_separation = r.min_cell_mass = 1e300;
  const std::size_t ns = s.empty() ? 1 : joint.axis(s).cardinality;
  const std::size_t k = joint.axis(w).cardinality;
  for (std::size_t level = 0; level < ns; ++level) {
    ProbTensor t = joint;
    std::vector<std::string> keep = {z, c, v, w};
    if (!s.empty()) {
      keep.push_back(s);
      const auto ms = marginal(joint, std::vector<std::string>{s});
      r.min_stratum_mass = std::min(r.min_stratum_mass, ms[level]);
      if (ms[level] <= 0) {
        r.ok = false;
        return r;
      }
      t = slice(marginal(joint, keep), s, level);
    } else {
      t = marginal(joint, keep);
    }
    const auto fw = marginal(t, std::vector<std::string>{w});
    for (std::size_t i = 0; i < k; ++i) r.min_stratum_mass = std::min(r.min_stratum_mass, fw[i]);
    r.min_zw_singular = std::min(r.min_zw_singular, min_singular(columns_given(as_matrix(marginal(t, std::vector<std::string>{z, w})))));
    r.min_vw_singular = std::min(r.min_vw_singular, min_singular(columns_given(as_matrix(marginal(t, std::vector<std::string>{v, w})))));
    const auto cw = columns_given(as_matrix(marginal(t, std::vector<std::string>{c, w})));
    for (std::size_t a = 0; a < k; ++a) {
      for (std::size_t b = a + 1; b < k; ++b) {
        r.min_c_separation = std::min(r.min_c_separation, (cw.col(a) - cw.col(b)).lpNorm<1>());
      }
    }
    if (design == ProxyDesign::Auxiliary) {
      const auto wv = as_matrix(marginal(t, std::vector<std::string>{w, v}));
      r.min_cell_mass = std::min(r.min_cell_mass, wv.minCoeff() * marginal(joint, std::vector<std::string>{s})[level]);
    } else {
      for (std::size_t i = 0; i < k; ++i) r.min_cell_mass = std::min(r.min_cell_mass, fw[i]);
    }
  }
  r.ok = r.min_zw_singular >= 0.05 && r.min_vw_singular >= 0.05 && r.min_stratum_mass >= 0.02 &&
         r.min_c_separation >= 0.05 && r.min_cell_mass >= 1e-4;
  return r;
}

std::optional<ProxyDesign> figure_design(std::string_view id) {
  if (id == "fig1a") return ProxyDesign::Outcome;
  if (id == "fig1c") return ProxyDesign::CondTreatment;
  if (id == "fig1d") return ProxyDesign::Auxiliary;
  if (id.starts_with("fig2") || id.starts_with("fig6")) return ProxyDesign::Outcome;
  if (id.starts_with("fig3")) return ProxyDesign::Treatment;
  if (id.starts_with("fig4")) return ProxyDesign::CondTreatment;
  if (id.starts_with("fig5") || id.starts_with("fig7")) return ProxyDesign::Auxiliary;
  return std::nullopt;
}

namespace {

std::vector<double> iota_levels(std::size_t n) {
  std::vector<double> l(n);
  std::iota(l.begin(), l.end(), 0.0);
  return l;
}

// pmf over 0..top with the requested mean, mixing a flat Dirichlet draw with a point mass at an end.
std::vector<double> pmf_with_mean(Rng& rng, std::size_t top, double target) {
  auto base = dirichlet_ones(rng, top + 1);
  double mean = 0;
  for (std::size_t i = 0; i <= top; ++i) mean += static_cast<double>(i) * base[i];
  if (mean <= target) {
    const double lambda = (static_cast<double>(top) - target) / (static_cast<double>(top) - mean);
    for (auto& p : base) p *= lambda;
    base[top] += 1.0 - lambda;
  } else {
    const double lambda = target / mean;
    for (auto& p : base) p *= lambda;
    base[0] += 1.0 - lambda;
  }
  return base;
}

std::vector<double> sorted_uniform(Rng& rng, std::size_t n, double lo, double hi) {
  std::vector<double> out(n);
  for (auto& x : out) x = lo + (hi - lo) * uniform01(rng);
  std::sort(out.begin(), out.end());
  return out;
}

Npsem draw_model(const Dag& g, Rng& rng, const GeneratorOptions& opt) {
  const std::size_t k = opt.latent_dim;
  std::map<std::string, std::string> role_of;
  for (const char* role : {"Y", "X", "W", "V", "Z", "C"}) {
    if (auto n = g.node_for_role(role)) role_of[*n] = role;
  }
  auto space_for = [&](const std::string& name) {
    std::size_t card = opt.other_card;
    if (auto it = role_of.find(name); it != role_of.end()) {
      const auto& r = it->second;
      if (r == "W") card = k;
      else if (r == "Z" || r == "V") card = k + 1;
      else if (r == "X") card = 2;
      else if (r == "Y") card = opt.outcome == OutcomeShape::Generic ? opt.y_card : 2;
      else if (r == "C") card = opt.c_card;
    }
    return VarSpace::numeric(name, iota_levels(card));
  };
  std::map<std::string, VarSpace> spaces;
  for (const auto& n : g.nodes()) spaces.emplace(n, space_for(n));

  // Shape parameters drawn once per model.
  const double gamma = 0.6 + 1.2 * uniform01(rng);
  const auto p0 = sorted_uniform(rng, k, 0.2, 0.5);
  auto cate = sorted_uniform(rng, k, -0.1, 0.3);
  if (opt.outcome == OutcomeShape::RankViolating) std::reverse(cate.begin(), cate.end());
  if (opt.outcome == OutcomeShape::ConstantEffect) std::fill(cate.begin(), cate.end(), opt.constant_effect);
  std::vector<double> v_shift;
  if (auto vn = g.node_for_role("V")) {
    for (std::size_t i = 0; i < spaces.at(*vn).cardinality; ++i) v_shift.push_back(-0.05 + 0.1 * uniform01(rng));
  }

  std::vector<NodeSpec> nodes;
  for (const auto& name : g.nodes()) {
    const auto parents = g.parent_names(name);
    std::size_t configs = 1;
    for (const auto& p : parents) configs *= spaces.at(p).cardinality;
    const auto role = role_of.count(name) ? role_of.at(name) : std::string();
    auto parent_level = [&](std::size_t cfg, const std::string& which) -> std::optional<std::size_t> {
      std::size_t rest = cfg;
      std::optional<std::size_t> out;
      for (std::size_t i = parents.size(); i-- > 0;) {
        const std::size_t card = spaces.at(parents[i]).cardinality;
        if (role_of.count(parents[i]) && role_of.at(parents[i]) == which) out = rest % card;
        rest /= card;
      }
      return out;
    };

    std::vector<std::vector<double>> pmfs;
    for (std::size_t cfg = 0; cfg < configs; ++cfg) {
      const std::size_t card = spaces.at(name).cardinality;
      if (role == "Z" && opt.z_shape != ZShape::Generic) {
        const auto w = parent_level(cfg, "W");
        if (!w) throw Error(ErrorCode::InvalidArgument, "shaped Z requires W to be a parent of Z");
        const double kk = static_cast<double>(k);
        double target = static_cast<double>(*w);
        if (opt.z_shape == ZShape::MonotoneIncreasing) target = kk * std::pow((static_cast<double>(*w) + 0.5) / kk, gamma);
        if (opt.z_shape == ZShape::MonotoneDecreasing) {
          target = kk * std::pow((kk - 1.0 - static_cast<double>(*w) + 0.5) / kk, gamma);
        }
        pmfs.push_back(pmf_with_mean(rng, card - 1, target));
      } else if (role == "Y" && opt.outcome != OutcomeShape::Generic) {
        const auto w = parent_level(cfg, "W");
        const auto x = parent_level(cfg, "X");
        if (!w || !x) throw Error(ErrorCode::InvalidArgument, "shaped Y requires X and W as parents");
        const auto v = parent_level(cfg, "V");
        double p = p0[*w] + (*x == 1 ? cate[*w] : 0.0) + (v ? v_shift[*v] : 0.0);
        pmfs.push_back({1.0 - p, p});
      } else {
        pmfs.push_back(dirichlet_ones(rng, card));
      }
    }
    auto spec = encode_kernel(spaces.at(name), parents, pmfs);
    spec.latent = opt.latent_nodes.count(name) > 0;
    nodes.push_back(std::move(spec));
  }
  return Npsem(std::move(nodes), g.roles());
}

}  // namespace

Npsem random_npsem(const Dag& g, std::uint64_t seed, const GeneratorOptions& opt) {
  if (opt.latent_dim < 1) throw Error(ErrorCode::InvalidArgument, "latent_dim must be at least 1");
  Rng rng(seed);
  for (int attempt = 0; attempt < std::max(1, opt.max_tries); ++attempt) {
    auto m = draw_model(g, rng, opt);
    if (!opt.validate_for || design_conditioning(m, *opt.validate_for).ok) return m;
  }
  throw Error(ErrorCode::InvalidArgument, "no well-conditioned model found in " + std::to_string(opt.max_tries) +
                                              " draws (seed " + std::to_string(seed) + ")");
}

Npsem random_figure_model(std::string_view figure_id, std::uint64_t seed, GeneratorOptions opt) {
  const auto g = builtin::figure(figure_id);
  if (!opt.validate_for) opt.validate_for = figure_design(figure_id);
  if (opt.latent_nodes.empty()) {
    if (auto w = g.node_for_role("W")) opt.latent_nodes.insert(*w);
  }
  return random_npsem(g, seed, opt);
}

}  // namespace triproxy
