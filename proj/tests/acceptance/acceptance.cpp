// One PASS/FAIL line per acceptance criterion; exits nonzero on any FAIL.

#include "common.hpp"
#include "oracle.hpp"

#include "triproxy/bounds.hpp"
#include "triproxy/cli.hpp"
#include "triproxy/error.hpp"
#include "triproxy/random.hpp"
#include "triproxy/relabel.hpp"
#include "triproxy/spectral.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>

using namespace triproxy;
using namespace triproxy::testing;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Tally {
  std::size_t cases = 0;
  std::vector<std::string> failures;
  double worst = 0;

  void check(bool ok, const std::string& what) {
    ++cases;
    if (!ok && failures.size() < 5) failures.push_back(what);
    if (!ok && failures.size() >= 5) failures.back() = "... and more";
  }
  void within(double err, double tol, const std::string& what) {
    worst = std::max(worst, std::isnan(err) ? INFINITY : err);
    check(err <= tol, what + " err=" + std::to_string(err));
  }
  bool pass() const { return failures.empty() && cases > 0; }
};

std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (const auto& x : v) s += (s.empty() ? "" : "; ") + x;
  return s;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// AC1

Eigen::MatrixXd stochastic(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    const auto d = dirichlet_ones(rng, static_cast<std::size_t>(rows));
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = d[static_cast<std::size_t>(i)];
  }
  return m;
}

// Smallest L-infinity distance between two columns: no mixture of C slices can
// separate two latent states by more than this.
double column_separation(const Eigen::MatrixXd& c) {
  double s = INFINITY;
  for (Eigen::Index a = 0; a < c.cols(); ++a) {
    for (Eigen::Index b = a + 1; b < c.cols(); ++b) s = std::min(s, (c.col(a) - c.col(b)).cwiseAbs().maxCoeff());
  }
  return s;
}

std::string ac1(Tally& t) {
  const auto t0 = Clock::now();
  std::uint64_t draw = 0;
  for (int n = 0; n < 50; ++n) {
    const Eigen::Index k = 2 + n % 5;
    Eigen::MatrixXd z, c, wv;
    Eigen::Index nz = 0, nc = 0, nv = 0;
    for (;;) {
      Rng rng(5000 + draw++);
      nz = k + static_cast<Eigen::Index>(rng() % 5);
      nv = k + static_cast<Eigen::Index>(rng() % 5);
      nc = 2 + static_cast<Eigen::Index>(rng() % 4);
      z = stochastic(rng, nz, k);
      c = stochastic(rng, nc, k);
      const auto g = dirichlet_ones(rng, static_cast<std::size_t>(k * nv));
      wv.resize(k, nv);
      for (Eigen::Index i = 0; i < k * nv; ++i) wv(i / nv, i % nv) = g[static_cast<std::size_t>(i)];
      if (column_separation(c) >= 0.05) break;
    }
    std::vector<double> vals(static_cast<std::size_t>(nz * nc * nv));
    for (Eigen::Index a = 0; a < nz; ++a) {
      for (Eigen::Index b = 0; b < nc; ++b) {
        for (Eigen::Index v = 0; v < nv; ++v) {
          double s = 0;
          for (Eigen::Index w = 0; w < k; ++w) s += z(a, w) * c(b, w) * wv(w, v);
          vals[static_cast<std::size_t>((a * nc + b) * nv + v)] = s;
        }
      }
    }
    const auto joint = ProbTensor::from_weights({VarSpace::categorical("Z", static_cast<std::size_t>(nz)),
                                                 VarSpace::categorical("C", static_cast<std::size_t>(nc)),
                                                 VarSpace::categorical("V", static_cast<std::size_t>(nv))},
                                                vals);
    HsOptions o;
    o.latent_dim = static_cast<std::size_t>(k);
    o.seed = static_cast<std::uint64_t>(n);
    const std::string label = "case " + std::to_string(n) + " K=" + std::to_string(k);
    try {
      const auto f = hs_decompose(joint, o);
      const Eigen::MatrixXd gz = f.z_given_w.matrix(), gc = f.c_given_w.matrix();
      // best common permutation, by exhaustive search
      std::vector<std::size_t> p(static_cast<std::size_t>(k));
      std::iota(p.begin(), p.end(), std::size_t{0});
      double best = INFINITY;
      do {
        double e = 0;
        for (Eigen::Index w = 0; w < k; ++w) {
          const auto j = static_cast<Eigen::Index>(p[static_cast<std::size_t>(w)]);
          e = std::max(e, (z.col(w) - gz.col(j)).cwiseAbs().maxCoeff());
          e = std::max(e, (c.col(w) - gc.col(j)).cwiseAbs().maxCoeff());
          for (Eigen::Index v = 0; v < nv; ++v) {
            e = std::max(e, std::abs(wv(w, v) - f.wv_joint[static_cast<std::size_t>(j * nv + v)]));
          }
        }
        best = std::min(best, e);
      } while (std::next_permutation(p.begin(), p.end()));
      t.within(best, 1e-7, label);
    } catch (const Error& e) {
      t.check(false, label + ": " + e.what());
    }
  }
  const double secs = seconds_since(t0);
  t.check(secs < 5, "took " + fmt(secs) + " s");
  return "50 factor triples, max err " + fmt(t.worst) + ", " + fmt(secs) + " s";
}

// ---------------------------------------------------------------------------
// AC2

std::string ac2(Tally& t) {
  const auto t0 = Clock::now();
  for (const auto& id : oracle_figures()) {
    for (std::size_t k = 2; k <= 3; ++k) {
      for (std::uint64_t s = 0; s < 30; ++s) {
        const std::string label = id + " K=" + std::to_string(k) + " seed " + std::to_string(s);
        try {
          const auto m = random_figure_model(id, 10000 + 100 * k + s, generator(k));
          const auto rep = estimands(identify(tag(*figure_design(id)), observable_joint(m), options_for(m, k, s)));
          const auto tr = truth(m);
          double e = std::abs(*rep.ate - tr.ate);
          e = std::max(e, std::abs(*rep.att - tr.att));
          for (std::size_t a = 0; a < 2; ++a) e = std::max(e, max_abs_diff(rep.potential_pmf[a], tr.pot[a]));
          const auto atoms = cate_atoms(tr.cate, tr.fw);
          const auto& got = *rep.cate_distribution;
          if (got.size() != atoms.size()) e = INFINITY;
          for (std::size_t i = 0; i < atoms.size() && i < got.size(); ++i) {
            e = std::max(e, std::abs(got[i].value - atoms[i].first));
            e = std::max(e, std::abs(got[i].cdf - (i ? got[i - 1].cdf : 0) - atoms[i].second));
          }
          t.within(e, 1e-6, label);
        } catch (const Error& e) {
          t.check(false, label + ": " + e.what());
        }
      }
    }
  }
  const double secs = seconds_since(t0);
  t.check(secs < 60, "took " + fmt(secs) + " s");
  return std::to_string(t.cases - 1) + " fits over 11 graphs, max err " + fmt(t.worst) + ", " + fmt(secs) + " s";
}

// ---------------------------------------------------------------------------
// AC3

std::set<std::string> nodes_for(const Dag& g, const std::set<std::string>& roles) {
  std::set<std::string> out;
  for (const auto& r : roles) out.insert(*g.node_for_role(r));
  return out;
}

std::string ac3(Tally& t) {
  std::size_t certified = 0, simulated = 0;
  for (const auto& id : builtin::figure_ids()) {
    const int prop = builtin::proposition_for(id);
    if (prop == 0) continue;
    const auto g = builtin::figure(id);
    const auto report = check_proposition(g, prop);
    std::vector<Npsem> models;
    for (std::uint64_t s = 0; s < 30; ++s) models.push_back(random_npsem(g, 20000 + s, generator(2)));
    for (const auto& item : report.items) {
      const auto& c = item.conclusion;
      const std::string label = id + " " + c.label;
      if (!c.counterfactual()) {
        t.check(item.status == CertStatus::Certified, label + " not certified");
        ++certified;
        continue;
      }
      t.check(item.status == CertStatus::SimulationOnly, label + " status");
      CounterfactualQuery q;
      for (const auto& r : c.intervene) q.intervene.push_back(*g.node_for_role(r));
      q.right = nodes_for(g, c.query.right);
      q.given = nodes_for(g, c.query.given);
      q.outcome = *g.node_for_role("Y");
      for (const auto& m : models) t.check(check_counterfactual_ci(m, q), label + " fails on a seed");
      ++simulated;
    }
  }
  t.check(!classify_designs(builtin::figure("fig1b")).any_triple_proxy(), "fig1b admits a triple-proxy design");
  t.check(!check_proposition(builtin::figure("fig1b"), 1).all_observational_certified(), "fig1b passes Prop 1");
  t.check(!classify_designs(builtin::figure("fig1c")).contains(Design::DoubleProxy), "fig1c admits a double proxy");
  t.check(classify_designs(builtin::figure("fig1c")).any_triple_proxy(), "fig1c admits no triple proxy");
  return std::to_string(certified) + " certified, " + std::to_string(simulated) + " counterfactual conclusions x 30 seeds";
}

// ---------------------------------------------------------------------------
// AC4

LatentOutcomeModel fit(const Npsem& m, const std::string& id, std::size_t k, std::uint64_t seed) {
  return identify(tag(*figure_design(id)), observable_joint(m), options_for(m, k, seed));
}

std::string ac4(Tally& t) {
  const std::vector<std::string> confounder_ok = {"fig2a", "fig2b", "fig2c", "fig3a", "fig3b",
                                                  "fig4a", "fig4b", "fig5b"};
  const std::vector<double> grid = {0.25, 0.5, 0.75};
  std::size_t graphs = 0;
  for (const auto& id : oracle_figures()) {
    // shaped proxies are drawn as f_{Z|W}; graphs where Z causes W are skipped
    const auto graph = builtin::figure(id);
    const auto& zparents = graph.parents(graph.index_of("Z"));
    if (std::find(zparents.begin(), zparents.end(), graph.index_of("W")) == zparents.end()) continue;
    ++graphs;
    const bool confounders = std::find(confounder_ok.begin(), confounder_ok.end(), id) != confounder_ok.end();
    for (std::size_t k = 2; k <= 3; ++k) {
      for (std::uint64_t s = 0; s < 5; ++s) {
        const std::string label = id + " K=" + std::to_string(k) + " seed " + std::to_string(s);
        try {
          auto g = generator(k);
          g.z_shape = ZShape::Unbiased;
          const auto mu = random_figure_model(id, 30000 + 10 * k + s, g);
          const auto tu = truth(mu);
          const auto lab = relabel_unbiased(fit(mu, id, k, s), RelabelRule::parse("mean-unbiased"));
          const auto cate = stratum_cate(lab.base);
          const auto eff = confounders ? confounder_effects(lab) : ConfounderEffects{};
          double e = 0, ec = 0;
          for (std::size_t i = 0; i < k; ++i) {
            const auto w = static_cast<std::size_t>(std::lround(lab.w_values[i][0]));
            e = std::max(e, std::abs(cate[i] - tu.cate[w]));
            for (std::size_t x = 0; x < eff.means.size(); ++x) {
              ec = std::max(ec, std::abs(eff.means[x][i] - tu.confounder[x][w]));
            }
          }
          t.within(e, 1e-6, label + " unbiased");
          t.within(ec, 1e-6, label + " confounder");

          for (const auto shape : {ZShape::MonotoneIncreasing, ZShape::MonotoneDecreasing}) {
            g.z_shape = shape;
            const auto mm = random_figure_model(id, 31000 + 10 * k + s, g);
            const auto tm = truth(mm);
            const auto lm = relabel_monotone(fit(mm, id, k, s), RelabelRule::parse("mean-monotone"), grid);
            std::vector<std::size_t> order(k);
            std::iota(order.begin(), order.end(), std::size_t{0});
            if (shape == ZShape::MonotoneDecreasing) std::reverse(order.begin(), order.end());
            double em = 0;
            for (const auto& q : lm.quantile_map) {
              em = std::max(em, std::abs(*q.cate - tm.cate[quantile_index(tm.fw, order, q.tau)]));
            }
            t.within(em, 1e-6, label + " monotone");
          }
        } catch (const Error& e) {
          t.check(false, label + ": " + e.what());
        }
      }
    }
  }
  return std::to_string(t.cases) + " checks over " + std::to_string(graphs) + " graphs, max err " + fmt(t.worst);
}

// ---------------------------------------------------------------------------
// AC5

std::string ac5(Tally& t) {
  for (const char* id : {"fig6a", "fig6b", "fig6c", "fig7a", "fig7b"}) {
    const auto design = tag(*figure_design(id));
    for (std::uint64_t s = 0; s < 30; ++s) {
      const std::string label = std::string(id) + " seed " + std::to_string(s);
      try {
        auto g = generator(2);
        g.outcome = OutcomeShape::RankInvariant;
        const auto m = random_figure_model(id, 40000 + s, g);
        const auto tr = truth(m);
        const auto b = bounds(design, observable_joint(m), options_for(m, 2, s));
        t.check(b.att.contains(tr.att) && b.atu.contains(tr.atu), label + " ATT/ATU outside");
        for (std::size_t w = 0; w < 2; ++w) {
          if (design == DesignTag::Auxiliary) {
            for (std::size_t v = 0; v < b.per_v.size(); ++v) {
              if (tr.fwv[w][v] > 1e-12) t.check(b.per_v[v].contains(tr.cate_wv[w][v]), label + " stratum CATE outside");
            }
          } else {
            t.check(Interval{b.s_lower, b.s_upper}.contains(tr.cate[w]), label + " stratum CATE outside");
          }
        }

        g.outcome = OutcomeShape::ConstantEffect;
        const auto mc = random_figure_model(id, 41000 + s, g);
        const auto bc = bounds(design, observable_joint(mc), options_for(mc, 2, s));
        double width = bc.s_upper - bc.s_lower;
        for (const auto& iv : bc.per_v) width = std::max(width, iv.width());
        t.within(std::abs(width), 1e-7, label + " constant-effect width");
      } catch (const Error& e) {
        t.check(false, label + ": " + e.what());
      }
    }
  }
  return std::to_string(t.cases) + " checks over 5 graphs, max constant-effect width " + fmt(t.worst);
}

// ---------------------------------------------------------------------------
// AC6

int invoke(const std::vector<std::string>& args, std::string& out) {
  std::vector<const char*> argv = {"triproxy"};
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream o, e;
  const int code = cli::main_entry(static_cast<int>(argv.size()), argv.data(), o, e);
  out = o.str();
  return code;
}

std::string ac6(Tally& t) {
  // latent relabeling leaves the report unchanged
  for (const auto& id : oracle_figures()) {
    const auto m = random_figure_model(id, 50000, generator(3));
    const auto lm = fit(m, id, 3, 0);
    EstimandOptions eo;
    eo.strict = false;
    const auto ref = dump(to_json(estimands(lm, eo)));
    Permutation p = {0, 1, 2};
    while (std::next_permutation(p.begin(), p.end())) {
      t.check(dump(to_json(estimands(permute_latent(lm, p), eo))) == ref, id + " permuted report differs");
    }
  }

  // mass through every tensor operation
  Rng rng(51);
  for (int n = 0; n < 50; ++n) {
    const std::vector<VarSpace> axes = {VarSpace::categorical("A", 2 + rng() % 3), VarSpace::categorical("B", 2 + rng() % 3),
                                        VarSpace::categorical("C", 2 + rng() % 3)};
    const auto vals = dirichlet_ones(rng, axes[0].cardinality * axes[1].cardinality * axes[2].cardinality);
    const ProbTensor tsr(axes, vals);
    const std::vector<std::string> a = {"A"}, bc = {"B", "C"}, ab = {"A", "B"}, cba = {"C", "B", "A"};
    const auto k = condition(marginal(tsr, ab), a);
    std::vector<double> masses = {marginalize(tsr, a).total_mass(), marginal(tsr, bc).total_mass(),
                                  permute_axes(tsr, cba).total_mass(), slice(tsr, "B", 1).total_mass(),
                                  chain(k, marginal(tsr, a)).total_mass(),
                                  kernel_product(k, marginal(tsr, a)).total_mass(),
                                  product(marginal(tsr, a), marginal(tsr, std::vector<std::string>{"C"})).total_mass()};
    for (const double mass : masses) t.within(std::abs(mass - 1), 1e-10, "tensor op mass");
  }

  // byte-identical CLI reports
  const std::vector<std::vector<std::string>> runs = {
      {"simulate", "--model", "fig5b", "--seed", "9", "-k", "3"},
      {"oracle", "--model", "fig4a", "--seed", "9"},
      {"dag-check", "--graph", "fig2b", "--seeds", "6"},
      {"end-to-end", "--fixture", "fig1a-early-late-tests"},
  };
  for (const auto& r : runs) {
    std::string a, b, c;
    setenv("TRIPROXY_THREADS", "1", 1);
    const int ca = invoke(r, a);
    setenv("TRIPROXY_THREADS", "4", 1);
    const int cb = invoke(r, b);
    invoke(r, c);
    t.check(ca == 0 && cb == 0, r[0] + " failed");
    t.check(a == b && b == c, r[0] + " output differs between runs");
  }
  return std::to_string(t.cases) + " checks";
}

// ---------------------------------------------------------------------------
// AC7

NodeSpec node(const char* name, std::size_t card, std::vector<std::string> parents,
              std::vector<std::vector<double>> pmfs, bool numeric = false) {
  VarSpace s = VarSpace::categorical(name, card);
  if (numeric) {
    std::vector<double> lv(card);
    std::iota(lv.begin(), lv.end(), 0.0);
    s = VarSpace::numeric(name, lv);
  }
  return encode_kernel(s, std::move(parents), std::move(pmfs));
}

using Edges = std::vector<std::pair<std::string, std::string>>;

Dag without_edges(const Dag& g, const Edges& drop) {
  Edges edges;
  for (const auto& e : g.edges()) {
    if (std::find(drop.begin(), drop.end(), e) == drop.end()) edges.push_back(e);
  }
  return Dag(g.nodes(), edges, g.roles());
}

void expect_failure(Tally& t, const std::string& label, DesignTag design, const Npsem& m, ErrorCode code,
                    const std::string& assumption) {
  try {
    identify(design, observable_joint(m), options_for(m, 2));
    t.check(false, label + ": no error");
  } catch (const Error& e) {
    t.check(e.code() == code, label + ": got " + std::string(to_string(e.code())));
    t.check(e.assumption().find(assumption) != std::string::npos, label + ": assumption '" + e.assumption() + "'");
  }
}

std::string ac7(Tally& t) {
  // f_{Z|W} without rank: Z ignores W
  const Npsem flat_z({node("W", 2, {}, {{0.4, 0.6}}), node("V", 3, {"W"}, {{0.6, 0.3, 0.1}, {0.1, 0.3, 0.6}}),
                      node("Z", 3, {}, {{0.2, 0.3, 0.5}}),
                      node("X", 2, {"W", "V"}, {{0.3, 0.7}, {0.5, 0.5}, {0.6, 0.4}, {0.2, 0.8}, {0.7, 0.3}, {0.4, 0.6}}),
                      node("Y", 3, {"W", "X"}, {{0.5, 0.3, 0.2}, {0.2, 0.3, 0.5}, {0.6, 0.2, 0.2}, {0.1, 0.2, 0.7}}, true)});
  expect_failure(t, "outcome, flat Z", DesignTag::Outcome, flat_z, ErrorCode::RankDeficient,
                 "Assumption 2 / HS Assumption 3");

  // the slicing variable has identical columns across W (within strata of Y
  // for the conditional design, where X -> Y must go too)
  const std::vector<std::tuple<const char*, DesignTag, Edges, std::string>> gaps = {
      {"fig2a", DesignTag::Outcome, {{"W", "Y"}}, "Assumption 3 / HS Assumption 4"},
      {"fig3a", DesignTag::Treatment, {{"W", "X"}}, "Assumption 4 / HS Assumption 4"},
      {"fig4a", DesignTag::CondTreatment, {{"W", "X"}, {"X", "Y"}}, "Assumption 6 / HS Assumption 4"},
      {"fig5a", DesignTag::Auxiliary, {{"W", "C"}}, "Assumption 8 / HS Assumption 4"},
  };
  for (const auto& [id, design, drop, name] : gaps) {
    for (std::uint64_t s = 0; s < 3; ++s) {
      auto g = generator(2);
      g.validate_for.reset();
      const auto m = random_npsem(without_edges(builtin::figure(id), drop), 60000 + s, g);
      expect_failure(t, std::string(id) + " with identical slices", design, m, ErrorCode::EigenGapExhausted, name);
    }
  }

  // a treatment level with no mass
  const Npsem no_treated({node("W", 2, {}, {{0.4, 0.6}}), node("V", 3, {"W"}, {{0.6, 0.3, 0.1}, {0.1, 0.3, 0.6}}),
                          node("Z", 3, {"W"}, {{0.7, 0.2, 0.1}, {0.1, 0.2, 0.7}}),
                          node("X", 2, {"W", "V"}, {{1, 0}, {1, 0}, {1, 0}, {1, 0}, {1, 0}, {1, 0}}),
                          node("Y", 3, {"W", "X"}, {{0.5, 0.3, 0.2}, {0.2, 0.3, 0.5}, {0.6, 0.2, 0.2}, {0.1, 0.2, 0.7}}, true)});
  for (const auto design : {DesignTag::Outcome, DesignTag::Treatment}) {
    expect_failure(t, "empty treatment stratum, " + std::string(to_string(design)), design, no_treated,
                   ErrorCode::ZeroConditioningCell, "HS Assumption 1");
  }
  return std::to_string(t.cases) + " checks";
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<std::string(Tally&)>>> criteria = {
      {"AC1 spectral round trip", ac1},   {"AC2 pipelines vs oracle", ac2}, {"AC3 proposition battery", ac3},
      {"AC4 relabeling", ac4},            {"AC5 bounds", ac5},              {"AC6 invariance", ac6},
      {"AC7 failure modes", ac7},
  };
  bool all = true;
  for (const auto& [name, run] : criteria) {
    Tally t;
    std::string detail;
    try {
      detail = run(t);
    } catch (const std::exception& e) {
      t.check(false, std::string("uncaught: ") + e.what());
    }
    const bool ok = t.pass();
    all = all && ok;
    std::printf("%s %s: %s%s%s\n", ok ? "PASS" : "FAIL", name.c_str(), detail.c_str(), ok ? "" : " | ",
                ok ? "" : join(t.failures).c_str());
    std::fflush(stdout);
  }
  return all ? 0 : 1;
}
