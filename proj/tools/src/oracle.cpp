#include "triproxy/bounds.hpp"
#include "triproxy/cli.hpp"
#include "triproxy/error.hpp"

#include <algorithm>
#include <numeric>

namespace triproxy::cli {

namespace {

Json atoms(const std::vector<Atom>& table) {
  Json out = Json::array();
  for (const auto& a : table) out.push_back(Json{{"value", a.value}, {"mass", a.mass}, {"cdf", a.cdf}});
  return out;
}

}  // namespace

Json oracle_report(const Npsem& m, const std::vector<double>& tau) {
  const auto x = m.role_node("X"), y = m.role_node("Y"), w = m.role_node("W");
  const auto& ys = m.node(y).space;
  const auto& ws = m.node(w).space;
  const std::size_t nx = m.node(x).space.cardinality, ny = ys.cardinality, nw = ws.cardinality;

  const auto cj = counterfactual_joint(m, {x}, y, {x, w});
  std::vector<std::string> axes{x, w};
  for (std::size_t a = 0; a < nx; ++a) axes.push_back(cj.arm_axis({a}));
  const auto t = marginal(cj.joint, axes);

  // Row-major over (X, W, Y(0), ..., Y(nx-1)).
  std::size_t arms_cells = 1;
  for (std::size_t a = 0; a < nx; ++a) arms_cells *= ny;
  std::vector<double> fx(nx, 0.0), fw(nw, 0.0);
  std::vector<std::vector<double>> pot(nx, std::vector<double>(ny, 0.0));
  std::vector<std::vector<std::vector<double>>> pot_given_x(nx, pot);
  std::vector<std::vector<std::vector<double>>> pot_given_w(nx, std::vector<std::vector<double>>(nw, std::vector<double>(ny)));
  std::vector<std::size_t> idx(nx);
  for (std::size_t xi = 0; xi < nx; ++xi) {
    for (std::size_t wi = 0; wi < nw; ++wi) {
      for (std::size_t cell = 0; cell < arms_cells; ++cell) {
        const double p = t[(xi * nw + wi) * arms_cells + cell];
        std::size_t rest = cell;
        for (std::size_t a = nx; a-- > 0;) {
          idx[a] = rest % ny;
          rest /= ny;
        }
        fx[xi] += p;
        fw[wi] += p;
        for (std::size_t a = 0; a < nx; ++a) {
          pot[a][idx[a]] += p;
          pot_given_x[a][xi][idx[a]] += p;
          pot_given_w[a][wi][idx[a]] += p;
        }
      }
    }
  }
  for (std::size_t a = 0; a < nx; ++a) {
    for (std::size_t xi = 0; xi < nx; ++xi) {
      for (auto& v : pot_given_x[a][xi]) v /= fx[xi];
    }
    for (std::size_t wi = 0; wi < nw; ++wi) {
      for (auto& v : pot_given_w[a][wi]) v = fw[wi] > 0 ? v / fw[wi] : 0.0;
    }
  }

  Json j{{"treatment_pmf", fx}, {"latent_pmf", fw}, {"potential_pmf", pot}, {"potential_given_x", pot_given_x}};
  if (!ys.has_levels() || nx != 2) return j;

  const auto& lv = *ys.levels;
  auto mean = [&](const std::vector<double>& pmf) {
    double s = 0;
    for (std::size_t i = 0; i < ny; ++i) s += lv[i] * pmf[i];
    return s;
  };
  j["ate"] = mean(pot[1]) - mean(pot[0]);
  j["att"] = mean(pot_given_x[1][1]) - mean(pot_given_x[0][1]);
  j["atu"] = mean(pot_given_x[1][0]) - mean(pot_given_x[0][0]);
  std::vector<double> beta(nw), mu0(nw);
  for (std::size_t wi = 0; wi < nw; ++wi) {
    beta[wi] = mean(pot_given_w[1][wi]) - mean(pot_given_w[0][wi]);
    mu0[wi] = mean(pot_given_w[0][wi]);
  }
  j["stratum_cate"] = beta;
  j["stratum_untreated_mean"] = mu0;
  j["cate_distribution"] = atoms(distribution_table(beta, fw));

  // Quantiles of W itself, by its level values (indices when it has none).
  std::vector<double> wl(nw);
  if (ws.has_levels()) {
    wl = *ws.levels;
  } else {
    std::iota(wl.begin(), wl.end(), 0.0);
  }
  Json qc = Json::array();
  for (double tq : tau) {
    const double q = quantile(wl, fw, tq);
    const auto state = static_cast<std::size_t>(std::find(wl.begin(), wl.end(), q) - wl.begin());
    qc.push_back(Json{{"tau", tq}, {"w", q}, {"cate", beta[state]}});
  }
  j["quantile_cate"] = qc;

  // E[Y(x, w)] by clamping both X and W.
  const auto cw = counterfactual_joint(m, {x, w}, y, {x});
  std::vector<std::vector<double>> effects(nx, std::vector<double>(nw));
  for (std::size_t a = 0; a < nx; ++a) {
    for (std::size_t wi = 0; wi < nw; ++wi) {
      const auto p = marginal(cw.joint, std::vector<std::string>{cw.arm_axis({a, wi})});
      effects[a][wi] = mean(std::vector<double>(p.values().begin(), p.values().end()));
    }
  }
  j["confounder_means"] = effects;
  j["rank_invariant"] = check_rank_invariance(m);
  if (m.graph().node_for_role("V")) j["rank_invariant_given_v"] = check_rank_invariance(m, true);
  return j;
}

}  // namespace triproxy::cli
