#include "oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace triproxy::testing {

namespace {

struct Layout {
  std::vector<std::size_t> topo;
  std::vector<std::vector<std::size_t>> parents;
  std::vector<std::vector<std::optional<std::size_t>>> clamp;  // [world][node]
};

Layout layout(const Npsem& m, const std::vector<World>& worlds) {
  Layout l;
  const auto& g = m.graph();
  l.topo = g.topological_order();
  for (const auto& n : m.nodes()) {
    std::vector<std::size_t> ps;
    for (const auto& p : n.parents) ps.push_back(g.index_of(p));
    l.parents.push_back(ps);
  }
  for (const auto& w : worlds) {
    std::vector<std::optional<std::size_t>> c(m.nodes().size());
    for (const auto& [name, level] : w) c[g.index_of(name)] = level;
    l.clamp.push_back(c);
  }
  return l;
}

std::size_t config(const Npsem& m, const Layout& l, std::size_t node, const std::vector<std::size_t>& values) {
  std::size_t c = 0;
  for (auto p : l.parents[node]) c = c * m.nodes()[p].space.cardinality + values[p];
  return c;
}

void worlds_dfs(const Npsem& m, const Layout& l, std::size_t depth, WorldValues& values, double mass,
                const Visitor& visit) {
  if (depth == l.topo.size()) {
    visit(values, mass);
    return;
  }
  const std::size_t node = l.topo[depth];
  const auto& spec = m.nodes()[node];
  const std::size_t nw = values.size();
  std::vector<std::size_t> cfg(nw);
  for (std::size_t k = 0; k < nw; ++k) cfg[k] = config(m, l, node, values[k]);
  std::map<std::vector<std::size_t>, double> law;
  std::vector<std::size_t> tuple(nw);
  for (std::size_t u = 0; u < spec.noise_card; ++u) {
    if (spec.noise_pmf[u] == 0) continue;
    for (std::size_t k = 0; k < nw; ++k) {
      tuple[k] = l.clamp[k][node] ? *l.clamp[k][node] : spec.table[cfg[k] * spec.noise_card + u];
    }
    law[tuple] += spec.noise_pmf[u];
  }
  for (const auto& [t, p] : law) {
    for (std::size_t k = 0; k < nw; ++k) values[k][node] = t[k];
    worlds_dfs(m, l, depth + 1, values, mass * p, visit);
  }
}

}  // namespace

void enumerate_worlds(const Npsem& m, const std::vector<World>& worlds, const Visitor& visit) {
  const auto l = layout(m, worlds);
  WorldValues values(worlds.size(), std::vector<std::size_t>(m.nodes().size(), 0));
  worlds_dfs(m, l, 0, values, 1.0, visit);
}

void enumerate_noise(const Npsem& m, const std::vector<World>& worlds, const Visitor& visit) {
  const auto l = layout(m, worlds);
  const std::size_t n = m.nodes().size();
  std::vector<std::size_t> u(n, 0);
  WorldValues values(worlds.size(), std::vector<std::size_t>(n, 0));
  while (true) {
    double p = 1;
    for (std::size_t i = 0; i < n; ++i) p *= m.nodes()[i].noise_pmf[u[i]];
    for (std::size_t k = 0; k < worlds.size(); ++k) {
      for (auto node : l.topo) {
        const auto& spec = m.nodes()[node];
        values[k][node] = l.clamp[k][node] ? *l.clamp[k][node]
                                           : spec.table[config(m, l, node, values[k]) * spec.noise_card + u[node]];
      }
    }
    if (p > 0) visit(values, p);
    std::size_t i = 0;
    for (; i < n; ++i) {
      if (++u[i] < m.nodes()[i].noise_card) break;
      u[i] = 0;
    }
    if (i == n) return;
  }
}

std::vector<double> world_law(const Npsem& m, const World& world, const std::vector<std::string>& nodes) {
  std::vector<std::size_t> idx, card;
  std::size_t cells = 1;
  for (const auto& name : nodes) {
    idx.push_back(m.graph().index_of(name));
    card.push_back(m.node(name).space.cardinality);
    cells *= card.back();
  }
  std::vector<double> out(cells, 0.0);
  enumerate_worlds(m, {world}, [&](const WorldValues& v, double p) {
    std::size_t flat = 0;
    for (std::size_t j = 0; j < idx.size(); ++j) flat = flat * card[j] + v[0][idx[j]];
    out[flat] += p;
  });
  return out;
}

Truth truth(const Npsem& m) {
  const auto& g = m.graph();
  const std::string xs = m.role_node("X"), ys = m.role_node("Y"), ws = m.role_node("W");
  const auto vs = g.node_for_role("V");
  const std::size_t x = g.index_of(xs), y = g.index_of(ys), w = g.index_of(ws);
  const std::size_t ny = m.node(ys).space.cardinality, nw = m.node(ws).space.cardinality;
  const std::size_t nv = vs ? m.node(*vs).space.cardinality : 1;
  const std::size_t v = vs ? g.index_of(*vs) : 0;

  Truth t;
  t.y_levels = *m.node(ys).space.levels;
  t.fx.assign(2, 0);
  t.fw.assign(nw, 0);
  t.fw_given_x.assign(2, std::vector<double>(nw, 0));
  t.pot.assign(2, std::vector<double>(ny, 0));
  t.pot_given_x.assign(2, std::vector<std::vector<double>>(2, std::vector<double>(ny, 0)));
  t.cate.assign(nw, 0);
  t.untreated_mean.assign(nw, 0);
  t.cate_wv.assign(nw, std::vector<double>(nv, 0));
  t.fwv.assign(nw, std::vector<double>(nv, 0));
  t.fvx.assign(nv, std::vector<double>(2, 0));

  const auto& lv = t.y_levels;
  enumerate_worlds(m, {World{}, World{{xs, 0}}, World{{xs, 1}}}, [&](const WorldValues& val, double p) {
    const std::size_t xf = val[0][x], wf = val[0][w], vf = vs ? val[0][v] : 0;
    const std::size_t y0 = val[1][y], y1 = val[2][y];
    const double d = lv[y1] - lv[y0];
    t.fx[xf] += p;
    t.fw[wf] += p;
    t.fw_given_x[xf][wf] += p;
    t.pot[0][y0] += p;
    t.pot[1][y1] += p;
    t.pot_given_x[0][xf][y0] += p;
    t.pot_given_x[1][xf][y1] += p;
    t.ate += p * d;
    (xf == 1 ? t.att : t.atu) += p * d;
    t.cate[wf] += p * d;
    t.untreated_mean[wf] += p * lv[y0];
    t.cate_wv[wf][vf] += p * d;
    t.fwv[wf][vf] += p;
    t.fvx[vf][xf] += p;
  });
  t.att /= t.fx[1];
  t.atu /= t.fx[0];
  for (std::size_t a = 0; a < 2; ++a) {
    for (std::size_t b = 0; b < 2; ++b) {
      for (auto& q : t.pot_given_x[a][b]) q /= t.fx[b];
    }
    for (auto& q : t.fw_given_x[a]) q /= t.fx[a];
  }
  for (std::size_t k = 0; k < nw; ++k) {
    t.cate[k] /= t.fw[k];
    t.untreated_mean[k] /= t.fw[k];
    for (std::size_t j = 0; j < nv; ++j) t.cate_wv[k][j] = t.fwv[k][j] > 0 ? t.cate_wv[k][j] / t.fwv[k][j] : 0.0;
  }

  t.confounder.assign(2, std::vector<double>(nw, 0));
  for (std::size_t a = 0; a < 2; ++a) {
    for (std::size_t k = 0; k < nw; ++k) {
      const auto law = world_law(m, World{{xs, a}, {ws, k}}, {ys});
      for (std::size_t j = 0; j < ny; ++j) t.confounder[a][k] += lv[j] * law[j];
    }
  }
  return t;
}

std::vector<std::pair<double, double>> cate_atoms(const std::vector<double>& cate, const std::vector<double>& fw,
                                                  double tol) {
  std::vector<std::pair<double, double>> a;
  for (std::size_t i = 0; i < cate.size(); ++i) {
    if (fw[i] > 0) a.emplace_back(cate[i], fw[i]);
  }
  std::sort(a.begin(), a.end());
  std::vector<std::pair<double, double>> out;
  for (const auto& [value, mass] : a) {
    if (!out.empty() && std::abs(value - out.back().first) <= tol) {
      out.back().second += mass;
    } else {
      out.emplace_back(value, mass);
    }
  }
  return out;
}

std::size_t quantile_index(const std::vector<double>& pmf, const std::vector<std::size_t>& order, double tau) {
  double c = 0;
  for (auto i : order) {
    c += pmf[i];
    if (c >= tau - 1e-12) return i;
  }
  return order.back();
}

}  // namespace triproxy::testing
