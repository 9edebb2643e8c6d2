#include "triproxy/relabel.hpp"

#include "triproxy/error.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

namespace triproxy {

std::string_view to_string(Functional f) { return f == Functional::Mean ? "mean" : "median"; }
std::string_view to_string(RelabelMode m) { return m == RelabelMode::Unbiased ? "unbiased" : "monotone"; }

RelabelRule RelabelRule::parse(std::string_view name) {
  RelabelRule r;
  const auto dash = name.find('-');
  const auto f = name.substr(0, dash);
  const auto m = dash == std::string_view::npos ? std::string_view{} : name.substr(dash + 1);
  if (f == "mean") {
    r.functional = Functional::Mean;
  } else if (f == "median") {
    r.functional = Functional::Median;
  } else {
    throw Error(ErrorCode::InvalidArgument, "unknown relabel rule '" + std::string(name) + "'");
  }
  if (m == "unbiased") {
    r.mode = RelabelMode::Unbiased;
  } else if (m == "monotone") {
    r.mode = RelabelMode::Monotone;
  } else {
    throw Error(ErrorCode::InvalidArgument, "unknown relabel rule '" + std::string(name) + "'");
  }
  return r;
}

std::string RelabelRule::name() const { return std::string(to_string(functional)) + "-" + std::string(to_string(mode)); }

namespace {

std::size_t product(const std::vector<std::size_t>& v) {
  return std::accumulate(v.begin(), v.end(), std::size_t{1}, std::multiplies<>());
}

std::vector<std::size_t> w_shape(const RelabelRule& rule, std::size_t k) {
  if (rule.w_coordinates.empty()) return {k};
  if (product(rule.w_coordinates) != k) {
    throw Error(ErrorCode::InvalidArgument, "W coordinate structure does not multiply to the latent dimension");
  }
  return rule.w_coordinates;
}

double functional_of(Functional f, const std::vector<double>& levels, const std::vector<double>& pmf) {
  if (f == Functional::Median) return quantile(levels, pmf, 0.5);
  double s = 0;
  for (std::size_t i = 0; i < levels.size(); ++i) s += levels[i] * pmf[i];
  return s;
}

bool same(const std::vector<double>& a, const std::vector<double>& b) {
  for (std::size_t j = 0; j < a.size(); ++j) {
    if (std::abs(a[j] - b[j]) > kAlphaTolerance) return false;
  }
  return true;
}

std::vector<double> latent_pmf_of(const LatentOutcomeModel& m) {
  const std::size_t k = m.latent_dim(), nx = m.treatment_space().cardinality;
  std::vector<double> out(k, 0.0);
  for (std::size_t w = 0; w < k; ++w) {
    for (std::size_t x = 0; x < nx; ++x) out[w] += m.wx_joint[w * nx + x];
  }
  return out;
}

// Sorts latent states by alpha (first coordinate most significant).
LabeledLatentModel sorted_by_alpha(const LatentOutcomeModel& m, const RelabelRule& rule) {
  auto alpha = compute_alpha(m.z_given_w, rule);
  Permutation order(alpha.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return alpha[a] < alpha[b]; });
  LabeledLatentModel out{permute_latent(m, order), rule, {}, {}, {}, {}, {}};
  for (auto i : order) out.alpha.push_back(alpha[i]);
  out.latent_pmf = latent_pmf_of(out.base);
  return out;
}

std::optional<std::vector<double>> try_cate(const LatentOutcomeModel& m) {
  if (!m.outcome_space().has_levels() || m.treatment_space().cardinality != 2) return std::nullopt;
  return stratum_cate(m);
}

}  // namespace

AlphaTable compute_alpha(const MarkovKernel& z_given_w, const RelabelRule& rule) {
  const auto& zs = z_given_w.target();
  const std::size_t k = z_given_w.given().front().cardinality;
  const auto shape = w_shape(rule, k);

  std::vector<std::vector<double>> coords = rule.z_coordinates;
  if (coords.empty()) {
    if (!zs.has_levels()) throw Error(ErrorCode::MissingLevels, "proxy '" + zs.name + "' has no numeric levels");
    coords.push_back(*zs.levels);
  }
  if (coords.size() != shape.size()) {
    throw Error(ErrorCode::InvalidArgument, "Z must carry one coordinate block per W coordinate");
  }
  std::vector<std::size_t> zshape;
  for (const auto& c : coords) zshape.push_back(c.size());
  if (product(zshape) != zs.cardinality) {
    throw Error(ErrorCode::InvalidArgument, "Z coordinate blocks do not multiply to |" + zs.name + "|");
  }

  AlphaTable alpha(k, std::vector<double>(coords.size(), 0.0));
  for (std::size_t w = 0; w < k; ++w) {
    for (std::size_t j = 0; j < coords.size(); ++j) {
      std::size_t inner = 1;
      for (std::size_t i = j + 1; i < zshape.size(); ++i) inner *= zshape[i];
      std::vector<double> pmf(zshape[j], 0.0);
      for (std::size_t z = 0; z < zs.cardinality; ++z) pmf[(z / inner) % zshape[j]] += z_given_w(z, w);
      alpha[w][j] = functional_of(rule.functional, coords[j], pmf);
    }
  }

  if (rule.mode == RelabelMode::Unbiased) {
    for (std::size_t a = 0; a < k; ++a) {
      for (std::size_t b = a + 1; b < k; ++b) {
        if (same(alpha[a], alpha[b])) {
          throw Error(ErrorCode::AlphaCollision,
                      "latent states " + std::to_string(a) + " and " + std::to_string(b) +
                          " have the same proxy functional; relabeling is impossible",
                      "HS Assumption 5");
        }
      }
    }
  } else {
    for (std::size_t j = 0; j < shape.size(); ++j) {
      std::vector<double> v;
      for (const auto& row : alpha) v.push_back(row[j]);
      std::sort(v.begin(), v.end());
      std::size_t distinct = v.empty() ? 0 : 1;
      for (std::size_t i = 1; i < v.size(); ++i) distinct += v[i] - v[i - 1] > kAlphaTolerance;
      if (distinct != shape[j]) {
        throw Error(ErrorCode::AlphaCollision,
                    "coordinate " + std::to_string(j) + " of the proxy functional takes " + std::to_string(distinct) +
                        " distinct values for " + std::to_string(shape[j]) + " latent levels",
                    "Assumption 9");
      }
    }
  }
  return alpha;
}

LabeledLatentModel relabel_unbiased(const LatentOutcomeModel& m, const RelabelRule& rule) {
  if (rule.mode != RelabelMode::Unbiased) throw Error(ErrorCode::InvalidArgument, "rule is not an unbiased rule");
  auto out = sorted_by_alpha(m, rule);
  out.w_values = out.alpha;
  return out;
}

LabeledLatentModel relabel_monotone(const LatentOutcomeModel& m, const RelabelRule& rule,
                                    const std::vector<double>& tau_grid) {
  if (rule.mode != RelabelMode::Monotone) throw Error(ErrorCode::InvalidArgument, "rule is not a monotone rule");
  for (double tau : tau_grid) {
    if (!(tau >= 0.0 && tau <= 1.0)) {
      throw Error(ErrorCode::TauOutOfRange, "quantile level " + std::to_string(tau) + " outside [0, 1]");
    }
  }
  auto out = sorted_by_alpha(m, rule);
  const std::size_t k = out.alpha.size(), d = out.alpha.front().size();
  std::vector<std::vector<double>> column(d);
  for (std::size_t j = 0; j < d; ++j) {
    for (std::size_t w = 0; w < k; ++w) column[j].push_back(out.alpha[w][j]);
  }

  out.quantile_rank.assign(k, std::vector<double>(d, 0.0));
  for (std::size_t w = 0; w < k; ++w) {
    for (std::size_t j = 0; j < d; ++j) {
      double f = 0;
      for (std::size_t u = 0; u < k; ++u) {
        if (column[j][u] <= column[j][w] + kAlphaTolerance) f += out.latent_pmf[u];
      }
      out.quantile_rank[w][j] = f;
    }
  }

  const auto cate = try_cate(out.base);
  for (double tau : tau_grid) {
    QuantileState q;
    q.tau = tau;
    for (std::size_t j = 0; j < d; ++j) q.alpha_quantile.push_back(quantile(column[j], out.latent_pmf, tau));
    const auto hit = std::find_if(out.alpha.begin(), out.alpha.end(),
                                  [&](const std::vector<double>& a) { return same(a, q.alpha_quantile); });
    if (hit == out.alpha.end()) {
      throw Error(ErrorCode::NoLatentState, "no latent state carries the coordinatewise quantile at tau=" +
                                                std::to_string(tau));
    }
    q.state = static_cast<std::size_t>(hit - out.alpha.begin());
    if (cate) q.cate = (*cate)[q.state];
    out.quantile_map.push_back(std::move(q));
  }
  return out;
}

LabeledLatentModel relabel(const LatentOutcomeModel& m, const RelabelRule& rule, const std::vector<double>& tau_grid) {
  return rule.mode == RelabelMode::Unbiased ? relabel_unbiased(m, rule) : relabel_monotone(m, rule, tau_grid);
}

std::vector<double> stratum_cate(const LatentOutcomeModel& m) {
  const auto& ys = m.outcome_space();
  if (!ys.has_levels()) throw Error(ErrorCode::MissingLevels, "outcome '" + ys.name + "' has no numeric levels");
  if (m.treatment_space().cardinality != 2) {
    throw Error(ErrorCode::NonBinaryTreatment, "treatment '" + m.treatment_space().name + "' is not binary");
  }
  const auto& lv = *ys.levels;
  const std::size_t k = m.latent_dim(), ny = ys.cardinality;
  std::vector<double> beta(k, 0.0);
  if (m.y_given_wvx && m.vwx_joint) {
    const std::size_t nv = m.vwx_joint->axes()[0].cardinality;
    for (std::size_t w = 0; w < k; ++w) {
      double fw = 0;
      std::vector<double> fv(nv, 0.0);
      for (std::size_t v = 0; v < nv; ++v) {
        for (std::size_t x = 0; x < 2; ++x) fv[v] += (*m.vwx_joint)[(v * k + w) * 2 + x];
        fw += fv[v];
      }
      for (std::size_t v = 0; v < nv; ++v) {
        double d = 0;
        for (std::size_t y = 0; y < ny; ++y) {
          d += lv[y] * ((*m.y_given_wvx)(y, (w * nv + v) * 2 + 1) - (*m.y_given_wvx)(y, (w * nv + v) * 2));
        }
        beta[w] += fw > 0 ? d * fv[v] / fw : 0.0;
      }
    }
  } else {
    for (std::size_t w = 0; w < k; ++w) {
      for (std::size_t y = 0; y < ny; ++y) beta[w] += lv[y] * (m.y_given_wx(y, w * 2 + 1) - m.y_given_wx(y, w * 2));
    }
  }
  return beta;
}

ConfounderEffects confounder_effects(const LatentOutcomeModel& m, DesignTag design) {
  const bool aux = design == DesignTag::Auxiliary;
  if (aux && !(m.y_given_wvx && m.vwx_joint)) {
    throw Error(ErrorCode::InvalidArgument, "auxiliary confounder effects need f_{Y|WVX} and f_{VWX}");
  }
  const auto& ys = m.outcome_space();
  const auto& ws = m.y_given_wx.given()[0];
  const auto& xs = m.treatment_space();
  const std::size_t ny = ys.cardinality, k = ws.cardinality, nx = xs.cardinality;
  std::vector<double> fx(nx, 0.0);
  for (std::size_t w = 0; w < k; ++w) {
    for (std::size_t x = 0; x < nx; ++x) fx[x] += m.wx_joint[w * nx + x];
  }

  ConfounderEffects out;
  for (std::size_t x1 = 0; x1 < nx; ++x1) {
    out.joints.emplace_back();
    for (std::size_t w = 0; w < k; ++w) {
      std::vector<double> vals(ny * nx, 0.0);
      for (std::size_t y = 0; y < ny; ++y) {
        for (std::size_t x2 = 0; x2 < nx; ++x2) {
          if (aux) {
            const std::size_t nv = m.vwx_joint->axes()[0].cardinality;
            for (std::size_t v = 0; v < nv; ++v) {
              double fvx = 0;
              for (std::size_t u = 0; u < k; ++u) fvx += (*m.vwx_joint)[(v * k + u) * nx + x2];
              vals[y * nx + x2] += (*m.y_given_wvx)(y, (w * nv + v) * nx + x1) * fvx;
            }
          } else {
            vals[y * nx + x2] = m.y_given_wx(y, w * nx + x1) * fx[x2];
          }
        }
      }
      const std::string name = ys.name + "(" + xs.name + "=" + std::to_string(x1) + "," + ws.name + "=" +
                               std::to_string(w) + ")";
      out.joints.back().push_back(ProbTensor::from_weights({ys.renamed(name), xs}, std::move(vals)));
    }
  }
  if (ys.has_levels()) {
    const auto& lv = *ys.levels;
    for (std::size_t x1 = 0; x1 < nx; ++x1) {
      std::vector<double> means;
      for (std::size_t w = 0; w < k; ++w) {
        const auto& t = out.joints[x1][w];
        double s = 0;
        for (std::size_t y = 0; y < ny; ++y) {
          for (std::size_t x2 = 0; x2 < nx; ++x2) s += lv[y] * t[y * nx + x2];
        }
        means.push_back(s);
      }
      std::vector<double> partial;
      for (std::size_t w = 0; w + 1 < k; ++w) partial.push_back(means[w + 1] - means[w]);
      out.means.push_back(std::move(means));
      out.partial.push_back(std::move(partial));
    }
  }
  return out;
}

ConfounderEffects confounder_effects(const LabeledLatentModel& m) { return confounder_effects(m.base, m.base.design); }

Json to_json(const LabeledLatentModel& m) {
  Json j{{"rule", m.rule.name()}, {"alpha", m.alpha}, {"latent_pmf", m.latent_pmf}, {"model", to_json(m.base)}};
  if (!m.rule.w_coordinates.empty()) j["w_coordinates"] = m.rule.w_coordinates;
  if (!m.w_values.empty()) j["w_values"] = m.w_values;
  if (!m.quantile_rank.empty()) j["quantile_rank"] = m.quantile_rank;
  if (!m.quantile_map.empty()) {
    Json q = Json::array();
    for (const auto& s : m.quantile_map) {
      Json row{{"tau", s.tau}, {"alpha_quantile", s.alpha_quantile}, {"state", s.state}};
      if (s.cate) row["cate"] = *s.cate;
      q.push_back(std::move(row));
    }
    j["quantile_map"] = q;
  }
  if (const auto cate = try_cate(m.base)) j["stratum_cate"] = *cate;
  return j;
}

Json to_json(const ConfounderEffects& e) {
  Json joints = Json::array();
  for (const auto& row : e.joints) {
    Json r = Json::array();
    for (const auto& t : row) r.push_back(to_json(t));
    joints.push_back(std::move(r));
  }
  Json j{{"joints", joints}};
  if (!e.means.empty()) {
    j["means"] = e.means;
    j["partial"] = e.partial;
  }
  return j;
}

}  // namespace triproxy
