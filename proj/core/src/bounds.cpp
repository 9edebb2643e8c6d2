#include "triproxy/bounds.hpp"

#include "triproxy/error.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>

namespace triproxy {

namespace {

using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

Index ix(std::size_t i) { return static_cast<Index>(i); }

[[noreturn]] void rethrow(DesignTag design, const Error& e, std::size_t x, const std::string& xname) {
  const auto name = assumption_for(design, e.code());
  throw (name.empty() ? e : e.reassigned(name)).with_context(xname + "=" + std::to_string(x));
}

void require_binary_numeric(const ProbTensor& t, const Roles& r) {
  if (t.axis(r.x).cardinality != 2) {
    throw Error(ErrorCode::NonBinaryTreatment, "treatment '" + r.x + "' is not binary");
  }
  if (!t.axis(r.y).has_levels()) throw Error(ErrorCode::MissingLevels, "outcome '" + r.y + "' has no numeric levels");
}

void check_dims(const ProbTensor& t, const Roles& r, std::size_t k) {
  const auto nz = t.axis(r.z).cardinality, nv = t.axis(r.v).cardinality;
  if (k < 1 || nz < k || nv < k) {
    throw Error(ErrorCode::InvalidArgument, "latent dimension " + std::to_string(k) + " needs |Z| >= K and |V| >= K (|" +
                                                r.z + "|=" + std::to_string(nz) + ", |" + r.v +
                                                "|=" + std::to_string(nv) + ")");
  }
}

std::vector<std::vector<double>> vx_joint(const ProbTensor& t, const Roles& r, bool by_v) {
  const auto f = by_v ? marginal(t, std::vector<std::string>{r.x, r.v}) : marginal(t, std::vector<std::string>{r.x});
  const std::size_t nx = f.axes()[0].cardinality, nv = by_v ? f.axes()[1].cardinality : 1;
  std::vector<std::vector<double>> out(nx, std::vector<double>(nv));
  for (std::size_t x = 0; x < nx; ++x) {
    for (std::size_t v = 0; v < nv; ++v) {
      out[x][v] = f[x * nv + v];
      if (!(out[x][v] > 0)) {
        throw Error(ErrorCode::ZeroConditioningCell,
                    "f_{" + r.x + (by_v ? r.v : std::string()) + "} is zero at " + r.x + "=" + std::to_string(x) +
                        (by_v ? ", " + r.v + "=" + std::to_string(v) : std::string()),
                    "positivity: HS Assumption 1 / Assumption 1", r.x + "=" + std::to_string(x));
      }
    }
  }
  return out;
}

struct Extremes {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
};

Extremes extremes(const ArmFit& a, std::size_t v) {
  Extremes e;
  for (std::size_t w = 0; w < a.means.size(); ++w) {
    if (!(a.mass[w][v] > kBoundMassTolerance)) continue;
    e.lo = std::min(e.lo, a.means[w][v]);
    e.hi = std::max(e.hi, a.means[w][v]);
  }
  return e;
}

}  // namespace

BoundsReport bounds_from_arms(DesignTag design, std::vector<ArmFit> arms, const std::vector<std::vector<double>>& fvx) {
  if (arms.size() != 2 || fvx.size() != 2) throw Error(ErrorCode::NonBinaryTreatment, "bounds need two treatment arms");
  std::sort(arms.begin(), arms.end(), [](const ArmFit& a, const ArmFit& b) { return a.x < b.x; });
  const std::size_t nv = fvx[0].size();
  BoundsReport r;
  r.design = design;
  std::vector<double> fv(nv, 0.0), fx(2, 0.0);
  for (std::size_t x = 0; x < 2; ++x) {
    for (std::size_t v = 0; v < nv; ++v) {
      fv[v] += fvx[x][v];
      fx[x] += fvx[x][v];
    }
  }
  for (std::size_t v = 0; v < nv; ++v) {
    const auto e0 = extremes(arms[0], v), e1 = extremes(arms[1], v);
    const Interval s{e1.lo - e0.lo, e1.hi - e0.hi};
    r.per_v.push_back(s);
    r.s_lower += fv[v] * s.lower;
    r.s_upper += fv[v] * s.upper;
    r.att.lower += fvx[1][v] / fx[1] * s.lower;
    r.att.upper += fvx[1][v] / fx[1] * s.upper;
    r.atu.lower += fvx[0][v] / fx[0] * s.lower;
    r.atu.upper += fvx[0][v] / fx[0] * s.upper;
  }
  if (design != DesignTag::Auxiliary) r.per_v.clear();
  r.point_identified = std::abs(r.s_upper - r.s_lower) <= kPointIdentifiedTolerance;
  r.inverted = r.s_lower > r.s_upper + 1e-9;
  r.arms = std::move(arms);
  return r;
}

BoundsReport bounds_outcome_proxy(const ProbTensor& joint, const PipelineOptions& opt) {
  const auto& r = opt.roles;
  const auto t = marginal(joint, std::vector<std::string>{r.x, r.y, r.z, r.v});
  require_binary_numeric(t, r);
  check_dims(t, r, opt.hs.latent_dim);
  const auto fx = vx_joint(t, r, false);
  const auto& lv = *t.axis(r.y).levels;

  std::vector<ArmFit> arms;
  for (std::size_t x = 0; x < 2; ++x) {
    try {
      const auto sl = permute_axes(slice(t, r.x, x), std::vector<std::string>{r.z, r.y, r.v});
      const auto f = hs_decompose(sl, opt.hs, r.w);
      const std::size_t k = f.latent_dim, nv = f.wv_joint.axes()[1].cardinality;
      ArmFit a;
      a.x = x;
      a.diagnostics = f.diagnostics;
      for (std::size_t w = 0; w < k; ++w) {
        double m = 0, mass = 0;
        for (std::size_t y = 0; y < lv.size(); ++y) m += lv[y] * f.c_given_w(y, w);
        for (std::size_t v = 0; v < nv; ++v) mass += f.wv_joint[w * nv + v];
        a.means.push_back({m});
        a.mass.push_back({mass});
      }
      arms.push_back(std::move(a));
    } catch (const Error& e) {
      rethrow(DesignTag::Outcome, e, x, r.x);
    }
  }
  return bounds_from_arms(DesignTag::Outcome, std::move(arms), fx);
}

BoundsReport bounds_auxiliary_proxy(const ProbTensor& joint, const PipelineOptions& opt) {
  const auto& r = opt.roles;
  const auto t = marginal(joint, std::vector<std::string>{r.x, r.y, r.c, r.z, r.v});
  require_binary_numeric(t, r);
  check_dims(t, r, opt.hs.latent_dim);
  const auto fvx = vx_joint(t, r, true);
  const auto& lv = *t.axis(r.y).levels;
  const std::size_t ny = lv.size(), nc = t.axis(r.c).cardinality;
  const std::size_t nz = t.axis(r.z).cardinality, nv = t.axis(r.v).cardinality;

  std::vector<ArmFit> arms;
  for (std::size_t x = 0; x < 2; ++x) {
    try {
      const auto sl = slice(t, r.x, x);  // (Y, C, Z, V)
      const auto f = hs_decompose(marginal(sl, std::vector<std::string>{r.z, r.c, r.v}), opt.hs, r.w);
      const std::size_t k = f.latent_dim;
      const Matrix a = f.z_given_w.matrix();
      Eigen::JacobiSVD<Matrix> svd(a);
      const auto& s = svd.singularValues();
      const double cond = s(s.size() - 1) > 0 ? s(0) / s(s.size() - 1) : std::numeric_limits<double>::infinity();
      if (!(cond <= opt.max_condition)) {
        throw Error(ErrorCode::SolveIllConditioned,
                    "f_{Z|W} has condition number " + std::to_string(cond) + " above " + std::to_string(opt.max_condition));
      }
      const Eigen::CompleteOrthogonalDecomposition<Matrix> cod(a);

      // h[y](w, v) = f_{Y W V | X}(y, w, v | x)
      std::vector<Matrix> h;
      double clipped = 0, total = 0;
      for (std::size_t y = 0; y < ny; ++y) {
        Matrix m = Matrix::Zero(ix(nz), ix(nv));
        for (std::size_t c = 0; c < nc; ++c) {
          for (std::size_t z = 0; z < nz; ++z) {
            for (std::size_t v = 0; v < nv; ++v) m(ix(z), ix(v)) += sl[((y * nc + c) * nz + z) * nv + v];
          }
        }
        Matrix sol = cod.solve(m);
        clipped += (sol - sol.cwiseMax(0.0)).cwiseAbs().sum();
        sol = sol.cwiseMax(0.0);
        total += sol.sum();
        h.push_back(std::move(sol));
      }
      const double moved = clipped + std::abs(total - 1.0);
      if (moved > opt.max_projection) {
        throw Error(ErrorCode::NonStochasticSolution,
                    "solved kernel is " + std::to_string(moved) + " (L1) away from the probability simplex");
      }
      ArmFit fit;
      fit.x = x;
      fit.diagnostics = f.diagnostics;
      fit.means.assign(k, std::vector<double>(nv, 0.0));
      fit.mass.assign(k, std::vector<double>(nv, 0.0));
      for (std::size_t v = 0; v < nv; ++v) {
        double fv = 0;
        for (std::size_t w = 0; w < k; ++w) {
          for (std::size_t y = 0; y < ny; ++y) fv += h[y](ix(w), ix(v));
        }
        for (std::size_t w = 0; w < k; ++w) {
          double mass = 0, m = 0;
          for (std::size_t y = 0; y < ny; ++y) {
            mass += h[y](ix(w), ix(v));
            m += lv[y] * h[y](ix(w), ix(v));
          }
          fit.mass[w][v] = fv > 0 ? mass / fv : 0.0;
          fit.means[w][v] = mass > 0 ? m / mass : 0.0;
        }
      }
      arms.push_back(std::move(fit));
    } catch (const Error& e) {
      rethrow(DesignTag::Auxiliary, e, x, r.x);
    }
  }
  return bounds_from_arms(DesignTag::Auxiliary, std::move(arms), fvx);
}

BoundsReport bounds(DesignTag design, const ProbTensor& joint, const PipelineOptions& opt) {
  switch (design) {
    case DesignTag::Outcome: return bounds_outcome_proxy(joint, opt);
    case DesignTag::Auxiliary: return bounds_auxiliary_proxy(joint, opt);
    default: break;
  }
  throw Error(ErrorCode::InvalidArgument, "bounds support the outcome and auxiliary designs only");
}

bool check_rank_invariance(const Npsem& m, bool given_v) {
  const auto x = m.role_node("X"), y = m.role_node("Y"), w = m.role_node("W");
  std::vector<std::string> keep{w};
  if (given_v) keep.push_back(m.role_node("V"));
  const auto cj = counterfactual_joint(m, {x}, y, keep);
  auto axes = keep;
  axes.push_back(cj.arm_axis({0}));
  axes.push_back(cj.arm_axis({1}));
  const auto t = marginal(cj.joint, axes);
  const auto& lv = *m.node(y).space.levels;
  const std::size_t ny = lv.size(), nw = t.axes()[0].cardinality, nv = given_v ? t.axes()[1].cardinality : 1;
  constexpr double tol = 1e-12;
  for (std::size_t v = 0; v < nv; ++v) {
    std::vector<double> mass(nw, 0.0), mu0(nw, 0.0), cate(nw, 0.0);
    for (std::size_t s = 0; s < nw; ++s) {
      const std::size_t base = (s * nv + v) * ny * ny;
      for (std::size_t a = 0; a < ny; ++a) {
        for (std::size_t b = 0; b < ny; ++b) {
          const double p = t[base + a * ny + b];
          mass[s] += p;
          mu0[s] += p * lv[a];
          cate[s] += p * (lv[b] - lv[a]);
        }
      }
      if (mass[s] > 0) {
        mu0[s] /= mass[s];
        cate[s] /= mass[s];
      }
    }
    for (std::size_t s1 = 0; s1 < nw; ++s1) {
      for (std::size_t s2 = 0; s2 < nw; ++s2) {
        if (!(mass[s1] > 0 && mass[s2] > 0)) continue;
        if (mu0[s2] >= mu0[s1] - tol && cate[s2] < cate[s1] - tol) return false;
      }
    }
  }
  return true;
}

Json to_json(const BoundsReport& r) {
  auto interval = [](const Interval& i) { return Json{{"lower", i.lower}, {"upper", i.upper}}; };
  Json arms = Json::array();
  for (const auto& a : r.arms) {
    arms.push_back(Json{{"x", a.x}, {"means", a.means}, {"mass", a.mass}, {"spectral", to_json(a.diagnostics)}});
  }
  Json j{{"design", to_string(r.design)},
         {"s_lower", r.s_lower},
         {"s_upper", r.s_upper},
         {"att", interval(r.att)},
         {"atu", interval(r.atu)},
         {"point_identified", r.point_identified},
         {"inverted", r.inverted},
         {"moment_bound", "auto-satisfied: discrete means are finite"},
         {"arms", arms}};
  if (!r.per_v.empty()) {
    Json pv = Json::array();
    for (const auto& i : r.per_v) pv.push_back(interval(i));
    j["per_v"] = pv;
  }
  return j;
}

}  // namespace triproxy
