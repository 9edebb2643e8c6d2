#include "triproxy/spectral.hpp"

#include "triproxy/error.hpp"
#include "triproxy/random.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>

namespace triproxy {

std::string_view to_string(Alignment a) {
  return a == Alignment::AlignedToReference ? "aligned-to-reference" : "unaligned-permutation";
}

namespace {

double condition_number(const Eigen::MatrixXd& a) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || s(s.size() - 1) == 0.0) return std::numeric_limits<double>::infinity();
  return s(0) / s(s.size() - 1);
}

// Clips negative entries of each column and rescales it to sum one; returns the
// largest clipped mass of any column.
double clip_columns(Eigen::MatrixXd& m) {
  double worst = 0;
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    double neg = 0;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      if (m(i, j) < 0) {
        neg -= m(i, j);
        m(i, j) = 0;
      }
    }
    worst = std::max(worst, neg);
    const double s = m.col(j).sum();
    if (s > 0) m.col(j) /= s;
  }
  return worst;
}

MarkovKernel kernel_from(const VarSpace& target, const VarSpace& given, const Eigen::MatrixXd& cols) {
  return MarkovKernel::from_matrix(target, {given}, cols);
}

}  // namespace

HsFactors hs_decompose(const ProbTensor& joint, const HsOptions& opts, const std::string& latent_name) {
  if (joint.rank() != 3) throw Error(ErrorCode::AxisMismatch, "spectral step needs a joint over exactly (Z, C, V)");
  const std::size_t k = opts.latent_dim;
  if (k < 1) throw Error(ErrorCode::InvalidArgument, "latent_dim must be at least 1");
  if (!(opts.eigen_gap_tol > 0) || !(opts.imag_tol > 0) || opts.max_retries < 0) {
    throw Error(ErrorCode::InvalidArgument, "tolerances must be positive");
  }
  const auto& zs = joint.axes()[0];
  const auto& cs = joint.axes()[1];
  const auto& vs = joint.axes()[2];
  const std::size_t nz = zs.cardinality, nc = cs.cardinality, nv = vs.cardinality;
  if (nz < k || nv < k) {
    throw Error(ErrorCode::InvalidArgument,
                "latent dimension " + std::to_string(k) + " exceeds |" + zs.name + "|=" + std::to_string(nz) + " or |" +
                    vs.name + "|=" + std::to_string(nv) + "; the proxies need |Z| >= K and |V| >= K");
  }

  std::vector<Eigen::MatrixXd> slices(nc, Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(nz), static_cast<Eigen::Index>(nv)));
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(nz), static_cast<Eigen::Index>(nv));
  for (std::size_t z = 0; z < nz; ++z) {
    for (std::size_t c = 0; c < nc; ++c) {
      for (std::size_t v = 0; v < nv; ++v) {
        const double p = joint[(z * nc + c) * nv + v];
        slices[c](static_cast<Eigen::Index>(z), static_cast<Eigen::Index>(v)) = p;
      }
    }
  }
  for (const auto& s : slices) m += s;

  HsDiagnostics diag;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  diag.singular_values.assign(sv.data(), sv.data() + sv.size());
  const auto kk = static_cast<Eigen::Index>(k);
  const double ratio = sv(0) > 0 ? sv(kk - 1) / sv(0) : 0.0;
  if (!(ratio >= opts.rank_tol)) {
    throw Error(ErrorCode::RankDeficient,
                "sigma_K/sigma_1 of the proxy matrix is " + std::to_string(ratio) + " (K=" + std::to_string(k) + ")",
                "HS Assumption 3");
  }
  const Eigen::MatrixXd u = svd.matrixU().leftCols(kk);
  const Eigen::MatrixXd r = svd.matrixV().leftCols(kk);
  const Eigen::MatrixXd b = u.transpose() * m * r;
  diag.cond_projected = condition_number(b);
  const Eigen::PartialPivLU<Eigen::MatrixXd> b_lu(b);
  const Eigen::MatrixXd b_inv = b_lu.inverse();
  std::vector<Eigen::MatrixXd> ops;
  for (const auto& s : slices) ops.push_back(u.transpose() * s * r * b_inv);

  Rng rng(opts.seed);
  Eigen::EigenSolver<Eigen::MatrixXd> es;
  double best_gap = 0;
  bool accepted = false;
  for (int draw = 0; draw <= opts.max_retries && !accepted; ++draw) {
    const auto xi = dirichlet_ones(rng, nc);
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(kk, kk);
    for (std::size_t c = 0; c < nc; ++c) t += xi[c] * ops[c];
    es.compute(t, true);
    if (es.info() != Eigen::Success) continue;
    const auto& lambda = es.eigenvalues();
    double gap = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < kk; ++i) {
      for (Eigen::Index j = i + 1; j < kk; ++j) gap = std::min(gap, std::abs(lambda(i) - lambda(j)));
    }
    diag.draws = draw + 1;
    best_gap = std::max(best_gap, gap);
    if (gap >= opts.eigen_gap_tol) {
      diag.eigen_gap = gap;
      accepted = true;
    }
  }
  if (!accepted) {
    throw Error(ErrorCode::EigenGapExhausted,
                "eigen-gap exhausted: best separation " + std::to_string(best_gap) + " after " +
                    std::to_string(opts.max_retries + 1) + " draws",
                "HS Assumption 4");
  }

  Eigen::MatrixXcd vec = es.eigenvectors();
  double max_imag = es.eigenvalues().imag().cwiseAbs().maxCoeff();
  for (Eigen::Index j = 0; j < kk; ++j) {
    Eigen::Index arg = 0;
    vec.col(j).cwiseAbs().maxCoeff(&arg);
    vec.col(j) /= vec(arg, j);
    max_imag = std::max(max_imag, vec.col(j).imag().cwiseAbs().maxCoeff());
  }
  diag.max_imag = max_imag;
  if (max_imag > opts.imag_tol) {
    throw Error(ErrorCode::ComplexResidual, "imaginary residual " + std::to_string(max_imag) + " exceeds tolerance",
                "HS Assumption 4");
  }
  Eigen::MatrixXd e = vec.real();
  Eigen::MatrixXd a = u * e;
  for (Eigen::Index j = 0; j < kk; ++j) {
    const double s = a.col(j).sum();
    if (std::abs(s) < 1e-300) throw Error(ErrorCode::RankDeficient, "latent column with zero mass", "HS Assumption 3");
    a.col(j) /= s;
    e.col(j) /= s;
  }
  const Eigen::MatrixXd e_inv = e.partialPivLu().inverse();
  Eigen::MatrixXd cw(static_cast<Eigen::Index>(nc), kk);
  for (std::size_t c = 0; c < nc; ++c) {
    const Eigen::MatrixXd d = e_inv * ops[c] * e;
    cw.row(static_cast<Eigen::Index>(c)) = d.diagonal().transpose();
  }

  double negativity = clip_columns(a);
  negativity = std::max(negativity, clip_columns(cw));
  Eigen::MatrixXd g = a.completeOrthogonalDecomposition().solve(m);
  {
    double neg = 0;
    for (Eigen::Index i = 0; i < g.size(); ++i) {
      if (g.data()[i] < 0) {
        neg -= g.data()[i];
        g.data()[i] = 0;
      }
    }
    negativity = std::max(negativity, neg);
    g /= g.sum();
  }
  diag.max_negativity_clipped = negativity;
  if (negativity > opts.negativity_tol) {
    throw Error(ErrorCode::NegativeMass, "clipped negative mass " + std::to_string(negativity) + " exceeds 1e-6",
                "HS Assumption 2");
  }

  const auto order = lexicographic_column_order(a);
  a = permute_columns(a, order);
  cw = permute_columns(cw, order);
  g = permute_columns(g.transpose(), order).transpose();

  Eigen::MatrixXd wv = g;
  for (Eigen::Index v = 0; v < wv.cols(); ++v) {
    const double s = wv.col(v).sum();
    if (!(s > 0)) {
      throw Error(ErrorCode::ZeroConditioningCell, "f_V is zero at " + vs.name + "=" + std::to_string(v),
                  "HS Assumption 1");
    }
    wv.col(v) /= s;
  }

  double residual = 0;
  for (std::size_t c = 0; c < nc; ++c) {
    const Eigen::MatrixXd rec = a * cw.row(static_cast<Eigen::Index>(c)).asDiagonal() * g;
    residual = std::max(residual, (rec - slices[c]).cwiseAbs().maxCoeff());
  }
  diag.reconstruction_residual = residual;
  diag.cond_z_given_w = condition_number(a);

  const auto w_space = VarSpace::categorical(latent_name, k);
  std::vector<double> wv_values(k * nv);
  for (std::size_t w = 0; w < k; ++w) {
    for (std::size_t v = 0; v < nv; ++v) wv_values[w * nv + v] = g(static_cast<Eigen::Index>(w), static_cast<Eigen::Index>(v));
  }
  return HsFactors{kernel_from(cs, w_space, cw),
                   kernel_from(w_space, vs, wv),
                   kernel_from(zs, w_space, a),
                   ProbTensor::from_weights({w_space, vs}, std::move(wv_values)),
                   k,
                   Alignment::UnalignedPermutation,
                   std::move(diag)};
}

// ---------------------------------------------------------------------------
// permutations

Permutation lexicographic_column_order(const Eigen::MatrixXd& m) {
  Permutation order(static_cast<std::size_t>(m.cols()));
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      const double a = m(i, static_cast<Eigen::Index>(x));
      const double b = m(i, static_cast<Eigen::Index>(y));
      if (a != b) return a < b;
    }
    return false;
  });
  return order;
}

Eigen::MatrixXd permute_columns(const Eigen::MatrixXd& m, const Permutation& p) {
  if (p.size() != static_cast<std::size_t>(m.cols())) throw Error(ErrorCode::InvalidArgument, "permutation size mismatch");
  Eigen::MatrixXd out(m.rows(), m.cols());
  for (std::size_t i = 0; i < p.size(); ++i) out.col(static_cast<Eigen::Index>(i)) = m.col(static_cast<Eigen::Index>(p[i]));
  return out;
}

MarkovKernel permute_latent_columns(const MarkovKernel& k, const Permutation& p) {
  return MarkovKernel::from_matrix(k.target(), k.given(), permute_columns(k.matrix(), p));
}

HsFactors permute_latent(const HsFactors& f, const Permutation& p) {
  const Eigen::MatrixXd wv = f.w_given_v.matrix();
  Eigen::MatrixXd rows(wv.rows(), wv.cols());
  for (std::size_t i = 0; i < p.size(); ++i) rows.row(static_cast<Eigen::Index>(i)) = wv.row(static_cast<Eigen::Index>(p[i]));
  const Eigen::MatrixXd joint = as_matrix(f.wv_joint);
  std::vector<double> jv;
  for (std::size_t i = 0; i < p.size(); ++i) {
    for (Eigen::Index v = 0; v < joint.cols(); ++v) jv.push_back(joint(static_cast<Eigen::Index>(p[i]), v));
  }
  HsFactors out{permute_latent_columns(f.c_given_w, p),
                MarkovKernel::from_matrix(f.w_given_v.target(), f.w_given_v.given(), rows),
                permute_latent_columns(f.z_given_w, p),
                ProbTensor(f.wv_joint.axes(), std::move(jv)),
                f.latent_dim,
                f.alignment,
                f.diagnostics};
  return out;
}

Permutation min_cost_assignment(const Eigen::MatrixXd& cost) {
  const auto n = static_cast<std::size_t>(cost.rows());
  if (cost.cols() != cost.rows()) throw Error(ErrorCode::InvalidArgument, "assignment needs a square cost matrix");
  // Potentials formulation, 1-based with a virtual column 0.
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> match(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    match[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = match[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(static_cast<Eigen::Index>(i0 - 1), static_cast<Eigen::Index>(j - 1)) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  Permutation out(n);
  for (std::size_t j = 1; j <= n; ++j) out[match[j] - 1] = j - 1;
  return out;
}

namespace {

double assignment_cost(const Eigen::MatrixXd& cost, const Permutation& p) {
  double total = 0;
  for (std::size_t i = 0; i < p.size(); ++i) total += cost(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(p[i]));
  return total;
}

Permutation unique_assignment(const Eigen::MatrixXd& cost) {
  const auto best = min_cost_assignment(cost);
  const double best_cost = assignment_cost(cost, best);
  const double big = 1.0 + 2.0 * cost.cwiseAbs().sum();
  for (std::size_t i = 0; i < best.size() && best.size() > 1; ++i) {
    Eigen::MatrixXd forbidden = cost;
    forbidden(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(best[i])) = big;
    const auto alt = min_cost_assignment(forbidden);
    const double alt_cost = assignment_cost(cost, alt);
    if (alt != best && alt_cost - best_cost <= 1e-9) {
      throw Error(ErrorCode::AmbiguousMatch, "two latent orderings match within 1e-9 (costs " +
                                                 std::to_string(best_cost) + " and " + std::to_string(alt_cost) + ")",
                  "HS Assumption 4");
    }
  }
  return best;
}

Eigen::MatrixXd l1_cost(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd cost(a.cols(), b.cols());
  for (Eigen::Index i = 0; i < a.cols(); ++i) {
    for (Eigen::Index j = 0; j < b.cols(); ++j) cost(i, j) = (a.col(i) - b.col(j)).lpNorm<1>();
  }
  return cost;
}

}  // namespace

Permutation match_permutation(const MarkovKernel& a, const MarkovKernel& b) {
  const auto ma = a.matrix(), mb = b.matrix();
  if (ma.rows() != mb.rows() || ma.cols() != mb.cols()) {
    throw Error(ErrorCode::AxisMismatch, "kernels differ in shape");
  }
  return unique_assignment(l1_cost(ma, mb));
}

Permutation match_permutation(const HsFactors& a, const HsFactors& b) {
  if (a.latent_dim != b.latent_dim) throw Error(ErrorCode::AxisMismatch, "latent dimensions differ");
  const auto za = a.z_given_w.matrix(), zb = b.z_given_w.matrix();
  const auto ca = a.c_given_w.matrix(), cb = b.c_given_w.matrix();
  if (za.rows() != zb.rows() || ca.rows() != cb.rows()) throw Error(ErrorCode::AxisMismatch, "factor shapes differ");
  return unique_assignment(l1_cost(za, zb) + l1_cost(ca, cb));
}

// ---------------------------------------------------------------------------

CompletenessReport completeness_diagnostics(const Eigen::MatrixXd& m, std::size_t latent_dim, double threshold) {
  CompletenessReport r;
  r.threshold = threshold;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const auto& s = svd.singularValues();
  r.singular_values.assign(s.data(), s.data() + s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(0) > 0 && s(i) / s(0) >= threshold) ++r.numerical_rank;
  }
  r.pass = r.numerical_rank >= latent_dim;
  return r;
}

CompletenessReport completeness_diagnostics(const MarkovKernel& k, std::size_t latent_dim, double threshold) {
  return completeness_diagnostics(k.matrix(), latent_dim, threshold);
}

}  // namespace triproxy
