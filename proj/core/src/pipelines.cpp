#include "triproxy/pipelines.hpp"

#include "triproxy/error.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace triproxy {

std::string_view to_string(DesignTag d) {
  switch (d) {
    case DesignTag::Outcome: return "outcome";
    case DesignTag::Treatment: return "treatment";
    case DesignTag::CondTreatment: return "cond-treatment";
    case DesignTag::Auxiliary: return "auxiliary";
  }
  return "?";
}

DesignTag design_from_string(std::string_view s) {
  for (auto d : {DesignTag::Outcome, DesignTag::Treatment, DesignTag::CondTreatment, DesignTag::Auxiliary}) {
    if (to_string(d) == s) return d;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown design '" + std::string(s) +
                                              "' (expected outcome, treatment, cond-treatment or auxiliary)");
}

std::string assumption_for(DesignTag design, ErrorCode code) {
  switch (code) {
    case ErrorCode::RankDeficient:
    case ErrorCode::SolveIllConditioned:
    case ErrorCode::NonStochasticSolution:
      switch (design) {
        case DesignTag::Outcome: return "Assumption 2 / HS Assumption 3";
        case DesignTag::Treatment: return "HS Assumption 3";
        case DesignTag::CondTreatment: return "Assumption 5 / HS Assumption 3";
        case DesignTag::Auxiliary: return "Assumption 2 / HS Assumption 3";
      }
      break;
    case ErrorCode::EigenGapExhausted:
    case ErrorCode::ComplexResidual:
    case ErrorCode::AmbiguousMatch:
      switch (design) {
        case DesignTag::Outcome: return "Assumption 3 / HS Assumption 4";
        case DesignTag::Treatment: return "Assumption 4 / HS Assumption 4";
        case DesignTag::CondTreatment: return "Assumption 6 / HS Assumption 4";
        case DesignTag::Auxiliary: return "Assumption 8 / HS Assumption 4";
      }
      break;
    case ErrorCode::ZeroConditioningCell:
      return design == DesignTag::Auxiliary ? "positivity: HS Assumption 1 / Assumption 7"
                                            : "positivity: HS Assumption 1 / Assumption 1";
    case ErrorCode::NegativeMass:
      return "HS Assumption 2";
    default:
      break;
  }
  return {};
}

namespace {

using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

Index ix(std::size_t i) { return static_cast<Index>(i); }

double condition_number(const Matrix& a) {
  Eigen::JacobiSVD<Matrix> svd(a);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || !(s(s.size() - 1) > 0)) return std::numeric_limits<double>::infinity();
  return s(0) / s(s.size() - 1);
}

// Everything a pipeline run shares: design, options, diagnostics sink.
class Run {
 public:
  Run(DesignTag design, const PipelineOptions& opt) : design_(design), opt_(opt) {}

  const PipelineOptions& opt() const { return opt_; }
  PipelineDiagnostics& diag() { return diag_; }

  [[noreturn]] void fail(const Error& e, const std::string& where) const {
    const auto name = assumption_for(design_, e.code());
    auto named = name.empty() ? e : e.reassigned(name);
    throw where.empty() ? named : named.with_context(where);
  }

  template <class F>
  auto guarded(const std::string& where, F&& f) -> decltype(f()) {
    try {
      return f();
    } catch (const Error& e) {
      fail(e, where);
    }
  }

  HsFactors spectral(const ProbTensor& zcv, const std::string& where) {
    auto f = guarded(where, [&] { return hs_decompose(zcv, opt_.hs, opt_.roles.w); });
    StageDiagnostic s{where, "spectral", f.diagnostics.cond_z_given_w, f.diagnostics.max_negativity_clipped,
                      f.diagnostics};
    record(std::move(s));
    return f;
  }

  void check_condition(const Matrix& a, const std::string& what, const std::string& where, double* out) {
    const double cond = condition_number(a);
    *out = cond;
    diag_.max_condition = std::max(diag_.max_condition, cond);
    if (!(cond <= opt_.max_condition)) {
      fail(Error(ErrorCode::SolveIllConditioned,
                 what + " has condition number " + std::to_string(cond) + " above " + std::to_string(opt_.max_condition)),
           where);
    }
  }

  void check_projection(double distance, const std::string& where) {
    diag_.max_projection_distance = std::max(diag_.max_projection_distance, distance);
    if (distance > opt_.max_projection) {
      fail(Error(ErrorCode::NonStochasticSolution,
                 "solved kernel is " + std::to_string(distance) + " (L1) away from the probability simplex"),
           where);
    }
  }

  void record(StageDiagnostic s) {
    diag_.max_projection_distance = std::max(diag_.max_projection_distance, s.projection_distance);
    diag_.stages.push_back(std::move(s));
  }

  void positive(const std::vector<double>& pmf, const std::string& axis) {
    for (std::size_t i = 0; i < pmf.size(); ++i) {
      if (!(pmf[i] > 0)) {
        fail(Error(ErrorCode::ZeroConditioningCell, "f_" + axis + " is zero at " + axis + "=" + std::to_string(i), {},
                   axis + "=" + std::to_string(i)),
             {});
      }
    }
  }

 private:
  DesignTag design_;
  const PipelineOptions& opt_;
  PipelineDiagnostics diag_;
};

// Clips negatives, rescales each column to one; returns the largest L1 move.
double project_columns(Matrix& h) {
  double worst = 0;
  for (Index j = 0; j < h.cols(); ++j) {
    const Eigen::VectorXd raw = h.col(j);
    h.col(j) = raw.cwiseMax(0.0);
    const double s = h.col(j).sum();
    if (s > 0) h.col(j) /= s;
    worst = std::max(worst, (raw - h.col(j)).lpNorm<1>());
  }
  return worst;
}

// Clips negatives and rescales to the given total; returns the L1 move.
double project_mass(Matrix& g, double mass) {
  const Matrix raw = g;
  g = g.cwiseMax(0.0);
  const double s = g.sum();
  if (s > 0) g *= mass / s;
  return (raw - g).cwiseAbs().sum();
}

struct Solver {
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod;
  double condition = 0;
};

Solver make_solver(Run& run, const Matrix& a, const std::string& what, const std::string& where) {
  Solver s;
  run.check_condition(a, what, where, &s.condition);
  s.cod.compute(a);
  return s;
}

// Least-squares h in M = A diag(h) G for each right-hand side M.
class KhatriRao {
 public:
  KhatriRao(Run& run, const Matrix& a, const Matrix& g, const std::string& where) : nz_(a.rows()), nv_(g.cols()) {
    Matrix kr(nz_ * nv_, a.cols());
    for (Index w = 0; w < a.cols(); ++w) {
      for (Index z = 0; z < nz_; ++z) {
        for (Index v = 0; v < nv_; ++v) kr(z * nv_ + v, w) = a(z, w) * g(w, v);
      }
    }
    solver_ = make_solver(run, kr, "stacked proxy system", where);
  }
  Eigen::VectorXd solve(const Matrix& m) const {
    Eigen::VectorXd b(nz_ * nv_);
    for (Index z = 0; z < nz_; ++z) {
      for (Index v = 0; v < nv_; ++v) b(z * nv_ + v) = m(z, v);
    }
    return solver_.cod.solve(b);
  }
  double condition() const { return solver_.condition; }

 private:
  Index nz_, nv_;
  Solver solver_;
};

std::vector<double> pmf_of(const ProbTensor& t, const std::string& axis) {
  const auto m = marginal(t, std::vector<std::string>{axis});
  return {m.values().begin(), m.values().end()};
}

std::size_t argmax(const std::vector<double>& p) {
  return static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
}

std::string stratum(const std::string& axis, std::size_t level) { return axis + "=" + std::to_string(level); }

void check_dims(const ProbTensor& t, const Roles& r, std::size_t k) {
  const auto nz = t.axis(r.z).cardinality, nv = t.axis(r.v).cardinality;
  if (nz < k || nv < k) {
    throw Error(ErrorCode::InvalidArgument, "latent dimension " + std::to_string(k) + " exceeds |" + r.z + "|=" +
                                                std::to_string(nz) + " or |" + r.v + "|=" + std::to_string(nv) +
                                                "; the proxies need |Z| >= K and |V| >= K");
  }
  if (k < 1) throw Error(ErrorCode::InvalidArgument, "latent dimension must be at least 1");
}

ProbTensor roles_marginal(const ProbTensor& joint, std::vector<std::string> axes) {
  for (const auto& a : axes) {
    if (!joint.has_axis(a)) throw Error(ErrorCode::MissingRole, "joint has no axis '" + a + "'");
  }
  return marginal(joint, axes);
}

// Kernel f_{target | W, X} from columns h_x (|target| x K) per x.
MarkovKernel kernel_wx(const VarSpace& target, const VarSpace& w, const VarSpace& x, const std::vector<Matrix>& h) {
  const std::size_t nt = target.cardinality, k = w.cardinality, nx = x.cardinality;
  std::vector<double> values(nt * k * nx);
  for (std::size_t wi = 0; wi < k; ++wi) {
    for (std::size_t xi = 0; xi < nx; ++xi) {
      for (std::size_t t = 0; t < nt; ++t) values[(wi * nx + xi) * nt + t] = h[xi](ix(t), ix(wi));
    }
  }
  return MarkovKernel(target, {w, x}, std::move(values));
}

ProbTensor tensor_wx(const VarSpace& w, const VarSpace& x, const Matrix& wx) {
  std::vector<double> values(static_cast<std::size_t>(wx.size()));
  for (Index wi = 0; wi < wx.rows(); ++wi) {
    for (Index xi = 0; xi < wx.cols(); ++xi) values[static_cast<std::size_t>(wi * wx.cols() + xi)] = wx(wi, xi);
  }
  return ProbTensor::from_weights({w, x}, std::move(values));
}

// Block of a row-major tensor as a matrix: rows axis a, cols axis b, other indices fixed.
Matrix block(const ProbTensor& t, std::size_t offset, std::size_t rows, std::size_t row_stride, std::size_t cols,
             std::size_t col_stride) {
  Matrix m(ix(rows), ix(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) m(ix(r), ix(c)) = t[offset + r * row_stride + c * col_stride];
  }
  return m;
}

}  // namespace

// ---------------------------------------------------------------------------

LatentOutcomeModel identify_outcome_proxy(const ProbTensor& joint, const PipelineOptions& opt) {
  const auto& r = opt.roles;
  const std::size_t k = opt.hs.latent_dim;
  Run run(DesignTag::Outcome, opt);
  const auto t = roles_marginal(joint, {r.x, r.y, r.z, r.v});
  check_dims(t, r, k);
  const std::size_t nx = t.axes()[0].cardinality, ny = t.axes()[1].cardinality;
  const std::size_t nz = t.axes()[2].cardinality, nv = t.axes()[3].cardinality;
  const auto fx = pmf_of(t, r.x);
  run.positive(fx, r.x);
  const std::size_t x1 = argmax(fx);
  run.diag().reference_stratum = stratum(r.x, x1);

  const auto ref = permute_axes(slice(t, r.x, x1), std::vector<std::string>{r.z, r.y, r.v});
  const auto hs = run.spectral(ref, stratum(r.x, x1));
  const Matrix a = hs.z_given_w.matrix();
  const auto solver = make_solver(run, a, "f_{Z|W}", stratum(r.x, x1));

  const VarSpace w = VarSpace::categorical(r.w, k);
  std::vector<Matrix> h(nx);
  Matrix wx(ix(k), ix(nx));
  for (std::size_t x = 0; x < nx; ++x) {
    const std::string where = stratum(r.x, x);
    const std::size_t base = x * ny * nz * nv;
    Matrix m = Matrix::Zero(ix(nz), ix(nv));
    std::vector<Matrix> my;
    for (std::size_t y = 0; y < ny; ++y) {
      my.push_back(block(t, base + y * nz * nv, nz, nv, nv, 1));
      m += my.back();
    }
    Matrix g = solver.cod.solve(m);
    StageDiagnostic stage{where, x == x1 ? "spectral+solve" : "solve", solver.condition, project_mass(g, fx[x]), {}};
    run.check_projection(stage.projection_distance, where);
    if (x == x1) {
      h[x] = hs.c_given_w.matrix();
    } else {
      const KhatriRao kr(run, a, g, where);
      Matrix hx(ix(ny), ix(k));
      for (std::size_t y = 0; y < ny; ++y) hx.row(ix(y)) = kr.solve(my[y]).transpose();
      const double d = project_columns(hx);
      run.check_projection(d, where);
      stage.condition = std::max(stage.condition, kr.condition());
      stage.projection_distance = std::max(stage.projection_distance, d);
      h[x] = std::move(hx);
    }
    run.record(std::move(stage));
    wx.col(ix(x)) = g.rowwise().sum();
  }
  const auto& xs = t.axes()[0];
  return LatentOutcomeModel{DesignTag::Outcome,
                            kernel_wx(t.axes()[1], w, xs, h),
                            tensor_wx(w, xs, wx),
                            std::nullopt,
                            std::nullopt,
                            hs.z_given_w,
                            Alignment::AlignedToReference,
                            std::move(run.diag())};
}

LatentOutcomeModel identify_treatment_proxy(const ProbTensor& joint, const PipelineOptions& opt) {
  const auto& r = opt.roles;
  const std::size_t k = opt.hs.latent_dim;
  Run run(DesignTag::Treatment, opt);
  const auto t = roles_marginal(joint, {r.y, r.x, r.z, r.v});
  check_dims(t, r, k);
  const std::size_t ny = t.axes()[0].cardinality, nx = t.axes()[1].cardinality, nz = t.axes()[2].cardinality;
  run.positive(pmf_of(t, r.x), r.x);
  run.diag().reference_stratum = "all";

  const auto hs = run.spectral(marginal(t, std::vector<std::string>{r.z, r.x, r.v}), "all");
  const Matrix a = hs.z_given_w.matrix();
  const auto solver = make_solver(run, a, "f_{Z|W}", "all");
  const auto yxz = marginal(t, std::vector<std::string>{r.y, r.x, r.z});
  Matrix rhs(ix(nz), ix(ny * nx));
  for (std::size_t yx = 0; yx < ny * nx; ++yx) {
    for (std::size_t z = 0; z < nz; ++z) rhs(ix(z), ix(yx)) = yxz[yx * nz + z];
  }
  Matrix hyw = solver.cod.solve(rhs);  // K x (y,x)
  const double d = project_mass(hyw, 1.0);
  run.check_projection(d, "all");
  run.record({"all", "solve", solver.condition, d, {}});

  const VarSpace w = VarSpace::categorical(r.w, k);
  Matrix wx = Matrix::Zero(ix(k), ix(nx));
  for (std::size_t y = 0; y < ny; ++y) {
    for (std::size_t x = 0; x < nx; ++x) wx.col(ix(x)) += hyw.col(ix(y * nx + x));
  }
  std::vector<Matrix> h(nx, Matrix(ix(ny), ix(k)));
  for (std::size_t x = 0; x < nx; ++x) {
    for (std::size_t wi = 0; wi < k; ++wi) {
      const double mass = wx(ix(wi), ix(x));
      if (!(mass > 0)) {
        run.fail(Error(ErrorCode::ZeroConditioningCell, "recovered f_{WX} is zero at W=" + std::to_string(wi),
                       {}, stratum(r.x, x)),
                 {});
      }
      for (std::size_t y = 0; y < ny; ++y) h[x](ix(y), ix(wi)) = hyw(ix(wi), ix(y * nx + x)) / mass;
    }
  }
  return LatentOutcomeModel{DesignTag::Treatment,
                            kernel_wx(t.axes()[0], w, t.axes()[1], h),
                            tensor_wx(w, t.axes()[1], wx),
                            std::nullopt,
                            std::nullopt,
                            hs.z_given_w,
                            Alignment::AlignedToReference,
                            std::move(run.diag())};
}

LatentOutcomeModel identify_cond_treatment_proxy(const ProbTensor& joint, const PipelineOptions& opt) {
  const auto& r = opt.roles;
  const std::size_t k = opt.hs.latent_dim;
  Run run(DesignTag::CondTreatment, opt);
  const auto t = roles_marginal(joint, {r.y, r.x, r.z, r.v});
  check_dims(t, r, k);
  const std::size_t ny = t.axes()[0].cardinality, nx = t.axes()[1].cardinality;
  const std::size_t nz = t.axes()[2].cardinality, nv = t.axes()[3].cardinality;
  const auto fy = pmf_of(t, r.y);
  run.positive(fy, r.y);
  const std::size_t y1 = argmax(fy);
  run.diag().reference_stratum = stratum(r.y, y1);

  const auto ref = permute_axes(slice(t, r.y, y1), std::vector<std::string>{r.z, r.x, r.v});
  const auto hs = run.spectral(ref, stratum(r.y, y1));
  const Matrix a = hs.z_given_w.matrix();
  const auto solver = make_solver(run, a, "f_{Z|W}", stratum(r.y, y1));

  const VarSpace w = VarSpace::categorical(r.w, k);
  // f_{YXW}(y, x, w), laid out per y as an |X| x K matrix.
  std::vector<Matrix> yxw(ny);
  for (std::size_t y = 0; y < ny; ++y) {
    const std::string where = stratum(r.y, y);
    const std::size_t base = y * nx * nz * nv;
    Matrix m = Matrix::Zero(ix(nz), ix(nv));
    std::vector<Matrix> mx;
    for (std::size_t x = 0; x < nx; ++x) {
      mx.push_back(block(t, base + x * nz * nv, nz, nv, nv, 1));
      m += mx.back();
    }
    Matrix g = solver.cod.solve(m);
    StageDiagnostic stage{where, y == y1 ? "spectral+solve" : "solve", solver.condition, project_mass(g, fy[y]), {}};
    run.check_projection(stage.projection_distance, where);
    Matrix hx;
    if (y == y1) {
      hx = hs.c_given_w.matrix();
    } else {
      const KhatriRao kr(run, a, g, where);
      hx.resize(ix(nx), ix(k));
      for (std::size_t x = 0; x < nx; ++x) hx.row(ix(x)) = kr.solve(mx[x]).transpose();
      const double d = project_columns(hx);
      run.check_projection(d, where);
      stage.condition = std::max(stage.condition, kr.condition());
      stage.projection_distance = std::max(stage.projection_distance, d);
    }
    run.record(std::move(stage));
    const Eigen::VectorXd fw = g.rowwise().sum();
    yxw[y] = hx * fw.asDiagonal();
  }
  Matrix wx = Matrix::Zero(ix(k), ix(nx));
  for (std::size_t y = 0; y < ny; ++y) wx += yxw[y].transpose();
  std::vector<Matrix> h(nx, Matrix(ix(ny), ix(k)));
  for (std::size_t x = 0; x < nx; ++x) {
    for (std::size_t wi = 0; wi < k; ++wi) {
      const double mass = wx(ix(wi), ix(x));
      if (!(mass > 0)) {
        run.fail(Error(ErrorCode::ZeroConditioningCell, "recovered f_{WX} is zero at W=" + std::to_string(wi),
                       {}, stratum(r.x, x)),
                 {});
      }
      for (std::size_t y = 0; y < ny; ++y) h[x](ix(y), ix(wi)) = yxw[y](ix(x), ix(wi)) / mass;
    }
  }
  return LatentOutcomeModel{DesignTag::CondTreatment,
                            kernel_wx(t.axes()[0], w, t.axes()[1], h),
                            tensor_wx(w, t.axes()[1], wx),
                            std::nullopt,
                            std::nullopt,
                            hs.z_given_w,
                            Alignment::AlignedToReference,
                            std::move(run.diag())};
}

LatentOutcomeModel identify_auxiliary_proxy(const ProbTensor& joint, const PipelineOptions& opt) {
  const auto& r = opt.roles;
  const std::size_t k = opt.hs.latent_dim;
  Run run(DesignTag::Auxiliary, opt);
  const auto t = roles_marginal(joint, {r.x, r.y, r.c, r.z, r.v});
  check_dims(t, r, k);
  const std::size_t nx = t.axes()[0].cardinality, ny = t.axes()[1].cardinality, nc = t.axes()[2].cardinality;
  const std::size_t nz = t.axes()[3].cardinality, nv = t.axes()[4].cardinality;
  const auto fx = pmf_of(t, r.x);
  run.positive(fx, r.x);
  const std::size_t x1 = argmax(fx);
  run.diag().reference_stratum = stratum(r.x, x1);

  const auto ref = marginal(slice(t, r.x, x1), std::vector<std::string>{r.z, r.c, r.v});
  const auto hs = run.spectral(ref, stratum(r.x, x1));
  const Matrix a = hs.z_given_w.matrix();
  const auto solver = make_solver(run, a, "f_{Z|W}", stratum(r.x, x1));

  // h[x](y, w * nv + v) = f_{YWVX}(y, w, v, x)
  std::vector<Matrix> hywv(nx);
  for (std::size_t x = 0; x < nx; ++x) {
    const std::string where = stratum(r.x, x);
    std::vector<Matrix> mc(nc, Matrix::Zero(ix(nz), ix(nv)));
    std::vector<Matrix> my(ny, Matrix::Zero(ix(nz), ix(nv)));
    for (std::size_t y = 0; y < ny; ++y) {
      for (std::size_t c = 0; c < nc; ++c) {
        const Matrix b = block(t, (((x * ny) + y) * nc + c) * nz * nv, nz, nv, nv, 1);
        mc[c] += b;
        my[y] += b;
      }
    }
    Matrix m = Matrix::Zero(ix(nz), ix(nv));
    for (const auto& b : my) m += b;
    Matrix g = solver.cod.solve(m);
    StageDiagnostic stage{where, x == x1 ? "spectral+solve" : "solve", solver.condition, project_mass(g, fx[x]), {}};
    run.check_projection(stage.projection_distance, where);
    if (x != x1) {
      // f_{C|W,x}: not needed downstream, but its solve certifies the stratum.
      const KhatriRao kr(run, a, g, where);
      Matrix hc(ix(nc), ix(k));
      for (std::size_t c = 0; c < nc; ++c) hc.row(ix(c)) = kr.solve(mc[c]).transpose();
      const double d = project_columns(hc);
      run.check_projection(d, where);
      stage.condition = std::max(stage.condition, kr.condition());
      stage.projection_distance = std::max(stage.projection_distance, d);
    }
    Matrix hx(ix(ny), ix(k * nv));
    for (std::size_t y = 0; y < ny; ++y) {
      const Matrix sol = solver.cod.solve(my[y]);  // K x |V|
      for (std::size_t wi = 0; wi < k; ++wi) {
        for (std::size_t v = 0; v < nv; ++v) hx(ix(y), ix(wi * nv + v)) = sol(ix(wi), ix(v));
      }
    }
    const double d = project_mass(hx, fx[x]);
    run.check_projection(d, where);
    stage.projection_distance = std::max(stage.projection_distance, d);
    run.record(std::move(stage));
    hywv[x] = std::move(hx);
  }

  const VarSpace w = VarSpace::categorical(r.w, k);
  const auto& xs = t.axes()[0];
  const auto& ys = t.axes()[1];
  const auto& vs = t.axes()[4];
  std::vector<double> kernel_vals(ny * k * nv * nx), vwx_vals(nv * k * nx);
  Matrix wx = Matrix::Zero(ix(k), ix(nx));
  std::vector<Matrix> h(nx, Matrix::Zero(ix(ny), ix(k)));
  for (std::size_t x = 0; x < nx; ++x) {
    for (std::size_t wi = 0; wi < k; ++wi) {
      for (std::size_t v = 0; v < nv; ++v) {
        const double mass = hywv[x].col(ix(wi * nv + v)).sum();
        if (!(mass > 0)) {
          run.fail(Error(ErrorCode::ZeroConditioningCell,
                         "recovered f_{WVX} is zero at W=" + std::to_string(wi) + ", " + stratum(r.v, v), {},
                         stratum(r.x, x)),
                   {});
        }
        vwx_vals[(v * k + wi) * nx + x] = mass;
        wx(ix(wi), ix(x)) += mass;
        for (std::size_t y = 0; y < ny; ++y) {
          kernel_vals[((wi * nv + v) * nx + x) * ny + y] = hywv[x](ix(y), ix(wi * nv + v)) / mass;
          h[x](ix(y), ix(wi)) += hywv[x](ix(y), ix(wi * nv + v));
        }
      }
      for (std::size_t y = 0; y < ny; ++y) h[x](ix(y), ix(wi)) /= wx(ix(wi), ix(x));
    }
  }
  return LatentOutcomeModel{DesignTag::Auxiliary,
                            kernel_wx(ys, w, xs, h),
                            tensor_wx(w, xs, wx),
                            MarkovKernel(ys, {w, vs, xs}, std::move(kernel_vals)),
                            ProbTensor::from_weights({vs, w, xs}, std::move(vwx_vals)),
                            hs.z_given_w,
                            Alignment::AlignedToReference,
                            std::move(run.diag())};
}

LatentOutcomeModel identify(DesignTag design, const ProbTensor& joint, const PipelineOptions& opt) {
  switch (design) {
    case DesignTag::Outcome: return identify_outcome_proxy(joint, opt);
    case DesignTag::Treatment: return identify_treatment_proxy(joint, opt);
    case DesignTag::CondTreatment: return identify_cond_treatment_proxy(joint, opt);
    case DesignTag::Auxiliary: return identify_auxiliary_proxy(joint, opt);
  }
  throw Error(ErrorCode::InvalidArgument, "unknown design");
}

// ---------------------------------------------------------------------------

ProbTensor potential_joint(const LatentOutcomeModel& m, std::size_t x1) {
  const auto& ys = m.outcome_space();
  const auto& ws = m.y_given_wx.given()[0];
  const auto& xs = m.treatment_space();
  const std::size_t ny = ys.cardinality, k = ws.cardinality, nx = xs.cardinality;
  if (x1 >= nx) throw Error(ErrorCode::InvalidArgument, "treatment level out of range");
  std::vector<double> out(ny * k * nx, 0.0);
  if (m.y_given_wvx && m.vwx_joint) {
    const auto& kern = *m.y_given_wvx;
    const std::size_t nv = m.vwx_joint->axes()[0].cardinality;
    const auto& f = *m.vwx_joint;
    for (std::size_t y = 0; y < ny; ++y) {
      for (std::size_t w = 0; w < k; ++w) {
        for (std::size_t x2 = 0; x2 < nx; ++x2) {
          double s = 0;
          for (std::size_t v = 0; v < nv; ++v) s += kern(y, (w * nv + v) * nx + x1) * f[(v * k + w) * nx + x2];
          out[(y * k + w) * nx + x2] = s;
        }
      }
    }
  } else {
    for (std::size_t y = 0; y < ny; ++y) {
      for (std::size_t w = 0; w < k; ++w) {
        for (std::size_t x2 = 0; x2 < nx; ++x2) {
          out[(y * k + w) * nx + x2] = m.y_given_wx(y, w * nx + x1) * m.wx_joint[w * nx + x2];
        }
      }
    }
  }
  const std::string name = ys.name + "(" + xs.name + "=" + std::to_string(x1) + ")";
  return ProbTensor::from_weights({ys.renamed(name), ws, xs}, std::move(out));
}

LatentOutcomeModel permute_latent(const LatentOutcomeModel& m, const Permutation& p) {
  const std::size_t k = m.latent_dim();
  if (p.size() != k) throw Error(ErrorCode::InvalidArgument, "permutation size differs from latent dimension");
  const auto& ws = m.y_given_wx.given()[0];
  const auto& xs = m.treatment_space();
  const std::size_t nx = xs.cardinality, ny = m.outcome_space().cardinality;

  std::vector<double> kv(ny * k * nx), wxv(k * nx);
  for (std::size_t w = 0; w < k; ++w) {
    for (std::size_t x = 0; x < nx; ++x) {
      wxv[w * nx + x] = m.wx_joint[p[w] * nx + x];
      for (std::size_t y = 0; y < ny; ++y) kv[(w * nx + x) * ny + y] = m.y_given_wx(y, p[w] * nx + x);
    }
  }
  LatentOutcomeModel out{m.design,
                         MarkovKernel(m.outcome_space(), m.y_given_wx.given(), std::move(kv)),
                         ProbTensor(m.wx_joint.axes(), std::move(wxv)),
                         std::nullopt,
                         std::nullopt,
                         permute_latent_columns(m.z_given_w, p),
                         m.alignment,
                         m.diagnostics};
  if (m.y_given_wvx && m.vwx_joint) {
    const std::size_t nv = m.vwx_joint->axes()[0].cardinality;
    std::vector<double> av(ny * k * nv * nx), fv(nv * k * nx);
    for (std::size_t w = 0; w < k; ++w) {
      for (std::size_t v = 0; v < nv; ++v) {
        for (std::size_t x = 0; x < nx; ++x) {
          fv[(v * k + w) * nx + x] = (*m.vwx_joint)[(v * k + p[w]) * nx + x];
          for (std::size_t y = 0; y < ny; ++y) {
            av[((w * nv + v) * nx + x) * ny + y] = (*m.y_given_wvx)(y, (p[w] * nv + v) * nx + x);
          }
        }
      }
    }
    out.y_given_wvx = MarkovKernel(m.outcome_space(), m.y_given_wvx->given(), std::move(av));
    out.vwx_joint = ProbTensor(m.vwx_joint->axes(), std::move(fv));
  }
  (void)ws;
  return out;
}

LatentOutcomeModel canonicalize(const LatentOutcomeModel& m) {
  return permute_latent(m, lexicographic_column_order(m.z_given_w.matrix()));
}

std::vector<Atom> distribution_table(const std::vector<double>& values, const std::vector<double>& masses) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<Atom> out;
  double cdf = 0;
  for (auto i : order) {
    if (!(masses[i] > kMassTolerance)) continue;
    cdf += masses[i];
    if (!out.empty() && values[i] - out.back().value <= kAtomTolerance) {
      out.back().mass += masses[i];
      out.back().cdf = cdf;
    } else {
      out.push_back({values[i], masses[i], cdf});
    }
  }
  return out;
}

double quantile(const std::vector<double>& levels, const std::vector<double>& pmf, double tau) {
  if (!(tau >= 0.0 && tau <= 1.0)) throw Error(ErrorCode::TauOutOfRange, "quantile level must lie in [0, 1]");
  std::vector<std::size_t> order(levels.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return levels[a] < levels[b]; });
  double cdf = 0;
  for (auto i : order) {
    cdf += pmf[i];
    if (cdf >= tau - kClipTolerance && pmf[i] > 0) return levels[i];
  }
  return levels[order.back()];
}

EstimandReport estimands(const LatentOutcomeModel& model, const EstimandOptions& opt) {
  const auto m = canonicalize(model);
  const auto& ys = m.outcome_space();
  const auto& xs = m.treatment_space();
  const std::size_t ny = ys.cardinality, nx = xs.cardinality, k = m.latent_dim();

  EstimandReport r;
  r.design = m.design;
  r.diagnostics = m.diagnostics;
  r.treatment_pmf.assign(nx, 0.0);
  r.latent_pmf.assign(k, 0.0);
  r.latent_given_x.assign(nx, std::vector<double>(k, 0.0));
  for (std::size_t w = 0; w < k; ++w) {
    for (std::size_t x = 0; x < nx; ++x) {
      r.treatment_pmf[x] += m.wx_joint[w * nx + x];
      r.latent_pmf[w] += m.wx_joint[w * nx + x];
    }
  }
  for (std::size_t x = 0; x < nx; ++x) {
    for (std::size_t w = 0; w < k; ++w) r.latent_given_x[x][w] = m.wx_joint[w * nx + x] / r.treatment_pmf[x];
  }

  std::vector<ProbTensor> pj;
  for (std::size_t x1 = 0; x1 < nx; ++x1) pj.push_back(potential_joint(m, x1));
  r.potential_pmf.assign(nx, std::vector<double>(ny, 0.0));
  r.potential_given_x.assign(nx, std::vector<std::vector<double>>(nx, std::vector<double>(ny, 0.0)));
  // E[1{Y(x1)=y} | W=w] per x1, y, w.
  std::vector<std::vector<std::vector<double>>> given_w(nx, std::vector<std::vector<double>>(ny, std::vector<double>(k, 0.0)));
  for (std::size_t x1 = 0; x1 < nx; ++x1) {
    for (std::size_t y = 0; y < ny; ++y) {
      for (std::size_t w = 0; w < k; ++w) {
        for (std::size_t x2 = 0; x2 < nx; ++x2) {
          const double p = pj[x1][(y * k + w) * nx + x2];
          r.potential_pmf[x1][y] += p;
          r.potential_given_x[x1][x2][y] += p / r.treatment_pmf[x2];
          given_w[x1][y][w] += p;
        }
        given_w[x1][y][w] /= r.latent_pmf[w];
      }
    }
  }

  if (!ys.has_levels()) {
    if (opt.strict) throw Error(ErrorCode::MissingLevels, "outcome '" + ys.name + "' has no numeric levels");
    return r;
  }
  r.y_levels = *ys.levels;
  std::vector<double> mean(nx, 0.0);
  for (std::size_t x1 = 0; x1 < nx; ++x1) {
    for (std::size_t y = 0; y < ny; ++y) mean[x1] += r.y_levels[y] * r.potential_pmf[x1][y];
  }
  r.potential_mean = mean;
  if (nx != 2) {
    if (opt.strict) throw Error(ErrorCode::NonBinaryTreatment, "treatment '" + xs.name + "' is not binary");
    return r;
  }
  auto cond_mean = [&](std::size_t x1, std::size_t x2) {
    double s = 0;
    for (std::size_t y = 0; y < ny; ++y) s += r.y_levels[y] * r.potential_given_x[x1][x2][y];
    return s;
  };
  r.ate = mean[1] - mean[0];
  r.att = cond_mean(1, 1) - cond_mean(0, 1);
  r.atu = cond_mean(1, 0) - cond_mean(0, 0);
  for (double tau : opt.tau_grid) {
    const double q0 = quantile(r.y_levels, r.potential_pmf[0], tau);
    const double q1 = quantile(r.y_levels, r.potential_pmf[1], tau);
    r.qte.push_back({tau, q0, q1, q1 - q0});
  }
  std::vector<double> beta(k, 0.0);
  for (std::size_t w = 0; w < k; ++w) {
    for (std::size_t y = 0; y < ny; ++y) beta[w] += r.y_levels[y] * (given_w[1][y][w] - given_w[0][y][w]);
  }
  r.cate = beta;
  r.cate_distribution = distribution_table(beta, r.latent_pmf);
  std::vector<std::vector<Atom>> by_x;
  for (std::size_t x = 0; x < nx; ++x) by_x.push_back(distribution_table(beta, r.latent_given_x[x]));
  r.cate_distribution_given_x = std::move(by_x);
  double m1 = 0, m2 = 0;
  for (std::size_t w = 0; w < k; ++w) {
    m1 += r.latent_pmf[w] * beta[w];
    m2 += r.latent_pmf[w] * beta[w] * beta[w];
  }
  r.cate_variance = std::max(0.0, m2 - m1 * m1);
  return r;
}

// ---------------------------------------------------------------------------
// JSON

Json to_json(const HsDiagnostics& d) {
  return Json{{"singular_values", d.singular_values},
              {"eigen_gap", d.eigen_gap},
              {"draws", d.draws},
              {"cond_z_given_w", d.cond_z_given_w},
              {"cond_projected", d.cond_projected},
              {"max_imag", d.max_imag},
              {"max_negativity_clipped", d.max_negativity_clipped},
              {"reconstruction_residual", d.reconstruction_residual}};
}

Json to_json(const PipelineDiagnostics& d) {
  Json stages = Json::array();
  for (const auto& s : d.stages) {
    Json j{{"stratum", s.stratum},
           {"kind", s.kind},
           {"condition", s.condition},
           {"projection_distance", s.projection_distance}};
    if (s.hs) j["spectral"] = to_json(*s.hs);
    stages.push_back(std::move(j));
  }
  return Json{{"reference_stratum", d.reference_stratum},
              {"stage_count", d.stages.size()},
              {"stages", stages},
              {"max_projection_distance", d.max_projection_distance},
              {"max_condition", d.max_condition}};
}

namespace {

Json atoms_json(const std::vector<Atom>& atoms) {
  Json out = Json::array();
  for (const auto& a : atoms) out.push_back(Json{{"value", a.value}, {"mass", a.mass}, {"cdf", a.cdf}});
  return out;
}

}  // namespace

Json to_json(const EstimandReport& r) {
  Json j{{"design", to_string(r.design)},
         {"potential_pmf", r.potential_pmf},
         {"potential_given_x", r.potential_given_x},
         {"latent_pmf", r.latent_pmf},
         {"latent_given_x", r.latent_given_x},
         {"treatment_pmf", r.treatment_pmf}};
  if (!r.y_levels.empty()) j["y_levels"] = r.y_levels;
  if (r.potential_mean) j["potential_mean"] = *r.potential_mean;
  if (r.ate) j["ate"] = *r.ate;
  if (r.att) j["att"] = *r.att;
  if (r.atu) j["atu"] = *r.atu;
  if (!r.qte.empty()) {
    Json q = Json::array();
    for (const auto& row : r.qte) q.push_back(Json{{"tau", row.tau}, {"q0", row.q0}, {"q1", row.q1}, {"qte", row.qte}});
    j["qte"] = q;
  }
  if (r.cate) j["cate"] = *r.cate;
  if (r.cate_distribution) j["cate_distribution"] = atoms_json(*r.cate_distribution);
  if (r.cate_distribution_given_x) {
    Json by_x = Json::array();
    for (const auto& t : *r.cate_distribution_given_x) by_x.push_back(atoms_json(t));
    j["cate_distribution_given_x"] = by_x;
  }
  if (r.cate_variance) j["cate_variance"] = *r.cate_variance;
  j["diagnostics"] = to_json(r.diagnostics);
  return j;
}

Json to_json(const LatentOutcomeModel& m) {
  Json j{{"design", to_string(m.design)},
         {"alignment", to_string(m.alignment)},
         {"y_given_wx", to_json(m.y_given_wx)},
         {"wx_joint", to_json(m.wx_joint)},
         {"z_given_w", to_json(m.z_given_w)}};
  if (m.y_given_wvx) j["y_given_wvx"] = to_json(*m.y_given_wvx);
  if (m.vwx_joint) j["vwx_joint"] = to_json(*m.vwx_joint);
  return j;
}

}  // namespace triproxy
