#include "common.hpp"

#include "triproxy/error.hpp"
#include "triproxy/random.hpp"
#include "triproxy/spectral.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <numeric>

using namespace triproxy;
using namespace triproxy::testing;

namespace {

struct Factors {
  Eigen::MatrixXd z, c, wv;  // f_{Z|W}, f_{C|W}, f_{WV}
};

Eigen::MatrixXd stochastic(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    const auto d = dirichlet_ones(rng, static_cast<std::size_t>(rows));
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = d[static_cast<std::size_t>(i)];
  }
  return m;
}

Factors random_factors(std::uint64_t seed, Eigen::Index k, Eigen::Index nz, Eigen::Index nc, Eigen::Index nv) {
  Rng rng(seed);
  Factors f{stochastic(rng, nz, k), stochastic(rng, nc, k), Eigen::MatrixXd(k, nv)};
  const auto g = dirichlet_ones(rng, static_cast<std::size_t>(k * nv));
  for (Eigen::Index i = 0; i < k * nv; ++i) f.wv(i / nv, i % nv) = g[static_cast<std::size_t>(i)];
  return f;
}

ProbTensor joint_of(const Factors& f) {
  const auto nz = f.z.rows(), nc = f.c.rows(), nv = f.wv.cols(), k = f.z.cols();
  std::vector<double> vals(static_cast<std::size_t>(nz * nc * nv));
  for (Eigen::Index z = 0; z < nz; ++z) {
    for (Eigen::Index c = 0; c < nc; ++c) {
      for (Eigen::Index v = 0; v < nv; ++v) {
        double t = 0;
        for (Eigen::Index w = 0; w < k; ++w) t += f.z(z, w) * f.c(c, w) * f.wv(w, v);
        vals[static_cast<std::size_t>((z * nc + c) * nv + v)] = t;
      }
    }
  }
  return ProbTensor::from_weights({VarSpace::categorical("Z", static_cast<std::size_t>(nz)),
                                   VarSpace::categorical("C", static_cast<std::size_t>(nc)),
                                   VarSpace::categorical("V", static_cast<std::size_t>(nv))},
                                  vals);
}

/// Largest entrywise error after the best column matching of f_{Z|W}, applied
/// to all three factors at once.
double recovery_error(const Factors& truth, const HsFactors& got) {
  const auto k = truth.z.cols();
  const Eigen::MatrixXd gz = got.z_given_w.matrix(), gc = got.c_given_w.matrix();
  Eigen::MatrixXd gwv(k, truth.wv.cols());
  for (Eigen::Index w = 0; w < k; ++w) {
    for (Eigen::Index v = 0; v < gwv.cols(); ++v) gwv(w, v) = got.wv_joint[static_cast<std::size_t>(w * gwv.cols() + v)];
  }
  Permutation p(static_cast<std::size_t>(k));
  std::iota(p.begin(), p.end(), std::size_t{0});
  double best = INFINITY;
  do {
    double e = 0;
    for (Eigen::Index w = 0; w < k; ++w) {
      const auto j = static_cast<Eigen::Index>(p[static_cast<std::size_t>(w)]);
      e = std::max(e, (truth.z.col(w) - gz.col(j)).cwiseAbs().maxCoeff());
      e = std::max(e, (truth.c.col(w) - gc.col(j)).cwiseAbs().maxCoeff());
      e = std::max(e, (truth.wv.row(w) - gwv.row(j)).cwiseAbs().maxCoeff());
    }
    best = std::min(best, e);
  } while (std::next_permutation(p.begin(), p.end()));
  return best;
}

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_CASE("perfect proxies are recovered exactly") {
  Factors f{Eigen::MatrixXd::Identity(3, 3), Eigen::MatrixXd(3, 3), Eigen::MatrixXd(3, 3)};
  f.c << 0.7, 0.2, 0.1, 0.2, 0.5, 0.3, 0.1, 0.3, 0.6;
  f.wv = Eigen::MatrixXd::Identity(3, 3) * (1.0 / 3);
  HsOptions o;
  o.latent_dim = 3;
  const auto got = hs_decompose(joint_of(f), o);
  CHECK(recovery_error(f, got) <= 1e-10);
  CHECK(got.diagnostics.reconstruction_residual <= 1e-10);
  CHECK(got.alignment == Alignment::UnalignedPermutation);
}

TEST_CASE("seeded K=3 factors are recovered up to one permutation") {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto f = random_factors(700 + s, 3, 4, 3, 4);
    HsOptions o;
    o.latent_dim = 3;
    o.seed = s;
    const auto got = hs_decompose(joint_of(f), o);
    CHECK(recovery_error(f, got) <= 1e-8);
    for (const auto* k : {&got.c_given_w, &got.w_given_v, &got.z_given_w}) {
      const Eigen::MatrixXd m = k->matrix();
      CHECK((m.colwise().sum().array() - 1).abs().maxCoeff() <= 1e-8);
      CHECK(m.minCoeff() >= 0);
    }
  }
}

TEST_CASE("reported residual is the actual reconstruction error") {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto f = random_factors(800 + s, 2 + s % 3, 5, 3, 5);
    const auto j = joint_of(f);
    HsOptions o;
    o.latent_dim = static_cast<std::size_t>(f.z.cols());
    const auto got = hs_decompose(j, o);
    const Eigen::MatrixXd z = got.z_given_w.matrix(), c = got.c_given_w.matrix();
    const std::size_t nz = 5, nc = 3, nv = 5, k = o.latent_dim;
    double actual = 0;
    for (std::size_t a = 0; a < nz; ++a) {
      for (std::size_t b = 0; b < nc; ++b) {
        for (std::size_t v = 0; v < nv; ++v) {
          double t = 0;
          for (std::size_t w = 0; w < k; ++w) {
            t += z(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(w)) *
                 c(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(w)) * got.wv_joint[w * nv + v];
          }
          actual = std::max(actual, std::abs(t - j[(a * nc + b) * nv + v]));
        }
      }
    }
    CHECK(std::abs(actual - got.diagnostics.reconstruction_residual) <= 1e-15);
  }
}

TEST_CASE("relabeling the constructors changes nothing after canonical sorting") {
  const auto f = random_factors(31, 4, 6, 4, 6);
  Factors g = f;
  const Permutation p = {2, 0, 3, 1};
  g.z = permute_columns(f.z, p);
  g.c = permute_columns(f.c, p);
  g.wv = permute_columns(f.wv.transpose(), p).transpose();
  HsOptions o;
  o.latent_dim = 4;
  const auto a = hs_decompose(joint_of(f), o), b = hs_decompose(joint_of(g), o);
  CHECK((a.z_given_w.matrix() - b.z_given_w.matrix()).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((a.c_given_w.matrix() - b.c_given_w.matrix()).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((a.w_given_v.matrix() - b.w_given_v.matrix()).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(lexicographic_column_order(a.z_given_w.matrix()) == Permutation{0, 1, 2, 3});
}

TEST_CASE("failure modes name their assumption") {
  HsOptions o;
  o.latent_dim = 2;
  SUBCASE("indistinguishable latent states") {
    auto f = random_factors(5, 2, 3, 3, 3);
    f.c.col(1) = f.c.col(0);
    try {
      hs_decompose(joint_of(f), o);
      FAIL("expected EigenGapExhausted");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::EigenGapExhausted);
      CHECK(e.assumption() == "HS Assumption 4");
    }
  }
  SUBCASE("rank-one proxy kernel") {
    auto f = random_factors(6, 2, 3, 3, 3);
    f.z.col(1) = f.z.col(0);
    try {
      hs_decompose(joint_of(f), o);
      FAIL("expected RankDeficient");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::RankDeficient);
      CHECK(e.assumption() == "HS Assumption 3");
    }
  }
  SUBCASE("a proxy level with no mass") {
    auto f = random_factors(7, 2, 3, 3, 4);
    f.wv.col(3).setZero();
    try {
      hs_decompose(joint_of(f), o);
      FAIL("expected ZeroConditioningCell");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::ZeroConditioningCell);
      CHECK_FALSE(e.assumption().empty());
    }
  }
  SUBCASE("K larger than the proxy supports") {
    o.latent_dim = 4;
    const auto f = random_factors(8, 2, 3, 3, 3);
    try {
      hs_decompose(joint_of(f), o);
      FAIL("expected InvalidArgument");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::InvalidArgument);
      CHECK(std::string(e.what()).find("|Z| >= K and |V| >= K") != std::string::npos);
    }
  }
  SUBCASE("an uninformative third proxy") {
    auto f = random_factors(9, 2, 3, 1, 3);
    CHECK(code_of([&] { hs_decompose(joint_of(f), o); }) == ErrorCode::EigenGapExhausted);
  }
}

TEST_CASE("match_permutation") {
  Rng rng(12);
  const VarSpace z = VarSpace::categorical("Z", 5), w = VarSpace::categorical("W", 4);
  const Eigen::MatrixXd a = stochastic(rng, 5, 4);
  const auto ka = MarkovKernel::from_matrix(z, {w}, a);
  SUBCASE("a known shuffle is found") {
    const Permutation sigma = {3, 1, 0, 2};
    // column i of b is column sigma^-1(i) of a, so state i of a sits at sigma[i] in b
    Eigen::MatrixXd b(5, 4);
    for (std::size_t i = 0; i < 4; ++i) b.col(static_cast<Eigen::Index>(sigma[i])) = a.col(static_cast<Eigen::Index>(i));
    CHECK(match_permutation(ka, MarkovKernel::from_matrix(z, {w}, b)) == sigma);
  }
  SUBCASE("tiny noise keeps the identity") {
    Eigen::MatrixXd b = a;
    b(0, 0) += 1e-10;
    b(1, 0) -= 1e-10;
    CHECK(match_permutation(ka, MarkovKernel::from_matrix(z, {w}, b)) == Permutation{0, 1, 2, 3});
  }
  SUBCASE("equals the exhaustive minimum over all 24 assignments") {
    for (int trial = 0; trial < 20; ++trial) {
      const Eigen::MatrixXd b = stochastic(rng, 5, 4);
      const auto p = match_permutation(ka, MarkovKernel::from_matrix(z, {w}, b));
      auto cost = [&](const Permutation& q) {
        double s = 0;
        for (std::size_t i = 0; i < 4; ++i) {
          s += (a.col(static_cast<Eigen::Index>(i)) - b.col(static_cast<Eigen::Index>(q[i]))).cwiseAbs().sum();
        }
        return s;
      };
      Permutation q = {0, 1, 2, 3};
      double best = INFINITY;
      do best = std::min(best, cost(q));
      while (std::next_permutation(q.begin(), q.end()));
      CHECK(cost(p) == doctest::Approx(best).epsilon(1e-14));
    }
  }
  SUBCASE("ties are ambiguous") {
    Eigen::MatrixXd b = a;
    b.col(1) = b.col(0);
    const auto kb = MarkovKernel::from_matrix(z, {w}, b);
    CHECK(code_of([&] { match_permutation(kb, kb); }) == ErrorCode::AmbiguousMatch);
  }
}

TEST_CASE("Hungarian assignment equals brute force") {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Index n = 2 + trial % 5;
    Eigen::MatrixXd cost(n, n);
    for (Eigen::Index i = 0; i < cost.size(); ++i) cost.data()[i] = uniform01(rng);
    const auto p = min_cost_assignment(cost);
    auto total = [&](const Permutation& q) {
      double s = 0;
      for (std::size_t i = 0; i < q.size(); ++i) s += cost(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(q[i]));
      return s;
    };
    Permutation q(static_cast<std::size_t>(n));
    std::iota(q.begin(), q.end(), std::size_t{0});
    double best = INFINITY;
    do best = std::min(best, total(q));
    while (std::next_permutation(q.begin(), q.end()));
    CHECK(total(p) == doctest::Approx(best).epsilon(1e-14));
  }
}

TEST_CASE("completeness diagnostics") {
  SUBCASE("identity") {
    const auto r = completeness_diagnostics(Eigen::MatrixXd::Identity(3, 3), 3);
    for (double s : r.singular_values) CHECK(s == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(r.pass);
    CHECK(r.numerical_rank == 3);
  }
  SUBCASE("two identical columns") {
    Eigen::MatrixXd m(2, 2);
    m << 0.4, 0.4, 0.6, 0.6;
    const auto r = completeness_diagnostics(m, 2);
    CHECK(r.numerical_rank == 1);
    CHECK_FALSE(r.pass);
  }
  SUBCASE("singular values match the Gram eigenvalues") {
    Rng rng(17);
    const Eigen::MatrixXd m = stochastic(rng, 5, 3);
    const auto r = completeness_diagnostics(m, 3);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m.transpose() * m);
    std::vector<double> expect;
    for (Eigen::Index i = 0; i < 3; ++i) expect.push_back(std::sqrt(es.eigenvalues()(i)));
    std::sort(expect.rbegin(), expect.rend());
    REQUIRE(r.singular_values.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(r.singular_values[i] - expect[i]) <= 1e-10);
  }
}
