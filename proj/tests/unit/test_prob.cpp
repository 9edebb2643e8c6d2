#include "triproxy/error.hpp"
#include "triproxy/io.hpp"
#include "triproxy/prob.hpp"
#include "triproxy/random.hpp"

#include <doctest.h>

#include <cmath>
#include <vector>

using namespace triproxy;

namespace {

VarSpace cat(const char* n, std::size_t k) { return VarSpace::categorical(n, k); }

ProbTensor random_tensor(std::vector<VarSpace> axes, std::uint64_t seed) {
  Rng rng(seed);
  return ProbTensor(axes, dirichlet_ones(rng, total_cells(axes)));
}

std::vector<std::string> names(std::initializer_list<const char*> l) { return {l.begin(), l.end()}; }

void check_codes(auto&& f, ErrorCode code) {
  try {
    f();
    FAIL("expected " << to_string(code));
  } catch (const Error& e) {
    CHECK(e.code() == code);
  }
}

}  // namespace

TEST_CASE("var spaces validate cardinality and levels") {
  CHECK_NOTHROW(VarSpace::numeric("Y", {0, 1, 2.5}).validate());
  check_codes([] { VarSpace{"A", 0, std::nullopt}.validate(); }, ErrorCode::InvalidArgument);
  check_codes([] { VarSpace{"A", 2, std::vector<double>{1.0}}.validate(); }, ErrorCode::InvalidArgument);
  check_codes([] { VarSpace{"A", 1, std::vector<double>{NAN}}.validate(); }, ErrorCode::InvalidArgument);
  check_codes([] { (void)cat("A", 2).level(0); }, ErrorCode::MissingLevels);
}

TEST_CASE("tensors clip round-off negatives and reject real ones") {
  const ProbTensor t({cat("A", 3)}, {0.5, 0.5 + 5e-13, -5e-13});
  CHECK(t[2] == 0.0);
  CHECK(t.total_mass() == doctest::Approx(1.0).epsilon(1e-15));
  check_codes([] { ProbTensor({cat("A", 2)}, {1.1, -0.1}); }, ErrorCode::NegativeProbability);
  check_codes([] { ProbTensor({cat("A", 2)}, {0.5, 0.4}); }, ErrorCode::InvalidArgument);
  check_codes([] { ProbTensor({cat("A", 2), cat("A", 2)}, {0.25, 0.25, 0.25, 0.25}); }, ErrorCode::InvalidArgument);
  check_codes([] { ProbTensor({cat("A", 2)}, {1.0}); }, ErrorCode::AxisMismatch);
}

TEST_CASE("marginalize") {
  SUBCASE("uniform 2x2 drops to a uniform marginal") {
    const ProbTensor t({cat("A", 2), cat("B", 2)}, {0.25, 0.25, 0.25, 0.25});
    const auto m = marginalize(t, names({"B"}));
    REQUIRE(m.rank() == 1);
    CHECK(m[0] == 0.5);
    CHECK(m[1] == 0.5);
  }
  SUBCASE("product of marginals gives the factor back") {
    const ProbTensor p({cat("A", 3)}, {0.2, 0.3, 0.5});
    const ProbTensor q({cat("B", 2)}, {0.6, 0.4});
    const auto m = marginalize(product(p, q), names({"B"}));
    for (std::size_t i = 0; i < 3; ++i) CHECK(m[i] == doctest::Approx(p[i]).epsilon(1e-15));
  }
  SUBCASE("matches a triple loop") {
    const auto t = random_tensor({cat("A", 3), cat("B", 4), cat("C", 2)}, 7);
    const auto m = marginalize(t, names({"C"}));
    double worst = 0;
    for (std::size_t a = 0; a < 3; ++a) {
      for (std::size_t b = 0; b < 4; ++b) {
        double s = 0;
        for (std::size_t c = 0; c < 2; ++c) s += t[(a * 4 + b) * 2 + c];
        worst = std::max(worst, std::abs(s - m[a * 4 + b]));
      }
    }
    CHECK(worst <= 1e-15);
    CHECK(std::abs(m.total_mass() - 1.0) <= 1e-12);
  }
  SUBCASE("unknown axis") {
    const ProbTensor t({cat("A", 2)}, {0.5, 0.5});
    check_codes([&] { marginalize(t, names({"Q"})); }, ErrorCode::UnknownAxis);
  }
}

TEST_CASE("condition") {
  SUBCASE("independent axes give identical columns") {
    const auto t = product(ProbTensor({cat("A", 3)}, {0.2, 0.3, 0.5}), ProbTensor({cat("B", 2)}, {0.6, 0.4}));
    const auto k = condition(t, names({"B"}));
    for (std::size_t a = 0; a < 3; ++a) CHECK(k(a, 0) == doctest::Approx(k(a, 1)).epsilon(1e-14));
  }
  SUBCASE("a deterministic copy gives the identity") {
    const ProbTensor t({cat("A", 3), cat("B", 3)}, {0.2, 0, 0, 0, 0.3, 0, 0, 0, 0.5});
    const auto k = condition(t, names({"B"})).matrix();
    CHECK((k - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("matches entrywise division") {
    const auto t = random_tensor({cat("A", 4), cat("B", 3)}, 11);
    const auto k = condition(t, names({"B"}));
    for (std::size_t b = 0; b < 3; ++b) {
      double col = 0;
      for (std::size_t a = 0; a < 4; ++a) col += t[a * 3 + b];
      for (std::size_t a = 0; a < 4; ++a) CHECK(std::abs(k(a, b) - t[a * 3 + b] / col) <= 1e-15);
    }
  }
  SUBCASE("zero conditioning cell names the cell") {
    const ProbTensor t({cat("A", 2), cat("B", 2)}, {0.5, 0, 0.5, 0});
    try {
      condition(t, names({"B"}));
      FAIL("expected ZeroConditioningCell");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::ZeroConditioningCell);
      CHECK(std::string(e.what()).find("B=1") != std::string::npos);
    }
  }
}

TEST_CASE("kernel_product") {
  const auto m = random_tensor({cat("B", 3), cat("C", 2)}, 3);
  SUBCASE("identity kernel leaves the tensor unchanged") {
    const auto k = MarkovKernel::from_matrix(cat("A", 3), {cat("B", 3)}, Eigen::MatrixXd::Identity(3, 3));
    const auto out = kernel_product(k, m);
    REQUIRE(out.names() == names({"A", "C"}));
    for (std::size_t i = 0; i < m.size(); ++i) CHECK(out[i] == doctest::Approx(m[i]).epsilon(1e-15));
  }
  SUBCASE("a constant kernel factorizes") {
    Eigen::MatrixXd cols(2, 3);
    cols << 0.3, 0.3, 0.3, 0.7, 0.7, 0.7;
    const auto k = MarkovKernel::from_matrix(cat("A", 2), {cat("B", 3)}, cols);
    const auto out = kernel_product(k, m);
    const auto mc = marginal(m, names({"C"}));
    for (std::size_t a = 0; a < 2; ++a) {
      for (std::size_t c = 0; c < 2; ++c) CHECK(std::abs(out[a * 2 + c] - cols(a, 0) * mc[c]) <= 1e-15);
    }
  }
  SUBCASE("matches a nested loop contraction") {
    Rng rng(5);
    std::vector<double> kv;
    for (std::size_t g = 0; g < 6; ++g) {
      const auto col = dirichlet_ones(rng, 4);
      kv.insert(kv.end(), col.begin(), col.end());
    }
    const MarkovKernel k(cat("A", 4), {cat("B", 3), cat("C", 2)}, kv);
    const auto out = kernel_product(k, m, names({"B"}));
    REQUIRE(out.names() == names({"A", "C"}));
    for (std::size_t a = 0; a < 4; ++a) {
      for (std::size_t c = 0; c < 2; ++c) {
        double s = 0;
        for (std::size_t b = 0; b < 3; ++b) s += kv[(b * 2 + c) * 4 + a] * m[b * 2 + c];
        CHECK(std::abs(out[a * 2 + c] - s) <= 1e-15);
      }
    }
    CHECK(std::abs(out.total_mass() - m.total_mass()) <= 1e-12);
  }
  SUBCASE("missing conditioner axis") {
    const auto k = MarkovKernel::from_matrix(cat("A", 2), {cat("Q", 2)}, Eigen::MatrixXd::Identity(2, 2));
    check_codes([&] { kernel_product(k, m); }, ErrorCode::AxisMismatch);
  }
}

TEST_CASE("condition then chain reproduces the tensor") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto t = random_tensor({cat("A", 3), cat("B", 2), cat("C", 4)}, 100 + seed);
    const auto k = condition(t, names({"B", "C"}));
    const auto back = permute_axes(chain(k, marginal(t, names({"B", "C"}))), t.names());
    for (std::size_t i = 0; i < t.size(); ++i) CHECK(std::abs(back[i] - t[i]) <= 1e-12);
  }
}

TEST_CASE("axis permutation commutes with marginalization") {
  const auto t = random_tensor({cat("A", 2), cat("B", 3), cat("C", 4)}, 9);
  const auto p = permute_axes(t, names({"C", "A", "B"}));
  CHECK(p.at(std::vector<std::size_t>{3, 1, 2}) == t.at(std::vector<std::size_t>{1, 2, 3}));
  const auto a = marginalize(p, names({"A"}));
  const auto b = permute_axes(marginalize(t, names({"A"})), names({"C", "B"}));
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - b[i]) <= 1e-15);
}

TEST_CASE("slice and rename") {
  const auto t = random_tensor({cat("A", 2), cat("B", 3)}, 21);
  const auto s = slice(t, "A", 1);
  double row = t[3] + t[4] + t[5];
  for (std::size_t b = 0; b < 3; ++b) CHECK(std::abs(s[b] - t[3 + b] / row) <= 1e-15);
  CHECK(rename_axis(t, "A", "Q").names() == names({"Q", "B"}));
  check_codes([&] { slice(t, "A", 2); }, ErrorCode::InvalidArgument);
}

TEST_CASE("every operation conserves mass") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto t = random_tensor({cat("A", 3), cat("B", 4), cat("C", 2), cat("D", 3)}, 500 + seed);
    CHECK(std::abs(marginalize(t, names({"B", "D"})).total_mass() - 1) <= 1e-10);
    CHECK(std::abs(permute_axes(t, names({"D", "C", "B", "A"})).total_mass() - 1) <= 1e-10);
    CHECK(std::abs(slice(t, "C", 1).total_mass() - 1) <= 1e-10);
    const auto k = condition(marginal(t, names({"A", "B"})), names({"B"}));
    CHECK(std::abs(kernel_product(k, marginal(t, names({"B", "C"}))).total_mass() - 1) <= 1e-10);
    CHECK(std::abs(product(marginal(t, names({"A"})), marginal(t, names({"C"}))).total_mass() - 1) <= 1e-10);
  }
}

TEST_CASE("tensor JSON round trip is exact") {
  const auto t = random_tensor({VarSpace::numeric("Y", {0.1, 0.2, 1.0 / 3}), cat("B", 4)}, 77);
  const auto back = tensor_from_json(Json::parse(dump(to_json(t))));
  CHECK(back.axes() == t.axes());
  for (std::size_t i = 0; i < t.size(); ++i) CHECK(back[i] == t[i]);
  check_codes([] { tensor_from_json(Json::parse(R"({"axes":[{"name":"A","cardinality":2}],"values":[1]})")); },
              ErrorCode::AxisMismatch);
  check_codes([] { tensor_from_json(Json::parse(R"({"axes":"A"})")); }, ErrorCode::ParseError);
}
