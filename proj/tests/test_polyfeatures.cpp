#include <gtest/gtest.h>

#include "oracles.hpp"
#include "ssmr/polyfeatures.hpp"
#include "ssmr/random.hpp"

namespace ssmr {
namespace {

using Eigen::VectorXd;

TEST(BuildBasis, QuadraticInTwoVariables) {
  const MultiIndexBasis b = build_basis(2, 2, 2);
  const std::vector<Exponents> expected = {{2, 0}, {1, 1}, {0, 2}};
  EXPECT_EQ(b.exponents(), expected);
}

TEST(BuildBasis, UnivariatePowers) {
  const MultiIndexBasis b = build_basis(1, 2, 3);
  const std::vector<Exponents> expected = {{2}, {3}};
  EXPECT_EQ(b.exponents(), expected);
}

TEST(BuildBasis, SixVariablesUpToCubic) {
  const MultiIndexBasis b = build_basis(6, 2, 3);
  EXPECT_EQ(b.size(), 77);
  EXPECT_EQ(oracle::enumerate_exponents(6, 2, 2).size(), 21u);
  EXPECT_EQ(oracle::enumerate_exponents(6, 3, 3).size(), 56u);
}

TEST(BuildBasis, RejectsBadDegreeRange) {
  try {
    build_basis(2, 3, 2);
    FAIL() << "expected invalid-degree-range";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InvalidDegreeRange);
  }
  try {
    build_basis(2, 0, 2);
    FAIL() << "expected invalid-degree-range";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InvalidDegreeRange);
  }
}

TEST(BuildBasis, CountLawMatchesEnumeration) {
  for (int n = 1; n <= 8; ++n)
    for (int lo = 1; lo <= 5; ++lo)
      for (int hi = lo; hi <= 5; ++hi) {
        const auto enumerated = oracle::enumerate_exponents(n, lo, hi);
        const double closed = oracle::choose(n + hi, n) - oracle::choose(n + lo - 1, n);
        const MultiIndexBasis b = build_basis(n, lo, hi);
        ASSERT_EQ(static_cast<std::size_t>(b.size()), enumerated.size()) << n << " " << lo << " " << hi;
        ASSERT_EQ(static_cast<double>(b.size()), closed);
        ASSERT_EQ(basis_size(n, lo, hi), b.size());
      }
}

TEST(BuildBasis, OrderingIsGradedAndStrict) {
  const MultiIndexBasis b = build_basis(3, 2, 4);
  for (Eigen::Index j = 1; j < b.size(); ++j) {
    const auto& prev = b.exponents()[j - 1];
    const auto& cur = b.exponents()[j];
    int dp = 0, dc = 0;
    for (int v : prev) dp += v;
    for (int v : cur) dc += v;
    ASSERT_LE(dp, dc);
    if (dp == dc) ASSERT_TRUE(std::lexicographical_compare(cur.begin(), cur.end(), prev.begin(), prev.end()));
  }
  EXPECT_EQ(build_basis(3, 2, 4), b);
}

TEST(BuildBasis, ExplicitListMustBeOrdered) {
  EXPECT_THROW(MultiIndexBasis(2, 2, 2, {{0, 2}, {2, 0}}), Error);
  EXPECT_THROW(MultiIndexBasis(2, 2, 2, {{1, 0}}), Error);
  EXPECT_NO_THROW(MultiIndexBasis(2, 2, 2, {{2, 0}, {0, 2}}));
}

TEST(EvaluateFeatures, HandExample) {
  const VectorXd f = build_basis(2, 2, 2).evaluate(Eigen::Vector2d(1.0, 2.0));
  EXPECT_EQ(f, Eigen::Vector3d(1.0, 2.0, 4.0));
}

TEST(EvaluateFeatures, ZeroInputGivesZero) {
  for (int n = 1; n <= 4; ++n) EXPECT_TRUE(build_basis(n, 2, 4).evaluate(VectorXd::Zero(n)).isZero(0.0));
}

TEST(EvaluateFeatures, MatchesTermByTermProducts) {
  const MultiIndexBasis b = build_basis(3, 2, 3);
  const VectorXd x = Eigen::Vector3d(0.5, -1.0, 2.0);
  const VectorXd f = b.evaluate(x);
  ASSERT_EQ(f.size(), 6 + 10);
  for (Eigen::Index j = 0; j < b.size(); ++j) EXPECT_DOUBLE_EQ(f(j), oracle::monomial(b.exponents()[j], x));
}

TEST(EvaluateFeatures, DimensionMismatch) {
  const MultiIndexBasis b = build_basis(3, 2, 3);
  try {
    b.evaluate(VectorXd::Zero(2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DimensionMismatch);
  }
  EXPECT_THROW(b.jacobian(VectorXd::Zero(4)), Error);
}

TEST(FeatureJacobian, HandExample) {
  const Eigen::MatrixXd j = build_basis(2, 2, 2).jacobian(Eigen::Vector2d(1.0, 2.0));
  Eigen::MatrixXd expected(3, 2);
  expected << 2, 0, 2, 1, 0, 4;
  EXPECT_EQ(j, expected);
}

TEST(FeatureJacobian, VanishesAtOrigin) {
  EXPECT_TRUE(build_basis(3, 2, 3).jacobian(VectorXd::Zero(3)).isZero(0.0));
  EXPECT_TRUE(build_basis(3, 3, 4).jacobian(VectorXd::Zero(3)).isZero(0.0));
}

TEST(FeatureJacobian, MatchesFiniteDifferences) {
  Rng rng(3);
  const MultiIndexBasis b = build_basis(4, 2, 3);
  for (int trial = 0; trial < 20; ++trial) {
    const VectorXd x = rng.normal_vector(4);
    const auto fd = oracle::numeric_jacobian([&](const VectorXd& v) { return b.evaluate(v); }, x);
    EXPECT_LT(oracle::relative_error(b.jacobian(x), fd), 1e-6);
  }
}

TEST(FeatureJacobian, DirectionalDerivativeConsistency) {
  Rng rng(4);
  for (int n = 1; n <= 5; ++n) {
    const MultiIndexBasis b = build_basis(n, 2, 4);
    const VectorXd x = rng.normal_vector(n);
    const VectorXd dir = rng.unit_vector(n);
    const double h = 1e-6;
    const VectorXd fd = (b.evaluate(x + h * dir) - b.evaluate(x - h * dir)) / (2.0 * h);
    EXPECT_LT(oracle::relative_error(b.jacobian(x) * dir, fd), 1e-5);
  }
}

TEST(NonlinearBasis, OrderOneIsEmpty) {
  EXPECT_TRUE(nonlinear_basis(3, 1).empty());
  EXPECT_EQ(nonlinear_basis(3, 1).evaluate(VectorXd::Ones(3)).size(), 0);
  EXPECT_EQ(nonlinear_basis(2, 3).size(), 7);
}

}  // namespace
}  // namespace ssmr
