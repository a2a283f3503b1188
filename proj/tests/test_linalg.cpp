#include <cmath>

#include <gtest/gtest.h>

#include "capax/error.hpp"
#include "capax/exact.hpp"
#include "capax/numerical_rank.hpp"
#include "capax/products.hpp"
#include "support.hpp"

namespace capax {
namespace {

using testing::gaussian;

Matrix integer_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<double>(rng.integer(-9, 9));
  return m;
}

TEST(Products, FaceSplitHandExample) {
  Matrix a(2, 2), b(2, 1), expected(2, 2);
  a << 1, 2, 0, 1;
  b << 3, 4;
  expected << 3, 6, 0, 4;
  EXPECT_EQ(face_split(a, b), expected);
}

TEST(Products, FaceSplitWithOnesColumn) {
  Rng rng(1);
  const Matrix b = gaussian(rng, 4, 3);
  EXPECT_EQ(face_split<Matrix>(Matrix::Ones(4, 1), b), b);
}

TEST(Products, FaceSplitLayout) {
  Rng rng(2);
  const Matrix a = gaussian(rng, 3, 2), b = gaussian(rng, 3, 4);
  const Matrix c = face_split(a, b);
  ASSERT_EQ(c.cols(), 8);
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 2; ++k)
      for (int j = 0; j < 4; ++j) EXPECT_EQ(c(i, k * 4 + j), a(i, k) * b(i, j));
}

TEST(Products, KhatriRaoDuality) {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix a = integer_matrix(rng, 3, 4), b = integer_matrix(rng, 2, 4);
    EXPECT_EQ(khatri_rao(a, b).transpose(), face_split<Matrix>(a.transpose(), b.transpose()));
  }
}

TEST(Products, KhatriRaoSpecialCases) {
  Rng rng(4);
  const Matrix a = gaussian(rng, 3, 5);
  EXPECT_EQ(khatri_rao<Matrix>(a, Matrix::Ones(1, 5)), a);
  Matrix x(2, 1), y(3, 1), kron(6, 1);
  x << 1, 2;
  y << 3, 4, 5;
  kron << 3, 4, 5, 6, 8, 10;
  EXPECT_EQ(khatri_rao(x, y), kron);
}

TEST(Products, ShapeMismatch) {
  EXPECT_THROW(face_split<Matrix>(Matrix::Zero(2, 2), Matrix::Zero(3, 2)), DimensionError);
  EXPECT_THROW(khatri_rao<Matrix>(Matrix::Zero(2, 2), Matrix::Zero(2, 3)), DimensionError);
}

TEST(Products, RankOfFaceSplitIsSubmultiplicative) {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix a = gaussian(rng, 8, 2) * gaussian(rng, 2, 3);
    const Matrix b = gaussian(rng, 8, 1) * gaussian(rng, 1, 4);
    const auto r = numerical_rank<double>(face_split(a, b)).rank;
    EXPECT_LE(r, numerical_rank<double>(a).rank * numerical_rank<double>(b).rank);
  }
}

TEST(NumericalRank, BasicRanks) {
  EXPECT_EQ(numerical_rank<double>(Matrix::Identity(5, 5)).rank, 5);
  Rng rng(6);
  const Vector u = testing::gaussian_vector(rng, 10), v = testing::gaussian_vector(rng, 10);
  EXPECT_EQ(numerical_rank<double>(u * v.transpose()).rank, 1);
  EXPECT_EQ(numerical_rank<double>(Matrix::Zero(3, 4)).rank, 0);
}

TEST(NumericalRank, DefaultToleranceCutsTinySingularValue) {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 0) = 1.0;
  m(1, 1) = 1e-20;
  const auto est = numerical_rank<double>(m);
  EXPECT_EQ(est.rank, 1);
  EXPECT_DOUBLE_EQ(est.tolerance, 2 * 1.0 * std::numeric_limits<double>::epsilon() * 64);
  EXPECT_DOUBLE_EQ(est.spectral_gap, 1e20);
  ASSERT_EQ(est.singular_values.size(), 2u);
  EXPECT_GE(est.singular_values[0], est.singular_values[1]);
}

TEST(NumericalRank, Policies) {
  Matrix m = Matrix::Zero(3, 3);
  m.diagonal() << 1.0, 1e-3, 1e-12;
  EXPECT_EQ(numerical_rank<double>(m).rank, 3);
  EXPECT_EQ(numerical_rank<double>(m, TolerancePolicy::fixed(1e-6)).rank, 2);
  EXPECT_EQ(numerical_rank<double>(m, TolerancePolicy::gap()).rank, 2);
  EXPECT_NE(TolerancePolicy::gap().describe(), TolerancePolicy{}.describe());
}

TEST(NumericalRank, ExtendedPrecisionSeesTinySingularValues) {
  MatrixX<HighPrecision> m = MatrixX<HighPrecision>::Zero(2, 2);
  m(0, 0) = 1;
  m(1, 1) = HighPrecision("1e-30");
  EXPECT_EQ(numerical_rank<HighPrecision>(m).rank, 2);
}

TEST(NumericalRank, RejectsNonFinite) {
  Matrix m = Matrix::Identity(2, 2);
  m(0, 1) = std::nan("");
  EXPECT_THROW(numerical_rank<double>(m), ValidationError);
}

TEST(NumericalRank, AgreesWithExactRankOnFaceSplit) {
  Rng rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    const auto a = random_rational_matrix(rng, 4, 2) * random_rational_matrix(rng, 2, 3);
    const auto b = random_rational_matrix(rng, 4, 2) * random_rational_matrix(rng, 2, 3);
    const auto c = face_split(a, b);
    const auto exact = exact_rank(c);
    EXPECT_LE(exact, 4);
    EXPECT_EQ(numerical_rank<double>(c.to_double()).rank, exact);
  }
}

}  // namespace
}  // namespace capax
