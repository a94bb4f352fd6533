#include <gtest/gtest.h>

#include <random>

#include "moire/grushin.hpp"
#include "moire/spectral.hpp"

using namespace moire;

namespace {

MatrixXc random_matrix(int rows, int cols, std::mt19937_64& rng) {
  std::normal_distribution<double> N;
  MatrixXc A(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) A(i, j) = cplx(N(rng), N(rng));
  return A;
}

// Inverse of the bordered matrix, computed without the blocks.
MatrixXc bordered_inverse(const MatrixXc& A, const MatrixXc& e, const MatrixXc& f) {
  const long M = A.rows(), N = e.cols();
  MatrixXc P = MatrixXc::Zero(M + N, M + N);
  P.topLeftCorner(M, M) = A;
  P.topRightCorner(M, N) = f;
  P.bottomLeftCorner(N, M) = e.adjoint();
  return P.inverse();
}

}  // namespace

TEST(Grushin, EmptyWhenTauBelowT1) {
  MatrixXc A = MatrixXc::Identity(3, 3);
  auto b = grushin_build(A, 0.5, Pairing::svd);
  EXPECT_EQ(b.N, 0);
  EXPECT_EQ(b.e_basis.cols(), 0);
  EXPECT_EQ(b.E_minus_plus.size(), 0);
}

TEST(Grushin, DiagonalExample) {
  MatrixXc A = MatrixXc::Zero(3, 3);
  A.diagonal() << 0.1, 0.5, 2.0;
  auto b = grushin_build(A, 1.0, Pairing::svd);
  ASSERT_EQ(b.N, 2);
  MatrixXc expect = MatrixXc::Zero(2, 2);
  expect.diagonal() << -0.5, -0.1;
  EXPECT_LE((b.E_minus_plus - expect).norm(), 1e-14);
  EXPECT_NEAR(b.t_next(), 2.0, 1e-14);
  EXPECT_NEAR((b.E0() - MatrixXc(Eigen::Vector3cd(0, 0, 0.5).asDiagonal())).norm(), 0, 1e-14);
}

TEST(Grushin, TauAtSingularValueRejected) {
  MatrixXc A = MatrixXc::Zero(3, 3);
  A.diagonal() << 0.1, 0.5, 2.0;
  EXPECT_THROW(grushin_build(A, 0.5, Pairing::svd), GapError);
}

TEST(Grushin, BlocksMatchBorderedInverse) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    MatrixXc A = random_matrix(10, 10, rng);
    auto t = singular_values(A).values;
    const double tau = 0.5 * (t[2] + t[3]);
    auto b = grushin_build(A, tau, Pairing::svd);
    ASSERT_EQ(b.N, 3);
    MatrixXc Inv = bordered_inverse(A, b.e_basis, b.f_basis);
    EXPECT_LE((Inv.bottomRightCorner(3, 3) - b.E_minus_plus).norm(), 1e-9);
    EXPECT_LE((Inv.topLeftCorner(10, 10) - b.E0()).norm(), 1e-9 * Inv.norm());
    // ||E_-+|| <= t_N, ||E0|| <= 1 / t_{N+1}
    EXPECT_LE(linalg::singular_values(b.E_minus_plus).maxCoeff(), t[2] * (1 + 1e-12));
    EXPECT_LE(linalg::singular_values(b.E0()).maxCoeff(), (1 / t[3]) * (1 + 1e-12));
  }
}

TEST(Grushin, ExactnessRandom12) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 100; ++trial) {
    MatrixXc A = random_matrix(12, 12, rng);
    auto t = singular_values(A).values;
    const int N = 1 + trial % 6;
    auto b = grushin_build(A, 0.5 * (t[N - 1] + t[N]), Pairing::svd);
    ASSERT_EQ(b.N, N);
    auto e = singular_values(b.E_minus_plus).values;
    for (int j = 0; j < N; ++j) EXPECT_NEAR(e[j], t[j], 1e-10);
  }
}

TEST(Grushin, ChiralPairingOnAssembledOperator) {
  const double h = 0.5;
  auto A = assemble({h, 0, 0, 6}, standard_U());
  auto t = singular_values(A.matrix).values;
  int N = count_small(SingularSpectrum{t}, std::sqrt(h));
  ASSERT_GT(N, 0);
  auto b = grushin_build(A.matrix, std::sqrt(h), Pairing::chiral, &A.modes);
  EXPECT_EQ(b.N, N);
  auto e = singular_values(b.E_minus_plus).values;
  for (int j = 0; j < N; ++j) EXPECT_NEAR(e[j], t[j], 1e-10);
  // f_j = G e_j
  for (int j = 0; j < N; ++j)
    EXPECT_LE((b.f_basis.col(j) - apply_G_vector(b.e_basis.col(j), A.modes)).norm(), 1e-10);
  // Outside z = k = 0 the chiral pairing refuses.
  auto Az = assemble({h, 0, cplx(0.1, 0.1), 6}, standard_U());
  EXPECT_THROW(grushin_build(Az.matrix, std::sqrt(h), Pairing::chiral, &Az.modes), std::invalid_argument);
}

TEST(Grushin, PerturbedDeltaZero) {
  std::mt19937_64 rng(3);
  MatrixXc A = random_matrix(8, 8, rng);
  auto t = singular_values(A).values;
  auto b = grushin_build(A, 0.5 * (t[1] + t[2]), Pairing::svd);
  MatrixXc Q = random_matrix(8, 8, rng);
  Q /= linalg::singular_values(Q).maxCoeff();
  auto p = perturb_effective(b, A, Q, 0.0);
  EXPECT_LE((p.E_minus_plus_delta - b.E_minus_plus).norm(), 1e-14);
  EXPECT_LE(p.residual_bound, 1e-12);
  auto s = sandwich_check(b, p.E_minus_plus_delta, A);
  EXPECT_TRUE(s.holds);
}

TEST(Grushin, NeumannResidualAndSandwich) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    MatrixXc A = random_matrix(12, 12, rng);
    auto t = singular_values(A).values;
    const int N = 1 + trial % 4;
    auto b = grushin_build(A, 0.5 * (t[N - 1] + t[N]), Pairing::svd);
    MatrixXc Q = random_matrix(12, 12, rng);
    Q /= linalg::singular_values(Q).maxCoeff();
    const double delta = b.t_next() / 4 * (trial % 5 + 1) / 5.0;
    auto p = perturb_effective(b, A, Q, delta, 1);
    EXPECT_LE(p.residual_bound, 2 * delta * delta / b.t_next() * (1 + 1e-10));
    EXPECT_LE(p.norm_E, 2 / b.t_next() * (1 + 1e-10));
    EXPECT_LE(p.norm_Eplus, 2 * (1 + 1e-10));
    EXPECT_LE(p.norm_Eminus, 2 * (1 + 1e-10));
    // The exact block agrees with an independent bordered inverse.
    MatrixXc Inv = bordered_inverse(MatrixXc(A + delta * Q), b.e_basis, b.f_basis);
    EXPECT_LE((Inv.bottomRightCorner(N, N) - p.exact).norm(), 1e-9);
    auto s = sandwich_check(b, p.exact, A + delta * Q);
    EXPECT_TRUE(s.holds) << s.lower_margin << " " << s.upper_margin;
    // Higher orders converge to the exact block.
    auto p3 = perturb_effective(b, A, Q, delta, 4);
    EXPECT_LE(p3.residual_bound, p.residual_bound + 1e-14);
  }
  EXPECT_THROW(
      {
        MatrixXc A = MatrixXc::Identity(4, 4);
        A(0, 0) = 0.1;
        auto b = grushin_build(A, 0.5, Pairing::svd);
        perturb_effective(b, A, MatrixXc::Identity(4, 4), 0.6);
      },
      std::invalid_argument);
}

TEST(Grushin, SandwichDetectsInjectedViolation) {
  std::mt19937_64 rng(5);
  MatrixXc A = random_matrix(8, 8, rng);
  auto t = singular_values(A).values;
  auto b = grushin_build(A, 0.5 * (t[2] + t[3]), Pairing::svd);
  EXPECT_TRUE(sandwich_check(b, b.E_minus_plus, A).holds);
  EXPECT_FALSE(sandwich_check(b, 10.0 * b.E_minus_plus, A).holds);
  EXPECT_FALSE(sandwich_check(b, 0.01 * b.E_minus_plus, A).holds);
}

TEST(Grushin, SandwichOnAssembledOperator) {
  const double h = 0.45021;
  auto A = assemble({h, 0, h * default_probe(), 6}, standard_U());
  auto b = grushin_build(A.matrix, std::sqrt(h), Pairing::svd);
  ASSERT_GT(b.N, 0);
  std::mt19937_64 rng(6);
  auto bas = admissible_basis(h, 1.5);
  std::normal_distribution<double> N;
  std::vector<cplx> a(bas.dimension()), c(bas.dimension());
  for (auto& x : a) x = cplx(N(rng), N(rng));
  for (auto& x : c) x = cplx(N(rng), N(rng));
  MatrixXc Q = potential_matrix(assemble_Q(a, c, bas), A.modes);
  Q /= linalg::singular_values(Q).maxCoeff();
  for (double frac : {0.01, 0.1, 0.5}) {
    const double delta = frac * b.t_next() / 2;
    auto p = perturb_effective(b, A.matrix, Q, delta);
    EXPECT_TRUE(sandwich_check(b, p.exact, A.matrix + delta * Q).holds);
    EXPECT_LE(p.residual_bound, 2 * delta * delta / b.t_next());
  }
}

TEST(Grushin, SchurComplementDeterminant) {
  // z is an eigenvalue of A iff det E_-+(z) = 0; sweep z through an eigenvalue of a small matrix.
  std::mt19937_64 rng(8);
  MatrixXc A = random_matrix(6, 6, rng);
  const cplx lam = linalg::eigenvalues(A)(0);
  auto at = [&](cplx z) {
    MatrixXc B = A - z * MatrixXc::Identity(6, 6);
    auto t = singular_values(B).values;
    auto b = grushin_build(B, 0.5 * (t[0] + t[1]), Pairing::svd);
    return std::abs(b.E_minus_plus.determinant());
  };
  EXPECT_LT(at(lam), 1e-10);
  EXPECT_GT(at(lam + 0.1), 1e-4);
}

TEST(Grushin, KyFan) {
  std::mt19937_64 rng(21);
  MatrixXc A = random_matrix(5, 5, rng), Z = MatrixXc::Zero(5, 5);
  EXPECT_TRUE(ky_fan_check(A, Z, 3, 1).ok());
  int violations = 0;
  for (int trial = 0; trial < 500; ++trial) {
    MatrixXc A8 = random_matrix(8, 8, rng), B8 = random_matrix(8, 8, rng);
    for (int n = 1; n <= 8; ++n)
      for (int m = 1; n + m - 1 <= 8; ++m)
        if (!ky_fan_check(A8, B8, n, m).ok()) ++violations;
  }
  EXPECT_EQ(violations, 0);
  // An out-of-range pair is rejected.
  EXPECT_THROW(ky_fan_check(A, A, 4, 3), std::invalid_argument);
}

TEST(Grushin, LogDet) {
  EXPECT_NEAR(log_det_effective(MatrixXc::Identity(3, 3)), 0, 1e-14);
  MatrixXc D = MatrixXc::Zero(2, 2);
  D.diagonal() << 2.0, cplx(0, 3);
  EXPECT_NEAR(log_det_effective(D), std::log(6.0), 1e-14);
  EXPECT_EQ(log_det_effective(MatrixXc::Zero(2, 2)), -std::numeric_limits<double>::infinity());
  // log|det E_-+| = sum log t_nu for nu <= N
  std::mt19937_64 rng(2);
  MatrixXc A = random_matrix(7, 7, rng);
  auto t = singular_values(A).values;
  auto b = grushin_build(A, 0.5 * (t[2] + t[3]), Pairing::svd);
  EXPECT_NEAR(log_det_effective(b.E_minus_plus), std::log(t[0] * t[1] * t[2]), 1e-10);
}
