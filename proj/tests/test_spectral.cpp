#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "moire/linalg.hpp"
#include "moire/spectral.hpp"

using namespace moire;

namespace {

MatrixXc random_matrix(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> N;
  MatrixXc A(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) A(i, j) = cplx(N(rng), N(rng));
  return A;
}

}  // namespace

TEST(Spectral, SingularValuesDiagonal) {
  MatrixXc A = MatrixXc::Zero(2, 2);
  A(0, 0) = 3;
  A(1, 1) = cplx(0, -4);
  auto s = singular_values(A);
  ASSERT_EQ(s.values.size(), 2u);
  EXPECT_NEAR(s.values[0], 3, 1e-15);
  EXPECT_NEAR(s.values[1], 4, 1e-15);
}

TEST(Spectral, SingularValueIdentities) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    MatrixXc A = random_matrix(6, seed);
    auto t = singular_values(A).values;
    auto ti = singular_values(MatrixXc(A.inverse())).values;
    auto ta = singular_values(MatrixXc(A.adjoint())).values;
    auto ev = linalg::hermitian_eig(A.adjoint() * A, false).w;
    for (int j = 0; j < 6; ++j) {
      EXPECT_NEAR(ti[5 - j], 1 / t[j], 1e-10 * (1 / t[j]));
      EXPECT_NEAR(ta[j], t[j], 1e-12);
      EXPECT_NEAR(t[j] * t[j], ev(j), 1e-10);
    }
  }
}

TEST(Spectral, NonFiniteIsAnError) {
  MatrixXc A = MatrixXc::Identity(3, 3);
  A(1, 2) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(singular_values(A), NumericalError);
  EXPECT_THROW(eigenvalues(A), NumericalError);
}

TEST(Spectral, BlockSplitMatchesFullSolve) {
  auto A = assemble({0.5, 0, cplx(0.1, 0.2), 4}, standard_U());
  auto split = singular_values(A.matrix);
  auto full = singular_values(A.matrix, {false, 0});
  EXPECT_EQ(split.blocks, 9);
  EXPECT_EQ(full.blocks, 1);
  for (std::size_t i = 0; i < full.values.size(); ++i) EXPECT_NEAR(split.values[i], full.values[i], 1e-12);
  auto e1 = eigenvalues(A.matrix).values, e2 = eigenvalues(A.matrix, {false, 0}).values;
  auto key = [](cplx a, cplx b) { return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag(); };
  std::sort(e1.begin(), e1.end(), key);
  std::sort(e2.begin(), e2.end(), key);
  // Compare as multisets by greedy nearest matching.
  std::vector<bool> used(e2.size());
  for (auto a : e1) {
    double best = 1e9;
    std::size_t bi = 0;
    for (std::size_t j = 0; j < e2.size(); ++j)
      if (!used[j] && std::abs(a - e2[j]) < best) best = std::abs(a - e2[j]), bi = j;
    used[bi] = true;
    EXPECT_LT(best, 1e-6);
  }
}

TEST(Spectral, CountSmall) {
  SingularSpectrum s{{0.1, 0.5, 2.0}};
  EXPECT_EQ(count_small(s, 0.05), 0);
  EXPECT_EQ(count_small(s, 0.5), 2);
  EXPECT_EQ(count_small(s, 10), 3);
}

TEST(Spectral, CountSmallSparseMatchesDense) {
  for (auto [h, z] : std::vector<std::pair<double, cplx>>{{0.5, cplx(0.1, 0.05)}, {0.3, cplx(-0.2, 0.3)}}) {
    AssemblyConfig c{h, 0, z, 6};
    auto dense = singular_values(assemble(c, standard_U()).matrix);
    auto S = assemble_sparse(c, standard_U());
    for (double tau : {0.05, std::sqrt(h), 1.0}) EXPECT_EQ(count_small_sparse(S, tau), count_small(dense, tau)) << tau;
  }
}

TEST(Spectral, EigenvaluesDiagonalAndZeroU) {
  MatrixXc D = MatrixXc::Zero(3, 3);
  D.diagonal() << cplx(1, 2), cplx(-3, 0), cplx(0, 0.5);
  auto e = eigenvalues(D).values;
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(std::abs(e[i] - D(i, i)), 0, 1e-14);

  const double h = 0.3;
  const cplx k(0.2, 0.1);
  auto A = assemble({h, k, 0, 3}, FourierField());
  std::map<DualIndex, int> hits;
  for (auto v : eigenvalues(A.matrix).values) {
    bool found = false;
    for (auto g : A.modes)
      if (std::abs(v - h * (dual_point(g) + k)) < 1e-13) {
        ++hits[g];
        found = true;
      }
    EXPECT_TRUE(found);
  }
  for (auto g : A.modes) EXPECT_EQ(hits[g], 2);
}

TEST(Spectral, UnperturbedClustersAtNonMagicH) {
  const double h = 0.5;
  // At cutoff 12 clusters within |g| <= 3 are resolved to 1e-6 h.
  auto A = assemble({h, 0, 0, 12}, standard_U());
  auto rep = cluster_check(eigenvalues(A.matrix), h, 3);
  EXPECT_GT(rep.clusters, 6);
  EXPECT_EQ(rep.bad_multiplicity, 0);
  EXPECT_LE(rep.max_radius, 1e-6);
}

TEST(Spectral, RegionMembership) {
  auto d = Region::disc(cplx(1, 1), 0.5);
  EXPECT_TRUE(d.contains(cplx(1.5, 1)));  // boundary
  EXPECT_FALSE(d.contains(cplx(1.6, 1)));
  EXPECT_NEAR(d.area(), kPi * 0.25, 1e-15);
  auto sq = Region::polygon({0, 1, cplx(1, 1), cplx(0, 1)});
  EXPECT_TRUE(sq.contains(cplx(0.5, 0.5)));
  EXPECT_TRUE(sq.contains(cplx(1, 0.5)));
  EXPECT_FALSE(sq.contains(cplx(1.01, 0.5)));
  EXPECT_NEAR(sq.area(), 1, 1e-15);
  EXPECT_THROW(Region::disc(0, 0), std::invalid_argument);
  EXPECT_THROW(Region::polygon({0, 1}), std::invalid_argument);

  EigenCloud c{{cplx(1, 1), cplx(1.2, 1), cplx(5, 5)}};
  EXPECT_EQ(count_in_region(c, d), 2);
  EXPECT_EQ(count_in_region(c, Region::disc(cplx(-9, -9), 1)), 0);
}

TEST(Spectral, PerCellCounts) {
  const double h = 0.2;
  auto A = assemble({h, 0, 0, 6}, FourierField());
  auto cloud = eigenvalues(A.matrix);
  auto cells = per_cell_counts(cloud, h, 3);
  EXPECT_FALSE(cells.empty());
  int total = 0;
  for (auto [g, n] : cells) {
    EXPECT_EQ(n, 2) << g.m << "," << g.n;
    total += n;
  }
  // Additivity: the union of the listed cells carries the sum.
  int direct = 0;
  for (auto v : cloud.values)
    if (cells.count(cell_of(v, h, 1e-6 * h))) ++direct;
  EXPECT_EQ(direct, total);

  // Non-magic and U != 0.
  const double h2 = 0.5;
  auto B = assemble({h2, 0, 0, 12}, standard_U());
  for (auto [g, n] : per_cell_counts(eigenvalues(B.matrix), h2, 2)) EXPECT_EQ(n, 2);
}

TEST(Spectral, WeylPrediction) {
  const double area = MoireLattice::get().cell_area;
  EXPECT_NEAR(weyl_prediction(Region::disc(0, 1), 0.1), 2 * kPi * area / std::pow(2 * kPi * 0.1, 2), 1e-9);
  EXPECT_NEAR(weyl_prediction(Region::disc(0, 1), 0.1), 2176.56, 0.01);
  EXPECT_NEAR(weyl_prediction(Region::disc(0, 1), 0.05) / weyl_prediction(Region::disc(0, 1), 0.1), 4, 1e-12);
  // One cell holds two eigenvalues; its area is h^2 times the dual cell area.
  auto& L = MoireLattice::get();
  auto cell = Region::polygon({0, 0.1 * L.eta1, 0.1 * (L.eta1 + L.eta2), 0.1 * L.eta2});
  EXPECT_NEAR(weyl_prediction(cell, 0.1), 2, 1e-10);
}

TEST(Spectral, MagicProbe) {
  // U = 0: t1 = h dist(z0, Gamma*).
  MagicScanOptions o;
  o.cutoff_radius = 4;
  cplx z0 = default_probe();
  double d = 1e9;
  for (auto g : enumerate_dual(3)) d = std::min(d, std::abs(z0 - dual_point(g)));
  for (double h : {0.3, 1.0, 1.7}) EXPECT_NEAR(magic_probe(h, FourierField(), o), h * d, 1e-13);
  auto r = magic_scan({0.3, 0.7, 1.1, 1.5, 1.9}, FourierField(), o);
  EXPECT_TRUE(r.candidates.empty());
}

TEST(Spectral, MagicScanFindsAndRefines) {
  MagicScanOptions o;
  o.cutoff_radius = 10;
  std::vector<double> grid;
  for (int i = 0; i <= 34; ++i) grid.push_back(0.3 + 0.05 * i);
  auto r = magic_scan(grid, standard_U(), o);
  ASSERT_GE(r.candidates.size(), 1u);
  bool near_first = false;
  for (std::size_t i = 0; i < r.candidates.size(); ++i) {
    EXPECT_LT(r.candidate_ratio[i], 1e-4);
    near_first |= std::abs(r.candidates[i] - 0.4502) < 1e-3;
  }
  EXPECT_TRUE(near_first);
  // Away from candidates t1/h is bounded below.
  EXPECT_GT(magic_probe(0.5, standard_U(), o) / 0.5, 1e-2);
}

TEST(Spectral, BandFloor) {
  const double h = 0.5;
  auto asm0 = [&](cplx k) { return assemble({h, k, 0, 3}, FourierField()).matrix; };
  // k = -gamma* hits a zero, others do not.
  EXPECT_NEAR(band_floor({cplx(0.1, 0.1), -dual_point({1, 0})}, asm0), 0, 1e-14);
  EXPECT_GT(band_floor({cplx(0.1, 0.1)}, asm0), 0);
  // Weyl inequality for singular values.
  MatrixXc E = 0.01 * random_matrix(int(asm0(0).rows()), 5);
  auto pert = [&](cplx k) { return MatrixXc(asm0(k) + E); };
  std::vector<cplx> ks{cplx(0.1, 0.2), cplx(0.3, -0.1)};
  const double e2 = linalg::singular_values(E).maxCoeff();
  EXPECT_LE(std::abs(band_floor(ks, pert) - band_floor(ks, asm0)), e2 + 1e-14);
}

TEST(Spectral, RegularityNormalization) {
  // s = -1 is the L^2 level: ratio 1 for any orthonormal set.
  const double h = 0.2;
  auto A = assemble({h, 0, cplx(0.03, 0.02), 6}, standard_U());
  auto r = eigvec_regularity(A.matrix, A.modes, std::sqrt(h), -1, h);
  EXPECT_GT(r.N, 0);
  EXPECT_NEAR(r.ratio, 1, 1e-10);
  auto r1 = eigvec_regularity(A.matrix, A.modes, std::sqrt(h), 1, h);
  EXPECT_GE(r1.ratio, 1);
  EXPECT_LE(r1.component_ratio, r1.ratio + 1e-12);
  EXPECT_GE(r1.component_ratio * std::sqrt(2.0), r1.ratio - 1e-12);
  // Sparse route agrees with the dense one.
  auto rs = eigvec_regularity_sparse(assemble_sparse({h, 0, cplx(0.03, 0.02), 6}, standard_U()), A.modes,
                                     std::sqrt(h), 1, h);
  EXPECT_EQ(rs.N, r1.N);
  EXPECT_NEAR(rs.ratio, r1.ratio, 1e-6 * r1.ratio);
}

TEST(Spectral, CountingScalesLikeInverseH) {
  // N(h) at tau0 = sqrt h for z interior to a cell; h N stays within a fixed band.
  std::vector<double> hs{0.2, 0.1}, Ns;
  for (double h : hs) {
    const cplx z = h * default_probe();
    auto S = assemble_sparse({h, 0, z, 4 / h}, standard_U());
    Ns.push_back(count_small_sparse(S, std::sqrt(h)));
  }
  for (std::size_t i = 0; i < hs.size(); ++i) {
    EXPECT_GE(Ns[i] * hs[i], 1);
    EXPECT_LE(Ns[i] * hs[i], 100);
  }
}

TEST(Spectral, CsvWriters) {
  std::ostringstream a, b;
  write_cloud_csv(EigenCloud{{cplx(1, -2)}}, a);
  write_spectrum_csv(SingularSpectrum{{0.5}}, b);
  EXPECT_NE(a.str().find("re,im"), std::string::npos);
  EXPECT_NE(b.str().find("0.5"), std::string::npos);
}
