#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

#include "moire/lattice.hpp"

using namespace moire;

namespace {
const cplx w{-0.5, std::sqrt(3.0) / 2};
}

TEST(Lattice, DualPointValues) {
  EXPECT_EQ(dual_point({0, 0}), cplx(0, 0));
  cplx p = dual_point({1, 0});
  EXPECT_NEAR(p.real(), -0.288675134594813, 1e-14);
  EXPECT_NEAR(p.imag(), 0.5, 1e-14);
  // (w - w^2)/sqrt 3 computed independently
  cplx q = (w - w * w) / std::sqrt(3.0);
  EXPECT_NEAR(std::abs(dual_point({1, -1}) - q), 0, 1e-14);
  EXPECT_NEAR(std::abs(dual_point({1, -1}) - cplx(0, 1)), 0, 1e-14);
}

TEST(Lattice, Norm3MatchesModulus) {
  for (int m = -5; m <= 5; ++m)
    for (int n = -5; n <= 5; ++n) {
      DualIndex g{m, n};
      EXPECT_NEAR(3 * std::norm(dual_point(g)), double(g.norm3()), 1e-11);
    }
}

TEST(Lattice, EnumerateSmallCutoffs) {
  auto z = enumerate_dual(0);
  ASSERT_EQ(z.size(), 1u);
  EXPECT_EQ(z[0], (DualIndex{0, 0}));
  EXPECT_EQ(enumerate_dual(0.5).size(), 1u);
  EXPECT_EQ(enumerate_dual(0.6).size(), 7u);
}

TEST(Lattice, EnumerateAgainstBruteForce) {
  for (double r : {0.6, 1.3, 2.9, 5.0}) {
    std::set<DualIndex> brute;
    for (int m = -20; m <= 20; ++m)
      for (int n = -20; n <= 20; ++n)
        if (std::abs(dual_point({m, n})) <= r) brute.insert({m, n});
    auto got = enumerate_dual(r);
    EXPECT_EQ(std::set<DualIndex>(got.begin(), got.end()), brute) << r;
    EXPECT_TRUE(std::is_sorted(got.begin(), got.end()));
    for (auto g : got) EXPECT_TRUE(brute.count(-g));
  }
}

TEST(Lattice, PairingValues) {
  const auto& L = MoireLattice::get();
  EXPECT_EQ(pairing(0, L.eta1), 0.0);
  EXPECT_NEAR(pairing(L.gamma1, L.eta1), 0, 1e-12);
  EXPECT_NEAR(pairing(L.gamma1, L.eta2), 2 * kPi, 1e-12);
  // Every lattice vector pairs with every dual vector into 2 pi Z.
  for (int a = -2; a <= 2; ++a)
    for (int b = -2; b <= 2; ++b)
      for (int m = -2; m <= 2; ++m)
        for (int n = -2; n <= 2; ++n) {
          double p = pairing(double(a) * L.gamma1 + double(b) * L.gamma2, dual_point({m, n}));
          EXPECT_NEAR(p / (2 * kPi), std::round(p / (2 * kPi)), 1e-10);
        }
}

TEST(Lattice, Constants) {
  const auto& L = MoireLattice::get();
  EXPECT_NEAR(L.cell_area, 16 * kPi * kPi * std::sqrt(3.0) / 2, 1e-10);
  EXPECT_NEAR(std::sqrt(L.cell_area), 11.694, 1e-3);
  EXPECT_NEAR(L.cell_area * L.dual_cell_area, 4 * kPi * kPi, 1e-9);
  EXPECT_NEAR(std::abs(L.gamma1 - 4 * kPi * cplx(0, 1) * w), 0, 1e-12);
}

TEST(Lattice, CellOfExamples) {
  const auto& L = MoireLattice::get();
  for (double h : {1.0, 0.3, 0.05}) {
    EXPECT_EQ(cell_of(0, h), (DualIndex{0, 0}));
    EXPECT_EQ(cell_of(h * (L.eta1 + L.eta2) / 3.0, h), (DualIndex{0, 0}));
    EXPECT_EQ(cell_of(h * L.eta1, h), (DualIndex{1, 0}));
    EXPECT_EQ(cell_of(h * L.eta2, h), (DualIndex{0, 1}));
  }
}

TEST(Lattice, CellPartitionProperty) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> U(-3, 3);
  const double h = 0.2;
  for (int i = 0; i < 2000; ++i) {
    cplx p(U(rng), U(rng));
    auto c = locate_cell(p, h);
    EXPECT_GE(c.s, 0);
    EXPECT_LT(c.s, 1);
    EXPECT_GE(c.t, 0);
    EXPECT_LT(c.t, 1);
    const auto& L = MoireLattice::get();
    cplx back = h * (dual_point(c.anchor) + c.s * L.eta1 + c.t * L.eta2);
    EXPECT_NEAR(std::abs(back - p), 0, 1e-11);
  }
}

TEST(Lattice, CornerTolerance) {
  const double h = 0.1;
  cplx corner = h * dual_point({2, 1});
  const auto& L = MoireLattice::get();
  cplx p = corner - 1e-9 * h * (L.eta1 + L.eta2);
  EXPECT_EQ(cell_of(p, h), (DualIndex{1, 0}));
  EXPECT_EQ(cell_of(p, h, 1e-6 * h), (DualIndex{2, 1}));
}
