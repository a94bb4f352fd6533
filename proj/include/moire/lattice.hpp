#pragma once

#include <compare>
#include <complex>
#include <numbers>
#include <vector>

namespace moire {

using cplx = std::complex<double>;

inline constexpr double kSqrt3 = std::numbers::sqrt3;
inline constexpr double kPi = std::numbers::pi;

// Index of the dual point (m*omega + n*omega^2)/sqrt(3).
struct DualIndex {
  int m = 0;
  int n = 0;
  auto operator<=>(const DualIndex&) const = default;
  DualIndex operator-() const { return {-m, -n}; }
  DualIndex operator+(const DualIndex& o) const { return {m + o.m, n + o.n}; }
  DualIndex operator-(const DualIndex& o) const { return {m - o.m, n - o.n}; }
  // 3 * |dual_point|^2, an exact integer.
  long norm3() const { return long(m) * m - long(m) * n + long(n) * n; }
};

struct MoireLattice {
  cplx omega;
  cplx gamma1, gamma2;
  cplx eta1, eta2;
  double cell_area;
  double dual_cell_area;

  static const MoireLattice& get();
  // a_j = (4/3) pi i omega^j, the translations in the symmetry of U.
  cplx symmetry_shift(int j) const;
};

cplx dual_point(DualIndex idx);

// All indices with |dual_point| <= cutoff_radius, lexicographic in (m, n).
std::vector<DualIndex> enumerate_dual(double cutoff_radius);

// Re(x * conj(freq)).
double pairing(cplx x, cplx freq);

// Real coordinates (u, v) with p = u*eta1 + v*eta2.
void dual_coords(cplx p, double& u, double& v);

struct CellPosition {
  DualIndex anchor;
  double s = 0;  // coefficient of eta1 inside the cell, in [0, 1)
  double t = 0;  // coefficient of eta2 inside the cell, in [0, 1)
};

// Half-open cell h*C_{anchor}: contains the anchor and the two edges leaving
// it, excludes the opposite edges. A point within corner_tol (absolute) of a
// corner h*gamma* is assigned to the cell anchored there.
CellPosition locate_cell(cplx point, double h, double corner_tol = 0.0);
DualIndex cell_of(cplx point, double h, double corner_tol = 0.0);

}  // namespace moire
