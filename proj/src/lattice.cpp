#include "moire/lattice.hpp"

#include <cmath>

namespace moire {

const MoireLattice& MoireLattice::get() {
  static const MoireLattice lat = [] {
    MoireLattice l;
    l.omega = std::polar(1.0, 2.0 * kPi / 3.0);
    const cplx w2 = l.omega * l.omega;
    const cplx i(0, 1);
    l.gamma1 = 4.0 * kPi * i * l.omega;
    l.gamma2 = 4.0 * kPi * i * w2;
    l.eta1 = l.omega / kSqrt3;
    l.eta2 = w2 / kSqrt3;
    l.cell_area = 16.0 * kPi * kPi * kSqrt3 / 2.0;
    l.dual_cell_area = 1.0 / (2.0 * kSqrt3);
    return l;
  }();
  return lat;
}

cplx MoireLattice::symmetry_shift(int j) const {
  return (4.0 / 3.0) * kPi * cplx(0, 1) * std::pow(omega, j);
}

cplx dual_point(DualIndex idx) {
  // omega/sqrt3 = (-1/2 + i sqrt3/2)/sqrt3, omega^2/sqrt3 its conjugate.
  const double re = -(idx.m + idx.n) / (2.0 * kSqrt3);
  const double im = (idx.m - idx.n) / 2.0;
  return {re, im};
}

std::vector<DualIndex> enumerate_dual(double cutoff_radius) {
  std::vector<DualIndex> out;
  if (cutoff_radius < 0) return out;
  // 3|p|^2 = m^2 - mn + n^2 >= (3/4) max(|m|,|n|)^2, so |m|,|n| <= 2R.
  const int bound = int(std::ceil(2.0 * cutoff_radius)) + 1;
  const double limit = 3.0 * cutoff_radius * cutoff_radius * (1.0 + 1e-12);
  for (int m = -bound; m <= bound; ++m)
    for (int n = -bound; n <= bound; ++n) {
      DualIndex d{m, n};
      if (double(d.norm3()) <= limit) out.push_back(d);
    }
  return out;
}

double pairing(cplx x, cplx freq) { return (x * std::conj(freq)).real(); }

void dual_coords(cplx p, double& u, double& v) {
  // u + v = -2 sqrt3 Re p, u - v = 2 Im p.
  const double a = -kSqrt3 * p.real();
  u = a + p.imag();
  v = a - p.imag();
}

namespace {

double snap(double x) {
  const double r = std::round(x);
  return std::abs(x - r) <= 1e-12 * std::max(1.0, std::abs(x)) ? r : x;
}

}  // namespace

CellPosition locate_cell(cplx point, double h, double corner_tol) {
  double u, v;
  dual_coords(point / h, u, v);
  u = snap(u);
  v = snap(v);
  CellPosition c;
  if (corner_tol > 0) {
    DualIndex nearest{int(std::lround(u)), int(std::lround(v))};
    if (std::abs(point - h * dual_point(nearest)) <= corner_tol) {
      c.anchor = nearest;
      c.s = 0;
      c.t = 0;
      return c;
    }
  }
  const double fu = std::floor(u), fv = std::floor(v);
  c.anchor = {int(fu), int(fv)};
  c.s = u - fu;
  c.t = v - fv;
  return c;
}

DualIndex cell_of(cplx point, double h, double corner_tol) {
  return locate_cell(point, h, corner_tol).anchor;
}

}  // namespace moire
