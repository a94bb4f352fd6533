#include "moire/fields.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace moire {

namespace {

bool in_disc(DualIndex g, double radius) {
  return double(g.norm3()) <= 3.0 * radius * radius * (1.0 + 1e-12);
}

double bracket2(DualIndex g, double h) {  // <h|g|>^2
  return 1.0 + h * h * double(g.norm3()) / 3.0;
}

}  // namespace

cplx FourierField::plane(DualIndex g) const {
  auto it = coeffs_.find(g);
  if (it == coeffs_.end()) return 0.0;
  return normalized_ ? it->second / std::sqrt(MoireLattice::get().cell_area) : it->second;
}

FourierField FourierField::as_plane_waves() const {
  if (!normalized_) return *this;
  std::map<DualIndex, cplx> c;
  const double s = 1.0 / std::sqrt(MoireLattice::get().cell_area);
  for (const auto& [g, v] : coeffs_) c[g] = v * s;
  return FourierField(std::move(c), false);
}

cplx FourierField::operator()(cplx x) const {
  cplx sum = 0;
  for (const auto& [g, c] : coeffs_) sum += c * std::polar(1.0, pairing(x, dual_point(g)));
  return normalized_ ? sum / std::sqrt(MoireLattice::get().cell_area) : sum;
}

FourierField FourierField::operator+(const FourierField& o) const {
  FourierField a = as_plane_waves();
  for (const auto& [g, c] : o.coeffs_) a.add(g, o.plane(g));
  return a;
}

FourierField FourierField::scaled(cplx a) const {
  FourierField r = *this;
  for (auto& [g, c] : r.coeffs_) c *= a;
  return r;
}

double FourierField::support_radius() const {
  double r = 0;
  for (const auto& [g, c] : coeffs_) r = std::max(r, std::sqrt(double(g.norm3()) / 3.0));
  return r;
}

nlohmann::json to_json(const FourierField& f) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& [g, c] : f.coeffs()) {
    const cplx p = f.plane(g);
    arr.push_back({{"m", g.m}, {"n", g.n}, {"re", p.real()}, {"im", p.imag()}});
  }
  return arr;
}

FourierField field_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw std::invalid_argument("field JSON must be a list of {m,n,re,im}");
  std::map<DualIndex, cplx> c;
  for (const auto& e : j) {
    DualIndex g{e.at("m").get<int>(), e.at("n").get<int>()};
    c[g] += cplx(e.at("re").get<double>(), e.value("im", 0.0));
  }
  return FourierField(std::move(c), false);
}

FourierField standard_U() {
  const auto& lat = MoireLattice::get();
  std::map<DualIndex, cplx> c;
  for (int k = 0; k < 3; ++k) {
    const cplx w = std::pow(lat.omega, k);
    double u, v;
    dual_coords(cplx(0, 1) * w, u, v);
    c[DualIndex{int(std::lround(u)), int(std::lround(v))}] = w;
  }
  return FourierField(std::move(c), false);
}

FourierField reflect(const FourierField& f) {
  std::map<DualIndex, cplx> c;
  for (const auto& [g, v] : f.coeffs()) c[-g] = v;
  return FourierField(std::move(c), f.normalized());
}

cplx torus_grid_point(int i, int j, int n) {
  const auto& lat = MoireLattice::get();
  return (double(i) / n) * lat.gamma1 + (double(j) / n) * lat.gamma2;
}

SymmetryReport check_symmetries(const FourierField& f, int grid_size) {
  if (grid_size < 1) throw std::invalid_argument("grid_size must be >= 1");
  const auto& lat = MoireLattice::get();
  const cplx wbar = std::conj(lat.omega);
  SymmetryReport r;
  for (int i = 0; i < grid_size; ++i)
    for (int j = 0; j < grid_size; ++j) {
      const cplx x = torus_grid_point(i, j, grid_size);
      const cplx fx = f(x);
      for (int k = 0; k < 3; ++k)
        r.translation = std::max(r.translation, std::abs(f(x + lat.symmetry_shift(k)) - wbar * fx));
      r.rotation = std::max(r.rotation, std::abs(f(lat.omega * x) - lat.omega * fx));
      r.conjugation = std::max(r.conjugation, std::abs(std::conj(f(std::conj(x))) - fx));
    }
  return r;
}

double sobolev_norm(const FourierField& f, double s, double h) {
  double acc = 0;
  for (const auto& [g, c] : f.coeffs()) acc += std::pow(bracket2(g, h), s) * std::norm(f.plane(g));
  return std::sqrt(acc * MoireLattice::get().cell_area);
}

std::vector<cplx> grid_values(const std::vector<DualIndex>& modes, const cplx* coeffs, int n) {
  if (n < 1) throw std::invalid_argument("grid_values needs n >= 1");
  const auto& lat = MoireLattice::get();
  // pairing((i/n) gamma1 + (j/n) gamma2, g) = 2 pi (i p1 + j p2) / n with integer p1, p2
  std::vector<cplx> F(std::size_t(n) * n, 0.0);
  for (std::size_t k = 0; k < modes.size(); ++k) {
    if (coeffs[k] == 0.0) continue;
    const cplx g = dual_point(modes[k]);
    const long p1 = std::lround(pairing(lat.gamma1, g) / (2 * kPi));
    const long p2 = std::lround(pairing(lat.gamma2, g) / (2 * kPi));
    const int a = int(((p1 % n) + n) % n), b = int(((p2 % n) + n) % n);
    F[std::size_t(a) * n + b] += coeffs[k];
  }
  std::vector<cplx> w(n);
  for (int k = 0; k < n; ++k) w[k] = std::polar(1.0, 2 * kPi * k / n);
  std::vector<cplx> T(std::size_t(n) * n, 0.0), V(std::size_t(n) * n, 0.0);
  for (int a = 0; a < n; ++a)
    for (int j = 0; j < n; ++j) {
      cplx acc = 0;
      for (int b = 0; b < n; ++b) acc += F[std::size_t(a) * n + b] * w[(long(j) * b) % n];
      T[std::size_t(a) * n + j] = acc;
    }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      cplx acc = 0;
      for (int a = 0; a < n; ++a) acc += T[std::size_t(a) * n + j] * w[(long(i) * a) % n];
      V[std::size_t(i) * n + j] = acc;
    }
  return V;
}

std::vector<cplx> grid_values(const FourierField& f, int n) {
  std::vector<DualIndex> modes;
  std::vector<cplx> c;
  modes.reserve(f.coeffs().size());
  c.reserve(f.coeffs().size());
  for (const auto& [g, v] : f.coeffs()) {
    modes.push_back(g);
    c.push_back(f.plane(g));
  }
  return grid_values(modes, c.data(), n);
}

double linf_norm(const FourierField& f, int grid_size) {
  if (grid_size < 16) throw std::invalid_argument("linf_norm needs grid_size >= 16");
  double m = 0;
  for (cplx v : grid_values(f, grid_size)) m = std::max(m, std::abs(v));
  return m;
}

AdmissibleBasis admissible_basis(double h, double L) {
  if (!(h > 0) || L < 0) throw std::invalid_argument("admissible_basis needs h > 0 and L >= 0");
  AdmissibleBasis b;
  b.h = h;
  b.L = L;
  b.modes = enumerate_dual(L / h);
  std::stable_sort(b.modes.begin(), b.modes.end(),
                   [](DualIndex a, DualIndex c) { return a.norm3() < c.norm3(); });
  b.mu.reserve(b.modes.size());
  for (auto g : b.modes) b.mu.push_back(h * std::sqrt(double(g.norm3()) / 3.0));
  return b;
}

DiracTruncation dirac_truncation(cplx a, const AdmissibleBasis& basis, double s,
                                 double reference_cutoff) {
  const double area = MoireLattice::get().cell_area;
  const double basis_cutoff = basis.L / basis.h;
  if (reference_cutoff <= 0) reference_cutoff = 4.0 * basis_cutoff;
  if (reference_cutoff < basis_cutoff)
    throw std::invalid_argument("reference cutoff must not be smaller than the basis cutoff");
  DiracTruncation out;
  std::map<DualIndex, cplx> c;
  for (auto g : basis.modes) c[g] = std::polar(1.0 / area, -pairing(a, dual_point(g)));
  out.field = FourierField(std::move(c), false);
  out.alpha_norm = std::sqrt(double(basis.modes.size()) / area);
  double tail = 0;
  for (auto g : enumerate_dual(reference_cutoff))
    if (!in_disc(g, basis_cutoff)) tail += std::pow(bracket2(g, basis.h), -s);
  out.remainder_norm = std::sqrt(tail / area);
  return out;
}

double TunnelingPotential::linf_norm(int grid_size) const {
  return std::max(moire::linf_norm(q1, grid_size), moire::linf_norm(q2, grid_size));
}

std::vector<cplx> dirac_alpha(cplx a, const AdmissibleBasis& basis) {
  const double r = 1.0 / std::sqrt(MoireLattice::get().cell_area);
  std::vector<cplx> alpha(basis.modes.size());
  for (std::size_t i = 0; i < alpha.size(); ++i)
    alpha[i] = std::polar(r, -pairing(a, dual_point(basis.modes[i])));
  return alpha;
}

TunnelingPotential assemble_Q(const std::vector<cplx>& alpha, const std::vector<cplx>& beta,
                              const AdmissibleBasis& basis) {
  if (alpha.size() != basis.dimension() || beta.size() != basis.dimension())
    throw std::invalid_argument("coefficient vectors must match the basis dimension");
  std::map<DualIndex, cplx> c1, c2;
  for (std::size_t i = 0; i < basis.modes.size(); ++i) {
    if (alpha[i] != 0.0) c1[basis.modes[i]] = alpha[i];
    if (beta[i] != 0.0) c2[basis.modes[i]] = beta[i];
  }
  return {FourierField(std::move(c1), true), FourierField(std::move(c2), true)};
}

}  // namespace moire
