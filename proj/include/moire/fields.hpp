#pragma once

#include <map>
#include <string>
#include <vector>

#include "json.hpp"

#include "moire/lattice.hpp"

namespace moire {

// Finite Fourier series on C/Gamma. With normalized = true the basis
// functions are e^{i pairing(x, g)} / sqrt(cell_area).
class FourierField {
 public:
  FourierField() = default;
  explicit FourierField(std::map<DualIndex, cplx> coeffs, bool normalized = false)
      : coeffs_(std::move(coeffs)), normalized_(normalized) {}

  const std::map<DualIndex, cplx>& coeffs() const { return coeffs_; }
  bool normalized() const { return normalized_; }

  // Coefficient of the bare plane wave e^{i pairing(x, g)}.
  cplx plane(DualIndex g) const;
  // Same data with normalized = false.
  FourierField as_plane_waves() const;

  cplx operator()(cplx x) const;

  void add(DualIndex g, cplx c) { coeffs_[g] += c; }
  FourierField operator+(const FourierField& o) const;
  FourierField scaled(cplx a) const;
  bool empty() const { return coeffs_.empty(); }
  // Largest |g| over the support.
  double support_radius() const;

  static FourierField constant(cplx c) { return FourierField({{DualIndex{0, 0}, c}}); }

 private:
  std::map<DualIndex, cplx> coeffs_;
  bool normalized_ = false;
};

nlohmann::json to_json(const FourierField& f);
FourierField field_from_json(const nlohmann::json& j);

FourierField standard_U();
FourierField reflect(const FourierField& f);

struct SymmetryReport {
  double translation = 0;  // max |f(x + a_j) - conj(omega) f(x)|
  double rotation = 0;     // max |f(omega x) - omega f(x)|
  double conjugation = 0;  // max |conj(f(conj x)) - f(x)|
};
SymmetryReport check_symmetries(const FourierField& f, int grid_size);

// (sum <h|g|>^{2s} |c_g|^2 cell_area)^{1/2}, c_g the plane-wave coefficients.
double sobolev_norm(const FourierField& f, double s, double h);

// Max modulus on a grid_size^2 uniform grid of the fundamental domain. This is
// a lower bound for the true sup norm.
double linf_norm(const FourierField& f, int grid_size);

// Point (i/n) gamma1 + (j/n) gamma2 of the uniform grid.
cplx torus_grid_point(int i, int j, int n);

// Values of sum_k coeffs[k] e^{i pairing(x, modes[k])} at torus_grid_point(i, j, n),
// stored at i*n + j. Folds frequencies mod n, then a separable DFT.
std::vector<cplx> grid_values(const std::vector<DualIndex>& modes, const cplx* coeffs, int n);
std::vector<cplx> grid_values(const FourierField& f, int n);

struct AdmissibleBasis {
  double h = 1;
  double L = 0;
  std::vector<DualIndex> modes;  // ascending in mu, ties lexicographic
  std::vector<double> mu;        // h |dual_point|
  std::size_t dimension() const { return modes.size(); }
};
AdmissibleBasis admissible_basis(double h, double L);

struct DiracTruncation {
  FourierField field;         // plane-wave coefficients
  double remainder_norm = 0;  // H^{-s}_h norm of the tail up to the reference cutoff
  double alpha_norm = 0;      // l2 norm of the coefficients in the orthonormal basis
};
// reference_cutoff is a dual radius |g|; <= 0 selects 4x the basis cutoff.
DiracTruncation dirac_truncation(cplx a, const AdmissibleBasis& basis, double s,
                                 double reference_cutoff = 0);

// Off-diagonal potential [[0, q1], [-q2, 0]].
struct TunnelingPotential {
  FourierField q1;
  FourierField q2;
  TunnelingPotential scaled(cplx a) const { return {q1.scaled(a), q2.scaled(a)}; }
  TunnelingPotential operator+(const TunnelingPotential& o) const {
    return {q1 + o.q1, q2 + o.q2};
  }
  double linf_norm(int grid_size) const;
};

// Coefficients of delta(x - a) in the orthonormal basis, conj(psi_n(a)).
std::vector<cplx> dirac_alpha(cplx a, const AdmissibleBasis& basis);

TunnelingPotential assemble_Q(const std::vector<cplx>& alpha, const std::vector<cplx>& beta,
                              const AdmissibleBasis& basis);

}  // namespace moire
