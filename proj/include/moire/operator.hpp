#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "json.hpp"
#include "moire/fields.hpp"
#include "moire/lattice.hpp"

namespace moire {

using MatrixXc = Eigen::MatrixXcd;
using VectorXc = Eigen::VectorXcd;
using SparseXc = Eigen::SparseMatrix<cplx>;

struct AssemblyConfig {
  double h = 1;
  cplx k = 0;
  cplx z = 0;
  double cutoff_radius = 6;
};

// Lookup from DualIndex to position in a truncated mode list.
class ModeIndex {
 public:
  explicit ModeIndex(const std::vector<DualIndex>& modes);
  int find(DualIndex g) const;  // -1 when outside
 private:
  int bound_ = 0;
  std::vector<int> table_;
};

// Rows/columns ordered as (component 1, modes...) then (component 2, modes...).
struct OperatorMatrix {
  MatrixXc matrix;
  std::vector<DualIndex> modes;
  AssemblyConfig config;
  std::size_t M() const { return modes.size(); }
  int row(int component, std::size_t mode_pos) const {
    return int((component - 1) * modes.size() + mode_pos);
  }
};

OperatorMatrix assemble(const AssemblyConfig& config, const FourierField& U);
// Same entries in sparse storage, for cutoffs where dense storage is too big.
SparseXc assemble_sparse(const AssemblyConfig& config, const FourierField& U,
                         std::vector<DualIndex>* modes_out = nullptr);

// Galerkin matrix of Q = [[0, q1], [-q2, 0]] on the given mode list.
MatrixXc potential_matrix(const TunnelingPotential& Q, const std::vector<DualIndex>& modes);

struct PerturbedOperator {
  OperatorMatrix base;
  TunnelingPotential Q;
  double delta = 0;
  double kappa1 = 0;
  MatrixXc matrix;  // base + delta h^kappa1 Q
  double coupling() const;  // delta h^kappa1
};

PerturbedOperator perturb(const OperatorMatrix& base, const TunnelingPotential& Q, double delta,
                          double kappa1);

// Matrix of G A G with G(u1, u2) = (conj u2, -conj u1); needs a negation-closed mode list.
MatrixXc apply_G(const MatrixXc& A, const std::vector<DualIndex>& modes);
inline MatrixXc apply_G(const OperatorMatrix& A) { return apply_G(A.matrix, A.modes); }
// Coefficient vector of G u.
VectorXc apply_G_vector(const VectorXc& u, const std::vector<DualIndex>& modes);

MatrixXc chiral_hamiltonian(const MatrixXc& A);

// Row-major JSON {"rows","cols","data":[[re,im],...]}.
nlohmann::json matrix_to_json(const MatrixXc& A);
MatrixXc matrix_from_json(const nlohmann::json& j);
// Row-major interleaved (re, im) little-endian float64, no header.
void write_matrix_binary(const MatrixXc& A, std::ostream& os);
MatrixXc read_matrix_binary(std::istream& is, int rows, int cols);

}  // namespace moire
