#pragma once

#include <vector>

#include "moire/linalg.hpp"
#include "moire/operator.hpp"

namespace moire {

struct GapError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Pairing { svd, chiral };

// Blocks of the inverse of [[A, R_-], [R_+, 0]] with R_+ u = (u|e_j) and
// R_- u_- = sum u_-(j) f_j. Columns are ordered e_N, ..., e_1 so that with the
// SVD pairing E_-+ = -diag(t_N, ..., t_1).
struct GrushinBlocks {
  int N = 0;
  double tau0 = 0;
  Pairing pairing = Pairing::svd;
  MatrixXc e_basis;       // M x N
  MatrixXc f_basis;       // M x N
  MatrixXc E_minus_plus;  // N x N
  std::vector<double> t_values;  // t_1 <= ... <= t_N
  // SVD tail j > N used for E^{delta0} = sum t_j^{-1} e_j f_j^*.
  MatrixXc tail_e, tail_f;
  Eigen::VectorXd tail_t;
  double t_next() const;  // t_{N+1}, +inf when N equals the dimension
  MatrixXc E0() const;    // E^{delta0}
};

// modes are needed for the chiral pairing (f_j = G e_j); the identity
// G A G = A^* is checked and a violation raises std::invalid_argument.
GrushinBlocks grushin_build(const MatrixXc& A, double tau0, Pairing pairing,
                            const std::vector<DualIndex>* modes = nullptr);

struct PerturbedEffective {
  MatrixXc E_minus_plus_delta;  // Neumann series value
  MatrixXc exact;               // bordered re-solve
  int neumann_order = 1;
  double residual_bound = 0;    // ||neumann - exact||_2
  double first_order_bound = 0; // 2 delta^2 / t_{N+1} (times ||Q||^2)
  double norm_E = 0, norm_Eminus = 0, norm_Eplus = 0;  // perturbed inverse blocks
};

// Q is a matrix of the same size as A; the precondition is
// delta ||Q||_2 <= t_{N+1} / 2, which is delta <= t_{N+1}/2 for ||Q|| <= 1.
PerturbedEffective perturb_effective(const GrushinBlocks& blocks, const MatrixXc& A,
                                     const MatrixXc& Q, double delta, int order = 1);

struct SandwichReport {
  bool holds = true;
  double lower_margin = 0;  // min_k (t_k(D) - t_k(E)/8); >= 0 when the lower bound holds
  double upper_margin = 0;  // min_k (t_k(E) - t_k(D))
  // Same margins with the unperturbed singular values in the middle.
  double lower_margin_unperturbed = 0;
  double upper_margin_unperturbed = 0;
  std::vector<double> t_effective, t_matrix;
};
SandwichReport sandwich_check(const GrushinBlocks& blocks, const MatrixXc& E_minus_plus_delta,
                              const MatrixXc& perturbed_matrix);

struct KyFanReport {
  bool sum_ok = true;
  bool product_ok = true;
  bool ok() const { return sum_ok && product_ok; }
};
// n, m are 1-based indices into singular values in decreasing order.
KyFanReport ky_fan_check(const MatrixXc& A, const MatrixXc& B, int n, int m);

// sum_k log s_k(E); -inf when some s_k vanishes.
double log_det_effective(const MatrixXc& E_minus_plus_delta);

nlohmann::json to_json(const SandwichReport& r);

}  // namespace moire
