#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "moire/fields.hpp"
#include "moire/grushin.hpp"
#include "moire/operator.hpp"

namespace moire {

struct LiftParams {
  double s = 2;
  double epsilon = 0.1;
  double eta = 0.1;
  double theta = 0.2;
  int N_theta = 8;
  double C0 = 10;
  double C_L = 2;
  // <= 0 selects the smallest value for which the R window of the random law
  // is nonempty, max(2 + 5(1+eps)/(s-1-eps), 2 + 5s/(s-1-eps)).
  double kappa3 = 0;
  double kappa4 = 0;
  // Direct exponent overrides for desk-scale experiments; <= 0 keeps the
  // formulas. Any override is flagged in the audit.
  double kappa1_override = 0;
  double kappa2_override = 0;
  int grid = 64;
  Pairing pairing = Pairing::svd;
};

double kappa3_min(double s, double epsilon);       // 2 + 5(1+eps)/(s-1-eps)
double kappa3_r_window(double s, double epsilon);  // 2 + 5s/(s-1-eps)

struct LiftSchedule {
  LiftParams params;
  double h = 0;
  double tau0 = 0;
  double kappa1 = 0, kappa2 = 0, kappa3 = 0, kappa5 = 0;
  double L = 0;
  // N^(0), ..., N^(k0) = 1, followed by 0.
  std::vector<int> N_sequence;
  int k0() const { return int(N_sequence.size()) - 2; }
  double tau(int k) const;    // tau0 h^{kappa2 k}, may underflow to 0
  double log_tau(int k) const;
  double delta(int k) const;  // tau(k) h^{kappa1+2} / C0
  double certified_t1() const;
  double log_certified_t1() const;
  bool overridden() const;
};

// Rejects h outside (0, 1), tau0 outside (0, sqrt h], and s, eps out of range.
LiftSchedule make_schedule(double h, double tau0, int N, const LiftParams& params = {});
std::vector<int> cascade(int N, double theta, int N_theta);
nlohmann::json to_json(const LiftSchedule& s);

// e_n^k(x) for k = 1, 2 on the uniform torus grid; basis columns are coefficient
// vectors in the (component 1 modes, component 2 modes) layout.
struct GridEvaluation {
  int n = 0;
  int N = 0;
  MatrixXc values[2];  // N x n^2, column p = i*n + j
  cplx point(int p) const { return torus_grid_point(p / n, p % n, n); }
};
GridEvaluation evaluate_on_grid(const MatrixXc& basis, const std::vector<DualIndex>& modes, int n);
// 2 x N matrix of (e_n^1(x), e_n^2(x)).
MatrixXc evaluate_at(const MatrixXc& basis, const std::vector<DualIndex>& modes, cplx x);

struct PointSelection {
  std::vector<int> j;          // 1 or 2
  std::vector<cplx> a;
  std::vector<int> grid_index;
  MatrixXc E;                  // column k is e_vec_{j_k}(a_k)
  double det_modulus = 0;  // volume of the columns of E when N < basis size
  std::vector<double> step_dist2;  // squared distance to the span at each step
};
PointSelection greedy_select(const GridEvaluation& ev, int N);
// sqrt(N!) / (2^{N/2} cell_area^{N/2})
double det_lower_bound(int N);

// Delta at a_k in slot (1,2) when j_k = 2, and -delta in slot (2,1) when j_k = 1.
struct DiracPotential {
  std::vector<cplx> points;
  std::vector<int> slot;  // the j_k
};
DiracPotential dirac_tunneling(const PointSelection& sel);

// (Q_hat e_n | f_m) by point evaluation.
MatrixXc dirac_MQ(const DiracPotential& q, const MatrixXc& e_basis, const MatrixXc& f_basis,
                  const std::vector<DualIndex>& modes);
// (Q e_n | f_m) by Fourier inner products.
MatrixXc build_MQ(const TunnelingPotential& Q, const MatrixXc& e_basis, const MatrixXc& f_basis,
                  const std::vector<DualIndex>& modes);

// Sum over the selection of the admissible approximations of the deltas.
TunnelingPotential admissible_dirac(const DiracPotential& q, const AdmissibleBasis& basis);

struct StepRecord {
  int k = 0;
  double tau = 0;
  int N_scheduled = 0;
  int N_measured = 0;
  int N_next = 0;
  std::string kind;  // "empty", "already_lifted", "lifted"
  double delta = 0;
  double q_sup_grid = 0;       // sup of the raw potential on the grid
  double q_galerkin_norm = 0;  // ||Galerkin matrix of the raw potential||_2
  double det_modulus = 0;
  double det_bound = 0;
  int basis_dimension = 0;
  std::vector<double> mq_singular;  // of the normalized step potential
  double band_floor_before = 0;
  double band_floor_after = 0;  // min t_nu, N_next < nu <= max(N_scheduled, N_measured)
  double certificate = 0;       // tau h^{kappa2}
  double log_certificate = 0;   // compared in log space, certificates underflow quickly
  bool floor_ok = true;
  double weyl_margin = 0;  // min over nu > N_measured of t_nu(new) - t_nu(old) + delta
  bool weyl_ok = true;
};
nlohmann::json to_json(const StepRecord& r);

struct StepResult {
  StepRecord record;
  TunnelingPotential Q;  // unit-normalized step potential, zero when not lifted
  MatrixXc matrix;       // A + delta Q
  Eigen::VectorXd t_after;
};
// One lifting step on A = D^(k) - z. N_scheduled and N_next are the nu-range
// bookkeeping of the cascade.
StepResult lift_step(const MatrixXc& A, const std::vector<DualIndex>& modes,
                     const LiftSchedule& schedule, int k);

struct LiftResult {
  LiftSchedule schedule;
  TunnelingPotential Q_total;  // sum_k h^{kappa2 k} Q^(k+1)
  double delta = 0;            // tau0 h^{kappa1+2} / C0
  double certified_t1 = 0;
  double log_certified_t1 = 0;
  double measured_t1 = 0;
  int iterations = 0;
  int iteration_bound = 0;  // ceil(log(N/N_theta)/log(1/(1-theta))) + N_theta + 1
  bool ok = true;
  std::vector<StepRecord> steps;
  Eigen::VectorXd t_before, t_after;
  MatrixXc final_matrix;
};
// A = D_h - z on `modes`; N^(0) is measured at tau0.
LiftResult lift_iterate(const MatrixXc& A, const std::vector<DualIndex>& modes, double h,
                        double tau0, const LiftParams& params = {});
nlohmann::json to_json(const LiftResult& r);

}  // namespace moire
