#include "moire/grushin.hpp"

#include <cmath>
#include <limits>

namespace moire {

double GrushinBlocks::t_next() const {
  return tail_t.size() ? tail_t(0) : std::numeric_limits<double>::infinity();
}

MatrixXc GrushinBlocks::E0() const {
  return tail_e * tail_t.cwiseInverse().asDiagonal() * tail_f.adjoint();
}

GrushinBlocks grushin_build(const MatrixXc& A, double tau0, Pairing pairing,
                            const std::vector<DualIndex>* modes) {
  if (A.rows() != A.cols()) throw std::invalid_argument("grushin_build needs a square matrix");
  const auto d = linalg::svd_blocked(A);
  const int n = int(d.s.size());
  GrushinBlocks g;
  g.tau0 = tau0;
  g.pairing = pairing;
  int N = 0;
  while (N < n && d.s(N) <= tau0) ++N;
  for (int j = 0; j < n; ++j)
    if (std::abs(d.s(j) - tau0) <= 1e-12 * std::max(1.0, tau0))
      throw GapError("tau0 coincides with a singular value; nudge it by 1e-9 relative");
  if (N > 0 && N < n && d.s(N) - d.s(N - 1) <= 1e-12)
    throw GapError("no spectral gap at tau0: t_N = t_{N+1} within 1e-12");
  g.N = N;
  for (int j = 0; j < N; ++j) g.t_values.push_back(d.s(j));
  // column k holds e_{N-k}, decreasing index
  g.e_basis = d.V.leftCols(N).rowwise().reverse();
  g.tail_e = d.V.rightCols(n - N);
  g.tail_f = d.U.rightCols(n - N);
  g.tail_t = d.s.tail(n - N);
  if (pairing == Pairing::svd) {
    g.f_basis = d.U.leftCols(N).rowwise().reverse();
    g.E_minus_plus = MatrixXc::Zero(N, N);
    for (int k = 0; k < N; ++k) g.E_minus_plus(k, k) = -d.s(N - 1 - k);
  } else {
    if (!modes) throw std::invalid_argument("chiral pairing needs the mode list");
    const MatrixXc GAG = apply_G(A, *modes);
    const double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
    if ((GAG - A.adjoint()).cwiseAbs().maxCoeff() > 1e-10 * scale)
      throw std::invalid_argument("chiral pairing needs G A G = A^* (holds at z = 0, k = 0)");
    g.f_basis.resize(A.rows(), N);
    for (int k = 0; k < N; ++k) g.f_basis.col(k) = apply_G_vector(g.e_basis.col(k), *modes);
    g.E_minus_plus = -g.f_basis.adjoint() * A * g.e_basis;
  }
  return g;
}

namespace {

double opnorm(const MatrixXc& X) {
  if (X.size() == 0) return 0;
  return linalg::singular_values(X).maxCoeff();
}

}  // namespace

PerturbedEffective perturb_effective(const GrushinBlocks& b, const MatrixXc& A, const MatrixXc& Q,
                                     double delta, int order) {
  if (Q.rows() != A.rows() || Q.cols() != A.cols())
    throw std::invalid_argument("perturb_effective: Q has the wrong size");
  if (order < 1) throw std::invalid_argument("Neumann order must be >= 1");
  const double qn = opnorm(Q);
  if (delta < 0 || delta * qn > b.t_next() / 2)
    throw std::invalid_argument("perturb_effective needs delta ||Q|| <= t_{N+1}/2");
  PerturbedEffective out;
  out.neumann_order = order;
  const int n = int(A.rows()), N = b.N;
  const MatrixXc E0 = b.E0();
  const MatrixXc& Ep = b.e_basis;           // E_+
  const MatrixXc Em = b.f_basis.adjoint();  // E_-
  // Neumann series for E_-+
  MatrixXc val = b.E_minus_plus;
  MatrixXc chain = Q * Ep;                  // (Q E0)^{k-1} Q E_+
  double coef = -delta;
  for (int k = 1; k <= order; ++k) {
    val += coef * (Em * chain);
    chain = Q * (E0 * chain);
    coef *= -delta;
  }
  out.E_minus_plus_delta = val;
  // bordered re-solve
  MatrixXc P = MatrixXc::Zero(n + N, n + N);
  P.topLeftCorner(n, n) = A + delta * Q;
  P.topRightCorner(n, N) = b.f_basis;
  P.bottomLeftCorner(N, n) = b.e_basis.adjoint();
  const MatrixXc Pinv = P.partialPivLu().inverse();
  out.exact = Pinv.bottomRightCorner(N, N);
  out.residual_bound = N ? opnorm(out.exact - out.E_minus_plus_delta) : 0.0;
  out.first_order_bound = 2.0 * delta * delta * qn * qn / b.t_next();
  out.norm_E = opnorm(Pinv.topLeftCorner(n, n));
  out.norm_Eplus = opnorm(Pinv.topRightCorner(n, N));
  out.norm_Eminus = opnorm(Pinv.bottomLeftCorner(N, n));
  return out;
}

SandwichReport sandwich_check(const GrushinBlocks& b, const MatrixXc& Emp,
                              const MatrixXc& perturbed) {
  SandwichReport r;
  const int N = b.N;
  if (N == 0) return r;
  const auto te = linalg::singular_values(Emp);
  const auto tm = linalg::singular_values(perturbed);
  r.lower_margin = r.upper_margin = std::numeric_limits<double>::infinity();
  r.lower_margin_unperturbed = r.upper_margin_unperturbed = std::numeric_limits<double>::infinity();
  for (int k = 0; k < N; ++k) {
    r.t_effective.push_back(te(k));
    r.t_matrix.push_back(tm(k));
    r.lower_margin = std::min(r.lower_margin, tm(k) - te(k) / 8);
    r.upper_margin = std::min(r.upper_margin, te(k) - tm(k));
    r.lower_margin_unperturbed = std::min(r.lower_margin_unperturbed, b.t_values[k] - te(k) / 8);
    r.upper_margin_unperturbed = std::min(r.upper_margin_unperturbed, te(k) - b.t_values[k]);
  }
  // round-off allowance on the upper inequality, which is tight at delta = 0
  const double slack = 1e-10 * std::max(1.0, te(N - 1));
  r.holds = r.lower_margin >= 0 && r.upper_margin >= -slack;
  return r;
}

KyFanReport ky_fan_check(const MatrixXc& A, const MatrixXc& B, int n, int m) {
  const int d = int(std::min(A.rows(), A.cols()));
  if (n < 1 || m < 1 || n + m - 1 > d) throw std::invalid_argument("ky_fan_check: need n + m - 1 <= dimension");
  auto desc = [](const MatrixXc& X) {
    Eigen::VectorXd s = linalg::singular_values(X);
    return Eigen::VectorXd(s.reverse());
  };
  const auto sa = desc(A), sb = desc(B), ssum = desc(A + B), sprod = desc(A * B);
  const double tol = 1e-12;
  KyFanReport r;
  r.sum_ok = ssum(n + m - 2) <= sa(n - 1) + sb(m - 1) + tol * (sa(0) + sb(0));
  r.product_ok = sprod(n + m - 2) <= sa(n - 1) * sb(m - 1) + tol * sa(0) * sb(0);
  return r;
}

double log_det_effective(const MatrixXc& E) {
  if (E.size() == 0) return 0.0;
  const auto s = linalg::singular_values(E);
  double acc = 0;
  for (int i = 0; i < s.size(); ++i) {
    if (s(i) == 0.0) return -std::numeric_limits<double>::infinity();
    acc += std::log(s(i));
  }
  return acc;
}

nlohmann::json to_json(const SandwichReport& r) {
  return {{"holds", r.holds},
          {"lower_margin", r.lower_margin},
          {"upper_margin", r.upper_margin},
          {"lower_margin_unperturbed", r.lower_margin_unperturbed},
          {"upper_margin_unperturbed", r.upper_margin_unperturbed},
          {"t_effective", r.t_effective},
          {"t_matrix", r.t_matrix}};
}

}  // namespace moire
