#include "moire/lifting.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>

#include "moire/linalg.hpp"

namespace moire {

double kappa3_min(double s, double epsilon) { return 2 + 5 * (1 + epsilon) / (s - 1 - epsilon); }
double kappa3_r_window(double s, double epsilon) { return 2 + 5 * s / (s - 1 - epsilon); }

double LiftSchedule::tau(int k) const { return tau0 * std::pow(h, kappa2 * k); }
double LiftSchedule::delta(int k) const { return tau(k) * std::pow(h, kappa1 + 2) / params.C0; }
double LiftSchedule::log_tau(int k) const { return std::log(tau0) + kappa2 * k * std::log(h); }
double LiftSchedule::certified_t1() const { return tau(k0() + 1); }
double LiftSchedule::log_certified_t1() const { return log_tau(k0() + 1); }
bool LiftSchedule::overridden() const {
  return params.kappa1_override > 0 || params.kappa2_override > 0;
}

std::vector<int> cascade(int N, double theta, int N_theta) {
  if (N < 0) throw std::invalid_argument("cascade needs N >= 0");
  std::vector<int> seq{N};
  if (N == 0) return seq;
  while (seq.back() > 1) {
    const int cur = seq.back();
    int next = cur > N_theta ? int(std::floor((1 - theta) * cur + 1e-12)) : cur - 1;
    seq.push_back(std::max(1, std::min(next, cur - 1)));
  }
  seq.push_back(0);
  return seq;
}

LiftSchedule make_schedule(double h, double tau0, int N, const LiftParams& p) {
  if (!(h > 0 && h < 1)) throw std::invalid_argument("lifting needs 0 < h < 1");
  if (!(tau0 > 0 && tau0 <= std::sqrt(h) * (1 + 1e-12)))
    throw std::invalid_argument("lifting needs 0 < tau0 <= sqrt(h)");
  if (!(p.s > 1 && p.epsilon > 0 && p.epsilon < p.s - 1))
    throw std::invalid_argument("need s > 1 and 0 < epsilon < s - 1");
  if (!(p.theta > 0 && p.theta < 0.25)) throw std::invalid_argument("need theta in (0, 1/4)");
  if (p.C0 <= 0 || p.C_L <= 0 || p.N_theta < 1 || p.grid < 16)
    throw std::invalid_argument("invalid lifting constants");
  LiftSchedule sc;
  sc.params = p;
  sc.h = h;
  sc.tau0 = tau0;
  const double gap = p.s - 1 - p.epsilon;
  const double k3lo = kappa3_min(p.s, p.epsilon);
  if (p.kappa3 > 0 && p.kappa3 < k3lo) throw std::invalid_argument("kappa3 below its lower bound");
  sc.kappa3 = p.kappa3 > 0 ? p.kappa3 : std::max(k3lo, kappa3_r_window(p.s, p.epsilon));
  sc.kappa1 = p.kappa1_override > 0 ? p.kappa1_override : 1 + 5 * p.s / gap + sc.kappa3;
  sc.kappa2 = p.kappa2_override > 0 ? p.kappa2_override : 2 * (sc.kappa1 + 2) + p.eta;
  sc.kappa5 = sc.kappa3 + p.kappa4 + 2 + 10 / gap;
  sc.L = p.C_L * std::pow(h, -5 / gap);
  sc.N_sequence = cascade(N, p.theta, p.N_theta);
  return sc;
}

nlohmann::json to_json(const LiftSchedule& s) {
  const auto& p = s.params;
  return {{"h", s.h},
          {"tau0", s.tau0},
          {"s", p.s},
          {"epsilon", p.epsilon},
          {"eta", p.eta},
          {"theta", p.theta},
          {"N_theta", p.N_theta},
          {"N_theta_is_repo_choice", true},
          {"C0", p.C0},
          {"C_L", p.C_L},
          {"kappa1", s.kappa1},
          {"kappa2", s.kappa2},
          {"kappa3", s.kappa3},
          {"kappa4", p.kappa4},
          {"kappa5", s.kappa5},
          {"kappa_overridden", s.overridden()},
          {"L", s.L},
          {"grid", p.grid},
          {"pairing", p.pairing == Pairing::svd ? "svd" : "chiral"},
          {"N_sequence", s.N_sequence}};
}

GridEvaluation evaluate_on_grid(const MatrixXc& basis, const std::vector<DualIndex>& modes, int n) {
  const int M = int(modes.size());
  if (basis.rows() != 2 * M) throw std::invalid_argument("basis rows must be 2 * modes");
  GridEvaluation ev;
  ev.n = n;
  ev.N = int(basis.cols());
  const double r = 1.0 / std::sqrt(MoireLattice::get().cell_area);
  for (int k = 0; k < 2; ++k) {
    ev.values[k].resize(ev.N, n * n);
    for (int c = 0; c < ev.N; ++c) {
      const VectorXc col = basis.col(c).segment(k * M, M);
      const auto v = grid_values(modes, col.data(), n);
      for (int p = 0; p < n * n; ++p) ev.values[k](c, p) = r * v[p];
    }
  }
  return ev;
}

MatrixXc evaluate_at(const MatrixXc& basis, const std::vector<DualIndex>& modes, cplx x) {
  const int M = int(modes.size());
  const double r = 1.0 / std::sqrt(MoireLattice::get().cell_area);
  VectorXc w(M);
  for (int i = 0; i < M; ++i) w(i) = std::polar(r, pairing(x, dual_point(modes[i])));
  MatrixXc out(2, basis.cols());
  out.row(0) = w.transpose() * basis.topRows(M);
  out.row(1) = w.transpose() * basis.bottomRows(M);
  return out;
}

double det_lower_bound(int N) {
  const double area = MoireLattice::get().cell_area;
  return std::exp(0.5 * std::lgamma(N + 1.0) - 0.5 * N * std::log(2 * area));
}

PointSelection greedy_select(const GridEvaluation& ev, int N) {
  if (N < 0 || N > ev.N) throw std::invalid_argument("greedy_select: N exceeds the basis size");
  const int P = ev.n * ev.n;
  PointSelection sel;
  sel.E.resize(ev.N, N);
  std::vector<double> res[2];
  for (int k = 0; k < 2; ++k) {
    res[k].resize(P);
    for (int p = 0; p < P; ++p) res[k][p] = ev.values[k].col(p).squaredNorm();
  }
  std::vector<VectorXc> q;
  for (int step = 0; step < N; ++step) {
    int bp = -1, bk = 0;
    double best = -1;
    for (int p = 0; p < P; ++p)
      for (int k = 0; k < 2; ++k)
        if (res[k][p] > best) {
          best = res[k][p];
          bp = p;
          bk = k;
        }
    const VectorXc v = ev.values[bk].col(bp);
    VectorXc w = v;
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& qi : q) w -= qi * qi.dot(w);
    const double d2 = w.squaredNorm();
    sel.step_dist2.push_back(d2);
    sel.j.push_back(bk + 1);
    sel.grid_index.push_back(bp);
    sel.a.push_back(ev.point(bp));
    sel.E.col(step) = v;
    if (d2 <= 0) break;
    q.push_back(w / std::sqrt(d2));
    const VectorXc& qn = q.back();
    for (int k = 0; k < 2; ++k) {
      const Eigen::RowVectorXcd proj = qn.adjoint() * ev.values[k];
      for (int p = 0; p < P; ++p) res[k][p] = std::max(0.0, res[k][p] - std::norm(proj(p)));
    }
  }
  if (N == ev.N) {
    sel.det_modulus = N ? std::abs(sel.E.partialPivLu().determinant()) : 1.0;
  } else {
    // volume of the selected columns, |det| when E is square
    double lv = 0;
    for (double d2 : sel.step_dist2) lv += 0.5 * std::log(std::max(d2, 0.0));
    sel.det_modulus = std::exp(lv);
  }
  return sel;
}

DiracPotential dirac_tunneling(const PointSelection& sel) { return {sel.a, sel.j}; }

MatrixXc dirac_MQ(const DiracPotential& q, const MatrixXc& e_basis, const MatrixXc& f_basis,
                  const std::vector<DualIndex>& modes) {
  MatrixXc out = MatrixXc::Zero(e_basis.cols(), f_basis.cols());
  for (std::size_t k = 0; k < q.points.size(); ++k) {
    const MatrixXc e = evaluate_at(e_basis, modes, q.points[k]);
    const MatrixXc f = evaluate_at(f_basis, modes, q.points[k]);
    // slot (1,2) acts as u -> (u_2, 0); slot (2,1) with sign -1 as u -> (0, -u_1)
    if (q.slot[k] == 2)
      out += e.row(1).transpose() * f.row(0).conjugate();
    else
      out -= e.row(0).transpose() * f.row(1).conjugate();
  }
  return out;
}

MatrixXc build_MQ(const TunnelingPotential& Q, const MatrixXc& e_basis, const MatrixXc& f_basis,
                  const std::vector<DualIndex>& modes) {
  const MatrixXc P = potential_matrix(Q, modes);
  return (f_basis.adjoint() * P * e_basis).transpose();
}

TunnelingPotential admissible_dirac(const DiracPotential& q, const AdmissibleBasis& basis) {
  const std::size_t D = basis.dimension();
  std::vector<cplx> alpha(D, 0.0), beta(D, 0.0);
  for (std::size_t k = 0; k < q.points.size(); ++k) {
    const auto c = dirac_alpha(q.points[k], basis);
    auto& dst = q.slot[k] == 2 ? alpha : beta;
    for (std::size_t i = 0; i < D; ++i) dst[i] += c[i];
  }
  return assemble_Q(alpha, beta, basis);
}

nlohmann::json to_json(const StepRecord& r) {
  return {{"k", r.k},
          {"tau", r.tau},
          {"N_scheduled", r.N_scheduled},
          {"N_measured", r.N_measured},
          {"N_next", r.N_next},
          {"kind", r.kind},
          {"delta", r.delta},
          {"q_sup_grid", r.q_sup_grid},
          {"q_galerkin_norm", r.q_galerkin_norm},
          {"det_modulus", r.det_modulus},
          {"det_bound", r.det_bound},
          {"basis_dimension", r.basis_dimension},
          {"mq_singular", r.mq_singular},
          {"band_floor_before", r.band_floor_before},
          {"band_floor_after", r.band_floor_after},
          {"certificate", r.certificate},
          {"log_certificate", r.log_certificate},
          {"floor_ok", r.floor_ok},
          {"weyl_margin", r.weyl_margin},
          {"weyl_ok", r.weyl_ok}};
}

namespace {

double band_min(const Eigen::VectorXd& t, int lo, int hi) {
  // 1-based nu in (lo, hi]
  double m = std::numeric_limits<double>::infinity();
  for (int nu = lo + 1; nu <= std::min<int>(hi, int(t.size())); ++nu) m = std::min(m, t(nu - 1));
  return m;
}

}  // namespace

StepResult lift_step(const MatrixXc& A, const std::vector<DualIndex>& modes,
                     const LiftSchedule& sc, int k) {
  if (k < 0 || k + 1 >= int(sc.N_sequence.size())) throw std::invalid_argument("lift_step: k outside the cascade");
  StepResult out;
  auto& rec = out.record;
  rec.k = k;
  rec.tau = sc.tau(k);
  rec.N_scheduled = sc.N_sequence[k];
  rec.N_next = sc.N_sequence[k + 1];
  rec.certificate = sc.tau(k + 1);
  rec.log_certificate = sc.log_tau(k + 1);
  // values first; the vectors are only needed when the step lifts
  const Eigen::VectorXd t_before = linalg::singular_values(A);
  int Nm = 0;
  while (Nm < t_before.size() && t_before(Nm) <= rec.tau) ++Nm;
  rec.N_measured = Nm;
  const int band_hi = std::max(rec.N_scheduled, rec.N_measured);
  rec.band_floor_before = band_min(t_before, rec.N_next, band_hi);
  out.matrix = A;
  out.Q = {};
  const int lift_count = rec.N_measured - rec.N_next;
  const bool chiral = sc.params.pairing == Pairing::chiral;
  bool lift = false;
  std::optional<GrushinBlocks> blocks;
  if (rec.N_measured == 0) {
    rec.kind = "empty";
  } else if (lift_count <= 0) {
    rec.kind = "already_lifted";
  } else {
    Eigen::VectorXd s;
    if (chiral) {
      blocks = grushin_build(A, rec.tau, sc.params.pairing, &modes);
      s = linalg::singular_values(blocks->E_minus_plus).reverse();
    } else {
      // E_-+ = -diag(t_N, ..., t_1)
      s = t_before.head(Nm).reverse();
    }
    for (int j = 0; j < lift_count; ++j)
      if (!(s(j) > 0 && std::log(s(j)) >= rec.log_certificate)) lift = true;
    rec.kind = lift ? "lifted" : "already_lifted";
  }
  if (lift) {
    if (!blocks) blocks = grushin_build(A, rec.tau, sc.params.pairing, chiral ? &modes : nullptr);
    const GrushinBlocks& b = *blocks;
    const int N = b.N;
    const GridEvaluation ev = evaluate_on_grid(b.e_basis, modes, sc.params.grid);
    const PointSelection sel = greedy_select(ev, N);
    rec.det_modulus = sel.det_modulus;
    rec.det_bound = det_lower_bound(N);
    const AdmissibleBasis basis = admissible_basis(sc.h, sc.L);
    rec.basis_dimension = int(basis.dimension());
    const TunnelingPotential Qraw = admissible_dirac(dirac_tunneling(sel), basis);
    const MatrixXc Praw = potential_matrix(Qraw, modes);
    rec.q_sup_grid = Qraw.linf_norm(sc.params.grid);
    rec.q_galerkin_norm = linalg::singular_values(Praw).maxCoeff();
    // the grid sup is a lower bound; also dividing by the Galerkin norm keeps
    // ||delta Q|| <= delta for the Weyl post-assert
    const double C = std::max(rec.q_sup_grid, rec.q_galerkin_norm);
    if (!(C > 0)) throw NumericalError("lift_step: vanishing tunneling potential");
    out.Q = Qraw.scaled(1.0 / C);
    rec.delta = sc.delta(k);
    const MatrixXc P = Praw / C;
    const Eigen::VectorXd ms = linalg::singular_values(build_MQ(out.Q, b.e_basis, b.f_basis, modes));
    rec.mq_singular.assign(ms.data(), ms.data() + ms.size());
    out.matrix = A + rec.delta * P;
    out.t_after = linalg::singular_values(out.matrix);
  } else {
    out.t_after = t_before;
  }
  rec.band_floor_after = band_min(out.t_after, rec.N_next, band_hi);
  rec.floor_ok = rec.band_floor_after > 0 && std::log(rec.band_floor_after) >= rec.log_certificate;
  const double round = 1e-13 * std::max(1.0, t_before(t_before.size() - 1));
  rec.weyl_margin = std::numeric_limits<double>::infinity();
  for (int nu = rec.N_measured + 1; nu <= int(t_before.size()); ++nu)
    rec.weyl_margin = std::min(rec.weyl_margin, out.t_after(nu - 1) - t_before(nu - 1) + rec.delta);
  rec.weyl_ok = rec.weyl_margin >= -round;
  return out;
}

LiftResult lift_iterate(const MatrixXc& A, const std::vector<DualIndex>& modes, double h,
                        double tau0, const LiftParams& params) {
  LiftResult res;
  res.t_before = linalg::singular_values(A);
  int N = 0;
  while (N < res.t_before.size() && res.t_before(N) <= tau0) ++N;
  res.schedule = make_schedule(h, tau0, N, params);
  const auto& sc = res.schedule;
  res.delta = sc.delta(0);
  res.final_matrix = A;
  res.t_after = res.t_before;
  TunnelingPotential total;
  for (int k = 0; k + 1 < int(sc.N_sequence.size()); ++k) {
    StepResult st = lift_step(res.final_matrix, modes, sc, k);
    res.steps.push_back(st.record);
    ++res.iterations;
    if (st.record.kind == "lifted") {
      total = total + st.Q.scaled(std::pow(h, sc.kappa2 * k));
      res.final_matrix = std::move(st.matrix);
    }
    res.t_after = st.t_after;
    if (!st.record.floor_ok || !st.record.weyl_ok) res.ok = false;
  }
  res.Q_total = std::move(total);
  res.certified_t1 = sc.certified_t1();
  res.log_certified_t1 = sc.log_certified_t1();
  res.measured_t1 = res.t_after.size() ? res.t_after(0) : 0.0;
  if (!(std::isfinite(res.log_certified_t1) && res.measured_t1 > 0 &&
        std::log(res.measured_t1) >= res.log_certified_t1))
    res.ok = false;
  const auto& p = sc.params;
  res.iteration_bound = p.N_theta + 1;
  if (N > p.N_theta)
    res.iteration_bound += int(std::ceil(std::log(double(N) / p.N_theta) / std::log(1 / (1 - p.theta))));
  return res;
}

nlohmann::json to_json(const LiftResult& r) {
  nlohmann::json steps = nlohmann::json::array();
  for (const auto& s : r.steps) steps.push_back(to_json(s));
  return {{"schedule", to_json(r.schedule)},
          {"delta", r.delta},
          {"certified_t1", r.certified_t1},
          {"log_certified_t1", r.log_certified_t1},
          {"iteration_bound", r.iteration_bound},
          {"measured_t1", r.measured_t1},
          {"iterations", r.iterations},
          {"ok", r.ok},
          {"steps", steps},
          {"Q_total_terms", r.Q_total.q1.coeffs().size() + r.Q_total.q2.coeffs().size()}};
}

}  // namespace moire
