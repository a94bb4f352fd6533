#include "moire/operator.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace moire {

static_assert(std::endian::native == std::endian::little, "binary export assumes a little-endian host");

ModeIndex::ModeIndex(const std::vector<DualIndex>& modes) {
  for (auto g : modes) bound_ = std::max({bound_, std::abs(g.m), std::abs(g.n)});
  const int side = 2 * bound_ + 1;
  table_.assign(std::size_t(side) * side, -1);
  for (std::size_t i = 0; i < modes.size(); ++i)
    table_[std::size_t(modes[i].m + bound_) * side + (modes[i].n + bound_)] = int(i);
}

int ModeIndex::find(DualIndex g) const {
  if (std::abs(g.m) > bound_ || std::abs(g.n) > bound_) return -1;
  return table_[std::size_t(g.m + bound_) * (2 * bound_ + 1) + (g.n + bound_)];
}

namespace {

// Emits the Galerkin entries of multiplication by f from component `from`
// into component `to` (1-based), scaled by `scale`.
template <class Sink>
void emit_multiplication(const FourierField& f, const std::vector<DualIndex>& modes,
                         const ModeIndex& idx, int to, int from, cplx scale, Sink&& sink) {
  const int M = int(modes.size());
  long reach = 0;  // max norm3 of a difference of two modes
  for (auto g : modes) reach = std::max(reach, 4 * g.norm3());
  for (const auto& [g, c0] : f.coeffs()) {
    if (g.norm3() > reach) continue;
    const cplx c = f.plane(g) * scale;
    if (c == 0.0) continue;
    for (int j = 0; j < M; ++j) {
      const int i = idx.find(modes[j] + g);
      if (i >= 0) sink((to - 1) * M + i, (from - 1) * M + j, c);
    }
  }
}

template <class Sink>
void emit_operator(const AssemblyConfig& cfg, const FourierField& U,
                   const std::vector<DualIndex>& modes, Sink&& sink) {
  const int M = int(modes.size());
  const ModeIndex idx(modes);
  for (int j = 0; j < M; ++j) {
    const cplx d = cfg.h * (dual_point(modes[j]) + cfg.k) - cfg.z;
    sink(j, j, d);
    sink(M + j, M + j, d);
  }
  emit_multiplication(U, modes, idx, 1, 2, 1.0, sink);
  emit_multiplication(reflect(U), modes, idx, 2, 1, 1.0, sink);
}

void check_config(const AssemblyConfig& cfg) {
  if (!(cfg.h > 0)) throw std::invalid_argument("assembly needs h > 0");
  if (!(cfg.cutoff_radius >= 0)) throw std::invalid_argument("cutoff radius must be >= 0");
}

}  // namespace

OperatorMatrix assemble(const AssemblyConfig& config, const FourierField& U) {
  check_config(config);
  OperatorMatrix op;
  op.config = config;
  op.modes = enumerate_dual(config.cutoff_radius);
  if (op.modes.empty()) throw std::invalid_argument("empty mode set");
  const int n = 2 * int(op.modes.size());
  op.matrix = MatrixXc::Zero(n, n);
  emit_operator(config, U, op.modes, [&](int r, int c, cplx v) { op.matrix(r, c) += v; });
  return op;
}

SparseXc assemble_sparse(const AssemblyConfig& config, const FourierField& U,
                         std::vector<DualIndex>* modes_out) {
  check_config(config);
  auto modes = enumerate_dual(config.cutoff_radius);
  if (modes.empty()) throw std::invalid_argument("empty mode set");
  const int n = 2 * int(modes.size());
  std::vector<Eigen::Triplet<cplx>> trips;
  trips.reserve(std::size_t(n) * (1 + U.coeffs().size()));
  emit_operator(config, U, modes, [&](int r, int c, cplx v) { trips.emplace_back(r, c, v); });
  SparseXc S(n, n);
  S.setFromTriplets(trips.begin(), trips.end());
  S.makeCompressed();
  if (modes_out) *modes_out = std::move(modes);
  return S;
}

MatrixXc potential_matrix(const TunnelingPotential& Q, const std::vector<DualIndex>& modes) {
  const int M = int(modes.size());
  MatrixXc P = MatrixXc::Zero(2 * M, 2 * M);
  const ModeIndex idx(modes);
  auto sink = [&](int r, int c, cplx v) { P(r, c) += v; };
  emit_multiplication(Q.q1, modes, idx, 1, 2, 1.0, sink);
  emit_multiplication(Q.q2, modes, idx, 2, 1, -1.0, sink);
  return P;
}

double PerturbedOperator::coupling() const { return delta * std::pow(base.config.h, kappa1); }

PerturbedOperator perturb(const OperatorMatrix& base, const TunnelingPotential& Q, double delta,
                          double kappa1) {
  PerturbedOperator p;
  p.base = base;
  p.Q = Q;
  p.delta = delta;
  p.kappa1 = kappa1;
  p.matrix = base.matrix;
  const double c = p.coupling();
  if (c != 0.0) p.matrix += c * potential_matrix(Q, base.modes);
  return p;
}

namespace {

struct GPerm {
  std::vector<int> target;  // pi(r)
  std::vector<double> sign;
};

GPerm g_permutation(const std::vector<DualIndex>& modes) {
  const int M = int(modes.size());
  const ModeIndex idx(modes);
  GPerm p;
  p.target.resize(2 * M);
  p.sign.resize(2 * M);
  for (int j = 0; j < M; ++j) {
    const int nj = idx.find(-modes[j]);
    if (nj < 0) throw std::invalid_argument("G needs a negation-closed mode list");
    p.target[j] = M + nj;  // (G u)_1(g) = conj(u_2(-g))
    p.sign[j] = 1.0;
    p.target[M + j] = nj;  // (G u)_2(g) = -conj(u_1(-g))
    p.sign[M + j] = -1.0;
  }
  return p;
}

}  // namespace

MatrixXc apply_G(const MatrixXc& A, const std::vector<DualIndex>& modes) {
  const GPerm p = g_permutation(modes);
  const int n = int(A.rows());
  if (n != 2 * int(modes.size()) || A.cols() != n) throw std::invalid_argument("apply_G: size mismatch");
  // G A G = -(G A G^{-1}) since G^2 = -1
  MatrixXc B(n, n);
  for (int c = 0; c < n; ++c)
    for (int r = 0; r < n; ++r)
      B(r, c) = -p.sign[r] * p.sign[c] * std::conj(A(p.target[r], p.target[c]));
  return B;
}

VectorXc apply_G_vector(const VectorXc& u, const std::vector<DualIndex>& modes) {
  const GPerm p = g_permutation(modes);
  VectorXc v(u.size());
  for (int r = 0; r < u.size(); ++r) v(r) = p.sign[r] * std::conj(u(p.target[r]));
  return v;
}

MatrixXc chiral_hamiltonian(const MatrixXc& A) {
  const int r = int(A.rows()), c = int(A.cols());
  MatrixXc H = MatrixXc::Zero(r + c, r + c);
  H.topRightCorner(r, c) = A;
  H.bottomLeftCorner(c, r) = A.adjoint();
  return H;
}

nlohmann::json matrix_to_json(const MatrixXc& A) {
  nlohmann::json data = nlohmann::json::array();
  for (int r = 0; r < A.rows(); ++r)
    for (int c = 0; c < A.cols(); ++c) data.push_back({A(r, c).real(), A(r, c).imag()});
  return {{"rows", A.rows()}, {"cols", A.cols()}, {"data", data}};
}

MatrixXc matrix_from_json(const nlohmann::json& j) {
  const int rows = j.at("rows").get<int>(), cols = j.at("cols").get<int>();
  const auto& d = j.at("data");
  if (int(d.size()) != rows * cols) throw std::invalid_argument("matrix JSON: data size mismatch");
  MatrixXc A(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      const auto& e = d[std::size_t(r) * cols + c];
      A(r, c) = cplx(e.at(0).get<double>(), e.at(1).get<double>());
    }
  return A;
}

void write_matrix_binary(const MatrixXc& A, std::ostream& os) {
  for (int r = 0; r < A.rows(); ++r)
    for (int c = 0; c < A.cols(); ++c) {
      const double v[2] = {A(r, c).real(), A(r, c).imag()};
      os.write(reinterpret_cast<const char*>(v), sizeof v);
    }
}

MatrixXc read_matrix_binary(std::istream& is, int rows, int cols) {
  MatrixXc A(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      double v[2];
      if (!is.read(reinterpret_cast<char*>(v), sizeof v)) throw std::runtime_error("short matrix file");
      A(r, c) = cplx(v[0], v[1]);
    }
  return A;
}

}  // namespace moire
