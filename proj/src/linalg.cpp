#include "moire/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <tuple>

#include <Eigen/SparseCholesky>

#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>

namespace moire::linalg {

namespace {

void check_info(int info, const char* what) {
  if (info != 0) throw NumericalError(std::string(what) + " failed, info = " + std::to_string(info));
}

void check_finite(const MatrixXc& A, const char* what) {
  if (!A.allFinite()) throw NumericalError(std::string(what) + ": non-finite input");
}

struct UnionFind {
  std::vector<int> p;
  explicit UnionFind(int n) : p(n) { std::iota(p.begin(), p.end(), 0); }
  int find(int x) {
    while (p[x] != x) x = p[x] = p[p[x]];
    return x;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) p[std::max(a, b)] = std::min(a, b);
  }
};

std::vector<std::vector<int>> groups(UnionFind& uf, int n) {
  std::vector<int> slot(n, -1);
  std::vector<std::vector<int>> out;
  for (int i = 0; i < n; ++i) {
    const int r = uf.find(i);
    if (slot[r] < 0) {
      slot[r] = int(out.size());
      out.emplace_back();
    }
    out[slot[r]].push_back(i);
  }
  return out;
}

MatrixXc random_block(int n, int p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  MatrixXc X(n, p);
  for (int c = 0; c < p; ++c)
    for (int r = 0; r < n; ++r) X(r, c) = cplx(nd(rng), nd(rng));
  return X;
}

MatrixXc orthonormalize(const MatrixXc& Y) {
  Eigen::HouseholderQR<MatrixXc> qr(Y);
  return qr.householderQ() * MatrixXc::Identity(Y.rows(), Y.cols());
}

}  // namespace

VectorXd singular_values(const MatrixXc& A) {
  check_finite(A, "singular_values");
  const int m = int(A.rows()), n = int(A.cols());
  const int k = std::min(m, n);
  VectorXd s(k);
  if (k == 0) return s;
  MatrixXc a = A;
  const int info = LAPACKE_zgesdd(LAPACK_COL_MAJOR, 'N', m, n, a.data(), m, s.data(), nullptr, 1,
                                  nullptr, 1);
  check_info(info, "zgesdd");
  std::reverse(s.data(), s.data() + k);
  return s;
}

SVD svd(const MatrixXc& A) {
  check_finite(A, "svd");
  const int m = int(A.rows()), n = int(A.cols());
  const int k = std::min(m, n);
  SVD r;
  r.s.resize(k);
  r.U.resize(m, k);
  MatrixXc vt(k, n);
  if (k == 0) {
    r.V.resize(n, 0);
    return r;
  }
  MatrixXc a = A;
  // zgesdd with vectors returned a wrong factorization on nearly singular
  // Galerkin matrices; zgesvd is slower but reliable here
  std::vector<double> superb(std::max(1, k - 1));
  const int info = LAPACKE_zgesvd(LAPACK_COL_MAJOR, 'S', 'S', m, n, a.data(), m, r.s.data(),
                                  r.U.data(), m, vt.data(), k, superb.data());
  check_info(info, "zgesvd");
  r.V = vt.adjoint();
  std::reverse(r.s.data(), r.s.data() + k);
  r.U = r.U.rowwise().reverse().eval();
  r.V = r.V.rowwise().reverse().eval();
  return r;
}

SVD svd_blocked(const MatrixXc& A) {
  check_finite(A, "svd");
  const auto blocks = components(A);
  if (blocks.size() <= 1) return svd(A);
  const int n = int(A.rows());
  std::vector<SVD> parts;
  std::vector<std::tuple<double, int, int>> order;  // value, block, column
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    parts.push_back(svd(principal_block(A, blocks[b])));
    for (int j = 0; j < parts.back().s.size(); ++j) order.emplace_back(parts.back().s(j), int(b), j);
  }
  std::stable_sort(order.begin(), order.end(),
                   [](const auto& x, const auto& y) { return std::get<0>(x) < std::get<0>(y); });
  SVD r;
  r.s.resize(n);
  r.U = MatrixXc::Zero(n, n);
  r.V = MatrixXc::Zero(n, n);
  for (int c = 0; c < n; ++c) {
    const auto [v, b, j] = order[c];
    r.s(c) = v;
    const auto& idx = blocks[b];
    for (std::size_t i = 0; i < idx.size(); ++i) {
      r.U(idx[i], c) = parts[b].U(int(i), j);
      r.V(idx[i], c) = parts[b].V(int(i), j);
    }
  }
  return r;
}

VectorXc eigenvalues(const MatrixXc& A) {
  check_finite(A, "eigenvalues");
  const int n = int(A.rows());
  VectorXc w(n);
  if (n == 0) return w;
  MatrixXc a = A;
  const int info =
      LAPACKE_zgeev(LAPACK_COL_MAJOR, 'N', 'N', n, a.data(), n, w.data(), nullptr, 1, nullptr, 1);
  check_info(info, "zgeev");
  return w;
}

HermitianEig hermitian_eig(const MatrixXc& H, bool vectors) {
  check_finite(H, "hermitian_eig");
  const int n = int(H.rows());
  HermitianEig r;
  r.w.resize(n);
  if (n == 0) return r;
  MatrixXc a = H;
  const int info = LAPACKE_zheevd(LAPACK_COL_MAJOR, vectors ? 'V' : 'N', 'U', n, a.data(), n, r.w.data());
  check_info(info, "zheevd");
  if (vectors) r.V = std::move(a);
  return r;
}

std::vector<std::vector<int>> components(const MatrixXc& A, double drop_tol) {
  const int n = int(A.rows());
  UnionFind uf(n);
  for (int c = 0; c < n; ++c)
    for (int r = 0; r < n; ++r)
      if (r != c && std::abs(A(r, c)) > drop_tol) uf.unite(r, c);
  return groups(uf, n);
}

std::vector<std::vector<int>> components(const SparseXc& A) {
  const int n = int(A.rows());
  UnionFind uf(n);
  for (int c = 0; c < A.outerSize(); ++c)
    for (SparseXc::InnerIterator it(A, c); it; ++it)
      if (it.value() != 0.0) uf.unite(int(it.row()), int(it.col()));
  return groups(uf, n);
}

double dropped_norm(const MatrixXc& A, const std::vector<std::vector<int>>& blocks) {
  std::vector<int> label(A.rows());
  for (std::size_t b = 0; b < blocks.size(); ++b)
    for (int i : blocks[b]) label[i] = int(b);
  double acc = 0;
  for (int c = 0; c < A.cols(); ++c)
    for (int r = 0; r < A.rows(); ++r)
      if (label[r] != label[c]) acc += std::norm(A(r, c));
  return std::sqrt(acc);
}

MatrixXc principal_block(const MatrixXc& A, const std::vector<int>& idx) {
  const int k = int(idx.size());
  MatrixXc B(k, k);
  for (int c = 0; c < k; ++c)
    for (int r = 0; r < k; ++r) B(r, c) = A(idx[r], idx[c]);
  return B;
}

SparseXc principal_block(const SparseXc& A, const std::vector<int>& idx) {
  std::vector<int> pos(A.rows(), -1);
  for (std::size_t i = 0; i < idx.size(); ++i) pos[idx[i]] = int(i);
  std::vector<Eigen::Triplet<cplx>> trips;
  for (std::size_t ci = 0; ci < idx.size(); ++ci)
    for (SparseXc::InnerIterator it(A, idx[ci]); it; ++it)
      if (pos[it.row()] >= 0) trips.emplace_back(pos[it.row()], int(ci), it.value());
  SparseXc B(int(idx.size()), int(idx.size()));
  B.setFromTriplets(trips.begin(), trips.end());
  B.makeCompressed();
  return B;
}

int count_below_inertia(const SparseXc& A, double tau) {
  SparseXc S = SparseXc(A.adjoint()) * A;
  SparseXc I(S.rows(), S.cols());
  I.setIdentity();
  S -= (tau * tau) * I;
  Eigen::SimplicialLDLT<SparseXc, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt(S);
  if (ldlt.info() != Eigen::Success) throw NumericalError("LDL^T factorization failed (zero pivot)");
  const VectorXc d = ldlt.vectorD();
  int neg = 0;
  for (int i = 0; i < d.size(); ++i) {
    if (!std::isfinite(d(i).real())) throw NumericalError("LDL^T produced a non-finite pivot");
    if (d(i).real() < 0) ++neg;
  }
  return neg;
}

SubspaceResult smallest_singular_sparse(const SparseXc& A, int count, double shift,
                                        std::uint64_t seed, double tol, int max_iter) {
  SubspaceResult res;
  const int n = int(A.cols());
  if (count <= 0) {
    res.V.resize(n, 0);
    return res;
  }
  if (count > n) throw std::invalid_argument("smallest_singular_sparse: count exceeds dimension");
  const int p = std::min(n, count + std::max(8, count / 3));
  SparseXc S = SparseXc(A.adjoint()) * A;
  SparseXc Sh = S;
  SparseXc I(n, n);
  I.setIdentity();
  Sh += shift * I;
  Eigen::SimplicialLLT<SparseXc, Eigen::Lower, Eigen::AMDOrdering<int>> llt(Sh);
  if (llt.info() != Eigen::Success) throw NumericalError("Cholesky of A^*A + shift failed");
  double normS = 0;  // max absolute row sum bounds ||S||_2
  {
    Eigen::VectorXd rs = Eigen::VectorXd::Zero(n);
    for (int c = 0; c < S.outerSize(); ++c)
      for (SparseXc::InnerIterator it(S, c); it; ++it) rs(it.row()) += std::abs(it.value());
    normS = std::max(rs.maxCoeff(), 1e-300);
  }
  MatrixXc X = orthonormalize(random_block(n, p, seed));
  for (int it = 1; it <= max_iter; ++it) {
    MatrixXc Y = orthonormalize(llt.solve(X));
    MatrixXc SY = S * Y;
    MatrixXc T = Y.adjoint() * SY;
    T = (0.5 * (T + T.adjoint())).eval();
    Eigen::SelfAdjointEigenSolver<MatrixXc> es(T);
    X = Y * es.eigenvectors();
    MatrixXc R = SY * es.eigenvectors() - X * es.eigenvalues().asDiagonal();
    double worst = 0;
    for (int j = 0; j < count; ++j) worst = std::max(worst, R.col(j).norm());
    res.iterations = it;
    res.residual = worst;
    if (worst <= tol * normS) {
      res.t.resize(count);
      for (int j = 0; j < count; ++j) res.t(j) = std::sqrt(std::max(0.0, es.eigenvalues()(j)));
      res.V = X.leftCols(count);
      return res;
    }
  }
  throw NumericalError("smallest_singular_sparse did not converge");
}

double smallest_singular_dense(const MatrixXc& A, int block, double tol, int max_iter) {
  check_finite(A, "smallest_singular_dense");
  const int n = int(A.rows());
  if (n == 0 || A.cols() != n) throw std::invalid_argument("smallest_singular_dense needs a square matrix");
  block = std::min(block, n);
  Eigen::PartialPivLU<MatrixXc> lu(A);
  const double floor = 1e-15 * A.cwiseAbs().rowwise().sum().maxCoeff();
  MatrixXc X = orthonormalize(random_block(n, block, 7));
  double prev = -1;
  for (int it = 0; it < max_iter; ++it) {
    MatrixXc Y = lu.solve(MatrixXc(lu.adjoint().solve(X)));
    if (!Y.allFinite()) return singular_values(A)(0);
    X = orthonormalize(Y);
    MatrixXc B = A * X;
    Eigen::SelfAdjointEigenSolver<MatrixXc> es(B.adjoint() * B);
    const double t = std::sqrt(std::max(0.0, es.eigenvalues()(0)));
    X = X * es.eigenvectors();
    if (prev >= 0 && std::abs(t - prev) <= tol * t + floor) return t;
    prev = t;
  }
  return prev;
}

}  // namespace moire::linalg
