#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "moire/operator.hpp"

namespace moire {

// Raised when LAPACK or an iterative solver fails; never a silent NaN.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace linalg {

using Eigen::VectorXd;

// All returned singular values are ascending.
VectorXd singular_values(const MatrixXc& A);

struct SVD {
  VectorXd s;   // ascending
  MatrixXc U;   // left vectors, column j pairs with s(j)
  MatrixXc V;   // right vectors
};
SVD svd(const MatrixXc& A);
// Full SVD of a square matrix assembled from the SVDs of its connected
// components; ties keep component order.
SVD svd_blocked(const MatrixXc& A);

VectorXc eigenvalues(const MatrixXc& A);

struct HermitianEig {
  VectorXd w;  // ascending
  MatrixXc V;
};
HermitianEig hermitian_eig(const MatrixXc& H, bool vectors);

// Index sets of the connected components of the graph with an edge (i, j)
// whenever |A_ij| > drop_tol or |A_ji| > drop_tol. Components are listed by
// smallest index; indices inside a component ascend.
std::vector<std::vector<int>> components(const MatrixXc& A, double drop_tol = 0.0);
std::vector<std::vector<int>> components(const SparseXc& A);

// Frobenius norm of the entries coupling different components (what the
// block solve ignores).
double dropped_norm(const MatrixXc& A, const std::vector<std::vector<int>>& blocks);

MatrixXc principal_block(const MatrixXc& A, const std::vector<int>& idx);
SparseXc principal_block(const SparseXc& A, const std::vector<int>& idx);

// Number of eigenvalues of A^*A strictly below tau^2, from the inertia of an
// LDL^T factorization of A^*A - tau^2.
int count_below_inertia(const SparseXc& A, double tau);

struct SubspaceResult {
  VectorXd t;    // ascending singular values
  MatrixXc V;    // right singular vectors
  int iterations = 0;
  double residual = 0;  // max ||A^*A v - t^2 v||
};
// The `count` smallest singular triplets of a sparse A by inverse subspace
// iteration on (A^*A + shift)^{-1} with Rayleigh-Ritz.
SubspaceResult smallest_singular_sparse(const SparseXc& A, int count, double shift,
                                        std::uint64_t seed = 1, double tol = 1e-9,
                                        int max_iter = 2000);

// Smallest singular value of a dense square A via LU and inverse subspace iteration.
double smallest_singular_dense(const MatrixXc& A, int block = 4, double tol = 1e-12,
                               int max_iter = 500);

}  // namespace linalg
}  // namespace moire
