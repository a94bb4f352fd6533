#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "moire/linalg.hpp"
#include "moire/operator.hpp"

namespace moire {

// How dense spectral routines treat block structure. With split = true the
// connected components of the entry graph are solved separately; entries of
// modulus <= drop_tol are ignored when forming the graph (0 keeps it exact).
struct SolveOptions {
  bool split = true;
  double drop_tol = 0.0;
};

struct SingularSpectrum {
  std::vector<double> values;  // ascending t_1 <= t_2 <= ...
  int blocks = 1;
  double dropped_norm = 0;  // size of the couplings ignored by the block split
};

struct EigenCloud {
  std::vector<cplx> values;
  int blocks = 1;
  double dropped_norm = 0;
};

SingularSpectrum singular_values(const MatrixXc& A, const SolveOptions& opt = {});
int count_small(const SingularSpectrum& spectrum, double tau0);
EigenCloud eigenvalues(const MatrixXc& A, const SolveOptions& opt = {});

// #{t_j <= tau} for a sparse operator, from per-block LDL^T inertia. Exact
// ties t_j = tau are resolved by the factorization's sign and are measure zero.
int count_small_sparse(const SparseXc& A, double tau);

class Region {
 public:
  static Region disc(cplx center, double radius);
  static Region polygon(std::vector<cplx> vertices);
  bool contains(cplx z) const;  // boundary counts as inside
  double area() const;
  bool is_disc() const { return disc_; }
  cplx center() const { return center_; }
  double radius() const { return radius_; }
  const std::vector<cplx>& vertices() const { return vertices_; }

 private:
  bool disc_ = true;
  cplx center_ = 0;
  double radius_ = 0;
  std::vector<cplx> vertices_;
};

int count_in_region(const EigenCloud& cloud, const Region& region);

// Counts per half-open cell h*C_g for all cells whose four corners lie in
// |z| <= h*window. Points within corner_tol of a corner h*g go to the cell
// anchored at g; corner_tol < 0 selects 1e-6 h.
std::map<DualIndex, int> per_cell_counts(const EigenCloud& cloud, double h, double window,
                                         double corner_tol = -1.0);

// 2 |Omega| cell_area / (2 pi h)^2.
double weyl_prediction(const Region& region, double h);

struct ClusterReport {
  int clusters = 0;         // lattice points h*g examined
  int bad_multiplicity = 0; // lattice points whose cluster does not hold exactly 2 values
  double max_radius = 0;    // max distance of a clustered value to its lattice point, over h
  double stray = 0;         // eigenvalues in the window not attached to any lattice point
  std::map<DualIndex, int> multiplicity;
};
// Groups eigenvalues by union-find on pairwise distance <= tol and checks that
// every lattice point h*g with |g| <= window carries one cluster of total
// multiplicity 2 within tol. tol < 0 selects 1e-6 h.
ClusterReport cluster_check(const EigenCloud& cloud, double h, double window, double tol = -1.0);

struct ScanPoint {
  double h;
  double t1;
};
struct MagicScanResult {
  std::vector<ScanPoint> points;
  std::vector<double> candidates;            // refined magic h values
  std::vector<double> candidate_ratio;       // t1/h at each refined candidate
};
struct MagicScanOptions {
  double cutoff_radius = 12;
  double threshold = 1e-4;  // on t1 / h
  double xtol = 1e-6;       // refinement tolerance in h
  cplx z0 = 0;              // 0 selects (eta1 + eta2)/3
};
// t1 of D_h - h z0 at k = 0.
double magic_probe(double h, const FourierField& U, const MagicScanOptions& opt);
MagicScanResult magic_scan(const std::vector<double>& h_grid, const FourierField& U,
                           const MagicScanOptions& opt = {});
// Minimizes t1(h)/h on [lo, hi] to xtol.
double refine_magic(double lo, double hi, const FourierField& U, const MagicScanOptions& opt);
cplx default_probe();

// min over k of t_1(D_h(k)); assembler maps k to the matrix.
double band_floor(const std::vector<cplx>& k_samples,
                  const std::function<MatrixXc(cplx)>& assembler);

struct RegularityReport {
  double ratio = 0;            // sup ||sum lambda_j e_j||_{H^{s+1}_h} / ||lambda||
  double component_ratio = 0;  // larger of the two per-component sups
  int N = 0;
};
// e_j are the L^2-normalized right singular vectors with t_j <= tau0. The
// coefficient vector v of a unit-L^2 function has sum |v|^2 = 1, so the s = -1
// ratio is 1.
RegularityReport eigvec_regularity(const MatrixXc& A, const std::vector<DualIndex>& modes,
                                   double tau0, double s, double h);
// Same for a sparse operator, computing the e_j per block by subspace iteration.
RegularityReport eigvec_regularity_sparse(const SparseXc& A, const std::vector<DualIndex>& modes,
                                          double tau0, double s, double h, std::uint64_t seed = 1);
// The measure itself, for a given orthonormal column set E.
RegularityReport regularity_of_basis(const MatrixXc& E, const std::vector<DualIndex>& modes,
                                     double s, double h);

void write_cloud_csv(const EigenCloud& cloud, std::ostream& os);
void write_spectrum_csv(const SingularSpectrum& spec, std::ostream& os);

}  // namespace moire
