#include "moire/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include <boost/math/tools/minima.hpp>

namespace moire {

namespace {

std::vector<std::vector<int>> split_of(const MatrixXc& A, const SolveOptions& opt) {
  // a NaN entry would otherwise vanish from the entry graph
  if (!A.allFinite()) throw NumericalError("non-finite matrix entry");
  if (!opt.split) {
    std::vector<int> all(A.rows());
    for (int i = 0; i < int(A.rows()); ++i) all[i] = i;
    return {all};
  }
  return linalg::components(A, opt.drop_tol);
}

}  // namespace

SingularSpectrum singular_values(const MatrixXc& A, const SolveOptions& opt) {
  SingularSpectrum out;
  if (A.rows() != A.cols()) {
    const auto s = linalg::singular_values(A);
    out.values.assign(s.data(), s.data() + s.size());
    return out;
  }
  const auto blocks = split_of(A, opt);
  out.blocks = int(blocks.size());
  if (blocks.size() > 1) out.dropped_norm = linalg::dropped_norm(A, blocks);
  for (const auto& b : blocks) {
    const auto s = linalg::singular_values(blocks.size() == 1 ? A : linalg::principal_block(A, b));
    out.values.insert(out.values.end(), s.data(), s.data() + s.size());
  }
  std::sort(out.values.begin(), out.values.end());
  return out;
}

int count_small(const SingularSpectrum& spectrum, double tau0) {
  if (tau0 < 0) throw std::invalid_argument("tau0 must be >= 0");
  return int(std::upper_bound(spectrum.values.begin(), spectrum.values.end(), tau0) -
             spectrum.values.begin());
}

EigenCloud eigenvalues(const MatrixXc& A, const SolveOptions& opt) {
  EigenCloud out;
  const auto blocks = split_of(A, opt);
  out.blocks = int(blocks.size());
  if (blocks.size() > 1) out.dropped_norm = linalg::dropped_norm(A, blocks);
  for (const auto& b : blocks) {
    const auto w = linalg::eigenvalues(blocks.size() == 1 ? A : linalg::principal_block(A, b));
    out.values.insert(out.values.end(), w.data(), w.data() + w.size());
  }
  return out;
}

int count_small_sparse(const SparseXc& A, double tau) {
  int total = 0;
  for (const auto& b : linalg::components(A))
    total += linalg::count_below_inertia(linalg::principal_block(A, b), tau);
  return total;
}

Region Region::disc(cplx center, double radius) {
  if (!(radius > 0)) throw std::invalid_argument("disc radius must be positive");
  Region r;
  r.disc_ = true;
  r.center_ = center;
  r.radius_ = radius;
  return r;
}

Region Region::polygon(std::vector<cplx> vertices) {
  Region r;
  r.disc_ = false;
  r.vertices_ = std::move(vertices);
  if (r.vertices_.size() < 3 || !(r.area() > 0))
    throw std::invalid_argument("polygon needs >= 3 vertices and positive area");
  return r;
}

double Region::area() const {
  if (disc_) return kPi * radius_ * radius_;
  double a = 0;
  const std::size_t n = vertices_.size();
  for (std::size_t i = 0; i < n; ++i) {
    const cplx p = vertices_[i], q = vertices_[(i + 1) % n];
    a += p.real() * q.imag() - q.real() * p.imag();
  }
  return std::abs(a) / 2;
}

bool Region::contains(cplx z) const {
  if (disc_) return std::abs(z - center_) <= radius_;
  const std::size_t n = vertices_.size();
  bool inside = false;
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const cplx a = vertices_[j], b = vertices_[i];
    // on-segment test
    const cplx ab = b - a, az = z - a;
    const double cross = ab.real() * az.imag() - ab.imag() * az.real();
    const double dot = ab.real() * az.real() + ab.imag() * az.imag();
    if (std::abs(cross) <= 1e-14 * std::max(1.0, std::norm(ab)) && dot >= 0 && dot <= std::norm(ab))
      return true;
    if ((a.imag() > z.imag()) != (b.imag() > z.imag())) {
      const double x = a.real() + (z.imag() - a.imag()) * ab.real() / ab.imag();
      if (z.real() < x) inside = !inside;
    }
  }
  return inside;
}

int count_in_region(const EigenCloud& cloud, const Region& region) {
  int c = 0;
  for (auto z : cloud.values) c += region.contains(z) ? 1 : 0;
  return c;
}

std::map<DualIndex, int> per_cell_counts(const EigenCloud& cloud, double h, double window,
                                         double corner_tol) {
  if (corner_tol < 0) corner_tol = 1e-6 * h;
  const auto& lat = MoireLattice::get();
  std::map<DualIndex, int> counts;
  const double lim = window * (1.0 + 1e-12);
  auto inside = [&](DualIndex g) {
    const cplx c = dual_point(g);
    return std::abs(c) <= lim && std::abs(c + lat.eta1) <= lim && std::abs(c + lat.eta2) <= lim &&
           std::abs(c + lat.eta1 + lat.eta2) <= lim;
  };
  for (auto g : enumerate_dual(window))
    if (inside(g)) counts[g] = 0;
  for (auto z : cloud.values) {
    auto it = counts.find(cell_of(z, h, corner_tol));
    if (it != counts.end()) ++it->second;
  }
  return counts;
}

double weyl_prediction(const Region& region, double h) {
  if (!(h > 0)) throw std::invalid_argument("weyl_prediction needs h > 0");
  const double twopih = 2.0 * kPi * h;
  return 2.0 * region.area() * MoireLattice::get().cell_area / (twopih * twopih);
}

ClusterReport cluster_check(const EigenCloud& cloud, double h, double window, double tol) {
  if (tol < 0) tol = 1e-6 * h;
  ClusterReport rep;
  std::vector<cplx> near;
  for (auto z : cloud.values)
    if (std::abs(z) <= h * (window + 1.0)) near.push_back(z);
  // union-find on pairwise distance
  std::vector<int> parent(near.size());
  for (std::size_t i = 0; i < near.size(); ++i) parent[i] = int(i);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (std::size_t i = 0; i < near.size(); ++i)
    for (std::size_t j = i + 1; j < near.size(); ++j)
      if (std::abs(near[i] - near[j]) <= tol) parent[find(int(i))] = find(int(j));
  std::map<int, std::vector<int>> clusters;
  for (std::size_t i = 0; i < near.size(); ++i) clusters[find(int(i))].push_back(int(i));

  std::map<DualIndex, int> attached;
  std::vector<bool> used(near.size(), false);
  for (const auto& [root, members] : clusters) {
    cplx centroid = 0;
    for (int i : members) centroid += near[i];
    centroid /= double(members.size());
    double u, v;
    dual_coords(centroid / h, u, v);
    const DualIndex g{int(std::lround(u)), int(std::lround(v))};
    bool close = true;
    for (int i : members) close = close && std::abs(near[i] - h * dual_point(g)) <= tol;
    if (close) {
      attached[g] += int(members.size());
      for (int i : members) used[i] = true;
    }
  }
  for (auto g : enumerate_dual(window)) {
    ++rep.clusters;
    const int mult = attached.count(g) ? attached[g] : 0;
    rep.multiplicity[g] = mult;
    if (mult != 2) ++rep.bad_multiplicity;
    std::vector<double> d;
    for (auto z : near) d.push_back(std::abs(z - h * dual_point(g)));
    if (d.size() >= 2) {
      std::partial_sort(d.begin(), d.begin() + 2, d.end());
      rep.max_radius = std::max(rep.max_radius, d[1] / h);
    } else {
      rep.max_radius = std::numeric_limits<double>::infinity();
    }
  }
  for (std::size_t i = 0; i < near.size(); ++i)
    if (!used[i] && std::abs(near[i]) <= h * window) rep.stray += 1;
  return rep;
}

cplx default_probe() {
  const auto& lat = MoireLattice::get();
  return (lat.eta1 + lat.eta2) / 3.0;
}

double magic_probe(double h, const FourierField& U, const MagicScanOptions& opt) {
  const cplx z0 = opt.z0 == 0.0 ? default_probe() : opt.z0;
  AssemblyConfig cfg{h, 0.0, h * z0, opt.cutoff_radius};
  const SparseXc A = assemble_sparse(cfg, U);
  double t1 = std::numeric_limits<double>::infinity();
  for (const auto& b : linalg::components(A)) {
    const MatrixXc B = MatrixXc(linalg::principal_block(A, b));
    t1 = std::min(t1, linalg::singular_values(B)(0));
  }
  return t1;
}

double refine_magic(double lo, double hi, const FourierField& U, const MagicScanOptions& opt) {
  // brent_find_minima resolves the abscissa to about 2^{1-bits} relative.
  const int bits = std::max(8, int(std::ceil(-std::log2(opt.xtol / std::max(hi, 1e-12)))) + 2);
  std::uintmax_t iters = 200;
  auto f = [&](double h) { return magic_probe(h, U, opt) / h; };
  return boost::math::tools::brent_find_minima(f, lo, hi, bits, iters).first;
}

MagicScanResult magic_scan(const std::vector<double>& h_grid, const FourierField& U,
                           const MagicScanOptions& opt) {
  MagicScanResult out;
  for (double h : h_grid) out.points.push_back({h, magic_probe(h, U, opt)});
  const std::size_t n = out.points.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double r = out.points[i].t1 / out.points[i].h;
    const bool left = i == 0 || r <= out.points[i - 1].t1 / out.points[i - 1].h;
    const bool right = i + 1 == n || r <= out.points[i + 1].t1 / out.points[i + 1].h;
    if (!(left && right) || n < 3) continue;
    const double lo = out.points[i == 0 ? 0 : i - 1].h;
    const double hi = out.points[i + 1 == n ? i : i + 1].h;
    const double hm = refine_magic(lo, hi, U, opt);
    const double ratio = magic_probe(hm, U, opt) / hm;
    if (ratio < opt.threshold) {
      out.candidates.push_back(hm);
      out.candidate_ratio.push_back(ratio);
    }
  }
  return out;
}

double band_floor(const std::vector<cplx>& k_samples,
                  const std::function<MatrixXc(cplx)>& assembler) {
  if (k_samples.empty()) throw std::invalid_argument("band_floor needs k samples");
  double m = std::numeric_limits<double>::infinity();
  for (auto k : k_samples) m = std::min(m, singular_values(assembler(k)).values.front());
  return m;
}

namespace {

double top_singular(const MatrixXc& X) {
  if (X.rows() == 0 || X.cols() == 0) return 0;
  const Eigen::SelfAdjointEigenSolver<MatrixXc> es(X.adjoint() * X, Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

// Columns of E live on the global rows `rows`; sup over unit lambda of the
// weighted norm is the top singular value of W E.
void accumulate(RegularityReport& rep, const MatrixXc& E, const std::vector<int>& rows,
                const std::vector<DualIndex>& modes, double s, double h) {
  const int M = int(modes.size());
  MatrixXc WE = E;
  std::vector<int> first, second;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const int j = rows[i] % M;
    WE.row(int(i)) *= std::pow(1.0 + h * h * double(modes[j].norm3()) / 3.0, (s + 1) / 2);
    (rows[i] < M ? first : second).push_back(int(i));
  }
  rep.N += int(E.cols());
  rep.ratio = std::max(rep.ratio, top_singular(WE));
  for (const auto* part : {&first, &second})
    rep.component_ratio = std::max(rep.component_ratio, top_singular(WE(*part, Eigen::all)));
}

}  // namespace

RegularityReport regularity_of_basis(const MatrixXc& E, const std::vector<DualIndex>& modes,
                                     double s, double h) {
  RegularityReport rep;
  std::vector<int> rows(E.rows());
  for (int i = 0; i < int(E.rows()); ++i) rows[i] = i;
  if (E.cols() > 0) accumulate(rep, E, rows, modes, s, h);
  return rep;
}

// Different blocks occupy disjoint rows, so the sup over the whole span is the
// largest of the per-block sups.
RegularityReport eigvec_regularity(const MatrixXc& A, const std::vector<DualIndex>& modes,
                                   double tau0, double s, double h) {
  RegularityReport rep;
  const auto blocks = linalg::components(A);
  for (const auto& b : blocks) {
    const auto d = linalg::svd(blocks.size() == 1 ? A : linalg::principal_block(A, b));
    int nb = 0;
    while (nb < d.s.size() && d.s(nb) <= tau0) ++nb;
    if (nb > 0) accumulate(rep, d.V.leftCols(nb), b, modes, s, h);
  }
  return rep;
}

RegularityReport eigvec_regularity_sparse(const SparseXc& A, const std::vector<DualIndex>& modes,
                                          double tau0, double s, double h, std::uint64_t seed) {
  RegularityReport rep;
  std::uint64_t bseed = seed;
  for (const auto& b : linalg::components(A)) {
    const SparseXc B = linalg::principal_block(A, b);
    const int nb = linalg::count_below_inertia(B, tau0);
    if (nb == 0) continue;
    const auto r = linalg::smallest_singular_sparse(B, nb, tau0 * tau0, ++bseed);
    accumulate(rep, r.V.leftCols(nb), b, modes, s, h);
  }
  return rep;
}

void write_cloud_csv(const EigenCloud& cloud, std::ostream& os) {
  os << "re,im\n";
  os.precision(17);
  for (auto z : cloud.values) os << z.real() << ',' << z.imag() << '\n';
}

void write_spectrum_csv(const SingularSpectrum& spec, std::ostream& os) {
  os << "index,t\n";
  os.precision(17);
  for (std::size_t i = 0; i < spec.values.size(); ++i) os << i + 1 << ',' << spec.values[i] << '\n';
}

}  // namespace moire
