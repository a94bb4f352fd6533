#include "moire/random.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <thread>

#include "moire/linalg.hpp"

namespace moire {

namespace {

std::mt19937_64 trial_stream(std::uint64_t seed, std::uint64_t trial) {
  std::seed_seq seq{std::uint32_t(seed), std::uint32_t(seed >> 32), std::uint32_t(trial),
                    std::uint32_t(trial >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace

std::vector<cplx> sample(const PerturbationLaw& law, std::uint64_t trial, int* proposals) {
  auto rng = trial_stream(law.seed, trial);
  std::vector<cplx> g(law.D);
  if (proposals) *proposals = 0;
  if (law.D == 0 || law.R == 0) {
    std::fill(g.begin(), g.end(), cplx(0));
    if (proposals) *proposals = 1;
    return g;
  }
  if (law.kind == LawKind::uniform) {
    std::normal_distribution<double> nd;
    double n2 = 0;
    for (auto& x : g) {
      x = cplx(nd(rng), nd(rng));
      n2 += std::norm(x);
    }
    std::uniform_real_distribution<double> ud;
    const double r = law.R * std::pow(ud(rng), 1.0 / (2.0 * double(law.D)));
    const double f = r / std::sqrt(n2);
    for (auto& x : g) x *= f;
    if (proposals) *proposals = 1;
    return g;
  }
  std::normal_distribution<double> nd(0.0, law.sigma / std::sqrt(2.0));
  const double R2 = law.R * law.R;
  for (int attempt = 1; attempt <= 10000; ++attempt) {
    double n2 = 0;
    for (auto& x : g) {
      x = cplx(nd(rng), nd(rng));
      n2 += std::norm(x);
    }
    if (n2 <= R2) {
      if (proposals) *proposals = attempt;
      return g;
    }
  }
  throw ConfigError("rejection rate above 0.9999: sigma is too large for the ball radius R");
}

double gradient_bound(const PerturbationLaw& law) {
  return law.kind == LawKind::gaussian ? 2 * law.R / (law.sigma * law.sigma) : 0.0;
}

AdmissibleBasis random_basis(const LiftSchedule& sc, double visible_radius) {
  return admissible_basis(sc.h, std::min(sc.L, sc.h * visible_radius));
}

PerturbationLaw make_law(const LiftSchedule& sc, std::size_t basis_dimension, const std::string& mode,
                         LawKind kind, double sigma, std::uint64_t seed) {
  PerturbationLaw law;
  law.D = 2 * basis_dimension;
  law.kind = kind;
  law.sigma = sigma;
  law.seed = seed;
  law.mode = mode;
  const auto& p = sc.params;
  if (mode == "theory")
    law.R = std::pow(sc.h, -2 - 5 * p.s / (p.s - 1 - p.epsilon));
  else if (mode == "physical")
    law.R = 10 * std::sqrt(double(law.D));
  else
    throw ConfigError("law mode must be theory or physical");
  const double g = gradient_bound(law);
  law.kappa4 = g > 1 ? std::log(g) / std::log(1 / sc.h) : 0.0;
  return law;
}

nlohmann::json to_json(const PerturbationLaw& law) {
  return {{"D", law.D},
          {"R", law.R},
          {"kind", law.kind == LawKind::gaussian ? "gaussian" : "uniform"},
          {"sigma", law.sigma},
          {"kappa4", law.kappa4},
          {"gradient_bound", gradient_bound(law)},
          {"seed", law.seed},
          {"mode", law.mode}};
}

TunnelingPotential random_potential(const std::vector<cplx>& gamma, const AdmissibleBasis& basis) {
  const std::size_t D = basis.dimension();
  if (gamma.size() != 2 * D) throw std::invalid_argument("gamma must have twice the basis dimension");
  std::vector<cplx> a(gamma.begin(), gamma.begin() + D), b(gamma.begin() + D, gamma.end());
  return assemble_Q(a, b, basis);
}

double epsilon0(double C, double tau0, double h) {
  if (!(h > 0 && h < 1) || !(tau0 > 0 && tau0 <= std::sqrt(h) * (1 + 1e-12)))
    throw std::invalid_argument("epsilon0 needs 0 < h < 1 and 0 < tau0 <= sqrt(h)");
  const double lh = std::log(1 / h);
  return C * (std::log(1 / tau0) + lh * lh) * (h + h * h * lh);
}

Threshold t1_threshold(double epsilon, double C, double tau0, int N) {
  if (!(epsilon > 0) || N < 1) throw std::invalid_argument("t1_threshold needs epsilon > 0 and N >= 1");
  Threshold t;
  t.log_value = std::log(epsilon) - std::log(8.0) - (N - 1) * std::log(C * tau0);
  t.value = std::exp(t.log_value);
  t.underflow = t.value == 0.0 || !std::isnormal(t.value);
  if (t.underflow) t.value = 0;
  return t;
}

nlohmann::json to_json(const MCConfig& c) {
  return {{"h", c.h},
          {"z", {c.z.real(), c.z.imag()}},
          {"k", {c.k.real(), c.k.imag()}},
          {"cutoff", c.cutoff},
          {"tau0", c.tau0},
          {"law", to_json(c.law)},
          {"trials", c.trials},
          {"first_trial", c.first_trial},
          {"threshold", c.threshold},
          {"threshold_rel", c.threshold_rel},
          {"coupling_scale", c.coupling_scale},
          {"basis_radius", c.basis_radius},
          {"drop_rel", c.drop_rel},
          {"C0", c.params.C0},
          {"C_L", c.params.C_L},
          {"kappa3", c.params.kappa3},
          {"kappa1_override", c.params.kappa1_override},
          {"s", c.params.s},
          {"epsilon", c.params.epsilon}};
}

nlohmann::json to_json(const TrialRecord& r) {
  nlohmann::json j = {{"trial", r.trial},     {"seed", r.seed},           {"gamma_norm", r.gamma_norm},
                      {"proposals", r.proposals}, {"t1", r.t1},           {"threshold", r.threshold},
                      {"pass", r.pass},       {"count", r.count}};
  if (!r.cells.empty()) {
    nlohmann::json cells = nlohmann::json::array();
    for (const auto& [g, c] : r.cells) cells.push_back({g.m, g.n, c});
    j["cells"] = cells;
  }
  if (!r.error.empty()) j["error"] = r.error;
  return j;
}

namespace {

struct Prepared {
  OperatorMatrix base;
  AdmissibleBasis basis;
  PerturbationLaw law;
  double coupling = 0;
};

Prepared prepare(const MCConfig& c) {
  Prepared p;
  const double tau0 = c.tau0 > 0 ? c.tau0 : std::sqrt(c.h);
  const LiftSchedule sc = make_schedule(c.h, tau0, 0, c.params);
  p.base = assemble({c.h, c.k, c.z, c.cutoff}, c.U);
  p.basis = random_basis(sc, c.basis_radius > 0 ? c.basis_radius : 2 * c.cutoff);
  p.law = c.law;
  if (p.law.D == 0 && p.law.R != 0) {
    const auto keep = p.law;
    p.law = make_law(sc, p.basis.dimension(), keep.mode, keep.kind, keep.sigma, keep.seed);
  }
  if (p.law.D != 0 && p.law.D != 2 * p.basis.dimension())
    throw ConfigError("law dimension does not match the random basis");
  p.coupling = c.coupling_scale * sc.delta(0) * std::pow(c.h, sc.kappa1);
  return p;
}

template <class F>
void run_trials(int trials, int threads, F&& body) {
  threads = std::max(1, std::min(threads, trials));
  if (threads == 1) {
    for (int i = 0; i < trials; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  for (int w = 0; w < threads; ++w)
    pool.emplace_back([&, w] {
      for (int i = w; i < trials; i += threads) body(i);
    });
  for (auto& t : pool) t.join();
}

MatrixXc trial_matrix(const Prepared& p, std::uint64_t trial, TrialRecord& rec) {
  rec.trial = trial;
  rec.seed = p.law.seed;
  if (p.law.D == 0) {
    rec.proposals = 1;
    return p.base.matrix;
  }
  const auto gamma = sample(p.law, trial, &rec.proposals);
  double n2 = 0;
  for (auto g : gamma) n2 += std::norm(g);
  rec.gamma_norm = std::sqrt(n2);
  const MatrixXc P = potential_matrix(random_potential(gamma, p.basis), p.base.modes);
  return p.base.matrix + p.coupling * P;
}

}  // namespace

PerturbedSample perturbed_sample(const MCConfig& config, std::uint64_t trial) {
  const Prepared p = prepare(config);
  PerturbedSample s;
  s.matrix = trial_matrix(p, trial, s.record);
  s.modes = p.base.modes;
  s.coupling = p.coupling;
  return s;
}

double pass_rate_at(const MCResult& r, double threshold) {
  int ok = 0, n = 0;
  for (const auto& t : r.trials) {
    if (!t.error.empty()) continue;
    ++n;
    if (t.t1 >= threshold) ++ok;
  }
  return n ? double(ok) / n : 0.0;
}

MCResult mc_smallest_singular(const MCConfig& c) {
  if (c.trials < 1) throw ConfigError("trials must be >= 1");
  const Prepared p = prepare(c);
  MCResult out;
  out.coupling = p.coupling;
  out.trials.resize(c.trials);
  run_trials(c.trials, c.threads, [&](int i) {
    auto& rec = out.trials[i];
    try {
      const MatrixXc A = trial_matrix(p, c.first_trial + i, rec);
      rec.t1 = linalg::smallest_singular_dense(A);
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      rec.error = e.what();
    }
  });
  std::vector<double> t;
  for (const auto& r : out.trials) {
    if (!r.error.empty()) {
      ++out.errors;
      continue;
    }
    t.push_back(r.t1);
  }
  out.failed = out.errors * 100 > c.trials;
  std::sort(t.begin(), t.end());
  for (double v : t) out.log_t1_sorted.push_back(std::log(v));
  if (!t.empty()) {
    const std::size_t n = t.size();
    out.median_t1 = n % 2 ? t[n / 2] : 0.5 * (t[n / 2 - 1] + t[n / 2]);
  }
  out.threshold = c.threshold > 0 ? c.threshold : c.threshold_rel * out.median_t1;
  for (auto& r : out.trials) {
    r.threshold = out.threshold;
    r.pass = r.error.empty() && r.t1 >= out.threshold;
  }
  out.pass_rate = pass_rate_at(out, out.threshold);
  return out;
}

WeylResult mc_weyl(const MCConfig& c, const Region& region, double window) {
  if (c.trials < 1) throw ConfigError("trials must be >= 1");
  const Prepared p = prepare(c);
  WeylResult out;
  out.coupling = p.coupling;
  out.prediction = weyl_prediction(region, c.h);
  out.trials.resize(c.trials);
  std::vector<double> dropped(c.trials, 0.0);
  run_trials(c.trials, c.threads, [&](int i) {
    auto& rec = out.trials[i];
    try {
      const MatrixXc A = trial_matrix(p, c.first_trial + i, rec);
      // z enters as a shift of the whole matrix; count eigenvalues of D^delta itself
      EigenCloud cloud = eigenvalues(A, {true, c.drop_rel * A.cwiseAbs().maxCoeff()});
      for (auto& v : cloud.values) v += c.z;
      dropped[i] = cloud.dropped_norm;
      rec.count = count_in_region(cloud, region);
      if (window > 0) rec.cells = per_cell_counts(cloud, c.h, window);
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      rec.error = e.what();
    }
  });
  std::vector<double> counts;
  for (const auto& r : out.trials) {
    if (!r.error.empty()) {
      ++out.errors;
      continue;
    }
    counts.push_back(r.count);
    for (const auto& [g, n] : r.cells)
      if (n != 2) out.cells_all_two = false;
  }
  out.failed = out.errors * 100 > c.trials;
  out.dropped_norm = *std::max_element(dropped.begin(), dropped.end());
  if (!counts.empty()) {
    double s = 0, s2 = 0;
    for (double v : counts) {
      s += v;
      s2 += v * v;
    }
    const double n = double(counts.size());
    out.mean = s / n;
    out.spread = std::sqrt(std::max(0.0, s2 / n - out.mean * out.mean));
    std::sort(counts.begin(), counts.end());
    const std::size_t m = counts.size();
    out.median = m % 2 ? counts[m / 2] : 0.5 * (counts[m / 2 - 1] + counts[m / 2]);
  }
  return out;
}

double fit_exponent(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("fit_exponent needs >= 2 points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = double(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double a = std::log(x[i]), b = std::log(y[i]);
    sx += a;
    sy += b;
    sxx += a * a;
    sxy += a * b;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace moire
