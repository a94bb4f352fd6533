#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "moire/fields.hpp"
#include "moire/lifting.hpp"
#include "moire/spectral.hpp"

namespace moire {

enum class LawKind { gaussian, uniform };

// Truncated law on the complex ball B(0, R) of C^D. For the gaussian kind the
// density is exp(-|gamma|^2 / sigma^2), so E|gamma_i|^2 = sigma^2.
struct PerturbationLaw {
  std::size_t D = 0;
  double R = 0;
  LawKind kind = LawKind::gaussian;
  double sigma = 1;
  double kappa4 = 0;  // exponent with ||grad phi|| <= h^{-kappa4}, recorded
  std::uint64_t seed = 1;
  std::string mode = "custom";  // "theory", "physical" or "custom"
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Independent stream per (law.seed, trial). Throws ConfigError when 10^4
// consecutive proposals fall outside the ball.
std::vector<cplx> sample(const PerturbationLaw& law, std::uint64_t trial, int* proposals = nullptr);
// sup of ||grad phi|| on the ball: 2R / sigma^2 (gaussian), 0 (uniform).
double gradient_bound(const PerturbationLaw& law);

// The admissible basis at L from the schedule, clipped to |g| <= visible_radius
// (the modes a Galerkin matrix of cutoff visible_radius / 2 can see).
AdmissibleBasis random_basis(const LiftSchedule& schedule, double visible_radius);
// D = 2 * basis dimension. "theory" takes the lower end C h^{-2-5s/(s-1-eps)}
// of the R window with C = 1, "physical" R = 10 sqrt(D).
PerturbationLaw make_law(const LiftSchedule& schedule, std::size_t basis_dimension,
                         const std::string& mode, LawKind kind, double sigma, std::uint64_t seed);
nlohmann::json to_json(const PerturbationLaw& law);

// Q_gamma; the first half of gamma feeds q1, the second q2.
TunnelingPotential random_potential(const std::vector<cplx>& gamma, const AdmissibleBasis& basis);

double epsilon0(double C, double tau0, double h);

struct Threshold {
  double log_value = 0;
  double value = 0;  // exp(log_value), 0 on underflow
  bool underflow = false;
};
Threshold t1_threshold(double epsilon, double C, double tau0, int N);

struct MCConfig {
  FourierField U = standard_U();
  double h = 0.5;
  cplx z = 0;
  cplx k = 0;
  double cutoff = 8;
  double tau0 = 0;           // 0 selects sqrt(h)
  LiftParams params;
  PerturbationLaw law;
  int trials = 10;
  std::uint64_t first_trial = 0;
  // Absolute threshold when > 0; otherwise threshold_rel times the median t1.
  double threshold = 0;
  double threshold_rel = 1e-3;
  int threads = 1;
  // Multiplies delta h^kappa1; 1 is the law's own scaling.
  double coupling_scale = 1;
  // Clip radius of the random basis; 0 selects 2 * cutoff.
  double basis_radius = 0;
  // Weyl runs: entries below drop_rel * max |entry| are ignored by the block
  // split of the eigenvalue solve. 0 keeps the solve exact.
  double drop_rel = 0;
};
nlohmann::json to_json(const MCConfig& c);

struct TrialRecord {
  std::uint64_t trial = 0;
  std::uint64_t seed = 0;
  double gamma_norm = 0;
  int proposals = 0;
  double t1 = 0;
  double threshold = 0;
  bool pass = false;
  int count = -1;  // eigenvalues in the region (Weyl runs)
  std::map<DualIndex, int> cells;
  std::string error;
};
nlohmann::json to_json(const TrialRecord& r);

struct MCResult {
  std::vector<TrialRecord> trials;
  std::vector<double> log_t1_sorted;  // empirical CDF support
  double median_t1 = 0;
  double threshold = 0;
  double pass_rate = 0;
  double coupling = 0;  // delta h^kappa1 actually applied
  int errors = 0;
  bool failed = false;  // more than 1% of trials errored
};
// D^delta - z = D_h - z + coupling Q_gamma for one trial of the config's law.
struct PerturbedSample {
  MatrixXc matrix;
  std::vector<DualIndex> modes;
  double coupling = 0;
  TrialRecord record;
};
PerturbedSample perturbed_sample(const MCConfig& config, std::uint64_t trial);

// Pass rate at another threshold from the same trials.
double pass_rate_at(const MCResult& r, double threshold);
MCResult mc_smallest_singular(const MCConfig& config);

struct WeylResult {
  std::vector<TrialRecord> trials;
  double mean = 0, median = 0, spread = 0;
  double prediction = 0;
  bool cells_all_two = true;
  int errors = 0;
  bool failed = false;
  double coupling = 0;
  double dropped_norm = 0;  // largest over trials, see MCConfig::drop_rel
};
// window: per-cell table radius in units of h (cells with corners |z| <= h window).
WeylResult mc_weyl(const MCConfig& config, const Region& region, double window);

// Least-squares slope of log y against log x.
double fit_exponent(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace moire
