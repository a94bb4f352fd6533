#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "moire/grushin.hpp"
#include "moire/io.hpp"
#include "moire/lifting.hpp"
#include "moire/linalg.hpp"
#include "moire/random.hpp"
#include "moire/spectral.hpp"

using namespace moire;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

json defaults_for(const std::string& cmd) {
  json d = {{"h", 0.5},     {"cutoff", 8.0},  {"z_re", 0.0},     {"z_im", 0.0},
            {"k_re", 0.0},  {"k_im", 0.0},    {"tau0", 0.0},     {"seed", 1},
            {"trials", 1},  {"out", "out"},   {"threads", 1},    {"U", "standard"},
            {"C0", 10.0},   {"C_L", 2.0},     {"theta", 0.2},    {"N_theta", 8},
            {"s", 2.0},     {"epsilon", 0.1}, {"eta", 0.1},      {"kappa3", 0.0},
            {"kappa1_override", 0.0},         {"kappa2_override", 0.0},
            {"law", "physical"},              {"law_kind", "gaussian"},
            {"sigma", 1.0}, {"coupling_scale", 1.0},             {"basis_radius", 0.0},
            {"drop_rel", 0.0}};
  if (cmd == "spectrum") d.update({{"window", 3.0}});
  if (cmd == "magic-scan")
    d.update({{"h_min", 0.3}, {"h_max", 2.0}, {"h_steps", 35}, {"cutoff", 12.0}, {"threshold", 1e-4}, {"xtol", 1e-6}});
  if (cmd == "perturb") d.update({{"delta", 0.0}, {"order", 1}});
  if (cmd == "weyl") d.update({{"radius", 0.25}, {"center_re", 0.0}, {"center_im", 0.0}, {"window", 0.0}});
  if (cmd == "lift") d.update({{"h", 0.45021}, {"grid", 64}, {"pairing", "svd"}, {"z_probe", true}});
  if (cmd == "mc")
    d.update({{"h", 0.45021}, {"threshold", 0.0}, {"threshold_rel", 1e-3}, {"weyl_radius", 0.0}, {"window", 0.0}, {"z_probe", true}});
  return d;
}

// Flags > environment (MOIRE_<KEY>) > config file > defaults.
json resolve(const std::string& cmd, const std::string& config_path, const json& flags) {
  json cfg = defaults_for(cmd);
  if (!config_path.empty()) {
    std::ifstream is(config_path);
    if (!is) throw UsageError("cannot read config file " + config_path);
    json file;
    try {
      file = json::parse(is);
    } catch (const json::exception& e) {
      throw UsageError(std::string("config file: ") + e.what());
    }
    if (!file.is_object()) throw UsageError("config file must hold a JSON object");
    for (auto& [k, v] : file.items()) {
      if (!cfg.contains(k)) throw UsageError("unknown config key: " + k);
      cfg[k] = v;
    }
  }
  for (auto& [k, v] : cfg.items()) {
    std::string env = "MOIRE_" + k;
    for (auto& c : env) c = char(std::toupper(static_cast<unsigned char>(c == '-' ? '_' : c)));
    if (const char* e = std::getenv(env.c_str())) {
      try {
        v = v.is_string() ? json(std::string(e)) : json::parse(e);
      } catch (const json::exception&) {
        throw UsageError("bad value in " + env);
      }
    }
  }
  for (auto& [k, v] : flags.items()) cfg[k] = v;
  cfg["command"] = cmd;
  return cfg;
}

struct Context {
  json cfg;
  std::string hash;
  std::uint64_t seed = 1;
  fs::path out;

  void write_json(const std::string& name, json body) const {
    body["config_hash"] = hash;
    body["seed"] = seed;
    body["config"] = cfg;
    write_text(out / name, body.dump(2) + "\n");
  }
  void write_csv(const std::string& name, const std::string& body) const {
    write_text(out / name, stamp_line(hash, seed) + body);
  }
};

double num(const json& c, const char* k) { return c.at(k).get<double>(); }
int integer(const json& c, const char* k) { return c.at(k).get<int>(); }

FourierField potential_U(const json& c) {
  const auto u = c.at("U").get<std::string>();
  if (u == "standard") return standard_U();
  if (u == "zero") return FourierField{};
  throw UsageError("U must be standard or zero");
}

LiftParams lift_params(const json& c) {
  LiftParams p;
  p.s = num(c, "s");
  p.epsilon = num(c, "epsilon");
  p.eta = num(c, "eta");
  p.theta = num(c, "theta");
  p.N_theta = integer(c, "N_theta");
  p.C0 = num(c, "C0");
  p.C_L = num(c, "C_L");
  p.kappa3 = num(c, "kappa3");
  p.kappa1_override = num(c, "kappa1_override");
  p.kappa2_override = num(c, "kappa2_override");
  if (c.contains("grid")) p.grid = integer(c, "grid");
  if (c.contains("pairing")) {
    const auto s = c.at("pairing").get<std::string>();
    if (s != "svd" && s != "chiral") throw UsageError("pairing must be svd or chiral");
    p.pairing = s == "svd" ? Pairing::svd : Pairing::chiral;
  }
  return p;
}

MCConfig mc_config(const Context& ctx) {
  const auto& c = ctx.cfg;
  MCConfig m;
  m.U = potential_U(c);
  m.h = num(c, "h");
  m.z = {num(c, "z_re"), num(c, "z_im")};
  m.k = {num(c, "k_re"), num(c, "k_im")};
  m.cutoff = num(c, "cutoff");
  m.tau0 = num(c, "tau0");
  m.params = lift_params(c);
  m.trials = integer(c, "trials");
  m.threads = integer(c, "threads");
  m.coupling_scale = num(c, "coupling_scale");
  m.basis_radius = num(c, "basis_radius");
  m.drop_rel = num(c, "drop_rel");
  if (c.contains("threshold")) m.threshold = num(c, "threshold");
  if (c.contains("threshold_rel")) m.threshold_rel = num(c, "threshold_rel");
  const auto kind = c.at("law_kind").get<std::string>();
  if (kind != "gaussian" && kind != "uniform") throw UsageError("law_kind must be gaussian or uniform");
  m.law.kind = kind == "gaussian" ? LawKind::gaussian : LawKind::uniform;
  m.law.sigma = num(c, "sigma");
  m.law.seed = ctx.seed;
  m.law.mode = c.at("law").get<std::string>();
  m.law.R = m.law.mode == "none" ? 0.0 : 1.0;  // nonzero R is replaced by make_law
  return m;
}

std::string cells_csv(const std::map<DualIndex, int>& a, const std::map<DualIndex, int>& b) {
  std::ostringstream os;
  os << "m,n,count_unperturbed,count_perturbed\n";
  for (const auto& [g, n] : a) {
    auto it = b.find(g);
    os << g.m << ',' << g.n << ',' << n << ',' << (it == b.end() ? -1 : it->second) << '\n';
  }
  return os.str();
}

std::string cloud_csv(const EigenCloud& c) {
  std::ostringstream os;
  write_cloud_csv(c, os);
  return os.str();
}

int cmd_spectrum(const Context& ctx) {
  const auto& c = ctx.cfg;
  const double h = num(c, "h");
  const double window = num(c, "window");
  const FourierField U = potential_U(c);
  const auto op = assemble({h, cplx(num(c, "k_re"), num(c, "k_im")), 0.0, num(c, "cutoff")}, U);
  const EigenCloud cloud = eigenvalues(op.matrix);
  MCConfig m = mc_config(ctx);
  m.z = 0;
  EigenCloud pert = cloud;
  double coupling = 0;
  if (m.law.R != 0) {
    const PerturbedSample ps = perturbed_sample(m, 0);
    coupling = ps.coupling;
    pert = eigenvalues(ps.matrix);
  }
  const auto cu = per_cell_counts(cloud, h, window);
  const auto cp = per_cell_counts(pert, h, window);
  const ClusterReport rep = cluster_check(cloud, h, window);
  ctx.write_csv("cloud_unperturbed.csv", cloud_csv(cloud));
  ctx.write_csv("cloud_perturbed.csv", cloud_csv(pert));
  ctx.write_csv("cells.csv", cells_csv(cu, cp));
  bool all_two = true;
  for (const auto& [g, n] : cp) all_two = all_two && n == 2;
  ctx.write_json("spectrum.json", {{"clusters", rep.clusters},
                                   {"bad_multiplicity", rep.bad_multiplicity},
                                   {"max_cluster_radius_over_h", rep.max_radius},
                                   {"coupling", coupling},
                                   {"perturbed_cells_all_two", all_two}});
  return 0;
}

int cmd_magic_scan(const Context& ctx) {
  const auto& c = ctx.cfg;
  const FourierField U = potential_U(c);
  const int steps = integer(c, "h_steps");
  if (steps < 2) throw UsageError("h_steps must be >= 2");
  std::vector<double> grid;
  for (int i = 0; i < steps; ++i) grid.push_back(num(c, "h_min") + (num(c, "h_max") - num(c, "h_min")) * i / (steps - 1));
  MagicScanOptions o;
  o.cutoff_radius = num(c, "cutoff");
  o.threshold = num(c, "threshold");
  o.xtol = num(c, "xtol");
  const auto r = magic_scan(grid, U, o);
  std::ostringstream os;
  os << "h,t1,ratio\n";
  os.precision(17);
  for (const auto& p : r.points) os << p.h << ',' << p.t1 << ',' << p.t1 / p.h << '\n';
  ctx.write_csv("scan.csv", os.str());
  ctx.write_json("candidates.json", {{"candidates", r.candidates}, {"ratio", r.candidate_ratio}});
  return 0;
}

int cmd_perturb(const Context& ctx) {
  const auto& c = ctx.cfg;
  const double h = num(c, "h");
  const cplx z{num(c, "z_re"), num(c, "z_im")};
  const double tau0 = num(c, "tau0") > 0 ? num(c, "tau0") : std::sqrt(h);
  const auto op = assemble({h, cplx(num(c, "k_re"), num(c, "k_im")), z, num(c, "cutoff")}, potential_U(c));
  const GrushinBlocks b = grushin_build(op.matrix, tau0, Pairing::svd);
  const double r = num(c, "basis_radius") > 0 ? num(c, "basis_radius") : 2.0;
  const AdmissibleBasis basis = admissible_basis(h, h * r);
  PerturbationLaw law;
  law.D = 2 * basis.dimension();
  law.R = 10 * std::sqrt(double(law.D));
  law.sigma = num(c, "sigma");
  law.seed = ctx.seed;
  law.mode = "physical";
  MatrixXc Q = potential_matrix(random_potential(sample(law, 0), basis), op.modes);
  Q /= linalg::singular_values(Q).maxCoeff();
  const double delta = num(c, "delta") > 0 ? num(c, "delta") : b.t_next() / 4;
  const auto pe = perturb_effective(b, op.matrix, Q, delta, integer(c, "order"));
  const auto rep = sandwich_check(b, pe.exact, op.matrix + delta * Q);
  json j = to_json(rep);
  j["N"] = b.N;
  j["delta"] = delta;
  j["t_next"] = b.t_next();
  j["neumann_residual"] = pe.residual_bound;
  j["first_order_bound"] = pe.first_order_bound;
  j["log_det"] = log_det_effective(pe.exact);
  ctx.write_json("perturb.json", j);
  return 0;
}

int cmd_weyl(const Context& ctx) {
  const auto& c = ctx.cfg;
  MCConfig m = mc_config(ctx);
  m.z = 0;
  const Region reg = Region::disc({num(c, "center_re"), num(c, "center_im")}, num(c, "radius"));
  const WeylResult w = mc_weyl(m, reg, num(c, "window"));
  std::string lines;
  for (const auto& t : w.trials) {
    json j = to_json(t);
    j["config_hash"] = ctx.hash;
    lines += j.dump() + "\n";
  }
  write_text(ctx.out / "weyl_trials.jsonl", lines);
  ctx.write_json("weyl.json", {{"mean", w.mean},
                               {"median", w.median},
                               {"spread", w.spread},
                               {"prediction", w.prediction},
                               {"cells_all_two", w.cells_all_two},
                               {"coupling", w.coupling},
                               {"dropped_norm", w.dropped_norm},
                               {"errors", w.errors}});
  return w.failed ? 3 : 0;
}

int cmd_lift(const Context& ctx) {
  const auto& c = ctx.cfg;
  const double h = num(c, "h");
  const double tau0 = num(c, "tau0") > 0 ? num(c, "tau0") : std::sqrt(h);
  const cplx z = cplx(num(c, "z_re"), num(c, "z_im")) + (c.at("z_probe").get<bool>() ? h * default_probe() : 0.0);
  const auto op = assemble({h, cplx(num(c, "k_re"), num(c, "k_im")), z, num(c, "cutoff")}, potential_U(c));
  const LiftResult r = lift_iterate(op.matrix, op.modes, h, tau0, lift_params(c));
  json audit = to_json(r);
  audit["z"] = {z.real(), z.imag()};
  ctx.write_json("audit.json", audit);
  std::ostringstream os;
  os << "index,t_before,t_after\n";
  os.precision(17);
  for (int i = 0; i < r.t_before.size(); ++i) os << i + 1 << ',' << r.t_before(i) << ',' << r.t_after(i) << '\n';
  ctx.write_csv("singular_values.csv", os.str());
  return r.ok ? 0 : 3;
}

int cmd_mc(const Context& ctx) {
  const auto& c = ctx.cfg;
  MCConfig m = mc_config(ctx);
  if (c.at("z_probe").get<bool>()) m.z += m.h * default_probe();
  const MCResult r = mc_smallest_singular(m);
  std::string lines;
  for (const auto& t : r.trials) {
    json j = to_json(t);
    j["config_hash"] = ctx.hash;
    lines += j.dump() + "\n";
  }
  write_text(ctx.out / "trials.jsonl", lines);
  std::ostringstream os;
  os << "log_t1,cdf\n";
  os.precision(17);
  for (std::size_t i = 0; i < r.log_t1_sorted.size(); ++i)
    os << r.log_t1_sorted[i] << ',' << double(i + 1) / r.log_t1_sorted.size() << '\n';
  ctx.write_csv("cdf.csv", os.str());
  json summary = {{"trials", r.trials.size()},  {"median_t1", r.median_t1}, {"threshold", r.threshold}, {"pass_rate", r.pass_rate},
                  {"coupling", r.coupling},   {"errors", r.errors}};
  if (num(c, "weyl_radius") > 0) {
    MCConfig wm = m;
    wm.z = 0;
    const WeylResult w = mc_weyl(wm, Region::disc(0, num(c, "weyl_radius")), num(c, "window"));
    summary["weyl"] = {{"mean", w.mean}, {"median", w.median}, {"spread", w.spread},
                       {"prediction", w.prediction}, {"cells_all_two", w.cells_all_two}};
  }
  ctx.write_json("mc.json", summary);
  return r.failed ? 3 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Galerkin experiments for the chiral moire Dirac operator"};
  app.require_subcommand(1);
  std::map<std::string, std::function<int(const Context&)>> handlers = {
      {"spectrum", cmd_spectrum}, {"magic-scan", cmd_magic_scan}, {"perturb", cmd_perturb},
      {"weyl", cmd_weyl},         {"lift", cmd_lift},             {"mc", cmd_mc}};
  std::string config_path, out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<double> h, cutoff, tau0;
  std::optional<int> trials;
  std::vector<std::string> sets;
  for (const auto& [name, fn] : handlers) {
    auto* sub = app.add_subcommand(name);
    sub->set_help_flag("--help", "print this help");  // -h would clash with --h
    sub->add_option("--config", config_path, "JSON config file");
    sub->add_option("--seed", seed, "master seed");
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--h", h);
    sub->add_option("--cutoff", cutoff, "dual radius of the Galerkin truncation");
    sub->add_option("--tau0", tau0);
    sub->add_option("--trials", trials);
    sub->add_option("--set", sets, "key=value override (JSON value)");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  const std::string cmd = app.get_subcommands().front()->get_name();
  try {
    json flags = json::object();
    if (seed) flags["seed"] = *seed;
    if (!out_dir.empty()) flags["out"] = out_dir;
    if (h) flags["h"] = *h;
    if (cutoff) flags["cutoff"] = *cutoff;
    if (tau0) flags["tau0"] = *tau0;
    if (trials) flags["trials"] = *trials;
    const json base = resolve(cmd, config_path, json::object());
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw UsageError("--set expects key=value");
      const std::string k = s.substr(0, eq), v = s.substr(eq + 1);
      if (!base.contains(k)) throw UsageError("unknown key in --set: " + k);
      try {
        flags[k] = base[k].is_string() ? json(v) : json::parse(v);
      } catch (const json::exception&) {
        throw UsageError("bad value in --set " + s);
      }
    }
    Context ctx;
    ctx.cfg = resolve(cmd, config_path, flags);
    ctx.seed = ctx.cfg.at("seed").get<std::uint64_t>();
    ctx.out = ctx.cfg.at("out").get<std::string>();
    // where the files go and how many threads run do not change the results
    json hashed = ctx.cfg;
    hashed.erase("out");
    hashed.erase("threads");
    ctx.hash = config_hash(hashed);
    return handlers.at(cmd)(ctx);
  } catch (const UsageError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  }
}
