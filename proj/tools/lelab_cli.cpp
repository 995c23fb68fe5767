// Experiment runner: reproducible ground-state, landscape, projection, and
// continuation-sweep runs with CSV/JSON outputs.

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "lelab/annulus_solver.hpp"
#include "lelab/ansatz.hpp"
#include "lelab/errors.hpp"
#include "lelab/greens.hpp"
#include "lelab/ground_state.hpp"
#include "lelab/numerics.hpp"
#include "lelab/reduced_energy.hpp"
#include "lelab/version.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace lelab;

namespace {

struct RunConfig {
  int N = 5;
  double p = 1.2;
  std::vector<double> eps_list{1e-2, 3e-3, 1e-3, 3e-4, 1e-4};
  std::string d = "saddle";  // or a positive real
  double r_max = 160.0;
  std::size_t n_grid = 8000;
  std::size_t n_annulus = 32000;
  std::size_t n_htilde = 8000;
  double nodes_per_log = 1800.0;
  double kappa = 0.05;
  double C_lem21 = 10.0;
  double delta = 0.05;
  std::string output_dir = "out";
  std::uint64_t seed = 20240901;

  std::string canonical() const {
    std::ostringstream os;
    os.precision(17);
    os << "problem.N=" << N << "\nproblem.p=" << p << "\nsweep.eps_list=";
    for (std::size_t i = 0; i < eps_list.size(); ++i) os << (i ? "," : "") << eps_list[i];
    os << "\nsweep.d=" << d << "\ngroundstate.r_max=" << r_max << "\ngroundstate.n=" << n_grid
       << "\nansatz.n_annulus=" << n_annulus << "\ngreens.n=" << n_htilde
       << "\nsweep.nodes_per_log=" << nodes_per_log << "\nansatz.kappa=" << kappa
       << "\ngreens.C_lem21=" << C_lem21 << "\nansatz.delta=" << delta << "\nrun.seed=" << seed
       << "\n";
    return os.str();
  }
};

std::uint64_t fnv1a64(const std::string& data) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string config_hash(const RunConfig& cfg) {
  std::ostringstream os;
  os << std::hex << fnv1a64(cfg.canonical());
  return os.str();
}

// Flat key/value configuration with [section] headers.
std::map<std::string, std::string> parse_ini(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::invalid_config, "cannot open config file " + path.string());
  std::map<std::string, std::string> kv;
  std::string line, section;
  while (std::getline(in, line)) {
    const auto hash = line.find_first_of("#;");
    if (hash != std::string::npos) line.erase(hash);
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[' && line.back() == ']') {
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      fail(ErrorCode::invalid_config, "expected key = value, got: " + line);
    const std::string key = trim(line.substr(0, eq));
    kv[section.empty() ? key : section + "." + key] = trim(line.substr(eq + 1));
  }
  return kv;
}

std::vector<double> parse_eps_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.find_first_not_of(" \t") == std::string::npos) continue;
    out.push_back(std::stod(item));
  }
  if (out.empty()) fail(ErrorCode::invalid_config, "eps_list is empty");
  return out;
}

RunConfig load_config(const std::string& path) {
  RunConfig cfg;
  if (path.empty()) return cfg;
  const auto kv = parse_ini(path);
  auto get = [&](const char* key, auto& slot) {
    const auto it = kv.find(key);
    if (it == kv.end()) return;
    using T = std::decay_t<decltype(slot)>;
    if constexpr (std::is_same_v<T, int>)
      slot = std::stoi(it->second);
    else if constexpr (std::is_same_v<T, double>)
      slot = std::stod(it->second);
    else if constexpr (std::is_same_v<T, std::size_t>)
      slot = static_cast<std::size_t>(std::stoull(it->second));
    else if constexpr (std::is_same_v<T, std::uint64_t>)
      slot = std::stoull(it->second);
    else
      slot = it->second;
  };
  get("problem.N", cfg.N);
  get("problem.p", cfg.p);
  get("groundstate.r_max", cfg.r_max);
  get("groundstate.n", cfg.n_grid);
  get("greens.n", cfg.n_htilde);
  get("greens.C_lem21", cfg.C_lem21);
  get("ansatz.n_annulus", cfg.n_annulus);
  get("ansatz.kappa", cfg.kappa);
  get("ansatz.delta", cfg.delta);
  get("sweep.d", cfg.d);
  get("sweep.nodes_per_log", cfg.nodes_per_log);
  get("run.seed", cfg.seed);
  get("run.output_dir", cfg.output_dir);
  if (const auto it = kv.find("sweep.eps_list"); it != kv.end())
    cfg.eps_list = parse_eps_list(it->second);
  return cfg;
}

struct Workspace {
  RunConfig cfg;
  std::string hash;
  CriticalPair pair;
  GroundState gs;
  double h_tilde_0 = 0.0;
  EnergyConstants ec;
  SaddlePoint saddle;
  double d_value = 0.0;  // resolved d ("saddle" -> d_tilde)
};

Workspace prepare(const RunConfig& cfg) {
  // Validate the exponent bundle before any heavy computation.
  const CriticalPair pair = critical_pair(cfg.N, cfg.p);
  Workspace ws{cfg,         config_hash(cfg), pair, solve_limit_system(pair, cfg.r_max, cfg.n_grid),
               0.0,         {},               {},   0.0};
  ws.h_tilde_0 = h_tilde_center(pair, cfg.n_htilde);
  ws.ec = energy_constants(ws.gs, ws.h_tilde_0);
  ws.saddle = saddle_point(ws.ec, ws.gs);
  if (cfg.d == "saddle") {
    ws.d_value = ws.saddle.d_tilde;
  } else {
    ws.d_value = std::stod(cfg.d);
    if (!(ws.d_value > 0.0)) fail(ErrorCode::invalid_config, "d must be positive or 'saddle'");
  }
  return ws;
}

std::ofstream open_output(const Workspace& ws, const std::string& name) {
  fs::create_directories(ws.cfg.output_dir);
  const fs::path path = fs::path(ws.cfg.output_dir) / name;
  std::ofstream os(path, std::ios::binary);
  if (!os) fail(ErrorCode::io_failure, "cannot write " + path.string());
  os << "# lelab " << kVersion << " config=" << ws.hash << "\n";
  return os;
}

void write_json(const Workspace& ws, const std::string& name, const json& body) {
  std::ofstream os = open_output(ws, name);
  os << body.dump(2) << "\n";
}

json provenance(const Workspace& ws) {
  return json{{"version", kVersion},
              {"config_hash", ws.hash},
              {"N", ws.pair.N},
              {"p", ws.pair.p},
              {"q", ws.pair.q},
              {"alpha", ws.pair.alpha}};
}

// Curvature at the origin recovered from the integrated profile, as in the
// verification suite: fit du/r = 2 u2 + 4 u4 r^2 near zero.
double fitted_second_derivative(const GroundState& gs, const std::vector<double>& dprofile) {
  double s11 = 0, s1x = 0, sxx = 0, s1y = 0, sxy = 0;
  for (std::size_t i = 1; i < gs.grid->size() && gs.grid->nodes[i] <= 0.25; ++i) {
    const double r = gs.grid->nodes[i];
    const double x = r * r;
    const double z = dprofile[i] / r;
    s11 += 1;
    s1x += x;
    sxx += x * x;
    s1y += z;
    sxy += x * z;
  }
  const double det = s11 * sxx - s1x * s1x;
  return (sxx * s1y - s1x * sxy) / det;
}

int cmd_groundstate(const Workspace& ws) {
  {
    std::ofstream os = open_output(ws, "groundstate.csv");
    write_profiles_csv(ws.gs, os);
  }
  const MomentIntegrals m = moment_integrals(ws.gs);
  const double s = ws.pair.decay_u();
  const double tail_ratio =
      std::pow(ws.gs.b_tail, ws.pair.p) / (ws.gs.a_tail * s * ws.pair.cofactor());
  const double upp0 = fitted_second_derivative(ws.gs, ws.gs.du);
  const double vpp0 = fitted_second_derivative(ws.gs, ws.gs.dv);

  json rec = provenance(ws);
  rec["v0"] = ws.gs.shooting_v0;
  rec["a_tail"] = ws.gs.a_tail;
  rec["b_tail"] = ws.gs.b_tail;
  rec["int_U_q1"] = m.int_U_q1;
  rec["int_U_q"] = m.int_U_q;
  rec["tail_identity_ratio"] = tail_ratio;  // b^p / (a ((N-2)p-2)(N-(N-2)p))
  rec["curvature_u_residual"] = -ws.pair.N * upp0 - std::pow(ws.gs.shooting_v0, ws.pair.p);
  rec["curvature_v_residual"] = -ws.pair.N * vpp0 - 1.0;
  write_json(ws, "constants.json", rec);

  std::cout << "groundstate: v0 = " << ws.gs.shooting_v0 << ", a = " << ws.gs.a_tail
            << ", b = " << ws.gs.b_tail << ", tail identity ratio = " << tail_ratio << "\n";
  return 0;
}

int cmd_landscape(const Workspace& ws) {
  const HessianSignature sig = hessian_signature(ws.ec, ws.gs);
  const LandscapePoint at_saddle = theta(ws.ec, ws.gs, ws.saddle.d_tilde, ws.saddle.tau_tilde);
  double grad_norm_saddle = 0.0;
  for (double g : at_saddle.grad) grad_norm_saddle = std::max(grad_norm_saddle, std::abs(g));

  {
    std::ofstream os = open_output(ws, "landscape.csv");
    os << "d";
    for (int l = 1; l <= ws.pair.N; ++l) os << ",tau_" << l;
    os << ",theta,grad_norm\n";
    os.precision(17);
    const double d0 = ws.saddle.d_tilde;
    for (int i = 0; i < 41; ++i) {
      const double d = d0 * std::pow(4.0, (i - 20) / 20.0);
      for (int j = 0; j < 9; ++j) {
        std::vector<double> tau(ws.pair.N, 0.0);
        tau[0] = 0.2 * j;
        const LandscapePoint lp = theta(ws.ec, ws.gs, d, tau);
        double gn = 0.0;
        for (double g : lp.grad) gn = std::max(gn, std::abs(g));
        os << d;
        for (int l = 0; l < ws.pair.N; ++l) os << ',' << lp.tau[l];
        os << ',' << lp.theta << ',' << gn << '\n';
      }
    }
  }

  // Seeded spot check of the analytic gradient against finite differences.
  std::mt19937_64 rng(ws.cfg.seed);
  std::uniform_real_distribution<double> dpick(0.25 * ws.saddle.d_tilde, 4.0 * ws.saddle.d_tilde);
  std::uniform_real_distribution<double> tpick(-1.0, 1.0);
  double fd_worst = 0.0;
  for (int t = 0; t < 20; ++t) {
    const double d = dpick(rng);
    std::vector<double> tau(ws.pair.N);
    for (auto& c : tau) c = tpick(rng);
    const LandscapePoint lp = theta(ws.ec, ws.gs, d, tau);
    double scale = 0.0, diff = 0.0;
    {
      const double h = 1e-6 * std::max(1.0, d);
      const double fd =
          (theta(ws.ec, ws.gs, d + h, tau).theta - theta(ws.ec, ws.gs, d - h, tau).theta) /
          (2.0 * h);
      scale = std::max(scale, std::abs(lp.grad[0]));
      diff = std::max(diff, std::abs(lp.grad[0] - fd));
    }
    for (int l = 0; l < ws.pair.N; ++l) {
      const double h = 1e-6;
      std::vector<double> up = tau, dn = tau;
      up[l] += h;
      dn[l] -= h;
      const double fd =
          (theta(ws.ec, ws.gs, d, up).theta - theta(ws.ec, ws.gs, d, dn).theta) / (2.0 * h);
      scale = std::max(scale, std::abs(lp.grad[1 + l]));
      diff = std::max(diff, std::abs(lp.grad[1 + l] - fd));
    }
    fd_worst = std::max(fd_worst, diff / scale);
  }

  json rec = provenance(ws);
  rec["c0"] = ws.ec.c0;
  rec["c1"] = ws.ec.c1;
  rec["c2"] = ws.ec.c2;
  rec["h_tilde_0"] = ws.h_tilde_0;
  rec["d_tilde"] = ws.saddle.d_tilde;
  rec["d_newton"] = ws.saddle.d_newton;
  rec["newton_ok"] = ws.saddle.newton_ok;
  rec["theta_at_saddle"] = at_saddle.theta;
  rec["grad_norm_at_saddle"] = grad_norm_saddle;
  rec["hessian_dd"] = sig.dd_entry;
  rec["hessian_tau"] = sig.tau_entry;
  rec["eigenvalues"] = sig.eigenvalues;
  rec["signature"] = std::to_string(sig.n_pos) + "+," + std::to_string(sig.n_neg) + "-";
  rec["grad_fd_max_rel"] = fd_worst;
  write_json(ws, "saddle.json", rec);

  std::cout << "landscape: d~ = " << ws.saddle.d_tilde << ", signature " << sig.n_pos << "+,"
            << sig.n_neg << "-, grad at saddle = " << grad_norm_saddle << "\n";
  return 0;
}

int cmd_project(const Workspace& ws) {
  const double eps = ws.cfg.eps_list.front();
  const PuncturedBall hole(eps, ws.pair.N);
  const AnnulusMesh mesh = make_annulus_mesh(hole, ws.cfg.n_annulus);
  const BubbleParams params = make_bubble_params(ws.pair, eps, ws.d_value, {}, ws.cfg.delta);
  const ProjectedBubble pb = project_bubble(ws.gs, params, mesh);
  {
    std::ofstream os = open_output(ws, "projection.csv");
    write_projection_csv(pb, os);
  }
  const ReducedEnergyResult re = reduced_energy_numeric(ws.gs, pb);
  const KernelValue a_mid = compute_A(ws.gs, params, 0.5, ws.cfg.kappa, ws.cfg.C_lem21);

  json rec = provenance(ws);
  rec["eps"] = eps;
  rec["d"] = ws.d_value;
  rec["mu"] = params.mu;
  rec["ansatz_residual"] = ansatz_residual(ws.gs, pb);
  rec["reduced_energy"] = re.value;
  rec["cross_term_spread"] = re.spread;
  rec["A_at_half"] = a_mid.value;
  rec["A_at_half_error_bound"] = a_mid.error_bound;
  write_json(ws, "projection.json", rec);

  std::cout << "project: eps = " << eps << ", J = " << re.value
            << ", cross-term spread = " << re.spread << "\n";
  return 0;
}

int cmd_sweep(const Workspace& ws) {
  json rec = provenance(ws);
  const double predicted_rate = -ws.pair.alpha * ws.pair.N / (ws.pair.q + 1.0);
  const double predicted_energy = ws.pair.alpha * ws.pair.decay_u();

  SweepOptions opt;
  opt.nodes_per_log = ws.cfg.nodes_per_log;
  opt.delta = ws.cfg.delta;
  const SweepReport rep = continuation_sweep(ws.gs, ws.cfg.eps_list, ws.d_value, opt);

  {
    std::ofstream os = open_output(ws, "sweep.csv");
    write_sweep_csv(rep, ws.gs, os);
  }

  rec["d_init"] = ws.d_value;
  rec["c0"] = rep.c0;
  rec["points_converged"] = rep.results.size();
  json fails = json::array();
  for (const SweepFailure& f : rep.failures)
    fails.push_back(json{{"eps", f.epsilon}, {"message", f.message}});
  rec["failures"] = fails;
  rec["rate_slope_measured"] = rep.rate_fit.exponent;
  rec["rate_slope_predicted"] = predicted_rate;
  rec["rate_within_15pct"] = std::abs(rep.rate_fit.exponent / predicted_rate - 1.0) <= 0.15;
  rec["energy_slope_measured"] = rep.energy_fit.exponent;
  rec["energy_slope_predicted"] = predicted_energy;
  rec["energy_within_25pct"] =
      std::abs(rep.energy_fit.exponent / predicted_energy - 1.0) <= 0.25;
  write_json(ws, "report.json", rec);

  std::cout << "sweep: " << rep.results.size() << " points, rate slope " << rep.rate_fit.exponent
            << " (predicted " << predicted_rate << "), energy slope " << rep.energy_fit.exponent
            << " (predicted " << predicted_energy << ")\n";
  return rep.failures.empty() ? 0 : 1;
}

int cmd_report(const Workspace& ws) {
  // Re-derives the fit summary from an existing sweep.csv.
  const fs::path path = fs::path(ws.cfg.output_dir) / "sweep.csv";
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io_failure, "no sweep.csv under " + ws.cfg.output_dir);
  std::string line;
  std::getline(in, line);  // hash header
  std::getline(in, line);  // column header
  std::vector<std::pair<double, double>> rate_pts, energy_pts;
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> row;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    if (row.size() < 8) continue;
    rate_pts.emplace_back(row[0], row[1]);
    const double excess = row[7] - ws.ec.c0;
    if (excess > 0.0) energy_pts.emplace_back(row[0], excess);
  }
  const PowerLawFit rate = fit_power_law(rate_pts);
  const double predicted_rate = -ws.pair.alpha * ws.pair.N / (ws.pair.q + 1.0);
  const double predicted_energy = ws.pair.alpha * ws.pair.decay_u();

  json rec = provenance(ws);
  rec["source"] = path.string();
  rec["rate_slope_measured"] = rate.exponent;
  rec["rate_slope_predicted"] = predicted_rate;
  rec["rate_within_15pct"] = std::abs(rate.exponent / predicted_rate - 1.0) <= 0.15;
  if (energy_pts.size() >= 3) {
    const PowerLawFit energy = fit_power_law(energy_pts);
    rec["energy_slope_measured"] = energy.exponent;
    rec["energy_slope_predicted"] = predicted_energy;
    rec["energy_within_25pct"] =
        std::abs(energy.exponent / predicted_energy - 1.0) <= 0.25;
  }
  write_json(ws, "report.json", rec);
  std::cout << "report: rate slope " << rate.exponent << " (predicted " << predicted_rate
            << ")\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Blow-up laboratory for the critical Lane-Emden system on a punctured ball"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  bool dry_run = false;
  app.add_option("--config", config_path, "configuration file (ini key = value)");
  app.add_option("--out", out_dir, "output directory (overrides run.output_dir)");
  app.add_flag("--dry-run", dry_run, "print the resolved configuration and exit");

  auto* sc_gs = app.add_subcommand("groundstate", "solve the limit system and export profiles");
  auto* sc_land = app.add_subcommand("landscape", "reduced-energy landscape and saddle data");
  auto* sc_proj = app.add_subcommand("project", "projected bubble on the annulus");
  auto* sc_sweep = app.add_subcommand("sweep", "Newton continuation in the hole radius");
  auto* sc_report = app.add_subcommand("report", "re-fit an existing sweep.csv");
  for (auto* sc : {sc_gs, sc_land, sc_proj, sc_sweep, sc_report}) sc->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    RunConfig cfg = load_config(config_path);
    if (!out_dir.empty()) cfg.output_dir = out_dir;

    if (dry_run) {
      std::cout << cfg.canonical() << "run.output_dir=" << cfg.output_dir
                << "\nconfig_hash=" << config_hash(cfg) << "\n";
      return 0;
    }

    const Workspace ws = prepare(cfg);
    if (sc_gs->parsed()) return cmd_groundstate(ws);
    if (sc_land->parsed()) return cmd_landscape(ws);
    if (sc_proj->parsed()) return cmd_project(ws);
    if (sc_sweep->parsed()) return cmd_sweep(ws);
    if (sc_report->parsed()) return cmd_report(ws);
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return is_input_error(e.code()) ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
