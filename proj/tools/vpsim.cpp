// vpsim: config-driven experiment pipelines over the vp library.
// Exit codes: 0 pass, 1 usage/config error, 2 numerical abort, 3 acceptance failure.
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "vp/config.hpp"
#include "vp/diagnostics.hpp"
#include "vp/dynamics.hpp"
#include "vp/estimates.hpp"
#include "vp/phase_space.hpp"

namespace fs = std::filesystem;
using namespace vp;

namespace {

struct Cli {
  std::string config_path;
  double epsilon = -1.0;
  std::string out_dir;
  long seed = -1;
  int threads = 1;
  std::string method;
  double theta = -1.0;
  double softening = -1.0;
  double gamma = -2.0, eta = -2.0, delta = -2.0, alpha = -2.0;
  std::string radii = "4 8 16 32 64";
  int pairs = -1;
};

RunConfig load_config(const Cli& cli) {
  if (cli.config_path.empty()) throw std::invalid_argument("--config is required");
  RunConfig cfg = load_run_config(cli.config_path);
  if (!cli.out_dir.empty()) cfg.out_dir = cli.out_dir;
  if (cli.seed >= 0) cfg.sampling.seed = static_cast<std::uint64_t>(cli.seed);
  if (cli.softening >= 0.0) cfg.soft.delta_s = cli.softening;
  if (!cli.method.empty()) {
    if (cli.method == "direct")
      cfg.method = FieldMethod::direct();
    else if (cli.method == "tree")
      cfg.method = FieldMethod::tree(cli.theta > 0.0 ? cli.theta : cfg.method.theta);
    else
      throw std::invalid_argument("--method must be direct or tree");
  } else if (cli.theta > 0.0) {
    cfg.method.theta = cli.theta;
  }
  cfg.validate();
  return cfg;
}

void print_interval(const char* name, const Interval& iv) {
  std::printf("  %-6s (%.17g, %.17g)%s\n", name, iv.lo, iv.hi,
              iv.nonempty() ? "" : "  [EMPTY]");
}

int cmd_params(const Cli& cli) {
  const ParamRanges r = param_ranges(cli.epsilon);
  std::printf("epsilon = %.17g  beta = %.17g  regime = %s\n", r.epsilon, r.beta,
              r.regime == Regime::Direct ? "direct" : "iterated");
  print_interval("gamma", r.gamma);
  print_interval("alpha", r.alpha);
  if (r.regime == Regime::Iterated) print_interval("delta", r.delta);
  double gamma = cli.gamma, delta = cli.delta;
  if (r.regime == Regime::Iterated) {
    if (delta < -1.0) delta = r.delta.midpoint();
    if (!r.delta.contains(delta) && delta != 0.0)
      throw std::invalid_argument("delta outside its interval");
  } else {
    delta = 0.0;
  }
  Interval gwin = r.gamma;
  if (r.regime == Regime::Iterated)
    gwin = {std::max(0.0, r.beta - 2.0 / 3.0 + delta), (2.0 - r.beta) / 4.0};
  if (gamma < -1.0) gamma = gwin.midpoint();
  if (!gwin.contains(gamma)) throw std::invalid_argument("gamma outside its interval");
  const Interval eta = r.eta_interval(gamma, delta);
  std::printf("with gamma = %.17g, delta = %.17g:\n", gamma, delta);
  print_interval("eta", eta);
  if (cli.eta > -1.0 && !eta.contains(cli.eta))
    throw std::invalid_argument("eta outside its interval");
  if (cli.alpha > -1.0 && !r.alpha.contains(cli.alpha))
    throw std::invalid_argument("alpha outside its interval");
  return 0;
}

int cmd_sums(const Cli& cli) {
  std::vector<double> radii;
  {
    std::istringstream in(cli.radii);
    double r;
    while (in >> r) radii.push_back(r);
  }
  std::mt19937_64 rng(cli.seed >= 0 ? cli.seed : 12345);
  std::uniform_real_distribution<double> u(-50.0, 50.0);
  std::vector<Vec3> mus;
  for (int i = 0; i < 10; ++i) mus.push_back({u(rng), u(rng), u(rng)});
  const auto rep = lattice_sum_audit(cli.epsilon, radii, mus);
  std::printf("# lattice sums at epsilon = %.17g\n", cli.epsilon);
  std::printf("%-8s %-24s %-24s\n", "R", "S(R)", "S(R)/R^(1-eps)");
  for (const auto& row : rep.rows)
    std::printf("%-8g %-24.17g %-24.17g\n", row.radius, row.sum, row.envelope_ratio);
  std::printf("%-26s %-24s %-24s\n", "mu", "sum", "split_bound");
  bool ok = true;
  for (const auto& row : rep.mu_rows) {
    std::printf("(%.3g,%.3g,%.3g)  %-24.17g %-24.17g\n", row.mu.x, row.mu.y, row.mu.z,
                row.sum, row.split_bound);
    ok = ok && row.sum <= row.split_bound;
  }
  std::printf("potential_sup %.17g\n", rep.potential_sup);
  return ok ? 0 : 3;
}

struct CutoffSummary {
  int n = 0;
  std::size_t particles = 0;
  double v_final = 0.0, work_sup = 0.0, q_final = 0.0, sup_rho = 0.0;
  double c2_ratio = 0.0;
  std::size_t interp_violations = 0;
};

int cmd_simulate(const Cli& cli) {
  RunConfig cfg = load_config(cli);
  const ParamBundle bundle0 = cfg.resolve_params();
  fs::create_directories(cfg.out_dir);
  {
    std::ofstream out(cfg.out_dir + "/resolved_config.ini");
    out << serialize_run_config(cfg);
  }
  const std::string hash = config_hash(cfg);

  int max_n = 1;
  for (int n : cfg.cutoffs) max_n = std::max(max_n, n);
  const Ensemble base = sample_ensemble(cfg.profile, cfg.phys, cfg.sampling, max_n);

  IntegrateOptions opts;
  opts.snapshot_stride = cfg.snapshot_stride;
  opts.c_tilde = cfg.c_tilde;

  // pipeline order: validate -> calibrate C2 on the smallest cutoff -> schedule ->
  // simulate the sweep -> diagnose -> fit -> report
  std::vector<CutoffSummary> sums;
  std::vector<double> fit_v, fit_w;
  double c2 = 0.0;
  bool c2_frozen = false;
  double p_meas = 0.0, q_meas = 0.0;
  std::vector<int> cuts = cfg.cutoffs;
  std::sort(cuts.begin(), cuts.end());
  for (int n : cuts) {
    const Ensemble ens = apply_cutoff(base, n);
    if (ens.particles.empty()) throw std::invalid_argument("cutoff " + std::to_string(n) +
                                                           " leaves no particles");
    const auto traj =
        integrate(ens, cfg.t_final, {cfg.dt, cfg.guard_frac}, cfg.method, cfg.soft, opts);
    CutoffSummary s;
    s.n = n;
    s.particles = ens.particles.size();
    s.v_final = traj.vmax.back();
    s.work_sup = field_work(traj).sup;

    Ensemble final_ens = ens;
    final_ens.particles = traj.final_state;
    const auto q = q_sup(final_ens, cfg.energy_r, cfg.mu_spacing, cfg.soft);
    s.q_final = q.value;
    const auto grid = density_grid(final_ens, cfg.h_rho);
    s.sup_rho = grid.sup_density;
    s.interp_violations = interpolation_check(grid, ens.f_inf).size();

    double ratio = 0.0;
    for (std::size_t i = 0; i < traj.times.size(); ++i)
      ratio = std::max(ratio, traj.field_sup[i] /
                                  (std::pow(traj.vmax[i], 4.0 / 3.0) *
                                   std::cbrt(std::max(q.value, 1e-300))));
    s.c2_ratio = ratio;
    if (!c2_frozen) {
      c2 = std::max(ratio, 1e-12);
      c2_frozen = true;
    }
    p_meas = std::max(p_meas, s.v_final);
    q_meas = std::max(q_meas, s.q_final);
    fit_v.push_back(s.v_final);
    fit_w.push_back(s.work_sup);
    sums.push_back(s);

    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < traj.times.size(); ++i)
      rows.push_back({traj.times[i], traj.vmax[i], traj.radius[i], traj.field_sup[i],
                      traj.work_sup[i]});
    write_table(cfg.out_dir + "/series_n" + std::to_string(n) + ".txt",
                "per-step series, cutoff " + std::to_string(n) + ", config " + hash,
                {"time", "vmax", "radius", "field_sup", "work_sup"}, rows);
    if (cfg.snapshot_stride > 0) {
      std::vector<std::vector<double>> snap;
      for (std::size_t k = 0; k < traj.snap_times.size(); ++k)
        for (std::size_t i = 0; i < traj.snap_pos[k].size(); ++i)
          snap.push_back({traj.snap_times[k], static_cast<double>(i), traj.snap_pos[k][i].x,
                          traj.snap_pos[k][i].y, traj.snap_pos[k][i].z, traj.snap_vel[k][i].x,
                          traj.snap_vel[k][i].y, traj.snap_vel[k][i].z,
                          traj.snap_field[k][i]});
      write_table(cfg.out_dir + "/snapshots_n" + std::to_string(n) + ".txt",
                  "snapshots, cutoff " + std::to_string(n) + ", config " + hash,
                  {"time", "id", "px", "py", "pz", "vx", "vy", "vz", "emag"}, snap);
    }
  }

  ParamBundle bundle = bundle0;
  bundle.p_ref = p_meas;
  bundle.q_ref = q_meas;
  bundle.c2 = c2;
  bundle.validate();
  const Schedule sched = make_schedule(p_meas, std::max(q_meas, 1e-300), c2, bundle.gamma,
                                       bundle.delta, bundle.beta, bundle.eta, cfg.t_final);
  const auto ladder_bad = ladder_violations(bundle, sched.ell_bar);

  bool interp_ok = true, c2_ok = true;
  for (const auto& s : sums) {
    interp_ok = interp_ok && s.interp_violations == 0;
    c2_ok = c2_ok && s.c2_ratio <= 1.5 * c2;
  }
  double work_slope = 0.0;
  bool have_slope = false;
  if (fit_v.size() >= 2 && fit_v.back() > fit_v.front()) {
    bool pos = true;
    for (double w : fit_w) pos = pos && w > 0.0;
    if (pos) {
      work_slope = fit_loglog(fit_v, fit_w).slope;
      have_slope = true;
    }
  }

  std::ofstream rep(cfg.out_dir + "/report.txt");
  rep << "config_hash " << hash << "\n";
  rep << "epsilon " << format_g17(bundle.epsilon) << "\nbeta " << format_g17(bundle.beta)
      << "\nregime " << (bundle.regime == Regime::Direct ? "direct" : "iterated")
      << "\ngamma " << format_g17(bundle.gamma) << "\neta " << format_g17(bundle.eta)
      << "\ndelta " << format_g17(bundle.delta) << "\nalpha " << format_g17(bundle.alpha)
      << "\nc_tilde " << format_g17(cfg.c_tilde) << "\nsoftening "
      << format_g17(cfg.soft.delta_s) << "\n";
  rep << "P " << format_g17(p_meas) << "\nQ " << format_g17(q_meas) << "\nC2 "
      << format_g17(c2) << "\nDelta " << format_g17(sched.delta_1) << "\nG "
      << sched.g_factor << "\nell_bar " << sched.ell_bar << "\n";
  for (const auto& w : sched.warnings) rep << "warning " << w << "\n";
  rep << "columns: n particles v_final work_sup q_final sup_rho c2_ratio interp_violations\n";
  for (const auto& s : sums)
    rep << s.n << " " << s.particles << " " << format_g17(s.v_final) << " "
        << format_g17(s.work_sup) << " " << format_g17(s.q_final) << " "
        << format_g17(s.sup_rho) << " " << format_g17(s.c2_ratio) << " "
        << s.interp_violations << "\n";
  if (have_slope) rep << "work_exponent " << format_g17(work_slope) << "\n";
  rep << "check interpolation " << (interp_ok ? "pass" : "FAIL") << "\n";
  rep << "check c2_freeze " << (c2_ok ? "pass" : "FAIL") << "\n";
  rep << "check ladder " << (ladder_bad.empty() ? "pass" : "FAIL") << "\n";

  std::printf("wrote %s/report.txt (%zu cutoffs, config %s)\n", cfg.out_dir.c_str(),
              sums.size(), hash.c_str());
  return (interp_ok && c2_ok && ladder_bad.empty()) ? 0 : 3;
}

int cmd_converge(const Cli& cli) {
  RunConfig cfg = load_config(cli);
  cfg.resolve_params();
  fs::create_directories(cfg.out_dir);
  int max_n = 1;
  for (int n : cfg.cutoffs) max_n = std::max(max_n, n);
  const Ensemble base = sample_ensemble(cfg.profile, cfg.phys, cfg.sampling, max_n + 1);
  std::vector<int> cuts = cfg.cutoffs;
  std::sort(cuts.begin(), cuts.end());
  std::vector<double> ns, sigmas;
  std::vector<std::vector<double>> rows;
  for (int n : cuts) {
    const auto run = coupled_integrate(base, n, cfg.t_final, {cfg.dt, cfg.guard_frac},
                                       cfg.method, cfg.soft, {0, cfg.c_tilde, {}});
    rows.push_back({static_cast<double>(n), static_cast<double>(run.shared_count),
                    run.sup_sigma});
    std::printf("n=%d shared=%zu sup_sigma=%.17g\n", n, run.shared_count, run.sup_sigma);
    if (run.sup_sigma > 0.0) {
      ns.push_back(n);
      sigmas.push_back(run.sup_sigma);
    }
  }
  write_table(cfg.out_dir + "/sigma.txt", "cutoff contraction, config " + config_hash(cfg),
              {"n", "shared", "sup_sigma"}, rows);
  if (ns.size() >= 2) {
    std::vector<double> logs;
    for (double s : sigmas) logs.push_back(std::log(s));
    const auto fit = fit_linear(ns, logs);
    std::printf("log sigma slope per unit n: %.17g (geometric decay below %.17g)\n",
                fit.slope, -std::log(2.0));
  }
  return 0;
}

int cmd_probe(const Cli& cli) {
  RunConfig cfg = load_config(cli);
  const ParamBundle bundle0 = cfg.resolve_params();
  int min_n = cfg.cutoffs.front();
  for (int n : cfg.cutoffs) min_n = std::min(min_n, n);
  const Ensemble ens = sample_ensemble(cfg.profile, cfg.phys, cfg.sampling, min_n);

  // static quasi-Lipschitz probe on the initial field
  std::mt19937_64 rng(cfg.sampling.seed + 101);
  std::uniform_real_distribution<double> ux(-cfg.sampling.r_max, cfg.sampling.r_max);
  std::uniform_real_distribution<double> us(-4.0, -1.0);
  const int npairs = cli.pairs > 0 ? cli.pairs : cfg.probe_pairs;
  std::vector<std::pair<Vec3, Vec3>> pairs;
  for (int i = 0; i < npairs; ++i) {
    const Vec3 x{ux(rng), ux(rng), ux(rng)};
    pairs.push_back({x, x + Vec3{std::pow(10.0, us(rng)), 0, 0}});
  }
  const auto lp = lipschitz_probe(ens, pairs, cfg.soft);
  std::printf("lipschitz probe: %zu pairs, sup ratio %.17g\n", lp.results.size(),
              lp.sup_ratio);

  // separation lemmas on a tracked trajectory over the calibrated window
  IntegrateOptions opts;
  opts.c_tilde = cfg.c_tilde;
  const std::size_t ntrack = std::min<std::size_t>(ens.particles.size(), 256);
  for (std::size_t i = 0; i < ntrack; ++i) opts.tracked_ids.push_back(static_cast<int>(i));
  const auto traj =
      integrate(ens, cfg.t_final, {cfg.dt, cfg.guard_frac}, cfg.method, cfg.soft, opts);
  Ensemble fin = ens;
  fin.particles = traj.final_state;
  const auto q = q_sup(fin, cfg.energy_r, cfg.mu_spacing, cfg.soft);
  double c2 = 0.0;
  for (std::size_t i = 0; i < traj.times.size(); ++i)
    c2 = std::max(c2, traj.field_sup[i] / (std::pow(traj.vmax[i], 4.0 / 3.0) *
                                           std::cbrt(std::max(q.value, 1e-300))));
  const auto sched = make_schedule(traj.vmax.back(), std::max(q.value, 1e-300),
                                   std::max(c2, 1e-12), bundle0.gamma, bundle0.delta,
                                   bundle0.beta, bundle0.eta, cfg.t_final);
  const double window = std::min(sched.delta_1, cfg.t_final);
  std::vector<std::pair<int, int>> id_pairs;
  std::mt19937_64 rng2(cfg.sampling.seed + 202);
  for (int i = 0; i < npairs && ntrack >= 2; ++i) {
    const int a = static_cast<int>(rng2() % ntrack);
    int b = static_cast<int>(rng2() % ntrack);
    if (b == a) b = (b + 1) % static_cast<int>(ntrack);
    id_pairs.push_back({a, b});
  }
  const auto rep = separation_check(traj, id_pairs, bundle0.gamma, 0.0, window);
  std::printf("separation check: window %.17g, P^gamma %.17g, %zu pairs, %d violations\n",
              window, rep.p_gamma, rep.pairs.size(), rep.violations);
  return rep.violations == 0 ? 0 : 3;
}

int cmd_report(const Cli& cli) {
  RunConfig cfg = load_config(cli);
  const ParamBundle b = cfg.resolve_params();
  std::printf("config_hash %s\n", config_hash(cfg).c_str());
  std::printf("%s", serialize_run_config(cfg).c_str());
  std::printf("resolved: gamma %.17g eta %.17g delta %.17g alpha %.17g (%s regime)\n",
              b.gamma, b.eta, b.delta, b.alpha,
              b.regime == Regime::Direct ? "direct" : "iterated");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"particle-characteristics Vlasov-Poisson engine and estimate harness"};
  app.require_subcommand(1);
  Cli cli;

  auto add_common = [&cli](CLI::App* c) {
    c->add_option("--config", cli.config_path, "run configuration file");
    c->add_option("--out", cli.out_dir, "output directory override");
    c->add_option("--seed", cli.seed, "sampling seed override");
    c->add_option("--threads", cli.threads, "max worker threads (advisory)");
    c->add_option("--method", cli.method, "field method: direct or tree");
    c->add_option("--theta", cli.theta, "tree opening angle");
    c->add_option("--softening", cli.softening, "Plummer softening length");
  };

  auto* params = app.add_subcommand("params", "print admissible parameter intervals");
  params->add_option("--epsilon", cli.epsilon, "spatial decay exponent")->required();
  params->add_option("--gamma", cli.gamma, "candidate gamma");
  params->add_option("--eta", cli.eta, "candidate eta");
  params->add_option("--delta", cli.delta, "candidate delta");
  params->add_option("--alpha", cli.alpha, "candidate alpha");

  auto* sums = app.add_subcommand("sums", "lattice-sum audit tables");
  sums->add_option("--epsilon", cli.epsilon, "spatial decay exponent")->required();
  sums->add_option("--radii", cli.radii, "audit radii, space separated");
  sums->add_option("--seed", cli.seed, "seed for the mu samples");

  auto* sim = app.add_subcommand("simulate", "full pipeline over the cutoff sweep");
  add_common(sim);
  auto* conv = app.add_subcommand("converge", "coupled cutoff-contraction study");
  add_common(conv);
  auto* probe = app.add_subcommand("probe", "quasi-Lipschitz and separation probes");
  add_common(probe);
  probe->add_option("--pairs", cli.pairs, "number of probe pairs");
  auto* report = app.add_subcommand("report", "echo the resolved config and parameters");
  add_common(report);

  CLI11_PARSE(app, argc, argv);

  try {
    if (params->parsed()) return cmd_params(cli);
    if (sums->parsed()) return cmd_sums(cli);
    if (sim->parsed()) return cmd_simulate(cli);
    if (conv->parsed()) return cmd_converge(cli);
    if (probe->parsed()) return cmd_probe(cli);
    if (report->parsed()) return cmd_report(cli);
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  } catch (const std::logic_error& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "numerical abort: %s\n", e.what());
    return 2;
  }
  return 1;
}
