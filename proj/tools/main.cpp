// Command-line front end: registration runs, regularization-parameter
// continuation, dense Hessian spectra and synthetic problem generation.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "flowreg/flowreg.hpp"

namespace fs = std::filesystem;
using namespace flowreg;

namespace {

struct RunConfig {
  std::string command;
  int grid_n1 = 64, grid_n2 = 64;
  int n_t = 0;  // 0 = derive (4*max(n_x) fixed mode, or CFL-adaptive)
  bool cfl_adaptive = false;
  std::string method = "gnpcg";
  std::string reg_kind = "h2";
  bool stokes = false;
  double beta = 1e-3;
  int n_c = 1;
  double sigma = -1.0;  // <0 = default policy, 0 = no smoothing
  bool sharp = false;   // doubles the smoothing width
  double tol = 1e-3;
  std::string stop = "battery";
  double eps_f = 0.1;
  double eps_theta = std::numbers::pi / 16;
  double amplitude = 0.5;
  long seed = 0;
  std::string reference_path, template_path;
  bool synthetic = false;
  std::string betas = "0,1e-3,1e6";  // spectrum command
  std::string out_dir = "out";
};

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(c));
  return s;
}

/// Flat key=value config file; unknown keys are an error, flags win.
void apply_config_file(const std::string& path, RunConfig& rc,
                       const std::map<std::string, std::function<void(const std::string&)>>& set) {
  std::ifstream in(path);
  if (!in) throw IoError("config: cannot open " + path);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw FormatError("config: missing '=' at line " + std::to_string(lineno));
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r");
      const auto b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    const auto it = set.find(key);
    if (it == set.end()) throw FormatError("config: unknown key '" + key + "'");
    it->second(val);
  }
  (void)rc;
}

Method parse_method(const std::string& m) {
  const std::string s = lower(m);
  if (s == "picard") return Method::Picard;
  if (s == "npcg") return Method::NPCG;
  if (s == "gnpcg") return Method::GNPCG;
  throw OutOfRange("unknown method: " + m);
}

StopMode parse_stop(const std::string& m) {
  const std::string s = lower(m);
  if (s == "battery") return StopMode::Battery;
  if (s == "gradred") return StopMode::GradRed;
  if (s == "stagnation") return StopMode::Stagnation;
  throw OutOfRange("unknown stop mode: " + m);
}

struct Setup {
  Grid2 grid{64, 64};
  TimeGrid tg{256};
  RegistrationProblem problem;
  VelocityCoefficients v0;
  SolverConfig solver;
  RegConfig reg;
  double sigma_used = 0.0;
};

TimeGrid pick_time_grid(const RunConfig& rc, const Grid2& grid, const VelocityCoefficients& v) {
  if (rc.n_t > 0) return TimeGrid(rc.n_t);
  if (!rc.cfl_adaptive) return TimeGrid(4 * std::max(grid.n[0], grid.n[1]));
  // CFL-adaptive: bound from the current velocity with a 25% margin, with a
  // floor of 2*max(n_x) steps for the zero field.
  const SampledVelocity sv(v, TimeGrid(2));
  const double dt_max = cfl_max_dt(sv.max_abs(), grid, 0.2);
  const int floor_nt = 2 * std::max(grid.n[0], grid.n[1]);
  if (!std::isfinite(dt_max)) return TimeGrid(floor_nt);
  return TimeGrid(std::max(floor_nt, static_cast<int>(std::ceil(1.25 / dt_max))));
}

Setup build_setup(const RunConfig& rc) {
  Setup s;
  s.grid = Grid2(rc.grid_n1, rc.grid_n2);
  s.v0 = VelocityCoefficients(s.grid, rc.n_c);
  s.tg = pick_time_grid(rc, s.grid, s.v0);

  s.reg.kind = rc.stokes ? RegKind::H1 : (lower(rc.reg_kind) == "h1" ? RegKind::H1 : RegKind::H2);
  s.reg.gamma = rc.stokes ? 1 : 0;
  s.reg.beta = rc.beta;
  s.reg.validate();

  s.solver.method = parse_method(rc.method);
  s.solver.stop_mode = parse_stop(rc.stop);
  s.solver.tau_j = rc.tol;

  if (rc.synthetic) {
    s.problem = synth_sinusoidal(s.grid, s.tg, rc.amplitude, rc.stokes).problem;
  } else {
    if (rc.reference_path.empty() || rc.template_path.empty())
      throw IoError("need --reference and --template images (or --synthetic)");
    double sigma = rc.sigma >= 0.0 ? rc.sigma : default_sigma(s.grid);
    if (rc.sharp) sigma *= 2.0;
    s.sigma_used = sigma;
    s.problem.m_R = ingest_image(rc.reference_path, s.grid, sigma);
    s.problem.m_T = ingest_image(rc.template_path, s.grid, sigma);
    s.problem.sigma = sigma;
    s.problem.provenance = Provenance::Ingested;
    s.problem.reference_path = rc.reference_path;
    s.problem.template_path = rc.template_path;
  }
  return s;
}

void write_resolved_config(const RunConfig& rc, const Setup& s, const fs::path& dir) {
  std::ofstream out(dir / "config.resolved");
  out << "command=" << rc.command << "\n"
      << "grid=" << s.grid.n[0] << "x" << s.grid.n[1] << "\n"
      << "nt=" << s.tg.n_t << "\n"
      << "cfl_adaptive=" << (rc.cfl_adaptive ? 1 : 0) << "\n"
      << "cfl_number=" << fmt17(s.tg.cfl_number) << "\n"
      << "method=" << lower(rc.method) << "\n"
      << "reg=" << (s.reg.kind == RegKind::H1 ? "h1" : "h2") << "\n"
      << "stokes=" << s.reg.gamma << "\n"
      << "beta=" << fmt17(s.reg.beta) << "\n"
      << "nc=" << rc.n_c << "\n"
      << "sigma=" << fmt17(s.sigma_used) << "\n"
      << "sharp=" << (rc.sharp ? 1 : 0) << "\n"
      << "tol=" << fmt17(rc.tol) << "\n"
      << "stop=" << lower(rc.stop) << "\n"
      << "eps_f=" << fmt17(rc.eps_f) << "\n"
      << "eps_theta=" << fmt17(rc.eps_theta) << "\n"
      << "amplitude=" << fmt17(rc.amplitude) << "\n"
      << "seed=" << rc.seed << "\n"
      << "synthetic=" << (rc.synthetic ? 1 : 0) << "\n"
      << "reference=" << rc.reference_path << "\n"
      << "template=" << rc.template_path << "\n"
      << "out=" << rc.out_dir << "\n";
}

std::vector<std::string> log_header() {
  return {"k",     "J",           "l2_half", "s",      "g_inf",    "g_l2",
          "alpha", "alpha_tilde", "inner",   "trials", "step_inf", "n_pde"};
}

void append_log_row(CsvWriter& csv, const IterationRecord& r) {
  csv.row({static_cast<double>(r.k), r.j, r.l2_half, r.s, r.g_inf, r.g_l2, r.alpha, r.alpha_tilde,
           static_cast<double>(r.inner), static_cast<double>(r.trials), r.step_inf,
           static_cast<double>(r.n_pde)});
}

void write_solution_artifacts(const Setup& s, const VelocityCoefficients& v,
                              const IterationLog& log, const fs::path& dir) {
  const ScalarField m1 = solve_state(s.problem.m_T, v, s.tg).final();
  emit_field(m1, (dir / "m1.pgm").string(), {{0.0, 1.0}});

  const MapSet maps = export_maps(s.problem, v, m1, s.tg);
  emit_field(maps.residual, (dir / "residual.pgm").string());
  emit_field(maps.det_f1, (dir / "detF.pgm").string(), {{0.0, 2.0}});

  CsvWriter grid_csv((dir / "grid.csv").string(), {"x1", "x2", "y1", "y2"});
  for (const auto& row : maps.grid_overlay) grid_csv.row({row[0], row[1], row[2], row[3]});

  try {
    const MeasureSet ms = compute_measures(s.problem, v, m1, log, s.tg);
    CsvWriter mcsv((dir / "measures.csv").string(), {"measure", "value"});
    mcsv.row({std::string("l2_rel"), fmt17(ms.l2_rel)});
    mcsv.row({std::string("dJ_rel"), fmt17(ms.dj_rel)});
    mcsv.row({std::string("grad_rel_inf"), fmt17(ms.grad_rel_inf)});
    mcsv.row({std::string("det_min"), fmt17(ms.det_stats.min)});
    mcsv.row({std::string("det_max"), fmt17(ms.det_stats.max)});
    mcsv.row({std::string("det_mean"), fmt17(ms.det_stats.mean)});
    mcsv.row({std::string("det_std"), fmt17(ms.det_stats.std)});
    for (std::size_t l = 0; l < ms.power_spectrum.size(); ++l)
      mcsv.row({"power_" + std::to_string(l + 1), fmt17(ms.power_spectrum[l])});
  } catch (const IdenticalImages&) {
    CsvWriter mcsv((dir / "measures.csv").string(), {"measure", "value"});
    mcsv.row({std::string("status"), std::string("identical_images")});
  }
}

int cmd_register(const RunConfig& rc) {
  Setup s = build_setup(rc);
  const fs::path dir(rc.out_dir);
  fs::create_directories(dir);
  write_resolved_config(rc, s, dir);

  CsvWriter log_csv((dir / "log.csv").string(), log_header());
  OuterResult res = outer_loop(s.problem.m_T, s.problem.m_R, s.v0, s.solver, s.reg, s.tg,
                               [&](const IterationRecord& r) { append_log_row(log_csv, r); });

  write_solution_artifacts(s, res.v, res.log, dir);
  std::cout << "register: " << res.stop_reason << " after " << res.log.outer_iterations()
            << " iterations, " << res.log.n_pde << " PDE solves\n";
  return res.status == SolveStatus::Converged ? 0 : 2;
}

int cmd_continuation(const RunConfig& rc) {
  Setup s = build_setup(rc);
  const fs::path dir(rc.out_dir);
  fs::create_directories(dir);
  write_resolved_config(rc, s, dir);

  ContinuationConfig cc;
  cc.eps_F = rc.eps_f;
  cc.eps_theta = rc.eps_theta;

  CsvWriter trace_csv((dir / "trace.csv").string(),
                      {"beta", "min_det", "min_angle", "max_angle", "rel_l2", "admissible"});
  ContinuationResult res =
      run_continuation(s.problem, rc.n_c, cc, s.solver, s.reg, s.tg, [&](const ContinuationStep& t) {
        trace_csv.row({t.beta, t.min_det, t.min_angle, t.max_angle, t.rel_l2,
                       t.admissible ? 1.0 : 0.0});
      });

  // log.csv for the final solve at beta*
  RegConfig reg_star = s.reg;
  reg_star.beta = res.beta_star;
  CsvWriter log_csv((dir / "log.csv").string(), log_header());
  OuterResult final_res =
      outer_loop(s.problem.m_T, s.problem.m_R, res.v, s.solver, reg_star, s.tg,
                 [&](const IterationRecord& r) { append_log_row(log_csv, r); });
  write_solution_artifacts(s, final_res.v, final_res.log, dir);

  std::cout << "continuation: beta* = " << fmt17(res.beta_star) << " ("
            << res.trace.termination << ", " << res.trace.steps.size() << " steps)\n";
  return 0;
}

int cmd_spectrum(const RunConfig& rc) {
  Setup s = build_setup(rc);
  const fs::path dir(rc.out_dir);
  fs::create_directories(dir);
  write_resolved_config(rc, s, dir);

  // True-solution state of the synthetic problem.
  const SyntheticProblem sp = synth_sinusoidal(s.grid, s.tg, rc.amplitude, rc.stokes);
  const IterateState st = build_state(sp.v_star, sp.problem.m_T, sp.problem.m_R, s.tg);

  std::vector<double> betas;
  std::stringstream ss(rc.betas);
  for (std::string item; std::getline(ss, item, ',');)
    if (!item.empty()) betas.push_back(std::stod(item));

  const std::vector<long> eigvec_indices = {1, 5, 20, 100, 1000};
  for (double beta : betas) {
    RegConfig reg = s.reg;
    reg.beta = beta;
    reg.validate(/*allow_zero_beta=*/true);
    const SpectrumReport rep = assemble_dense_hessian(st, s.tg, reg, /*gn=*/false, eigvec_indices);

    std::ostringstream name;
    name << "eig_" << fmt17(beta) << ".csv";
    CsvWriter csv((dir / name.str()).string(), {"index", "re", "im"});
    for (std::size_t i = 0; i < rep.eigenvalues.size(); ++i)
      csv.row({static_cast<double>(i + 1), rep.eigenvalues[i].real(), rep.eigenvalues[i].imag()});

    for (const auto& [idx, vec] : rep.eigenvectors) {
      std::ostringstream img;
      img << "evec_" << fmt17(beta) << "_" << idx << ".pgm";
      emit_field(vec[0].comp[0], (dir / img.str()).string());
    }
    std::cout << "spectrum: beta=" << fmt17(beta) << " minRe=" << fmt17(rep.min_re)
              << " maxRe=" << fmt17(rep.max_re) << " max|Im|=" << fmt17(rep.max_abs_im) << "\n";
  }
  return 0;
}

int cmd_synth(const RunConfig& rc) {
  Setup s = build_setup(rc);
  const fs::path dir(rc.out_dir);
  fs::create_directories(dir);
  write_resolved_config(rc, s, dir);

  const SyntheticProblem sp = synth_sinusoidal(s.grid, s.tg, rc.amplitude, rc.stokes);
  emit_field(sp.problem.m_R, (dir / "mR.pgm").string(), {{0.0, 1.0}});
  emit_field(sp.problem.m_T, (dir / "mT.pgm").string(), {{0.0, 1.0}});
  write_sidecar((dir / "vstar1.f64").string(), sp.v_star.coeffs[0].comp[0]);
  write_sidecar((dir / "vstar2.f64").string(), sp.v_star.coeffs[0].comp[1]);
  std::cout << "synth: wrote problem to " << dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Large-deformation diffeomorphic registration via "
               "transport-constrained optimal control"};
  app.require_subcommand(1);

  RunConfig rc;
  std::string config_path;
  std::string grid_spec = "64x64";

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "flat key=value config file (flags win)");
    cmd->add_option("--grid", grid_spec, "grid size N or N1xN2");
    cmd->add_option("--nt", rc.n_t, "number of time steps (0 = derive)");
    cmd->add_flag("--cfl-adaptive", rc.cfl_adaptive, "derive n_t from the CFL bound");
    cmd->add_option("--method", rc.method, "picard|npcg|gnpcg");
    cmd->add_option("--reg", rc.reg_kind, "h1|h2");
    cmd->add_flag("--stokes", rc.stokes, "incompressible (Stokes) scheme, implies h1");
    cmd->add_option("--beta", rc.beta, "regularization weight");
    cmd->add_option("--nc", rc.n_c, "number of temporal coefficient fields");
    cmd->add_option("--sigma", rc.sigma, "presmoothing width (<0 default policy, 0 none)");
    cmd->add_flag("--sharp", rc.sharp, "sharp features: double the smoothing width");
    cmd->add_option("--tol", rc.tol, "stopping tolerance tau_J");
    cmd->add_option("--stop", rc.stop, "battery|gradred|stagnation");
    cmd->add_option("--eps-f", rc.eps_f, "lower bound on det(F_1)");
    cmd->add_option("--eps-theta", rc.eps_theta, "grid-angle bound (Stokes)");
    cmd->add_option("--amplitude", rc.amplitude, "synthetic velocity amplitude");
    cmd->add_option("--seed", rc.seed, "seed echoed into config.resolved");
    cmd->add_option("--reference", rc.reference_path, "reference image (graymap)");
    cmd->add_option("--template", rc.template_path, "template image (graymap)");
    cmd->add_flag("--synthetic", rc.synthetic, "use the generated sinusoidal problem");
    cmd->add_option("--out", rc.out_dir, "output directory");
  };

  CLI::App* reg_cmd = app.add_subcommand("register", "solve one registration problem");
  add_common(reg_cmd);
  CLI::App* cont_cmd = app.add_subcommand("continuation", "automatic beta search");
  add_common(cont_cmd);
  CLI::App* spec_cmd = app.add_subcommand("spectrum", "dense reduced-Hessian eigenanalysis");
  add_common(spec_cmd);
  spec_cmd->add_option("--betas", rc.betas, "comma-separated beta list");
  CLI::App* synth_cmd = app.add_subcommand("synth", "generate the synthetic problem");
  add_common(synth_cmd);

  try {
    // Apply the config file before parsing flags so that flags win.
    for (int i = 1; i + 1 < argc; ++i)
      if (std::string(argv[i]) == "--config") config_path = argv[i + 1];
    if (!config_path.empty()) {
      std::map<std::string, std::function<void(const std::string&)>> setters = {
          {"grid", [&](const std::string& v) { grid_spec = v; }},
          {"nt", [&](const std::string& v) { rc.n_t = std::stoi(v); }},
          {"cfl_adaptive", [&](const std::string& v) { rc.cfl_adaptive = std::stoi(v) != 0; }},
          {"method", [&](const std::string& v) { rc.method = v; }},
          {"reg", [&](const std::string& v) { rc.reg_kind = v; }},
          {"stokes", [&](const std::string& v) { rc.stokes = std::stoi(v) != 0; }},
          {"beta", [&](const std::string& v) { rc.beta = std::stod(v); }},
          {"nc", [&](const std::string& v) { rc.n_c = std::stoi(v); }},
          {"sigma", [&](const std::string& v) { rc.sigma = std::stod(v); }},
          {"sharp", [&](const std::string& v) { rc.sharp = std::stoi(v) != 0; }},
          {"tol", [&](const std::string& v) { rc.tol = std::stod(v); }},
          {"stop", [&](const std::string& v) { rc.stop = v; }},
          {"eps_f", [&](const std::string& v) { rc.eps_f = std::stod(v); }},
          {"eps_theta", [&](const std::string& v) { rc.eps_theta = std::stod(v); }},
          {"amplitude", [&](const std::string& v) { rc.amplitude = std::stod(v); }},
          {"seed", [&](const std::string& v) { rc.seed = std::stol(v); }},
          {"reference", [&](const std::string& v) { rc.reference_path = v; }},
          {"template", [&](const std::string& v) { rc.template_path = v; }},
          {"synthetic", [&](const std::string& v) { rc.synthetic = std::stoi(v) != 0; }},
          {"betas", [&](const std::string& v) { rc.betas = v; }},
          {"out", [&](const std::string& v) { rc.out_dir = v; }},
      };
      apply_config_file(config_path, rc, setters);
    }

    CLI11_PARSE(app, argc, argv);

    const auto x = grid_spec.find('x');
    rc.grid_n1 = std::stoi(grid_spec.substr(0, x));
    rc.grid_n2 = x == std::string::npos ? rc.grid_n1 : std::stoi(grid_spec.substr(x + 1));

    if (reg_cmd->parsed()) {
      rc.command = "register";
      return cmd_register(rc);
    }
    if (cont_cmd->parsed()) {
      rc.command = "continuation";
      return cmd_continuation(rc);
    }
    if (spec_cmd->parsed()) {
      rc.command = "spectrum";
      return cmd_spectrum(rc);
    }
    if (synth_cmd->parsed()) {
      rc.command = "synth";
      return cmd_synth(rc);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
