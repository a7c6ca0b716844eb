// concentra: numerical toolkit for concentration phenomena in noncompact
// variational problems.  Commands are driven by a flat key = value config
// file; see README.md for the format and the potential expression grammar.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "concentra/ansatz.hpp"
#include "concentra/constants.hpp"
#include "concentra/diagnostics.hpp"
#include "concentra/energy.hpp"
#include "concentra/geodesics.hpp"
#include "concentra/homoclinic.hpp"
#include "concentra/io.hpp"
#include "concentra/reduction.hpp"

namespace fs = std::filesystem;
using namespace concentra;

namespace {

struct Config {
  std::map<std::string, std::string> kv;
  std::string text;

  bool has(const std::string& key) const { return kv.count(key) > 0; }

  std::string get(const std::string& key) const {
    const auto it = kv.find(key);
    if (it == kv.end())
      throw ValidationError("config: missing key '" + key + "'");
    return it->second;
  }
  std::string get_or(const std::string& key, const std::string& dflt) const {
    const auto it = kv.find(key);
    return it == kv.end() ? dflt : it->second;
  }
  double num(const std::string& key) const {
    const std::string v = get(key);
    try {
      size_t used = 0;
      const double x = std::stod(v, &used);
      if (used != v.size()) throw std::invalid_argument(v);
      return x;
    } catch (const std::exception&) {
      throw ValidationError("config: key '" + key + "' is not a number: '" + v + "'");
    }
  }
  double num_or(const std::string& key, double dflt) const {
    return has(key) ? num(key) : dflt;
  }
  int integer(const std::string& key) const {
    const double v = num(key);
    const int i = static_cast<int>(v);
    if (double(i) != v) throw ValidationError("config: key '" + key + "' must be an integer");
    return i;
  }
  int integer_or(const std::string& key, int dflt) const {
    return has(key) ? integer(key) : dflt;
  }
  std::vector<double> list(const std::string& key) const {
    std::vector<double> out;
    std::stringstream ss(get(key));
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        out.push_back(std::stod(item));
      } catch (const std::exception&) {
        throw ValidationError("config: key '" + key + "' has a malformed list entry '" + item +
                              "'");
      }
    }
    if (out.empty()) throw ValidationError("config: key '" + key + "' is an empty list");
    return out;
  }
};

Config load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ResourceError("cannot open config file " + path);
  Config cfg;
  std::stringstream buffer;
  buffer << is.rdbuf();
  cfg.text = buffer.str();
  std::istringstream lines(cfg.text);
  std::string line;
  int lineno = 0;
  while (std::getline(lines, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    const auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r");
      if (a == std::string::npos) return std::string();
      const auto b = s.find_last_not_of(" \t\r");
      return s.substr(a, b - a + 1);
    };
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ValidationError("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ValidationError("config line " + std::to_string(lineno) + ": empty key");
    cfg.kv[key] = value;
  }
  return cfg;
}

struct RunContext {
  Config cfg;
  fs::path out_dir;
  int threads = 1;
  bool verbose = false;
  std::vector<std::string> artifacts;

  void note(const std::string& msg) const {
    if (verbose) std::cerr << "concentra: " << msg << "\n";
  }
  fs::path artifact(const std::string& name) {
    artifacts.push_back(name);
    return out_dir / name;
  }
};

ProblemSpec parse_problem(const Config& cfg) {
  ProblemSpec spec;
  spec.n = cfg.integer("problem.n");
  spec.p = cfg.num("problem.p");
  spec.epsilon = cfg.num_or("problem.eps", 0.1);
  if (cfg.has("problem.V")) spec.V = Expr::parse(cfg.get("problem.V")).field();
  if (cfg.has("problem.K")) spec.K = Expr::parse(cfg.get("problem.K")).field();
  for (int a = 0; a < 3; ++a) {
    const std::string key = "problem.A" + std::to_string(a + 1);
    if (cfg.has(key)) spec.A[a] = Expr::parse(cfg.get(key)).field();
  }
  spec.validate();
  return spec;
}

RadialProfile ground_state_cached(int n, double p, double tol, double r_max, RunContext& ctx) {
  const char* cache = std::getenv("CONCENTRA_CACHE");
  fs::path file;
  if (cache) {
    std::ostringstream name;
    name << "ground_state_n" << n << "_p" << format_number(p) << "_tol" << format_number(tol)
         << "_rmax" << format_number(r_max) << ".txt";
    file = fs::path(cache) / name.str();
    if (fs::exists(file)) {
      ctx.note("ground state from cache " + file.string());
      return RadialProfile::load_file(file.string());
    }
  }
  RadialProfile prof = solve_ground_state(n, p, tol, r_max);
  if (cache) {
    fs::create_directories(file.parent_path());
    prof.save_file(file.string());
    ctx.note("ground state cached at " + file.string());
  }
  return prof;
}

std::string point_str(const Point& x, int dim) {
  std::string out;
  for (int a = 0; a < dim; ++a) out += (a ? ";" : "") + format_number(x[a]);
  return out;
}

// ---------------------------------------------------------------- commands

int cmd_ground_state(RunContext& ctx) {
  const int n = ctx.cfg.integer("problem.n");
  const double p = ctx.cfg.num("problem.p");
  const double tol = ctx.cfg.num_or("numerics.tol", 1e-8);
  const double r_max = ctx.cfg.num_or("numerics.r_max", 20.0);
  const RadialProfile prof = ground_state_cached(n, p, tol, r_max, ctx);
  prof.save_file(ctx.artifact("ground_state.txt").string());
  std::cout << "ground-state: peak " << format_number(prof.peak) << ", decay rate "
            << format_number(prof.decay_rate) << "\n";
  return 0;
}

int cmd_reduce(RunContext& ctx) {
  const ProblemSpec base = parse_problem(ctx.cfg);
  const double r_max = ctx.cfg.num_or("numerics.r_max", 20.0);
  const double tol = ctx.cfg.num_or("numerics.tol", 1e-8);
  const double grid_radius = ctx.cfg.num_or("numerics.grid.radius", 12.0);
  const int grid_points = ctx.cfg.integer_or("numerics.grid.points", 257);
  const int multistart = ctx.cfg.integer_or("numerics.multistart", 16);
  std::vector<double> eps_sweep{base.epsilon};
  if (ctx.cfg.has("numerics.eps_sweep")) eps_sweep = ctx.cfg.list("numerics.eps_sweep");
  const double box_half = ctx.cfg.num_or("numerics.search_halfwidth", 1.0);

  RadialProfile prof = ground_state_cached(base.n, base.p, tol, r_max, ctx);

  std::vector<std::vector<std::string>> rows;
  for (double eps : eps_sweep) {
    ProblemSpec spec = base;
    spec.epsilon = eps;
    const CartesianGrid grid = make_grid(spec.n, grid_radius, grid_points);
    Point lo{0, 0, 0}, hi{0, 0, 0};
    for (int a = 0; a < spec.n; ++a) {
      lo[a] = -box_half;
      hi[a] = box_half;
    }
    const ConcentrationSearch search =
        find_concentration_points(spec, prof, grid, lo, hi, multistart);
    for (const auto& w : search.warnings) ctx.note(w);
    if (search.flat_landscape) std::cout << "reduce: flat reduced landscape at eps " << eps << "\n";
    for (const auto& pt : search.points) {
      int morse = -1;
      try {
        morse = morse_index(spec, prof, grid, pt);
      } catch (const Error& e) {
        ctx.note(std::string("morse index unavailable: ") + e.what());
      }
      double gn = 0.0;
      for (int a = 0; a < spec.n; ++a) gn += pt.reduced_grad[a] * pt.reduced_grad[a];
      rows.push_back({format_number(eps), point_str(pt.xi, spec.n), format_number(pt.sigma),
                      format_number(pt.phi), format_number(pt.w_norm),
                      format_number(std::sqrt(gn)),
                      morse >= 0 ? std::to_string(morse) : "degenerate",
                      format_number(pt.coercivity)});
    }
  }
  write_csv(ctx.artifact("concentration_points.csv").string(),
            {"eps", "xi", "sigma", "phi", "w_norm", "grad_norm", "morse_index", "coercivity"},
            rows);
  std::cout << "reduce: " << rows.size() << " concentration points written\n";
  return 0;
}

int cmd_geodesics(RunContext& ctx) {
  const int N = ctx.cfg.integer_or("geodesics.N", 2);
  const int multistart = ctx.cfg.integer_or("numerics.multistart", 12);
  GeodesicSearchOptions opts;
  opts.r_max = ctx.cfg.num_or("geodesics.r_max", 8.0);
  opts.quad_nodes = ctx.cfg.integer_or("numerics.quad_nodes", 128);

  const Expr phi = Expr::parse(ctx.cfg.get_or("geodesics.phi", "x1*exp(-x1^2)"));
  const MetricPerturbation h = conformal_perturbation(
      N, [phi](double s) { return phi.eval(make_point(s)); });

  const auto candidates = find_geodesic_candidates(h, N, multistart, opts);
  std::vector<std::vector<std::string>> rows;
  for (const auto& c : candidates) {
    std::string pstr, qstr;
    for (size_t i = 0; i < c.p.size(); ++i) {
      pstr += (i ? ";" : "") + format_number(c.p[i]);
      qstr += (i ? ";" : "") + format_number(c.q[i]);
    }
    const char* cls = c.classification == GeodesicCandidate::Class::maximum   ? "max"
                      : c.classification == GeodesicCandidate::Class::minimum ? "min"
                      : c.classification == GeodesicCandidate::Class::saddle  ? "saddle"
                                                                              : "degenerate";
    rows.push_back({format_number(c.r), pstr, qstr, format_number(c.gamma), cls});
  }
  write_csv(ctx.artifact("geodesic_candidates.csv").string(),
            {"r", "p", "q", "gamma", "class"}, rows);

  const double eps = ctx.cfg.num_or("geodesics.eps", 0.01);
  const int modes = ctx.cfg.integer_or("geodesics.fourier_modes", 8);
  int refined = 0;
  for (size_t i = 0; i < candidates.size(); ++i) {
    try {
      const RefinedLoop loop = refine_closed_geodesic(candidates[i], h, eps, modes);
      std::vector<std::vector<std::string>> pts;
      for (size_t j = 0; j < loop.t.size(); ++j) {
        std::vector<std::string> row{format_number(loop.t[j]), format_number(loop.r[j])};
        for (double x : loop.x[j]) row.push_back(format_number(x));
        pts.push_back(std::move(row));
      }
      std::vector<std::string> header{"t", "r"};
      for (int a = 0; a <= N; ++a) header.push_back("x" + std::to_string(a + 1));
      write_csv(ctx.artifact("refined_loop_" + std::to_string(i) + ".txt").string(), header,
                pts);
      ++refined;
    } catch (const Error& e) {
      ctx.note(std::string("refinement skipped: ") + e.what());
    }
  }
  std::cout << "geodesics: " << candidates.size() << " candidates, " << refined
            << " refined loops\n";
  return 0;
}

int cmd_cc(RunContext& ctx) {
  SequenceSpec seq;
  const std::string kind = ctx.cfg.get_or("cc.kind", "vanishing_translation");
  if (kind == "oscillation")
    seq.kind = SequenceSpec::Kind::oscillation;
  else if (kind == "concentration")
    seq.kind = SequenceSpec::Kind::concentration;
  else if (kind == "vanishing_translation")
    seq.kind = SequenceSpec::Kind::vanishing_translation;
  else if (kind == "spreading")
    seq.kind = SequenceSpec::Kind::spreading;
  else if (kind == "dichotomy_pair")
    seq.kind = SequenceSpec::Kind::dichotomy_pair;
  else
    throw ValidationError("cc.kind: unknown sequence kind '" + kind + "'");

  seq.p = ctx.cfg.num_or("cc.p", 2.0);
  seq.base_radius = ctx.cfg.num_or("cc.base_radius", 1.0);
  const Expr base = Expr::parse(ctx.cfg.get_or("cc.base", "(1-x1^2)^2"));
  const double br = seq.base_radius;
  seq.base = [base, br](double r) {
    return r >= br ? 0.0 : base.eval(make_point(r / br));
  };
  for (double v : ctx.cfg.list("cc.indices")) seq.indices.push_back(static_cast<int>(v));

  std::vector<double> radii = ctx.cfg.has("cc.radii")
                                  ? ctx.cfg.list("cc.radii")
                                  : std::vector<double>{0.5, 1.0, 2.0, 4.0, 8.0};

  const TrichotomyReport rep = lions_classify(seq, radii, seq.indices);
  std::vector<std::vector<std::string>> rows;
  for (size_t i = 0; i < rep.indices.size(); ++i)
    for (size_t j = 0; j < rep.radii.size(); ++j)
      rows.push_back({std::to_string(rep.indices[i]), format_number(rep.radii[j]),
                      format_number(rep.Q[i][j])});
  write_csv(ctx.artifact("q_profiles.csv").string(), {"n", "R", "Q"}, rows);

  std::ofstream rep_file(ctx.artifact("trichotomy.txt").string());
  rep_file << "label = " << to_string(rep.label) << "\n";
  rep_file << "lambda = " << format_number(rep.lambda) << "\n";
  if (rep.label == TrichotomyReport::Label::dichotomy)
    rep_file << "split_mass = " << format_number(rep.split_mass) << "\n";
  rep_file << "note = " << rep.note << "\n";

  std::cout << "cc: label " << to_string(rep.label) << "\n";
  return 0;
}

int cmd_constants(RunContext& ctx) {
  HardyParams params;
  params.N = ctx.cfg.integer_or("hardy.N", 3);
  params.k = ctx.cfg.integer_or("hardy.k", 2);
  params.p = ctx.cfg.num_or("hardy.p", 2.0);
  params.alpha = ctx.cfg.num_or("hardy.alpha", 0.0);
  params.validate_quotient();

  std::vector<std::vector<std::string>> rows;
  for (int m : {1, 2, 4, 8}) {
    const double q = hardy_constant_probe(params, m);
    rows.push_back({std::to_string(params.N), std::to_string(params.k),
                    format_number(params.p), format_number(params.alpha), std::to_string(m),
                    format_number(q), format_number(params.hardy_constant())});
  }
  write_csv(ctx.artifact("hardy_probe.csv").string(),
            {"N", "k", "p", "alpha", "m", "quotient", "constant"}, rows);
  std::cout << "constants: hardy probe written (constant "
            << format_number(params.hardy_constant()) << ")\n";
  return 0;
}

int cmd_homoclinic(RunContext& ctx) {
  HamiltonianSpec spec;
  spec.sigma_exp = ctx.cfg.num_or("hamiltonian.sigma", 2.0);
  const Expr a_expr = Expr::parse(ctx.cfg.get_or("hamiltonian.a", "2*sech(x1)^2"));
  spec.a = [a_expr](double t) { return a_expr.eval(make_point(t)); };

  const double T = ctx.cfg.num_or("numerics.T", 20.0);
  const int M = ctx.cfg.integer_or("numerics.M", 2048);
  const int steps = ctx.cfg.integer_or("numerics.steps", 25);
  const double ds = ctx.cfg.num_or("numerics.ds", 0.1);

  const Lambda0Result l0 = lambda0(spec.a, T, M);
  if (!l0.admissible) {
    std::cout << "homoclinic: lambda0 = " << format_number(l0.value)
              << " >= 0, no bifurcation point in (-inf, 0)\n";
    return 0;
  }
  std::cout << "homoclinic: lambda0 = " << format_number(l0.value) << ", parity "
            << parity_at(spec, l0.value, T, M) << "\n";

  spec.lambda = l0.value - ctx.cfg.num_or("numerics.lambda_offset", 0.05);
  const Trajectory seed = seed_from_eigenfunction(l0, 0.3);
  const BranchPoint first = solve_homoclinic(spec, seed, T, M);
  const ContinuationResult branch = continue_branch(spec, first, steps, ds);

  std::vector<std::vector<std::string>> rows;
  for (size_t i = 0; i < branch.points.size(); ++i) {
    const auto& bp = branch.points[i];
    rows.push_back({format_number(bp.arclength), format_number(bp.lambda),
                    format_number(bp.amplitude), format_number(bp.residual),
                    i + 1 == branch.points.size() ? branch.termination_cause : ""});
    std::vector<std::vector<std::string>> traj;
    for (size_t j = 0; j < bp.x.t.size(); ++j)
      traj.push_back({format_number(bp.x.t[j]), format_number(bp.x.u[j]),
                      format_number(bp.x.v[j])});
    write_csv(ctx.artifact("trajectory_" + std::to_string(i) + ".txt").string(),
              {"t", "u", "v"}, traj);
  }
  write_csv(ctx.artifact("branch.csv").string(),
            {"arclength", "lambda", "amplitude", "residual", "termination_cause"}, rows);
  std::cout << "homoclinic: " << branch.points.size() << " branch points, termination "
            << branch.termination_cause << "\n";
  return 0;
}

void write_manifest(RunContext& ctx) {
  std::ofstream os(ctx.out_dir / "manifest.json", std::ios::binary);
  os << "{\n  \"config_hash\": \"" << fnv1a_hex(ctx.cfg.text) << "\",\n  \"artifacts\": [\n";
  std::sort(ctx.artifacts.begin(), ctx.artifacts.end());
  for (size_t i = 0; i < ctx.artifacts.size(); ++i)
    os << "    \"" << ctx.artifacts[i] << "\"" << (i + 1 < ctx.artifacts.size() ? "," : "")
       << "\n";
  os << "  ]\n}\n";
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"concentra: concentration phenomena toolkit"};
  std::string config_path, out_dir = "out";
  int threads = 1;
  bool verbose = false;
  app.add_option("--config", config_path, "configuration file (key = value lines)")
      ->required();
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--threads", threads, "worker threads for sweep cells");
  app.add_flag("--verbose", verbose, "chatty progress notes");
  CLI11_PARSE(app, argc, argv);

  RunContext ctx;
  try {
    ctx.cfg = load_config(config_path);
    ctx.out_dir = out_dir;
    ctx.threads = std::max(1, threads);
    ctx.verbose = verbose;
    fs::create_directories(ctx.out_dir);

    const std::string command = ctx.cfg.get("command");
    int rc;
    if (command == "ground-state")
      rc = cmd_ground_state(ctx);
    else if (command == "reduce")
      rc = cmd_reduce(ctx);
    else if (command == "geodesics")
      rc = cmd_geodesics(ctx);
    else if (command == "cc")
      rc = cmd_cc(ctx);
    else if (command == "constants")
      rc = cmd_constants(ctx);
    else if (command == "homoclinic")
      rc = cmd_homoclinic(ctx);
    else
      throw ValidationError("config: unknown command '" + command + "'");
    write_manifest(ctx);
    return rc;
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::validation || e.kind() == ErrorKind::domain ||
        e.kind() == ErrorKind::resource) {
      std::cerr << "error: " << e.what() << "\n";
      return 2;
    }
    std::cerr << "error: kind = " << to_string(e.kind()) << "\nmessage = " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
