// ============================================================================
// bernoulli_lab -- command-line front end for the Bernoulli free-boundary
// library.
//
// Subcommands:
//   ball      closed-form Bernoulli constant of a ball
//   lambda    Bernoulli constant of a convex body by bisection
//   exterior  exterior free-boundary solve at a given gradient level
//   interior  interior free-boundary solve (largest set) at a given level
//   combine   Minkowski combination of two interior solutions + certificates
//   verify    named verification suites over the paper-level inequalities
//
// JSON summaries go to standard output; CSV artifacts go to --out (or the
// BERNOULLI_LAB_OUT directory if set).  Usage errors exit 2; solver errors
// exit 1 with a structured JSON error {kind, detail, context}; verify exits
// 0 only if every check passes.
// ============================================================================
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include <bernoulli/bernoulli.hpp>

namespace {

using namespace bernoulli;
namespace fs = std::filesystem;
using nlohmann::json;

struct CommonOpts {
  int M = 256;
  int L = 0;  // 0 -> M/2
  double newton_tol = 1e-8;
  double fp_tol = 1e-6;
  double bisect_tol = 1e-4;
  std::string out;
  int jobs = 1;

  [[nodiscard]] int level_count() const { return L > 0 ? L : M / 2; }

  [[nodiscard]] PLaplaceParams params(double p) const {
    PLaplaceParams prm;
    prm.p = p;
    prm.L = level_count();
    prm.newton_tol = newton_tol;
    return prm;
  }

  [[nodiscard]] std::optional<fs::path> out_dir() const {
    if (!out.empty()) return fs::path(out);
    if (const char* env = std::getenv("BERNOULLI_LAB_OUT"); env && *env)
      return fs::path(env);
    return std::nullopt;
  }

  [[nodiscard]] json echo(double p) const {
    return {{"M", M},
            {"L", level_count()},
            {"p", p},
            {"newton_tol", newton_tol},
            {"fp_tol", fp_tol},
            {"bisect_tol", bisect_tol}};
  }
};

void add_common(CLI::App* cmd, CommonOpts& c) {
  cmd->add_option("--M", c.M, "number of support directions (even, >= 16)");
  cmd->add_option("--L", c.L, "number of level intervals (default M/2)");
  cmd->add_option("--newton-tol", c.newton_tol, "Newton residual tolerance");
  cmd->add_option("--fp-tol", c.fp_tol, "free-boundary fixed-point tolerance");
  cmd->add_option("--bisect-tol", c.bisect_tol, "relative bisection tolerance");
  cmd->add_option("--out", c.out,
                  "output directory for CSV artifacts (default $BERNOULLI_LAB_OUT)");
  cmd->add_option("--jobs", c.jobs, "parallel workers for independent checks");
}

[[nodiscard]] BodySpec parse_body(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw CLI::ValidationError("--body", std::string("invalid JSON: ") + e.what());
  }
  try {
    return BodySpec::from_json(j);
  } catch (const std::exception& e) {
    throw CLI::ValidationError("--body", e.what());
  }
}

void emit(const json& j) { std::cout << j.dump(2) << std::endl; }

// ---------------------------------------------------------------------------

int run_ball(double R, double p, int N) {
  emit({{"lambda", lambda_ball(R, p, N)}, {"config", {{"R", R}, {"p", p}, {"N", N}}}});
  return 0;
}

int run_lambda(const CommonOpts& c, const std::string& body_text, double p) {
  const BodySpec body = parse_body(body_text);
  const Vec h = body.sample(c.M);
  const BernoulliConstantResult r =
      bernoulli_constant(h, c.params(p), c.bisect_tol);
  json probes = json::array();
  for (const auto& pr : r.log)
    probes.push_back({{"tau", pr.tau},
                      {"feasibility", to_string(pr.feasibility)},
                      {"iterations", pr.iterations},
                      {"fp_tol", pr.fp_tol}});
  json out{{"lambda", r.lambda},
           {"bracket", {r.bracket.first, r.bracket.second}},
           {"iterations", r.iterations},
           {"probes", probes},
           {"body", body.to_json()},
           {"config", c.echo(p)}};
  if (auto dir = c.out_dir()) {
    write_support_csv(*dir / "body.csv", h);
    out["csv"] = {{"body", (*dir / "body.csv").string()}};
  }
  emit(out);
  return 0;
}

int run_exterior(const CommonOpts& c, const std::string& body_text, double tau,
                 double p) {
  const BodySpec body = parse_body(body_text);
  const Vec h_K = body.sample(c.M);
  const ExteriorSolution sol = solve_exterior(h_K, tau, c.params(p), c.fp_tol);
  const Vec g_out = boundary_gradient(sol.ring, Side::Outer);
  const Vec g_in = boundary_gradient(sol.ring, Side::Inner);
  const Radii rad = inradius_outradius(sol.h_domain);
  json out{{"tau", tau},
           {"trial_iterations", sol.trial_iterations},
           {"trial_residual", sol.trial_residual},
           {"newton_iterations", sol.ring.newton_iterations},
           {"domain", {{"r_in", rad.r_in}, {"R_out", rad.R_out},
                       {"mean_width", mean_width(sol.h_domain)},
                       {"area", area(sol.h_domain)}}},
           {"body", body.to_json()},
           {"config", c.echo(p)}};
  if (auto dir = c.out_dir()) {
    write_support_csv(*dir / "domain.csv", sol.h_domain);
    write_ring_csv(*dir / "ring.csv", sol.ring.H);
    write_gradient_csv(*dir / "gradient.csv", g_out, g_in);
    out["csv"] = {{"domain", (*dir / "domain.csv").string()},
                  {"ring", (*dir / "ring.csv").string()},
                  {"gradient", (*dir / "gradient.csv").string()}};
  }
  emit(out);
  return 0;
}

int run_interior(const CommonOpts& c, const std::string& body_text, double tau,
                 double p, int max_it) {
  const BodySpec body = parse_body(body_text);
  const Vec h_Om = body.sample(c.M);
  InteriorOptions iopt;
  iopt.fp_tol = c.fp_tol;
  iopt.max_it = max_it;
  const InteriorSolution sol = solve_interior(h_Om, tau, c.params(p), iopt);
  if (sol.feasibility == Feasibility::Stalled)
    throw TrialDivergence("interior iteration stalled without certificate",
                          {{"tau", tau},
                           {"residual", sol.fp_residual},
                           {"iterations", sol.trial_iterations}});
  json out{{"tau", tau},
           {"status", to_string(sol.feasibility)},
           {"trial_iterations", sol.trial_iterations},
           {"fp_residual", sol.fp_residual},
           {"body", body.to_json()},
           {"config", c.echo(p)}};
  if (sol.feasibility == Feasibility::Feasible) {
    const Radii rad = inradius_outradius(sol.h_K);
    out["inner_body"] = {{"r_in", rad.r_in},
                         {"R_out", rad.R_out},
                         {"mean_width", mean_width(sol.h_K)},
                         {"area", area(sol.h_K)}};
    if (auto dir = c.out_dir()) {
      write_support_csv(*dir / "inner_body.csv", sol.h_K);
      write_ring_csv(*dir / "ring.csv", sol.ring.H);
      write_gradient_csv(*dir / "gradient.csv",
                         boundary_gradient(sol.ring, Side::Outer),
                         boundary_gradient(sol.ring, Side::Inner));
      out["csv"] = {{"inner_body", (*dir / "inner_body.csv").string()},
                    {"ring", (*dir / "ring.csv").string()},
                    {"gradient", (*dir / "gradient.csv").string()}};
    }
  }
  emit(out);
  return 0;
}

int run_combine(const CommonOpts& c, const std::string& body0_text,
                const std::string& body1_text, double tau0, double tau1,
                double lambda, double p) {
  const BodySpec b0 = parse_body(body0_text);
  const BodySpec b1 = parse_body(body1_text);
  const PLaplaceParams prm = c.params(p);
  InteriorOptions iopt;
  iopt.fp_tol = c.fp_tol;
  auto solve_one = [&](const BodySpec& b, double tau) {
    InteriorSolution s = solve_interior(b.sample(c.M), tau, prm, iopt);
    if (s.feasibility != Feasibility::Feasible)
      throw InfeasibleTau("interior problem not feasible for combination input",
                          {{"tau", tau}, {"status", to_string(s.feasibility)}});
    return s;
  };
  const InteriorSolution s0 = solve_one(b0, tau0);
  const InteriorSolution s1 = solve_one(b1, tau1);
  const std::vector<double> w{1.0 - lambda, lambda};
  const std::vector<const RingSolution*> sols{&s0.ring, &s1.ring};
  const Mat Hl = combine_solutions(w, sols);
  const CheckReport sub = combination_subsolution_check(w, sols);
  const CheckReport hm = gradient_harmonic_mean_check(w, sols);
  json out{{"tau0", tau0},
           {"tau1", tau1},
           {"lambda", lambda},
           {"tau_lambda", tau_harmonic_mean(tau0, tau1, lambda)},
           {"subsolution", sub.to_json()},
           {"harmonic_mean_identity", hm.to_json()},
           {"body0", b0.to_json()},
           {"body1", b1.to_json()},
           {"config", c.echo(p)}};
  if (auto dir = c.out_dir()) {
    write_ring_csv(*dir / "combined_ring.csv", Hl);
    out["csv"] = {{"combined_ring", (*dir / "combined_ring.csv").string()}};
  }
  emit(out);
  return sub.pass && hm.pass ? 0 : 1;
}

int run_verify(CommonOpts c, std::vector<std::string> suites,
               const std::string& config_path) {
  if (!config_path.empty()) {
    std::ifstream f(config_path);
    if (!f) throw CLI::ValidationError("--config", "cannot open " + config_path);
    json cfg = json::parse(f);
    if (cfg.contains("M")) c.M = cfg["M"].get<int>();
    if (cfg.contains("L")) c.L = cfg["L"].get<int>();
    if (cfg.contains("newton_tol")) c.newton_tol = cfg["newton_tol"].get<double>();
    if (cfg.contains("fp_tol")) c.fp_tol = cfg["fp_tol"].get<double>();
    if (cfg.contains("bisect_tol")) c.bisect_tol = cfg["bisect_tol"].get<double>();
    if (cfg.contains("jobs")) c.jobs = cfg["jobs"].get<int>();
  }
  HarnessOptions opt;
  opt.M = c.M;
  opt.L = c.level_count();
  opt.newton_tol = c.newton_tol;
  opt.fp_tol = c.fp_tol;
  opt.bisect_tol = c.bisect_tol;
  opt.jobs = c.jobs;

  if (suites.size() == 1 && suites[0] == "all") suites = suite_names();
  LambdaCache cache;
  json all = json::array();
  bool pass = true;
  for (const auto& name : suites) {
    SuiteResult r = run_suite(name, opt, cache);
    pass = pass && r.all_pass;
    json jr = r.to_json();
    jr["suite"] = name;
    all.push_back(jr);
    if (auto dir = c.out_dir()) {
      write_json(*dir / ("verify_" + name + ".json"), jr);
      auto f = detail::open_out(*dir / ("verify_" + name + ".csv"));
      f << "check,pass,wall_time_s\n";
      for (const auto& rep : r.reports)
        f << '"' << rep.name << "\"," << (rep.pass ? 1 : 0) << ','
          << detail::fmt17(rep.wall_time_s) << '\n';
    }
  }
  emit({{"suites", all},
        {"all_pass", pass},
        {"config", c.echo(0.0)}});
  return pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bernoulli free-boundary laboratory: p-Laplace free boundaries "
               "on planar convex bodies in support-function form"};
  app.require_subcommand(1);

  // ball
  auto* ball = app.add_subcommand("ball", "closed-form Bernoulli constant of a ball");
  double ball_R = 1.0, ball_p = 2.0;
  int ball_N = 2;
  ball->add_option("--R", ball_R, "radius")->check(CLI::PositiveNumber);
  ball->add_option("--p", ball_p, "exponent (> 1)");
  ball->add_option("--N", ball_N, "dimension (>= 2)");

  // lambda
  auto* lam = app.add_subcommand("lambda", "Bernoulli constant by bisection");
  CommonOpts lam_c;
  std::string lam_body;
  double lam_p = 2.0;
  lam->add_option("--body", lam_body, "body JSON")->required();
  lam->add_option("--p", lam_p, "exponent (>= 1.1)");
  add_common(lam, lam_c);

  // exterior
  auto* ext = app.add_subcommand("exterior", "exterior free-boundary solve");
  CommonOpts ext_c;
  std::string ext_body;
  double ext_tau = 1.0, ext_p = 2.0;
  ext->add_option("--body", ext_body, "core body JSON")->required();
  ext->add_option("--tau", ext_tau, "gradient level (> 0)")->required();
  ext->add_option("--p", ext_p, "exponent (>= 1.1)");
  add_common(ext, ext_c);

  // interior
  auto* intr = app.add_subcommand("interior", "interior free-boundary solve");
  CommonOpts int_c;
  std::string int_body;
  double int_tau = 1.0, int_p = 2.0;
  int int_max_it = 400;
  intr->add_option("--body", int_body, "outer body JSON")->required();
  intr->add_option("--tau", int_tau, "gradient level (> 0)")->required();
  intr->add_option("--p", int_p, "exponent (>= 1.1)");
  intr->add_option("--max-it", int_max_it, "trial iteration cap");
  add_common(intr, int_c);

  // combine
  auto* comb = app.add_subcommand(
      "combine", "Minkowski combination of two interior solutions");
  CommonOpts comb_c;
  std::string comb_b0, comb_b1;
  double comb_tau0 = 4.0, comb_tau1 = 4.0, comb_lambda = 0.5, comb_p = 2.0;
  comb->add_option("--body0", comb_b0, "first outer body JSON")->required();
  comb->add_option("--body1", comb_b1, "second outer body JSON")->required();
  comb->add_option("--tau0", comb_tau0, "gradient level for body0")->required();
  comb->add_option("--tau1", comb_tau1, "gradient level for body1")->required();
  comb->add_option("--lambda", comb_lambda, "interpolation weight in [0,1]");
  comb->add_option("--p", comb_p, "exponent (>= 1.1)");
  add_common(comb, comb_c);

  // verify
  auto* ver = app.add_subcommand("verify", "run named verification suites");
  CommonOpts ver_c;
  ver_c.M = 96;  // verification default grid; single solves default to 256
  std::vector<std::string> ver_suites{"all"};
  std::string ver_config;
  ver->add_option("--suite", ver_suites,
                  "suite name(s): bm, urysohn, hadwiger, exterior-inclusion, "
                  "interior-inclusion, uniqueness, monotonicity, all");
  ver->add_option("--config", ver_config, "JSON file with option overrides");
  add_common(ver, ver_c);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == static_cast<int>(CLI::ExitCodes::Success))
      return app.exit(e);  // --help / --version
    app.exit(e);
    return 2;
  }

  try {
    if (app.got_subcommand(ball)) return run_ball(ball_R, ball_p, ball_N);
    if (app.got_subcommand(lam)) return run_lambda(lam_c, lam_body, lam_p);
    if (app.got_subcommand(ext)) return run_exterior(ext_c, ext_body, ext_tau, ext_p);
    if (app.got_subcommand(intr))
      return run_interior(int_c, int_body, int_tau, int_p, int_max_it);
    if (app.got_subcommand(comb))
      return run_combine(comb_c, comb_b0, comb_b1, comb_tau0, comb_tau1,
                         comb_lambda, comb_p);
    if (app.got_subcommand(ver)) return run_verify(ver_c, ver_suites, ver_config);
  } catch (const CLI::ValidationError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const SolverError& e) {
    emit(e.to_json());
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid argument: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    emit({{"kind", "InternalError"}, {"detail", e.what()}, {"context", json::object()}});
    return 1;
  }
  return 2;
}
