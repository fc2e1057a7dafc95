// ============================================================================
// inequality_harness.hpp -- end-to-end numerical verification of the
// inequalities satisfied by the Bernoulli constant and the free-boundary
// solutions: Brunn-Minkowski, Urysohn-type lower bound, rotation-average
// (Hadwiger) sequences, homogeneity, inclusion laws under Minkowski
// interpolation, gradient monotonicity, and uniqueness at the constant.
//
// Every check returns a CheckReport with explicit margins and tolerances;
// failing margins never throw, they just fail the report.  Bernoulli
// constants are memoized in a thread-safe cache keyed by the exact body
// description, exponent, and grid, so suites sharing bodies do not recompute.
// ============================================================================
#pragma once

#include <algorithm>
#include <chrono>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "bernoulli/check_report.hpp"
#include "bernoulli/convex_geometry.hpp"
#include "bernoulli/errors.hpp"
#include "bernoulli/exterior_fbp.hpp"
#include "bernoulli/interior_fbp.hpp"
#include "bernoulli/minkowski_comb.hpp"
#include "bernoulli/ring_solver.hpp"

namespace bernoulli {

// ---------------------------------------------------------------------------
// options and Lambda cache
// ---------------------------------------------------------------------------

struct HarnessOptions {
  int M = 96;              // default verification grid: accurate yet fast
  int L = 48;
  double newton_tol = 1e-8;
  double fp_tol = 1e-6;
  double bisect_tol = 1e-4;
  double feas_tol = 1e-3;
  double incl_tol = 1e-4;
  int jobs = 1;

  [[nodiscard]] PLaplaceParams params(double p) const {
    PLaplaceParams prm;
    prm.p = p;
    prm.L = L;
    prm.newton_tol = newton_tol;
    return prm;
  }
};

/// Thread-safe memoization of bernoulli_constant keyed by body, p, and the
/// solver configuration.  The first caller computes; concurrent callers for
/// the same key wait on the shared future.
class LambdaCache {
 public:
  [[nodiscard]] BernoulliConstantResult get(const BodySpec& body, double p,
                                            const HarnessOptions& opt) {
    const std::string key = body.to_json().dump() + "|p=" + std::to_string(p) +
                            "|M=" + std::to_string(opt.M) +
                            "|L=" + std::to_string(opt.L) +
                            "|bt=" + std::to_string(opt.bisect_tol);
    std::shared_future<BernoulliConstantResult> fut;
    bool compute = false;
    std::shared_ptr<std::promise<BernoulliConstantResult>> prom;
    {
      std::lock_guard<std::mutex> lock(mu_);
      auto it = map_.find(key);
      if (it == map_.end()) {
        prom = std::make_shared<std::promise<BernoulliConstantResult>>();
        fut = prom->get_future().share();
        map_.emplace(key, fut);
        compute = true;
      } else {
        fut = it->second;
      }
    }
    if (compute) {
      try {
        prom->set_value(
            bernoulli_constant(body.sample(opt.M), opt.params(p), opt.bisect_tol,
                               opt.feas_tol));
      } catch (...) {
        prom->set_exception(std::current_exception());
      }
    }
    return fut.get();
  }

 private:
  std::mutex mu_;
  std::map<std::string, std::shared_future<BernoulliConstantResult>> map_;
};

namespace detail {

class StopWatch {
 public:
  [[nodiscard]] double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
};

/// Least-squares homothety test: bodies are homothetic iff
/// h1 = alpha h0 + v . theta_hat with alpha = ratio of mean widths and
/// v the mismatch of Steiner points.
[[nodiscard]] inline bool homothetic_within(const Vec& h0, const Vec& h1,
                                            double tol) {
  const double alpha = mean_width(h1) / mean_width(h0);
  const Eigen::Vector2d v = steiner_point(h1) - alpha * steiner_point(h0);
  const Vec th = grid_angles(static_cast<int>(h0.size()));
  const Vec fit = alpha * h0 + v.x() * th.cos() + v.y() * th.sin();
  const double scale = std::max(1.0, h1.maxCoeff());
  return (h1 - fit).abs().maxCoeff() <= tol * scale;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// individual checks
// ---------------------------------------------------------------------------

/// Brunn-Minkowski inequality for the Bernoulli constant:
/// Lambda((1-l) A + l B) <= harmonic mean of Lambda(A), Lambda(B).
[[nodiscard]] inline CheckReport bm_check(const BodySpec& om0, const BodySpec& om1,
                                          double lambda, double p,
                                          const HarnessOptions& opt,
                                          LambdaCache& cache) {
  detail::StopWatch sw;
  const double lam0 = cache.get(om0, p, opt).lambda;
  const double lam1 = cache.get(om1, p, opt).lambda;
  const BodySpec comb = BodySpec::minkowski_combo(
      {{1.0 - lambda, om0}, {lambda, om1}});
  const double lam_c = cache.get(comb, p, opt).lambda;
  const double rhs = tau_harmonic_mean(lam0, lam1, lambda);
  const double margin = rhs - lam_c;
  const double prop_tol = opt.bisect_tol * (rhs + lam_c);  // propagated Lambda error
  const bool homothetic =
      detail::homothetic_within(om0.sample(opt.M), om1.sample(opt.M), 1e-9);
  const bool equality_within = std::abs(margin) <= 2.0 * prop_tol;

  CheckReport rep;
  rep.name = "bm lambda=" + std::to_string(lambda);
  rep.inputs = {{"omega0", om0.to_json()}, {"omega1", om1.to_json()},
                {"lambda", lambda},        {"p", p}};
  rep.computed = {{"lambda0", lam0},
                  {"lambda1", lam1},
                  {"lambda_comb", lam_c},
                  {"rhs_harmonic_mean", rhs},
                  {"inputs_homothetic", homothetic},
                  {"equality_within_tolerance", equality_within}};
  rep.margins = {{"bm_margin", margin}};
  rep.tolerances = {{"prop_tol", prop_tol}, {"bisect_tol", opt.bisect_tol}};
  rep.pass = margin >= -2.0 * prop_tol;
  rep.wall_time_s = sw.seconds();
  return rep;
}

/// Urysohn-type inequality: Lambda(Omega) >= Lambda(ball with the same mean
/// width), with equality exactly for balls.
[[nodiscard]] inline CheckReport urysohn_check(const BodySpec& om, double p,
                                               const HarnessOptions& opt,
                                               LambdaCache& cache) {
  detail::StopWatch sw;
  const Vec h = om.sample(opt.M);
  const double b = mean_width(h);
  const double lam = cache.get(om, p, opt).lambda;
  const double lam_ball_b = lambda_ball(b / 2.0, p);
  const double margin = lam - lam_ball_b;
  const double prop_tol = opt.bisect_tol * (lam + lam_ball_b);

  CheckReport rep;
  rep.name = "urysohn";
  rep.inputs = {{"omega", om.to_json()}, {"p", p}};
  rep.computed = {{"lambda", lam}, {"mean_width", b}, {"lambda_ball", lam_ball_b}};
  rep.margins = {{"urysohn_margin", margin}};
  rep.tolerances = {{"prop_tol", prop_tol}};
  rep.pass = margin >= -2.0 * prop_tol;
  rep.wall_time_s = sw.seconds();
  return rep;
}

/// Rotation-average sequence Omega_n = (1/n) sum_k rho_{2 pi k / n} Omega:
/// the mean width is conserved, Lambda is nonincreasing in n, and Omega_n
/// converges to the ball of radius b/2 about the Steiner point.  The
/// Hausdorff distance to that ball must decrease strictly whenever the body
/// actually changes (for centrally symmetric Omega the n = 1 and n = 2
/// bodies coincide exactly, giving a legitimate plateau).
[[nodiscard]] inline CheckReport hadwiger_sequence(const BodySpec& om, double p,
                                                   int n_max,
                                                   const HarnessOptions& opt,
                                                   LambdaCache& cache) {
  detail::StopWatch sw;
  if (n_max < 2) throw std::invalid_argument("hadwiger_sequence: n_max must be >= 2");
  const Vec th = grid_angles(opt.M);

  std::vector<BodySpec> bodies;
  std::vector<Vec> hs;
  std::vector<double> widths, lambdas, dists;
  for (int n = 1; n <= n_max; ++n) {
    std::vector<std::pair<double, BodySpec>> terms;
    terms.reserve(n);
    for (int k = 1; k <= n; ++k)
      terms.emplace_back(1.0 / n, BodySpec::rotated(2.0 * kPi * k / n, om));
    BodySpec body = BodySpec::minkowski_combo(terms);
    const Vec h = body.sample(opt.M);
    const double b = mean_width(h);
    const Eigen::Vector2d s = steiner_point(h);
    const Vec h_ball = b / 2.0 + s.x() * th.cos() + s.y() * th.sin();
    widths.push_back(b);
    dists.push_back((h - h_ball).abs().maxCoeff());
    lambdas.push_back(cache.get(body, p, opt).lambda);
    hs.push_back(h);
    bodies.push_back(std::move(body));
  }

  const double scale = std::max(1.0, hs[0].maxCoeff());
  double width_dev = 0.0;
  for (double b : widths) width_dev = std::max(width_dev, std::abs(b - widths[0]));

  bool lambda_monotone = true;
  double worst_lambda_inc = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < lambdas.size(); ++i) {
    const double inc = lambdas[i + 1] - lambdas[i];
    worst_lambda_inc = std::max(worst_lambda_inc, inc);
    if (inc > 2.0 * opt.bisect_tol * (lambdas[i] + lambdas[i + 1]))
      lambda_monotone = false;
  }

  bool dist_decreasing = true;
  for (std::size_t i = 0; i + 1 < dists.size(); ++i) {
    const bool same_body = (hs[i + 1] - hs[i]).abs().maxCoeff() <= 1e-12 * scale;
    if (same_body) {
      if (dists[i + 1] > dists[i] + 1e-12 * scale) dist_decreasing = false;
    } else if (!(dists[i + 1] < dists[i])) {
      dist_decreasing = false;
    }
  }

  CheckReport rep;
  rep.name = "hadwiger";
  rep.inputs = {{"omega", om.to_json()}, {"p", p}, {"n_max", n_max}};
  rep.computed = {{"mean_widths", widths},
                  {"lambdas", lambdas},
                  {"hausdorff_to_ball", dists},
                  {"worst_lambda_increase", worst_lambda_inc}};
  rep.margins = {{"width_deviation", width_dev},
                 {"final_vs_first_distance", dists.front() - dists.back()}};
  rep.tolerances = {{"width_tol", 1e-8}, {"bisect_tol", opt.bisect_tol}};
  rep.pass = width_dev <= 1e-8 && lambda_monotone && dist_decreasing &&
             dists.back() < dists.front();
  rep.wall_time_s = sw.seconds();
  return rep;
}

/// Homogeneity Lambda(alpha Omega) = Lambda(Omega) / alpha.
[[nodiscard]] inline CheckReport homogeneity_check(const BodySpec& om, double alpha,
                                                   double p,
                                                   const HarnessOptions& opt,
                                                   LambdaCache& cache) {
  detail::StopWatch sw;
  const double lam = cache.get(om, p, opt).lambda;
  const double lam_scaled = cache.get(BodySpec::scaled(alpha, om), p, opt).lambda;
  const double rel_err = std::abs(lam_scaled - lam / alpha) / (lam / alpha);

  CheckReport rep;
  rep.name = "homogeneity alpha=" + std::to_string(alpha);
  rep.inputs = {{"omega", om.to_json()}, {"alpha", alpha}, {"p", p}};
  rep.computed = {{"lambda", lam}, {"lambda_scaled", lam_scaled}};
  rep.margins = {{"relative_error", rel_err}};
  rep.tolerances = {{"rel_tol", 2.0 * opt.bisect_tol}};
  rep.pass = rel_err <= 2.0 * opt.bisect_tol;
  rep.wall_time_s = sw.seconds();
  return rep;
}

/// Exterior inclusion law (free domains of interpolated data contain the
/// interpolated free domains); wraps exterior_inclusion_check.
[[nodiscard]] inline CheckReport exterior_inclusion_report(
    const BodySpec& k0, const BodySpec& k1, double tau0, double tau1, double lambda,
    double p, const HarnessOptions& opt) {
  detail::StopWatch sw;
  const ExteriorInclusionResult r =
      exterior_inclusion_check(k0.sample(opt.M), k1.sample(opt.M), tau0, tau1,
                               lambda, opt.params(p), opt.fp_tol, opt.incl_tol);
  CheckReport rep;
  rep.name = "exterior_inclusion lambda=" + std::to_string(lambda);
  rep.inputs = {{"k0", k0.to_json()}, {"k1", k1.to_json()},
                {"tau0", tau0},       {"tau1", tau1},
                {"lambda", lambda},   {"p", p}};
  rep.computed = {{"margin", r.margin}, {"scale", r.scale}};
  rep.margins = {{"inclusion_margin", r.margin}};
  rep.tolerances = {{"incl_tol", opt.incl_tol}};
  rep.pass = r.pass;
  rep.wall_time_s = sw.seconds();
  return rep;
}

/// Interior inclusion law for the largest sets:
/// (1-l) K(Omega0, tau0) + l K(Omega1, tau1) is contained in
/// K(Omega_l, tau_l) with tau_l the weighted harmonic mean.  Requires
/// tau_i >= Lambda(Omega_i) (checked first; InfeasibleTau otherwise).
[[nodiscard]] inline CheckReport largest_set_inclusion_check(
    const BodySpec& om0, const BodySpec& om1, double tau0, double tau1,
    double lambda, double p, const HarnessOptions& opt, LambdaCache& cache) {
  detail::StopWatch sw;
  const double lam0 = cache.get(om0, p, opt).lambda;
  const double lam1 = cache.get(om1, p, opt).lambda;
  if (tau0 < lam0 * (1.0 - opt.bisect_tol))
    throw InfeasibleTau("tau0 below the Bernoulli constant of omega0",
                        {{"tau0", tau0}, {"lambda0", lam0}});
  if (tau1 < lam1 * (1.0 - opt.bisect_tol))
    throw InfeasibleTau("tau1 below the Bernoulli constant of omega1",
                        {{"tau1", tau1}, {"lambda1", lam1}});

  const PLaplaceParams prm = opt.params(p);
  InteriorOptions iopt;
  iopt.fp_tol = opt.fp_tol;
  iopt.max_it = 2000;
  auto solve_K = [&](const Vec& h, double tau) {
    InteriorSolution s = solve_interior(h, tau, prm, iopt);
    if (s.feasibility != Feasibility::Feasible)
      throw TrialDivergence("interior solve not feasible in inclusion check",
                            {{"tau", tau}, {"status", to_string(s.feasibility)}});
    return s.h_K;
  };
  const double tau_l = tau_harmonic_mean(tau0, tau1, lambda);
  const Vec h0 = om0.sample(opt.M), h1 = om1.sample(opt.M);
  const Vec K0 = solve_K(h0, tau0);
  const Vec K1 = solve_K(h1, tau1);
  const Vec Kl = solve_K((1.0 - lambda) * h0 + lambda * h1, tau_l);
  const Vec combo = (1.0 - lambda) * K0 + lambda * K1;
  const double scale = std::max(1.0, Kl.maxCoeff());
  const double margin = (Kl - combo).minCoeff();

  CheckReport rep;
  rep.name = "interior_inclusion lambda=" + std::to_string(lambda);
  rep.inputs = {{"omega0", om0.to_json()}, {"omega1", om1.to_json()},
                {"tau0", tau0},            {"tau1", tau1},
                {"lambda", lambda},        {"p", p}};
  rep.computed = {{"tau_lambda", tau_l}, {"margin", margin}, {"scale", scale}};
  rep.margins = {{"inclusion_margin", margin}};
  rep.tolerances = {{"incl_tol", opt.incl_tol}};
  rep.pass = margin >= -opt.incl_tol * scale;
  rep.wall_time_s = sw.seconds();
  return rep;
}

/// Per-direction monotonicity of |Du| = -1/h_t along the level parameter,
/// evaluated at half-levels by forward differences.
[[nodiscard]] inline CheckReport gradient_monotonicity_check(
    const RingSolution& sol, double mono_tol = 1e-6) {
  detail::StopWatch sw;
  const int L = sol.L();
  const double dt = 1.0 / L;
  Mat g(sol.M(), L);  // gradient at half-levels t_{k+1/2}
  for (int k = 0; k < L; ++k)
    g.col(k) = (-dt / (sol.H.col(k + 1) - sol.H.col(k)).array()).matrix();
  double worst = std::numeric_limits<double>::infinity();
  for (int k = 0; k + 1 < L; ++k)
    worst = std::min(worst, (g.col(k + 1) - g.col(k)).minCoeff());
  const double tol_abs = mono_tol * std::max(1.0, sol.scale);

  CheckReport rep;
  rep.name = "gradient_monotonicity";
  rep.inputs = {{"p", sol.p}, {"M", sol.M()}, {"L", L}};
  rep.computed = {{"min_forward_difference", worst}};
  rep.margins = {{"monotonicity_margin", worst}};
  rep.tolerances = {{"mono_tol", tol_abs}};
  rep.pass = worst >= -tol_abs;
  rep.wall_time_s = sw.seconds();
  return rep;
}

// ---------------------------------------------------------------------------
// named suites
// ---------------------------------------------------------------------------

struct SuiteResult {
  std::vector<CheckReport> reports;
  bool all_pass = true;

  [[nodiscard]] nlohmann::json to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : reports) arr.push_back(r.to_json());
    return {{"reports", arr}, {"all_pass", all_pass}};
  }
};

namespace detail {

/// Runs independent check thunks with bounded parallelism; the result order
/// is the submission order regardless of scheduling.
[[nodiscard]] inline std::vector<CheckReport> run_parallel(
    std::vector<std::function<CheckReport()>> thunks, int jobs) {
  std::vector<CheckReport> out(thunks.size());
  if (jobs <= 1) {
    for (std::size_t i = 0; i < thunks.size(); ++i) out[i] = thunks[i]();
    return out;
  }
  std::mutex mu;
  std::size_t next = 0;
  auto worker = [&]() {
    for (;;) {
      std::size_t i;
      {
        std::lock_guard<std::mutex> lock(mu);
        if (next >= thunks.size()) return;
        i = next++;
      }
      out[i] = thunks[i]();
    }
  };
  std::vector<std::thread> pool;
  const int n = std::min<int>(jobs, static_cast<int>(thunks.size()));
  pool.reserve(n);
  for (int i = 0; i < n; ++i) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  return out;
}

}  // namespace detail

/// Runs one named suite.  Available names: bm, urysohn, hadwiger,
/// exterior-inclusion, interior-inclusion, uniqueness, monotonicity.
[[nodiscard]] inline SuiteResult run_suite(const std::string& name,
                                           const HarnessOptions& opt,
                                           LambdaCache& cache) {
  const BodySpec disk1 = BodySpec::disk(1.0);
  const BodySpec disk2 = BodySpec::disk(2.0);
  const BodySpec ell = BodySpec::ellipse(2.0, 1.0);
  const BodySpec sq = BodySpec::regular_ngon(4, 1.0, 0.05);

  std::vector<std::function<CheckReport()>> thunks;
  auto add = [&](std::function<CheckReport()> f, const std::string& tag) {
    thunks.push_back([f = std::move(f), tag]() {
      CheckReport r = f();
      r.name = tag + " " + r.name;
      return r;
    });
  };

  if (name == "bm") {
    for (double l : {0.25, 0.5, 0.75}) {
      add([=, &cache]() { return bm_check(disk1, ell, l, 2.0, opt, cache); },
          "disk+ellipse");
      add([=, &cache]() { return bm_check(ell, sq, l, 2.0, opt, cache); },
          "ellipse+square");
    }
    add([=, &cache]() { return bm_check(disk1, disk2, 0.5, 2.0, opt, cache); },
        "disk+disk(homothetic)");
  } else if (name == "urysohn") {
    add([=, &cache]() { return urysohn_check(ell, 2.0, opt, cache); }, "ellipse");
    add([=, &cache]() { return urysohn_check(disk2, 2.0, opt, cache); },
        "disk(equality)");
  } else if (name == "hadwiger") {
    add([=, &cache]() { return hadwiger_sequence(ell, 2.0, 8, opt, cache); },
        "ellipse");
  } else if (name == "exterior-inclusion") {
    const double ta = 1.0 / (2.0 * std::log(2.0));
    add([=]() {
      return exterior_inclusion_report(disk1, ell, ta, ta, 0.5, 2.0, opt);
    }, "disk+ellipse");
    add([=]() {
      return exterior_inclusion_report(disk1, disk2, ta, ta / 2.0, 0.5, 2.0, opt);
    }, "disk+disk(homothetic)");
  } else if (name == "interior-inclusion") {
    add([=, &cache]() {
      return largest_set_inclusion_check(disk1, ell, 4.0, 4.0, 0.5, 2.0, opt, cache);
    }, "disk+ellipse");
    add([=, &cache]() {
      return largest_set_inclusion_check(disk1, disk2, 4.0, 2.0, 0.5, 2.0, opt,
                                         cache);
    }, "disk+disk(homothetic)");
  } else if (name == "uniqueness") {
    for (double p : {2.0, 3.0}) {
      add([=]() {
        return uniqueness_probe(disk1.sample(opt.M), opt.params(p), opt.bisect_tol);
      }, "disk p=" + std::to_string(p));
      add([=]() {
        return uniqueness_probe(ell.sample(opt.M), opt.params(p), opt.bisect_tol);
      }, "ellipse p=" + std::to_string(p));
    }
  } else if (name == "monotonicity") {
    auto ring_check = [opt](double p, const Vec& ho, const Vec& hi,
                            const std::string&) {
      RingSolution sol = solve_ring(ho, hi, opt.params(p));
      return gradient_monotonicity_check(sol);
    };
    const Vec hD = disk1.sample(opt.M), hE = ell.sample(opt.M);
    for (double p : {1.5, 2.0, 3.0})
      add([=]() { return ring_check(p, hD, 0.5 * hD, "disk"); },
          "disk p=" + std::to_string(p));
    add([=]() { return ring_check(2.0, hE, 0.5 * hE, "ellipse"); },
        "ellipse p=2");
    add([=]() {
      ExteriorSolution ext =
          solve_exterior(hE, 1.0 / (2.0 * std::log(2.0)), opt.params(2.0), opt.fp_tol);
      return gradient_monotonicity_check(ext.ring);
    }, "ellipse exterior p=2");
    add([=]() {
      InteriorOptions iopt;
      iopt.fp_tol = opt.fp_tol;
      InteriorSolution sol = solve_interior(hD, 4.0, opt.params(2.0), iopt);
      return gradient_monotonicity_check(sol.ring);
    }, "disk interior tau=4 p=2");
  } else {
    throw std::invalid_argument("unknown suite: " + name);
  }

  SuiteResult out;
  out.reports = detail::run_parallel(std::move(thunks), opt.jobs);
  for (const auto& r : out.reports) out.all_pass = out.all_pass && r.pass;
  return out;
}

[[nodiscard]] inline const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{
      "bm",       "urysohn",    "hadwiger", "exterior-inclusion",
      "interior-inclusion", "uniqueness", "monotonicity"};
  return names;
}

}  // namespace bernoulli
