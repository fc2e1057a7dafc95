// ============================================================================
// interior_fbp.hpp -- interior Bernoulli free-boundary problem and the
// Bernoulli constant.
//
// Interior problem: given a convex domain Omega and tau > 0, find a convex
// K inside Omega such that the p-capacitary potential of (Omega, K) has
// |Du| = tau on the free boundary dK.  Solutions exist iff tau >= Lambda(Omega),
// the Bernoulli constant; among them there is a largest set, which is the one
// the shrinking trial iteration below targets: K starts near Omega (inner
// parallel body) and shrinks until the gradient condition holds.
//
// The iteration moves h_K by a fraction of the local gap h_Omega - h_K in a
// smoothed log(g/tau) feedback field.  The gradient-to-boundary gain is
// ~ 1/gap, so gap preconditioning keeps the loop gain O(1) even when K hugs
// the outer boundary.  Morphological opening keeps the curvature radius of K
// bounded below so boundary gradients stay finite.
//
// Feasibility is three-valued: Feasible (residual met), Infeasible (K
// collapsed below r_min: tau < Lambda certified by degeneration), Stalled
// (no residual progress within the patience window, or iteration budget
// exhausted -- no certificate either way).  Bisection for Lambda treats
// Stalled as "not certified feasible", which is safe because the feasible
// side is always certified by an actual converged fixed point.
// ============================================================================
#pragma once

#include <chrono>
#include <cmath>
#include <optional>
#include <utility>
#include <vector>

#include "bernoulli/check_report.hpp"
#include "bernoulli/convex_geometry.hpp"
#include "bernoulli/errors.hpp"
#include "bernoulli/exterior_fbp.hpp"
#include "bernoulli/ring_solver.hpp"

namespace bernoulli {

// ---------------------------------------------------------------------------
// closed forms and brackets
// ---------------------------------------------------------------------------

/// Bernoulli constant of the N-ball of radius R:
/// ((N-1)/(p-1))^{(N-1)/(N-p)} / R for p != N, and e/R at p = N.
[[nodiscard]] inline double lambda_ball(double R, double p, int N = 2) {
  if (!(R > 0.0)) throw std::invalid_argument("lambda_ball: R must be positive");
  if (!(p > 1.0)) throw std::invalid_argument("lambda_ball: p must exceed 1");
  if (N < 2) throw std::invalid_argument("lambda_ball: N must be >= 2");
  if (std::abs(static_cast<double>(N) - p) < 1e-14) return std::exp(1.0) / R;
  const double nm1 = N - 1.0;
  return std::pow(nm1 / (p - 1.0), nm1 / (N - p)) / R;
}

/// Rigorous bracket for Lambda(Omega) from inclusion monotonicity,
/// lo = Lambda(B_{R_out}) tightened by the minimum-width bound 2/minwidth,
/// hi = Lambda(B_{r_in}).
[[nodiscard]] inline std::pair<double, double> lambda_bracket(const Vec& h,
                                                              double p) {
  const Radii rad = inradius_outradius(h);
  const double lo = std::max(lambda_ball(rad.R_out, p), 2.0 / min_width(h));
  const double hi = lambda_ball(rad.r_in, p);
  return {lo, hi};
}

// ---------------------------------------------------------------------------
// shrinking trial iteration
// ---------------------------------------------------------------------------

enum class Feasibility { Feasible, Infeasible, Stalled };

[[nodiscard]] inline const char* to_string(Feasibility f) {
  switch (f) {
    case Feasibility::Feasible: return "feasible";
    case Feasibility::Infeasible: return "infeasible";
    default: return "stalled";
  }
}

struct InteriorSolution {
  Feasibility feasibility = Feasibility::Stalled;
  Vec h_domain;        // the fixed outer body Omega
  Vec h_K;             // final inner body (converged largest set when Feasible)
  RingSolution ring;   // potential on (Omega, K) at the final iterate
  double tau = 0.0;
  double fp_residual = 0.0;  // max |g/tau - 1| on the free boundary
  int trial_iterations = 0;
};

/// Two-pass (1,4,1)/6 circular smoothing of a feedback field.
[[nodiscard]] inline Vec smooth_field(Vec r, int passes = 2) {
  for (int i = 0; i < passes; ++i) r = (roll(r, 1) + 4.0 * r + roll(r, -1)) / 6.0;
  return r;
}

namespace detail {

/// Gap-preconditioned shrink of h_K in the feedback field r with relative
/// step s; returns nullopt if no admissible update exists (every halved and
/// re-smoothed candidate violates containment, positivity, or curvature).
[[nodiscard]] inline std::optional<Vec> inner_update(const Vec& h_K, const Vec& h_Om,
                                                     Vec r, double s, double d0,
                                                     double eps0) {
  const Vec gap = h_Om - h_K;
  for (int tries = 0; tries < 8; ++tries) {
    Vec sig = s * r;
    const double m = sig.abs().maxCoeff();
    if (m > 0.25) sig *= 0.25 / m;  // cap relative gap change, keep anisotropy
    const Vec upd = (h_K - sig * gap).min(h_Om - 0.5 * d0);
    if (upd.minCoeff() > 2.0 * eps0) {
      Vec h_new = opening(project_to_convex(upd), eps0);
      if ((h_new <= h_Om - 0.4 * d0).all() && h_new.minCoeff() > 0.0 &&
          min_curv(h_new) >= 0.4 * eps0) {
        return h_new;
      }
    }
    s /= 2.0;
    r = smooth_field(std::move(r));
  }
  return std::nullopt;
}

}  // namespace detail

struct InteriorOptions {
  double fp_tol = 1e-6;
  int max_it = 400;
  int patience = 40;       // iterations without 1% residual improvement
  bool one_sided = false;  // accept max g <= tau(1+fp_tol): subsolution probe
  const Vec* K0 = nullptr;             // optional warm inner body
  const Mat* H0 = nullptr;             // optional warm ring levels
};

/// Shrinking trial iteration for the interior problem.  See the header
/// comment for the three-valued feasibility semantics.
[[nodiscard]] inline InteriorSolution solve_interior(const Vec& h_Om, double tau,
                                                     const PLaplaceParams& prm,
                                                     const InteriorOptions& opt = {}) {
  prm.validate();
  if (!(tau > 0.0)) throw InfeasibleTau("interior problem needs tau > 0");
  const Radii rad = inradius_outradius(h_Om);
  const double rin = rad.r_in;
  const double dth = 2.0 * kPi / static_cast<double>(h_Om.size());
  const double d0 = 0.05 * rin;
  // Opening radius: geometric scale floor, raised to the angular resolution of
  // the grid so that every trial iterate keeps its corners resolvable.
  const double eps0 = std::max(0.02 * rin, 1.2 * rad.R_out * dth);
  const double rmin = std::max(0.05 * rin, 2.5 * eps0);

  Vec h_K = (opt.K0 != nullptr) ? *opt.K0
                                : opening(project_to_convex(h_Om - d0), eps0);
  std::optional<Mat> H;
  if (opt.H0 != nullptr) H = *opt.H0;

  double step = 0.3;
  double res_prev = std::numeric_limits<double>::infinity();
  double best_res = std::numeric_limits<double>::infinity();
  int last_improve = 0;
  std::optional<std::pair<Vec, Vec>> prev;  // (h_K, r) of the last update
  int since_anchor = 0;

  auto result = [&](Feasibility f, RingSolution ring, double res, int it) {
    InteriorSolution out;
    out.feasibility = f;
    out.h_domain = h_Om;
    out.h_K = h_K;
    out.ring = std::move(ring);
    out.tau = tau;
    out.fp_residual = res;
    out.trial_iterations = it;
    return out;
  };

  RingSolution ring;
  for (int it = 0; it < opt.max_it; ++it) {
    ++since_anchor;
    std::optional<Mat> W;
    if (H) {
      W = adapt_warm(*H, h_Om, h_K);
      if (!valid_start(*W)) W.reset();
    }
    try {
      ring = solve_ring(h_Om, h_K, prm, W ? &*W : nullptr);
      H = ring.H;
    } catch (const SolverError&) {
      // roll back: smaller, smoother step from the previous iterate
      step /= 2.0;
      if (step < 1e-3 || !prev) throw;
      auto upd = detail::inner_update(prev->first, h_Om, prev->second, step, d0, eps0);
      if (!upd) throw;
      h_K = std::move(*upd);
      H.reset();
      continue;
    }
    if (since_anchor >= 12 && W) {
      // Periodic re-anchor against warm-start root drift: adopt the fresh
      // root only when it agrees with the evolved branch, so a multi-root
      // ring system cannot knock a converging chain away.
      since_anchor = 0;
      try {
        RingSolution fresh = solve_ring(h_Om, h_K, prm, nullptr);
        const Vec gw = boundary_gradient(ring, Side::Inner);
        const Vec gf = boundary_gradient(fresh, Side::Inner);
        if ((gf / gw - 1.0).abs().maxCoeff() <= 0.02) {
          ring = std::move(fresh);
          H = ring.H;
        }
      } catch (const SolverError&) {
      }
    }

    const Vec g = boundary_gradient(ring, Side::Inner);
    const double res = (g / tau - 1.0).abs().maxCoeff();
    if (res <= opt.fp_tol ||
        (opt.one_sided && (g / tau - 1.0).maxCoeff() <= opt.fp_tol)) {
      return result(Feasibility::Feasible, std::move(ring), res, it);
    }
    if (res < 0.99 * best_res) {
      best_res = res;
      last_improve = it;
    } else if (it - last_improve > opt.patience) {
      return result(Feasibility::Stalled, std::move(ring), res, it);
    }

    const bool shrinking = (g >= tau).all();  // monotone runaway regime
    if (res > res_prev && !shrinking) {
      step = std::max(step / 2.0, 1e-3);
    } else if (res < res_prev) {
      step = std::min(step * 1.3, 0.3);
    }
    res_prev = res;

    const Vec r = smooth_field((g.max(1e-12) / tau).log()).min(1.5).max(-1.5);
    prev.emplace(h_K, r);
    auto h_new = detail::inner_update(h_K, h_Om, r, step, d0, eps0);
    if (!h_new) {  // update blocked: no certificate either way
      return result(Feasibility::Stalled, std::move(ring), res, it);
    }
    h_K = std::move(*h_new);
    if (inradius_outradius(h_K).r_in < rmin) {
      return result(Feasibility::Infeasible, std::move(ring), res, it);
    }
  }
  return result(Feasibility::Stalled, std::move(ring), res_prev, opt.max_it);
}

// ---------------------------------------------------------------------------
// subsolution certificate
// ---------------------------------------------------------------------------

struct SubsolutionReport {
  bool sign_ok = false;   // interior p-Laplacian expression >= -sign_tol
  bool grad_ok = false;   // inner-boundary |Du| <= tau (1 + grad_tol)
  double min_sign = 0.0;  // most negative interior node value
  double sign_tol = 0.0;
  double max_grad_excess = 0.0;  // max(g/tau - 1)
  double grad_tol = 0.0;

  [[nodiscard]] bool pass() const { return sign_ok && grad_ok; }
};

/// Discrete subsolution test for an arbitrary ring matrix: the level-set
/// p-Laplacian expression must be nonnegative at interior nodes (within
/// sign_tol = 1e-6 * residual scale) and the inner-boundary gradient must
/// not exceed tau (within grad_tol, relative).
[[nodiscard]] inline SubsolutionReport is_subsolution(const Mat& H, double tau,
                                                      double p,
                                                      double grad_tol = 1e-5) {
  auto [F, scale] = plaplacian_sign(H, p);
  SubsolutionReport rep;
  rep.sign_tol = 1e-6 * scale;
  rep.min_sign = F.minCoeff();
  rep.sign_ok = rep.min_sign >= -rep.sign_tol;

  RingSolution view;
  view.H = H;
  view.p = p;
  const Vec g = boundary_gradient(view, Side::Inner);
  rep.grad_tol = grad_tol;
  rep.max_grad_excess = (g / tau - 1.0).maxCoeff();
  rep.grad_ok = rep.max_grad_excess <= grad_tol;
  return rep;
}

// ---------------------------------------------------------------------------
// Bernoulli constant by bisection
// ---------------------------------------------------------------------------

struct FeasibilityProbe {
  double tau = 0.0;
  Feasibility feasibility = Feasibility::Stalled;
  int iterations = 0;
  double fp_tol = 0.0;
};

struct BernoulliConstantResult {
  double lambda = 0.0;
  std::pair<double, double> bracket{0.0, 0.0};
  int iterations = 0;  // accumulated trial iterations over all probes
  std::vector<FeasibilityProbe> log;
};

/// Bernoulli constant Lambda(Omega) = inf { tau : interior problem solvable },
/// by bisection on certified feasibility over the rigorous bracket.  Probes
/// away from the bracket endpoints use a relaxed residual tolerance
/// max(feas_tol, 0.25 (hi-lo)/mid); the feasible side is warm-started from
/// the previous certified inner body.
[[nodiscard]] inline BernoulliConstantResult bernoulli_constant(
    const Vec& h_Om, const PLaplaceParams& prm, double bisect_tol = 1e-4,
    double feas_tol = 1e-3) {
  prm.validate();
  auto [lo, hi] = lambda_bracket(h_Om, prm.p);
  BernoulliConstantResult out;
  if (hi - lo <= bisect_tol * hi) {
    out.lambda = 0.5 * (lo + hi);
    out.bracket = {lo, hi};
    return out;
  }

  InteriorOptions hi_opt;
  hi_opt.fp_tol = std::max(feas_tol, 0.1 * (hi - lo) / hi);
  InteriorSolution anchor = solve_interior(h_Om, hi, prm, hi_opt);
  out.log.push_back({hi, anchor.feasibility, anchor.trial_iterations, hi_opt.fp_tol});
  out.iterations += anchor.trial_iterations;
  if (anchor.feasibility != Feasibility::Feasible)
    throw BracketInversion(
        "interior problem not certified feasible at the bracket top",
        {{"hi", hi}, {"status", to_string(anchor.feasibility)}});

  Vec K = anchor.h_K;
  Mat H = anchor.ring.H;
  while (hi - lo > bisect_tol * hi) {
    const double mid = 0.5 * (lo + hi);
    InteriorOptions opt;
    opt.fp_tol = std::max(feas_tol, 0.25 * (hi - lo) / mid);
    opt.K0 = &K;
    opt.H0 = &H;
    InteriorSolution probe = solve_interior(h_Om, mid, prm, opt);
    out.log.push_back({mid, probe.feasibility, probe.trial_iterations, opt.fp_tol});
    out.iterations += probe.trial_iterations;
    if (probe.feasibility == Feasibility::Feasible) {
      hi = mid;
      K = probe.h_K;
      H = probe.ring.H;
    } else {  // collapse or stagnation: not certified feasible at this tolerance
      lo = mid;
    }
  }
  out.lambda = hi;
  out.bracket = {lo, hi};
  return out;
}

// ---------------------------------------------------------------------------
// uniqueness probe at tau = Lambda
// ---------------------------------------------------------------------------

/// At tau = Lambda(Omega) the interior solution is unique.  Runs the trial
/// iteration from two deliberately different initial bodies (the default
/// inner parallel body, and 0.9 * Omega recentred at its Steiner point) at a
/// tau nudged just above the computed Lambda, and compares the two computed
/// free boundaries in Hausdorff distance.
[[nodiscard]] inline CheckReport uniqueness_probe(const Vec& h_Om,
                                                  const PLaplaceParams& prm,
                                                  double bisect_tol = 1e-4,
                                                  double fp_tol = 1e-5,
                                                  double uniq_tol = 1e-3) {
  const auto t0 = std::chrono::steady_clock::now();
  const BernoulliConstantResult lam = bernoulli_constant(h_Om, prm, bisect_tol);
  const double tau = lam.lambda * (1.0 + 2.0 * bisect_tol);

  InteriorOptions opt1;
  opt1.fp_tol = fp_tol;
  opt1.max_it = 5000;
  const InteriorSolution a = solve_interior(h_Om, tau, prm, opt1);

  const Eigen::Vector2d s = steiner_point(h_Om);
  const Vec th = grid_angles(static_cast<int>(h_Om.size()));
  const Vec init2 = 0.9 * h_Om + 0.1 * (s.x() * th.cos() + s.y() * th.sin());
  InteriorOptions opt2 = opt1;
  opt2.K0 = &init2;
  const InteriorSolution b = solve_interior(h_Om, tau, prm, opt2);

  const double scale = std::max(1.0, h_Om.maxCoeff());
  const double dist = hausdorff_distance(a.h_K, b.h_K);

  CheckReport rep;
  rep.name = "uniqueness";
  rep.inputs = {{"tau", tau}, {"lambda", lam.lambda}, {"p", prm.p}};
  rep.computed = {{"hausdorff_distance", dist},
                  {"status_parallel_body", to_string(a.feasibility)},
                  {"status_scaled_copy", to_string(b.feasibility)},
                  {"iterations", {a.trial_iterations, b.trial_iterations}}};
  rep.margins = {{"distance_slack", uniq_tol * scale - dist}};
  rep.tolerances = {{"uniq_tol", uniq_tol}, {"fp_tol", fp_tol}};
  rep.pass = a.feasibility == Feasibility::Feasible &&
             b.feasibility == Feasibility::Feasible && dist <= uniq_tol * scale;
  rep.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

}  // namespace bernoulli
