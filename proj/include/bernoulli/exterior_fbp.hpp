// ============================================================================
// exterior_fbp.hpp -- exterior Bernoulli free-boundary problem.
//
// Given a convex core K and a target gradient tau > 0, find the convex
// domain Omega containing K such that the p-capacitary potential of
// (Omega, K) has |Du| = tau everywhere on the outer boundary dOmega.
// The exterior problem is solvable for every tau > 0 and the solution is
// unique; a damped multiplicative fixed-point iteration on the support
// function of Omega converges from the radial initial guess.
// ============================================================================
#pragma once

#include <cmath>
#include <optional>

#include "bernoulli/convex_geometry.hpp"
#include "bernoulli/errors.hpp"
#include "bernoulli/ring_solver.hpp"

namespace bernoulli {

// ---------------------------------------------------------------------------
// radial (annulus) closed forms, used as initial guesses and test oracles
// ---------------------------------------------------------------------------

/// Radius of the level set {u >= t} of the p-capacitary potential of the
/// annulus with inner radius a and outer radius b (u = 1 inside, 0 outside).
[[nodiscard]] inline double radial_level_radius(double t, double a, double b,
                                                double p) {
  if (std::abs(p - 2.0) < 1e-14) return b * std::pow(a / b, t);
  const double s = (p - 2.0) / (p - 1.0);
  return std::pow(std::pow(b, s) + t * (std::pow(a, s) - std::pow(b, s)), 1.0 / s);
}

/// |Du| at radius r for the same annulus potential.
[[nodiscard]] inline double radial_gradient(double r, double a, double b, double p) {
  if (std::abs(p - 2.0) < 1e-14) return 1.0 / (r * std::log(b / a));
  const double s = (p - 2.0) / (p - 1.0);
  return std::abs(s) * std::pow(r, s - 1.0) /
         std::abs(std::pow(a, s) - std::pow(b, s));
}

/// Outer radius R of the annulus with inner radius r_in whose potential has
/// |Du| = tau at the outer boundary (scalar bisection; the gradient is
/// strictly decreasing in R).
[[nodiscard]] inline double radial_exterior_radius(double r_in, double tau, double p) {
  if (!(tau > 0.0) || !(r_in > 0.0))
    throw std::invalid_argument("radial_exterior_radius: need tau > 0, r_in > 0");
  auto f = [&](double R) { return radial_gradient(R, r_in, R, p) - tau; };
  double lo = r_in * 1.0001, hi = r_in * 1.5;
  while (f(hi) > 0.0) hi *= 2.0;
  for (int i = 0; i < 200 && (hi - lo) > 1e-15 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// ---------------------------------------------------------------------------
// trial loop
// ---------------------------------------------------------------------------

struct ExteriorSolution {
  Vec h_domain;        // support function of the free domain Omega
  RingSolution ring;   // converged potential on (Omega, K)
  int trial_iterations = 0;
  double trial_residual = 0.0;  // max |g/tau - 1| on the free boundary
};

/// Solves the exterior problem for core h_K at gradient level tau.
/// The free boundary is updated multiplicatively,
///     h' = project(h * clip(1 + step (g/tau - 1), 0.7, 1.5)),
/// with the step halved (floor 1e-3) whenever the residual fails to improve
/// on its best value.  Throws TrialDivergence if fp_tol is not reached.
[[nodiscard]] inline ExteriorSolution solve_exterior(const Vec& h_K, double tau,
                                                     const PLaplaceParams& prm,
                                                     double fp_tol = 1e-6,
                                                     int max_it = 500) {
  prm.validate();
  if (!(tau > 0.0)) throw InfeasibleTau("exterior problem needs tau > 0");
  const Radii rad = inradius_outradius(h_K);
  const double r0 = radial_exterior_radius(rad.r_in, tau, prm.p);
  Vec h_Om = h_K + (r0 - rad.r_in);

  double step = 0.5;
  double best = std::numeric_limits<double>::infinity();
  std::optional<RingSolution> ring;
  for (int it = 0; it < max_it; ++it) {
    std::optional<Mat> W;
    if (ring) {
      W = adapt_warm(ring->H, h_Om, h_K);
      if (!valid_start(*W)) W.reset();
    }
    ring = solve_ring(h_Om, h_K, prm, W ? &*W : nullptr);
    const Vec g = boundary_gradient(*ring, Side::Outer);
    const double res = (g / tau - 1.0).abs().maxCoeff();
    if (res <= fp_tol) {
      ExteriorSolution out;
      out.h_domain = std::move(h_Om);
      out.ring = std::move(*ring);
      out.trial_iterations = it;
      out.trial_residual = res;
      return out;
    }
    if (res > best) step = std::max(step / 2.0, 1e-3);
    best = std::min(best, res);
    const Vec upd = h_Om * (1.0 + step * (g / tau - 1.0)).min(1.5).max(0.7);
    h_Om = project_to_convex(upd);
  }
  throw TrialDivergence("exterior trial iteration did not reach tolerance",
                        {{"tau", tau}, {"fp_tol", fp_tol}, {"max_it", max_it}});
}

// ---------------------------------------------------------------------------
// inclusion law under Minkowski interpolation
// ---------------------------------------------------------------------------

struct ExteriorInclusionResult {
  Vec h_domain_lambda;  // free domain of the interpolated data
  Vec h_domain_combo;   // Minkowski interpolation of the two free domains
  double margin = 0.0;  // min over directions of (lambda-domain - combo)
  double scale = 1.0;
  bool pass = false;
};

/// Checks that the exterior free domain of the interpolated data
/// (K_lambda, tau_lambda), with 1/tau_lambda = (1-lambda)/tau_0 + lambda/tau_1,
/// contains the Minkowski interpolation of the two individual free domains.
[[nodiscard]] inline ExteriorInclusionResult exterior_inclusion_check(
    const Vec& h_K0, const Vec& h_K1, double tau0, double tau1, double lambda,
    const PLaplaceParams& prm, double fp_tol = 1e-6, double incl_tol = 1e-4) {
  if (h_K0.size() != h_K1.size())
    throw GridMismatch("exterior_inclusion_check: grids disagree");
  if (!(lambda >= 0.0 && lambda <= 1.0))
    throw std::invalid_argument("lambda must lie in [0, 1]");
  const double tau_l = 1.0 / ((1.0 - lambda) / tau0 + lambda / tau1);
  const Vec h_Kl = (1.0 - lambda) * h_K0 + lambda * h_K1;

  const ExteriorSolution s0 = solve_exterior(h_K0, tau0, prm, fp_tol);
  const ExteriorSolution s1 = solve_exterior(h_K1, tau1, prm, fp_tol);
  const ExteriorSolution sl = solve_exterior(h_Kl, tau_l, prm, fp_tol);

  ExteriorInclusionResult out;
  out.h_domain_combo = (1.0 - lambda) * s0.h_domain + lambda * s1.h_domain;
  out.h_domain_lambda = sl.h_domain;
  out.scale = std::max(1.0, out.h_domain_lambda.maxCoeff());
  out.margin = (out.h_domain_lambda - out.h_domain_combo).minCoeff();
  out.pass = out.margin >= -incl_tol * out.scale;
  return out;
}

}  // namespace bernoulli
