// ============================================================================
// minkowski_comb.hpp -- levelwise Minkowski linear combination of ring
// solutions.
//
// For quasi-concave potentials represented by the support functions of their
// superlevel sets, the Minkowski combination of two solutions is taken level
// by level: H_lambda = sum_i lambda_i H_i on the shared (theta, t) grid.  The
// combination is generally NOT a solution of the PDE, but it is a
// subsolution (the level-set p-Laplacian expression stays nonnegative), and
// its boundary gradient at matched normal directions is the weighted
// harmonic mean of the input gradients -- an exact algebraic identity in
// this representation, because every t-difference of H is linear in the
// inputs and the gradient is -1/h_t.
// ============================================================================
#pragma once

#include <vector>

#include "bernoulli/check_report.hpp"
#include "bernoulli/convex_geometry.hpp"
#include "bernoulli/errors.hpp"
#include "bernoulli/ring_solver.hpp"

namespace bernoulli {

/// Weighted harmonic mean of two gradient levels:
/// tau_lambda = ((1-lambda)/tau0 + lambda/tau1)^{-1}.
[[nodiscard]] inline double tau_harmonic_mean(double tau0, double tau1,
                                              double lambda) {
  if (!(tau0 > 0.0) || !(tau1 > 0.0))
    throw std::invalid_argument("tau_harmonic_mean: levels must be positive");
  if (!(lambda >= 0.0 && lambda <= 1.0))
    throw std::invalid_argument("tau_harmonic_mean: lambda must lie in [0, 1]");
  return 1.0 / ((1.0 - lambda) / tau0 + lambda / tau1);
}

/// Levelwise Minkowski combination Sum_i w_i H_i of converged ring solutions
/// on identical grids with identical p.  Weights must be nonnegative and sum
/// to 1.
[[nodiscard]] inline Mat combine_solutions(const std::vector<double>& weights,
                                           const std::vector<const RingSolution*>& sols) {
  if (weights.empty() || weights.size() != sols.size())
    throw std::invalid_argument("combine_solutions: need matching nonempty lists");
  double wsum = 0.0;
  for (double w : weights) {
    if (w < 0.0) throw std::invalid_argument("combine_solutions: negative weight");
    wsum += w;
  }
  if (std::abs(wsum - 1.0) > 1e-12)
    throw std::invalid_argument("combine_solutions: weights must sum to 1");
  const auto rows = sols[0]->H.rows();
  const auto cols = sols[0]->H.cols();
  const double p = sols[0]->p;
  Mat out = Mat::Zero(rows, cols);
  for (std::size_t i = 0; i < sols.size(); ++i) {
    if (sols[i]->H.rows() != rows || sols[i]->H.cols() != cols)
      throw GridMismatch("combine_solutions: grid mismatch");
    if (std::abs(sols[i]->p - p) > 0.0)
      throw GridMismatch("combine_solutions: exponent mismatch");
    out += weights[i] * sols[i]->H;
  }
  return out;
}

/// Verifies the gradient identity of the combination: at every grid node the
/// gradient -1/d_t H_lambda equals the weighted harmonic mean of the input
/// gradients, evaluated with the same difference stencil.  Checked at all
/// half-levels (centered differences) and at both boundaries (one-sided
/// second-order stencils).  The identity is algebraic, so the error is pure
/// round-off.
[[nodiscard]] inline CheckReport gradient_harmonic_mean_check(
    const std::vector<double>& weights, const std::vector<const RingSolution*>& sols,
    double hm_tol = 1e-10) {
  const Mat Hl = combine_solutions(weights, sols);
  const int M = static_cast<int>(Hl.rows());
  const int L = static_cast<int>(Hl.cols()) - 1;
  const auto n = sols.size();

  // gradient of one ring matrix with a given 3-column stencil
  auto grad = [M](const Mat& H, int c0, double w0, int c1, double w1, int c2,
                  double w2) {
    Vec ht = (w0 * H.col(c0) + w1 * H.col(c1) + w2 * H.col(c2)).array();
    return (-1.0 / ht).eval();
  };

  double max_err = 0.0;
  auto accumulate = [&](int c0, double w0, int c1, double w1, int c2, double w2) {
    const Vec gl = grad(Hl, c0, w0, c1, w1, c2, w2);
    Vec inv = Vec::Zero(M);
    for (std::size_t i = 0; i < n; ++i)
      inv += weights[i] / grad(sols[i]->H, c0, w0, c1, w1, c2, w2);
    const Vec ghm = 1.0 / inv;
    max_err = std::max(max_err, ((gl - ghm) / ghm).abs().maxCoeff());
  };

  const double dt = 1.0 / L;
  // half-level centered differences (h_t at t_{k+1/2} from levels k, k+1)
  for (int k = 0; k < L; ++k)
    accumulate(k, -1.0 / dt, k + 1, 1.0 / dt, k, 0.0);
  // one-sided second-order boundary stencils
  accumulate(0, -1.5 / dt, 1, 2.0 / dt, 2, -0.5 / dt);
  accumulate(L, 1.5 / dt, L - 1, -2.0 / dt, L - 2, 0.5 / dt);

  CheckReport rep;
  rep.name = "gradient_harmonic_mean";
  rep.inputs = {{"weights", weights}, {"p", sols[0]->p}};
  rep.computed = {{"max_relative_error", max_err}};
  rep.margins = {{"error_slack", hm_tol - max_err}};
  rep.tolerances = {{"hm_tol", hm_tol}};
  rep.pass = max_err <= hm_tol;
  return rep;
}

/// Subsolution certificate for a combined ring matrix: the level-set
/// p-Laplacian expression must be >= -sign_tol at every interior node, with
/// sign_tol = 1e-6 * residual scale of the combination.
[[nodiscard]] inline CheckReport combination_subsolution_check(
    const std::vector<double>& weights, const std::vector<const RingSolution*>& sols) {
  const Mat Hl = combine_solutions(weights, sols);
  auto [F, scale] = plaplacian_sign(Hl, sols[0]->p);
  const double sign_tol = 1e-6 * scale;
  const double mn = F.minCoeff();

  CheckReport rep;
  rep.name = "combination_subsolution";
  rep.inputs = {{"weights", weights}, {"p", sols[0]->p}};
  rep.computed = {{"min_plaplacian_value", mn}, {"scale", scale}};
  rep.margins = {{"sign_slack", mn + sign_tol}};
  rep.tolerances = {{"sign_tol", sign_tol}};
  rep.pass = mn >= -sign_tol;
  return rep;
}

}  // namespace bernoulli
