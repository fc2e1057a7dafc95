// ============================================================================
// ring_solver.hpp -- damped Newton solver for the p-Laplace Dirichlet problem
// on a convex ring, in support-function level-set coordinates.
//
// The potential u (u = 0 on the outer boundary, u = 1 on the inner one) is
// represented through the support functions h(theta, t) of its superlevel
// sets, t in [0,1].  On the uniform (theta_j, t_k) grid the PDE becomes the
// cleared-denominator residual
//     F = (p-1) h_tt (h + h_qq) - h_t^2 - (p-1) h_tq^2 = 0
// at interior nodes (q = theta), with Dirichlet rows at k = 0 and k = L.
// |Du| along a level curve is -1/h_t, so boundary gradients come from
// one-sided second-order differences of h in t.
//
// Root selection: the discrete residual can admit spurious roots.  Smooth
// rings have a unique root with convex level slices, so a slice-convexity
// barrier inside the line search pins the physical branch.  Near-polygonal
// rings develop slightly non-convex slices next to vertex normals (corner
// pockets) where the barrier cannot hold; those fall through to a
// deterministic coarse-to-fine cascade in theta whose coarsest level selects
// the correct basin, with a blend continuation as per-level rescue.
// ============================================================================
#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "bernoulli/convex_geometry.hpp"
#include "bernoulli/errors.hpp"

namespace bernoulli {

using Mat = Eigen::MatrixXd;

// ---------------------------------------------------------------------------
// parameters and solution record
// ---------------------------------------------------------------------------

struct PLaplaceParams {
  double p = 2.0;            // exponent of the p-Laplacian, p >= 1.1
  int L = 128;               // number of t-intervals (levels t_k = k/L)
  double newton_tol = 1e-8;  // residual tolerance, relative to scale
  int max_newton = 50;       // Newton iteration cap per solve
  double damping = 1.0;      // initial line-search step, halved on rejection

  void validate() const {
    if (p < 1.1)
      throw std::invalid_argument("p must be >= 1.1 (degenerate ellipticity below)");
    if (L < 16) throw std::invalid_argument("level count L must be >= 16");
    if (!(newton_tol > 0)) throw std::invalid_argument("newton_tol must be positive");
  }
};

/// Converged ring solution.  H is M x (L+1); column k holds the support
/// samples of the superlevel set {u >= t_k}; H.col(0) = h_outer,
/// H.col(L) = h_inner.
struct RingSolution {
  Mat H;
  double p = 2.0;
  int newton_iterations = 0;
  double residual_norm = 0.0;  // max-node |F| at convergence
  double scale = 1.0;          // max(1, max h_t^2), the residual scale

  [[nodiscard]] int M() const { return static_cast<int>(H.rows()); }
  [[nodiscard]] int L() const { return static_cast<int>(H.cols()) - 1; }
  [[nodiscard]] Vec h_outer() const { return H.col(0).array(); }
  [[nodiscard]] Vec h_inner() const { return H.col(H.cols() - 1).array(); }
};

enum class Side { Outer, Inner };

// ---------------------------------------------------------------------------
// residual / Jacobian at interior nodes
// ---------------------------------------------------------------------------

/// Initial iterate: radial-profile interpolation between the boundary rows,
/// exact for concentric-disk rings at every p.
[[nodiscard]] inline Mat initial_profile(const Vec& h_out, const Vec& h_in,
                                         int L, double p) {
  const int M = static_cast<int>(h_out.size());
  Mat H(M, L + 1);
  if (std::abs(p - 2.0) < 1e-12) {
    for (int k = 0; k <= L; ++k) {
      const double t = static_cast<double>(k) / L;
      H.col(k) = ((1.0 - t) * h_out.log() + t * h_in.log()).exp().matrix();
    }
  } else {
    const double m = (p - 2.0) / (p - 1.0);
    for (int k = 0; k <= L; ++k) {
      const double t = static_cast<double>(k) / L;
      H.col(k) = ((1.0 - t) * h_out.pow(m) + t * h_in.pow(m)).pow(1.0 / m).matrix();
    }
  }
  return H;
}

/// Cleared-denominator residual F at interior nodes; returns M x (L-1).
[[nodiscard]] inline Mat ring_residual(const Mat& H, double p, double dth, double dt) {
  const int M = static_cast<int>(H.rows());
  const int L = static_cast<int>(H.cols()) - 1;
  Mat F(M, L - 1);
  const double idt2 = 1.0 / (dt * dt), idth2 = 1.0 / (dth * dth);
  const double c4 = 1.0 / (4.0 * dth * dt);
  for (int j = 0; j < M; ++j) {
    const int jm = (j + M - 1) % M, jp = (j + 1) % M;
    for (int k = 1; k < L; ++k) {
      const double h = H(j, k);
      const double ht = (H(j, k + 1) - H(j, k - 1)) / (2.0 * dt);
      const double htt = (H(j, k + 1) - 2.0 * h + H(j, k - 1)) * idt2;
      const double hqq = (H(jp, k) - 2.0 * h + H(jm, k)) * idth2;
      const double htq = (H(jp, k + 1) - H(jp, k - 1) - H(jm, k + 1) + H(jm, k - 1)) * c4;
      F(j, k - 1) = (p - 1.0) * htt * (h + hqq) - ht * ht - (p - 1.0) * htq * htq;
    }
  }
  return F;
}

/// Residual scale max(1, max h_t^2) used for relative convergence tests.
[[nodiscard]] inline double residual_scale(const Mat& H, double dt) {
  const int L = static_cast<int>(H.cols()) - 1;
  double m = 1.0;
  for (int k = 1; k < L; ++k) {
    const double s =
        ((H.col(k + 1) - H.col(k - 1)).array() / (2.0 * dt)).square().maxCoeff();
    m = std::max(m, s);
  }
  return m;
}

/// Analytic 9-point-stencil Jacobian of ring_residual (triplet assembly).
inline void ring_jacobian(const Mat& H, double p, double dth, double dt,
                          std::vector<Eigen::Triplet<double>>& trips) {
  const int M = static_cast<int>(H.rows());
  const int L = static_cast<int>(H.cols()) - 1;
  trips.clear();
  trips.reserve(static_cast<std::size_t>(M) * (L - 1) * 9);
  const double idt2 = 1.0 / (dt * dt), idth2 = 1.0 / (dth * dth);
  const double c4 = 1.0 / (4.0 * dth * dt);
  auto idx = [L](int j, int k) { return j * (L - 1) + (k - 1); };
  for (int j = 0; j < M; ++j) {
    const int jm = (j + M - 1) % M, jp = (j + 1) % M;
    for (int k = 1; k < L; ++k) {
      const double h = H(j, k);
      const double ht = (H(j, k + 1) - H(j, k - 1)) / (2.0 * dt);
      const double htt = (H(j, k + 1) - 2.0 * h + H(j, k - 1)) * idt2;
      const double hqq = (H(jp, k) - 2.0 * h + H(jm, k)) * idth2;
      const double htq = (H(jp, k + 1) - H(jp, k - 1) - H(jm, k + 1) + H(jm, k - 1)) * c4;
      const double B = h + hqq;
      const int row = idx(j, k);
      auto add = [&](int jj, int kk, double v) {
        if (kk >= 1 && kk <= L - 1) trips.emplace_back(row, idx(jj, kk), v);
      };
      add(j, k - 1, (p - 1.0) * B * idt2 + ht / dt);
      add(j, k, -2.0 * (p - 1.0) * B * idt2 + (p - 1.0) * htt * (1.0 - 2.0 * idth2));
      add(j, k + 1, (p - 1.0) * B * idt2 - ht / dt);
      add(jm, k, (p - 1.0) * htt * idth2);
      add(jp, k, (p - 1.0) * htt * idth2);
      add(jp, k + 1, -2.0 * (p - 1.0) * htq * c4);
      add(jp, k - 1, 2.0 * (p - 1.0) * htq * c4);
      add(jm, k + 1, 2.0 * (p - 1.0) * htq * c4);
      add(jm, k - 1, -2.0 * (p - 1.0) * htq * c4);
    }
  }
}

// ---------------------------------------------------------------------------
// iterate validity helpers
// ---------------------------------------------------------------------------

/// Strict monotone decrease of h in t for every theta.
[[nodiscard]] inline bool valid_start(const Mat& H) {
  const int L = static_cast<int>(H.cols()) - 1;
  for (int k = 0; k < L; ++k)
    if (((H.col(k + 1) - H.col(k)).array() >= 0.0).any()) return false;
  return true;
}

/// Minimum of the discrete radius of curvature h + h_qq over interior slices.
[[nodiscard]] inline double slice_min_curv(const Mat& H, double dth) {
  const int M = static_cast<int>(H.rows());
  const int Lp1 = static_cast<int>(H.cols());
  if (Lp1 <= 2) return std::numeric_limits<double>::infinity();
  double mn = std::numeric_limits<double>::infinity();
  const double idth2 = 1.0 / (dth * dth);
  for (int j = 0; j < M; ++j) {
    const int jm = (j + M - 1) % M, jp = (j + 1) % M;
    for (int k = 1; k < Lp1 - 1; ++k) {
      const double c = H(j, k) + (H(jp, k) - 2.0 * H(j, k) + H(jm, k)) * idth2;
      mn = std::min(mn, c);
    }
  }
  return mn;
}

/// Shifts a warm start to new boundary rows by levelwise linear blending.
[[nodiscard]] inline Mat adapt_warm(const Mat& H, const Vec& h_out, const Vec& h_in) {
  const int L = static_cast<int>(H.cols()) - 1;
  Mat out = H;
  const Vec d0 = h_out - H.col(0).array();
  const Vec d1 = h_in - H.col(L).array();
  for (int k = 0; k <= L; ++k) {
    const double t = static_cast<double>(k) / L;
    out.col(k) += ((1.0 - t) * d0 + t * d1).matrix();
  }
  return out;
}

/// Stride subsampling of support values onto Mc | M directions.
[[nodiscard]] inline Vec subsample(const Vec& h, int Mc) {
  const int M = static_cast<int>(h.size());
  if (M % Mc != 0) throw GridMismatch("subsample: coarse grid must divide M");
  const int s = M / Mc;
  Vec out(Mc);
  for (int j = 0; j < Mc; ++j) out[j] = h[j * s];
  return out;
}

/// Periodic linear interpolation of every level row onto an M-point grid.
[[nodiscard]] inline Mat prolong_levels(const Mat& H, int M) {
  const int Mc = static_cast<int>(H.rows());
  const int cols = static_cast<int>(H.cols());
  Mat out(M, cols);
  for (int j = 0; j < M; ++j) {
    const double x = static_cast<double>(j) * Mc / M;  // position in coarse index units
    const int j0 = static_cast<int>(std::floor(x)) % Mc;
    const int j1 = (j0 + 1) % Mc;
    const double w = x - std::floor(x);
    out.row(j) = (1.0 - w) * H.row(j0) + w * H.row(j1);
  }
  return out;
}

// ---------------------------------------------------------------------------
// core damped Newton solve
// ---------------------------------------------------------------------------

namespace detail {

/// One damped-Newton solve from a given start.  If `barrier` is set, every
/// accepted iterate must keep all interior slices strictly convex (radius of
/// curvature above the barrier); failure to do so raises immediately so the
/// caller can fall through the root-selection ladder.
[[nodiscard]] inline RingSolution newton_ring(const Vec& h_out, const Vec& h_in,
                                              const PLaplaceParams& prm,
                                              const Mat* H0,
                                              std::optional<double> barrier) {
  const int M = static_cast<int>(h_out.size());
  const int L = prm.L;
  const double dth = 2.0 * kPi / M, dt = 1.0 / L;
  const int n = M * (L - 1);

  Mat H = (H0 != nullptr) ? *H0 : initial_profile(h_out, h_in, L, prm.p);
  H.col(0) = h_out.matrix();
  H.col(L) = h_in.matrix();
  if (H0 != nullptr && !valid_start(H)) H = initial_profile(h_out, h_in, L, prm.p);
  if (barrier && slice_min_curv(H, dth) <= *barrier)
    throw ConvexityLoss("initial iterate violates convexity barrier");

  Eigen::SparseMatrix<double> J(n, n);
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  std::vector<Eigen::Triplet<double>> trips;
  bool pattern_done = false;

  int its = 0;
  for (int it = 0; it <= prm.max_newton; ++it) {
    Mat F = ring_residual(H, prm.p, dth, dt);
    const double scale = residual_scale(H, dt);
    const double rn = F.array().abs().maxCoeff();
    const double l2 = F.norm();
    if (rn <= prm.newton_tol * scale) {
      its = it;
      RingSolution sol;
      sol.H = std::move(H);
      sol.p = prm.p;
      sol.newton_iterations = its;
      sol.residual_norm = rn;
      sol.scale = scale;
      return sol;
    }
    if (it == prm.max_newton) break;

    ring_jacobian(H, prm.p, dth, dt, trips);
    J.setFromTriplets(trips.begin(), trips.end());
    if (!pattern_done) {
      lu.analyzePattern(J);
      pattern_done = true;
    }
    lu.factorize(J);
    if (lu.info() != Eigen::Success)
      throw NewtonDivergence("singular ring Jacobian", {{"residual", rn}});

    Eigen::VectorXd f(n);
    for (int j = 0; j < M; ++j)
      for (int k = 1; k < L; ++k) f[j * (L - 1) + (k - 1)] = F(j, k - 1);
    Eigen::VectorXd d = lu.solve(-f);
    d += lu.solve(-f - J * d);  // one step of iterative refinement

    double alpha = prm.damping;
    bool ok = false;
    bool blocked_mono = false, blocked_barrier = false;
    while (alpha >= 1e-7) {
      Mat Hn = H;
      for (int j = 0; j < M; ++j)
        for (int k = 1; k < L; ++k) Hn(j, k) += alpha * d[j * (L - 1) + (k - 1)];
      if (!valid_start(Hn)) {
        blocked_mono = true;
      } else if (barrier && slice_min_curv(Hn, dth) <= *barrier) {
        blocked_barrier = true;
      } else {
        const double l2n = ring_residual(Hn, prm.p, dth, dt).norm();
        if (l2n <= (1.0 - 1e-4 * alpha) * l2) {
          H = std::move(Hn);
          ok = true;
          break;
        }
      }
      alpha /= 2.0;
    }
    if (!ok) {
      nlohmann::json ctx{{"residual", rn}, {"iteration", it}};
      if (blocked_barrier) throw ConvexityLoss("line search blocked by convexity barrier", ctx);
      if (blocked_mono) throw GridTooCoarse("line search blocked by t-monotonicity", ctx);
      throw NewtonDivergence("newton line search stalled", ctx);
    }
  }
  throw NewtonDivergence("newton iteration cap exhausted",
                         {{"max_newton", prm.max_newton}});
}

/// Rescue path: continue from a thin parallel ring (outer minus a safe width
/// blended toward the target inner body).
[[nodiscard]] inline RingSolution blend_continuation(const Vec& h_out, const Vec& h_in,
                                                     const PLaplaceParams& prm) {
  const double rin = inradius_outradius(h_out).r_in;
  const double w0 = std::max(std::min(0.3 * (h_out - h_in).minCoeff(),
                                      0.5 * min_curv(h_out)),
                             0.01 * rin);
  const Vec base = project_to_convex(h_out - w0);
  double sig = 0.0, step = 0.25;
  std::optional<RingSolution> sol;
  int its_tot = 0;
  while (sig < 1.0) {
    const double s_try = std::min(1.0, sig + step);
    const Vec h_mid = (s_try >= 1.0)
                          ? h_in
                          : project_to_convex((1.0 - s_try) * base + s_try * h_in);
    std::optional<Mat> W;
    if (sol) {
      W = adapt_warm(sol->H, h_out, h_mid);
      if (!valid_start(*W)) W.reset();
    }
    try {
      RingSolution s = newton_ring(h_out, h_mid, prm, W ? &*W : nullptr, std::nullopt);
      its_tot += s.newton_iterations;
      sol = std::move(s);
      sig = s_try;
    } catch (const SolverError&) {
      step /= 2.0;
      if (step < 0.01)
        throw NewtonDivergence("blend continuation failed",
                               {{"sigma", sig}, {"step", step}});
    }
  }
  sol->newton_iterations = its_tot;
  return std::move(*sol);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// public solve with root-selection ladder
// ---------------------------------------------------------------------------

/// Solves the ring problem for h evaluated on the shared grid.  `H0` is an
/// optional warm start (levels of a nearby ring).  Stages:
///   1. barrier + warm start        (tracks the physical branch cheaply)
///   2. barrier + fresh start       (smooth rings: unique convex root)
///   3. warm start, no barrier      (pocket rings: short-range branch tracking)
///   4. coarse-to-fine cascade      (deterministic basin selection; per-level
///      blend-continuation rescue)
[[nodiscard]] inline RingSolution solve_ring(const Vec& h_out, const Vec& h_in,
                                             const PLaplaceParams& prm,
                                             const Mat* H0 = nullptr) {
  prm.validate();
  if (h_out.size() != h_in.size())
    throw GridMismatch("solve_ring: boundary grids disagree");
  if (((h_out - h_in) <= 0.0).any())
    throw DegenerateBody("inner body must be strictly inside the outer body");
  const int M = static_cast<int>(h_out.size());
  const double dth = 2.0 * kPi / M;
  const double bar = 1e-6 * h_out.maxCoeff();

  if (H0 != nullptr && valid_start(*H0) && slice_min_curv(*H0, dth) > bar) {
    try {
      return detail::newton_ring(h_out, h_in, prm, H0, bar);
    } catch (const SolverError&) {
    }
  }
  try {
    return detail::newton_ring(h_out, h_in, prm, nullptr, bar);
  } catch (const SolverError&) {
  }
  if (H0 != nullptr && valid_start(*H0)) {
    try {
      return detail::newton_ring(h_out, h_in, prm, H0, std::nullopt);
    } catch (const SolverError&) {
    }
  }
  // deterministic cascade, ignoring H0: coarsest level dividing M and >= 24
  std::vector<int> levels;
  for (int Mc = M; Mc % 2 == 0 && Mc / 2 >= 24; Mc /= 2) levels.push_back(Mc / 2);
  std::reverse(levels.begin(), levels.end());
  levels.push_back(M);

  std::optional<RingSolution> sol;
  int its_tot = 0;
  for (int Mc : levels) {
    const Vec ho = subsample(h_out, Mc), hi = subsample(h_in, Mc);
    std::optional<Mat> W;
    if (sol) {
      W = prolong_levels(sol->H, Mc);
      if (!valid_start(*W)) W.reset();
    }
    try {
      RingSolution s = detail::newton_ring(ho, hi, prm, W ? &*W : nullptr, std::nullopt);
      its_tot += s.newton_iterations;
      sol = std::move(s);
    } catch (const SolverError&) {
      RingSolution s = detail::blend_continuation(ho, hi, prm);
      its_tot += s.newton_iterations;
      sol = std::move(s);
    }
  }
  sol->newton_iterations = its_tot;
  return std::move(*sol);
}

// ---------------------------------------------------------------------------
// derived fields
// ---------------------------------------------------------------------------

/// |Du| on a boundary from one-sided second-order differences of h in t.
[[nodiscard]] inline Vec boundary_gradient(const RingSolution& sol, Side side) {
  const int L = sol.L();
  const double dt = 1.0 / L;
  Vec ht;
  if (side == Side::Outer) {
    ht = (-3.0 * sol.H.col(0) + 4.0 * sol.H.col(1) - sol.H.col(2)).array() / (2.0 * dt);
  } else {
    ht = (3.0 * sol.H.col(L) - 4.0 * sol.H.col(L - 1) + sol.H.col(L - 2)).array() /
         (2.0 * dt);
  }
  return -1.0 / ht;
}

/// Point on level curve t_k in direction theta_j:
/// x = h * theta_hat + h_theta * theta_hat_perp.
[[nodiscard]] inline Eigen::Vector2d boundary_point(const RingSolution& sol, int j,
                                                    int k) {
  const int M = sol.M();
  const double dth = 2.0 * kPi / M;
  const double th = 2.0 * kPi * j / M;
  const int jm = (j + M - 1) % M, jp = (j + 1) % M;
  const double h = sol.H(j, k);
  const double hq = (sol.H(jp, k) - sol.H(jm, k)) / (2.0 * dth);
  const double c = std::cos(th), s = std::sin(th);
  return {h * c - hq * s, h * s + hq * c};
}

/// Evaluates the level-set p-Laplacian expression F on an arbitrary ring
/// matrix (used to certify subsolutions, where F >= 0 within tolerance).
/// Returns the interior-node values together with the residual scale; the
/// associated tolerance band is sign_tol = 1e-6 * scale.
[[nodiscard]] inline std::pair<Mat, double> plaplacian_sign(const Mat& H, double p) {
  const int M = static_cast<int>(H.rows());
  const int L = static_cast<int>(H.cols()) - 1;
  const double dth = 2.0 * kPi / M, dt = 1.0 / L;
  Mat F = ring_residual(H, p, dth, dt);
  return {std::move(F), residual_scale(H, dt)};
}

}  // namespace bernoulli
