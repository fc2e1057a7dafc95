// ============================================================================
// convex_geometry.hpp -- sampled support-function calculus for planar convex
// bodies.
//
// A convex body K is represented by samples of its support function
//     h_K(theta) = sup_{x in K} <x, (cos theta, sin theta)>
// on the uniform direction grid theta_j = 2*pi*j/M.  Support functions are
// linear under Minkowski combination and positive scaling, which makes the
// whole Minkowski calculus (mean width, Steiner point, combinations) exact
// arithmetic on the samples.  The only genuinely geometric routine is
// project_to_convex, which restores discrete convexity by reconstructing
// boundary points, taking their convex hull, and resampling.
// ============================================================================
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "bernoulli/errors.hpp"

namespace bernoulli {

using Vec = Eigen::ArrayXd;

inline constexpr double kPi = 3.14159265358979323846264338327950288;

// Defaults shared across modules.
inline constexpr int kDefaultM = 256;          // direction count
inline constexpr double kTolConvex = 1e-9;     // relative convexity tolerance
inline constexpr double kNgonRoundingFraction = 0.05;  // default eps/circumradius

// ---------------------------------------------------------------------------
// direction grid
// ---------------------------------------------------------------------------

/// Uniform angles theta_j = 2*pi*j/M.
[[nodiscard]] inline Vec grid_angles(int M) {
  if (M < 3) throw std::invalid_argument("direction grid needs M >= 3");
  Vec th(M);
  for (int j = 0; j < M; ++j) th[j] = 2.0 * kPi * j / M;
  return th;
}

/// Validates the direction-count invariant for user-facing support functions.
inline void require_grid(int M) {
  if (M < 16 || M % 2 != 0)
    throw std::invalid_argument("direction count must be even and >= 16");
}

/// Cyclic shift: out[j] = v[(j - s) mod M].
[[nodiscard]] inline Vec roll(const Vec& v, int s) {
  const int M = static_cast<int>(v.size());
  Vec out(M);
  for (int j = 0; j < M; ++j) out[j] = v[((j - s) % M + M) % M];
  return out;
}

// ---------------------------------------------------------------------------
// body specifications (exact, composable support evaluation)
// ---------------------------------------------------------------------------

/// Tagged, composable description of a convex body.  Evaluation of the
/// support function is exact and recursive, so combinations, rotations and
/// scalings introduce no resampling error.
class BodySpec {
 public:
  [[nodiscard]] static BodySpec disk(double R, Eigen::Vector2d center = {0.0, 0.0}) {
    if (!(R > 0)) throw std::invalid_argument("disk radius must be positive");
    auto n = std::make_shared<Node>();
    n->kind = Kind::Disk;
    n->a = R;
    n->v = center;
    return BodySpec(std::move(n));
  }

  [[nodiscard]] static BodySpec ellipse(double a, double b) {
    if (!(a > 0) || !(b > 0))
      throw std::invalid_argument("ellipse semi-axes must be positive");
    auto n = std::make_shared<Node>();
    n->kind = Kind::Ellipse;
    n->a = a;
    n->b = b;
    return BodySpec(std::move(n));
  }

  /// Regular n-gon of given circumradius, rounded by Minkowski sum with an
  /// eps-ball (rounding keeps the support data C^1 with positive curvature).
  [[nodiscard]] static BodySpec regular_ngon(int n, double circumradius,
                                             std::optional<double> eps = std::nullopt) {
    if (n < 3) throw std::invalid_argument("polygon needs n >= 3");
    if (!(circumradius > 0))
      throw std::invalid_argument("circumradius must be positive");
    const double e = eps.value_or(kNgonRoundingFraction * circumradius);
    if (!(e > 0)) throw std::invalid_argument("polygon rounding eps must be positive");
    auto node = std::make_shared<Node>();
    node->kind = Kind::Ngon;
    node->n = n;
    node->a = circumradius;
    node->b = e;
    return BodySpec(std::move(node));
  }

  [[nodiscard]] static BodySpec minkowski_combo(
      std::vector<std::pair<double, BodySpec>> terms) {
    if (terms.empty()) throw std::invalid_argument("empty Minkowski combination");
    double wsum = 0.0;
    for (auto& [w, b] : terms) {
      if (w < 0) throw std::invalid_argument("combination weights must be nonnegative");
      wsum += w;
    }
    if (std::abs(wsum - 1.0) > 1e-12)
      throw std::invalid_argument("combination weights must sum to 1");
    auto n = std::make_shared<Node>();
    n->kind = Kind::Combo;
    for (auto& [w, b] : terms) n->terms.emplace_back(w, b.node_);
    return BodySpec(std::move(n));
  }

  [[nodiscard]] static BodySpec scaled(double alpha, const BodySpec& base) {
    if (!(alpha > 0)) throw std::invalid_argument("scale factor must be positive");
    auto n = std::make_shared<Node>();
    n->kind = Kind::Scaled;
    n->a = alpha;
    n->terms.emplace_back(1.0, base.node_);
    return BodySpec(std::move(n));
  }

  [[nodiscard]] static BodySpec rotated(double phi, const BodySpec& base) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::Rotated;
    n->a = phi;
    n->terms.emplace_back(1.0, base.node_);
    return BodySpec(std::move(n));
  }

  [[nodiscard]] static BodySpec translated(Eigen::Vector2d v, const BodySpec& base) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::Translated;
    n->v = std::move(v);
    n->terms.emplace_back(1.0, base.node_);
    return BodySpec(std::move(n));
  }

  /// Exact support value in direction theta.
  [[nodiscard]] double support(double theta) const { return node_->support(theta); }

  /// Samples the support function on the M-point uniform grid.
  [[nodiscard]] Vec sample(int M) const {
    require_grid(M);
    Vec h(M);
    for (int j = 0; j < M; ++j) h[j] = node_->support(2.0 * kPi * j / M);
    return h;
  }

  /// Parses the composable JSON grammar, e.g. {"disk":{"R":1}} or
  /// {"minkowski_combo":{"terms":[{"weight":0.5,"body":{...}}, ...]}}.
  [[nodiscard]] static BodySpec from_json(const nlohmann::json& j) {
    if (!j.is_object() || j.size() != 1)
      throw std::invalid_argument("body spec must be a single-key JSON object");
    const auto& [tag, val] = *j.items().begin();
    if (tag == "disk") {
      Eigen::Vector2d c(0, 0);
      if (val.contains("center")) {
        c[0] = val.at("center").at(0).get<double>();
        c[1] = val.at("center").at(1).get<double>();
      }
      return disk(val.at("R").get<double>(), c);
    }
    if (tag == "ellipse")
      return ellipse(val.at("a").get<double>(), val.at("b").get<double>());
    if (tag == "regular_ngon") {
      std::optional<double> eps;
      if (val.contains("eps")) eps = val.at("eps").get<double>();
      return regular_ngon(val.at("n").get<int>(),
                          val.at("circumradius").get<double>(), eps);
    }
    if (tag == "minkowski_combo") {
      std::vector<std::pair<double, BodySpec>> terms;
      for (const auto& t : val.at("terms"))
        terms.emplace_back(t.at("weight").get<double>(),
                           from_json(t.at("body")));
      return minkowski_combo(std::move(terms));
    }
    if (tag == "scaled")
      return scaled(val.at("alpha").get<double>(), from_json(val.at("body")));
    if (tag == "rotated")
      return rotated(val.at("phi").get<double>(), from_json(val.at("body")));
    if (tag == "translated") {
      Eigen::Vector2d v(val.at("v").at(0).get<double>(),
                        val.at("v").at(1).get<double>());
      return translated(v, from_json(val.at("body")));
    }
    throw std::invalid_argument("unknown body tag: " + tag);
  }

  [[nodiscard]] nlohmann::json to_json() const { return node_->to_json(); }

 private:
  enum class Kind { Disk, Ellipse, Ngon, Combo, Scaled, Rotated, Translated };

  struct Node {
    Kind kind{};
    double a = 0.0, b = 0.0;  // shape parameters (see factory methods)
    int n = 0;
    Eigen::Vector2d v{0.0, 0.0};
    std::vector<std::pair<double, std::shared_ptr<const Node>>> terms;

    [[nodiscard]] double support(double theta) const {
      switch (kind) {
        case Kind::Disk:
          return a + v[0] * std::cos(theta) + v[1] * std::sin(theta);
        case Kind::Ellipse: {
          const double c = std::cos(theta), s = std::sin(theta);
          return std::sqrt(a * a * c * c + b * b * s * s);
        }
        case Kind::Ngon: {
          double best = -1.0;
          for (int i = 0; i < n; ++i)
            best = std::max(best, std::cos(theta - 2.0 * kPi * i / n));
          return a * best + b;
        }
        case Kind::Combo: {
          double acc = 0.0;
          for (const auto& [w, child] : terms) acc += w * child->support(theta);
          return acc;
        }
        case Kind::Scaled:
          return a * terms.front().second->support(theta);
        case Kind::Rotated:
          return terms.front().second->support(theta - a);
        case Kind::Translated:
          return terms.front().second->support(theta) +
                 v[0] * std::cos(theta) + v[1] * std::sin(theta);
      }
      return 0.0;  // unreachable
    }

    [[nodiscard]] nlohmann::json to_json() const {
      switch (kind) {
        case Kind::Disk:
          return {{"disk", {{"R", a}, {"center", {v[0], v[1]}}}}};
        case Kind::Ellipse:
          return {{"ellipse", {{"a", a}, {"b", b}}}};
        case Kind::Ngon:
          return {{"regular_ngon", {{"n", n}, {"circumradius", a}, {"eps", b}}}};
        case Kind::Combo: {
          nlohmann::json arr = nlohmann::json::array();
          for (const auto& [w, child] : terms)
            arr.push_back({{"weight", w}, {"body", child->to_json()}});
          return {{"minkowski_combo", {{"terms", arr}}}};
        }
        case Kind::Scaled:
          return {{"scaled", {{"alpha", a}, {"body", terms.front().second->to_json()}}}};
        case Kind::Rotated:
          return {{"rotated", {{"phi", a}, {"body", terms.front().second->to_json()}}}};
        case Kind::Translated:
          return {{"translated",
                   {{"v", {v[0], v[1]}}, {"body", terms.front().second->to_json()}}}};
      }
      return nullptr;  // unreachable
    }
  };

  explicit BodySpec(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
  std::shared_ptr<const Node> node_;
};

// ---------------------------------------------------------------------------
// scalar functionals of a sampled support function
// ---------------------------------------------------------------------------

/// Pointwise Minkowski combination of support samples (weights sum to 1).
[[nodiscard]] inline Vec minkowski_combine(const std::vector<double>& weights,
                                           const std::vector<Vec>& bodies) {
  if (weights.size() != bodies.size() || bodies.empty())
    throw std::invalid_argument("weights/bodies size mismatch");
  const auto M = bodies.front().size();
  double wsum = 0.0;
  for (double w : weights) {
    if (w < 0) throw std::invalid_argument("negative combination weight");
    wsum += w;
  }
  if (std::abs(wsum - 1.0) > 1e-12)
    throw std::invalid_argument("combination weights must sum to 1");
  Vec out = Vec::Zero(M);
  for (std::size_t i = 0; i < bodies.size(); ++i) {
    if (bodies[i].size() != M)
      throw GridMismatch("minkowski_combine: direction grids disagree");
    out += weights[i] * bodies[i];
  }
  return out;
}

/// Mean width b = (1/pi) * integral of h over the circle (periodic trapezoid).
[[nodiscard]] inline double mean_width(const Vec& h) { return 2.0 * h.mean(); }

/// Steiner point s = (1/pi) * integral of theta_hat * h(theta).
[[nodiscard]] inline Eigen::Vector2d steiner_point(const Vec& h) {
  const int M = static_cast<int>(h.size());
  const Vec th = grid_angles(M);
  return {2.0 * (th.cos() * h).mean(), 2.0 * (th.sin() * h).mean()};
}

/// Area from the support representation: (1/2) * integral (h^2 - h'^2).
[[nodiscard]] inline double area(const Vec& h) {
  const int M = static_cast<int>(h.size());
  const double dth = 2.0 * kPi / M;
  const Vec hp = (roll(h, -1) - roll(h, 1)) / (2.0 * dth);
  return 0.5 * dth * (h.square() - hp.square()).sum();
}

/// Minimal width (thickness): min over antipodal direction pairs.
[[nodiscard]] inline double min_width(const Vec& h) {
  const int M = static_cast<int>(h.size());
  if (M % 2 != 0) throw std::invalid_argument("min_width needs an even grid");
  double w = std::numeric_limits<double>::infinity();
  for (int j = 0; j < M / 2; ++j) w = std::min(w, h[j] + h[j + M / 2]);
  return w;
}

/// Hausdorff distance between convex bodies = sup-norm of support difference.
[[nodiscard]] inline double hausdorff_distance(const Vec& h1, const Vec& h2) {
  if (h1.size() != h2.size())
    throw GridMismatch("hausdorff_distance: direction grids disagree");
  return (h1 - h2).abs().maxCoeff();
}

/// Minimal discrete radius of curvature h + h'' over the grid.
[[nodiscard]] inline double min_curv(const Vec& h) {
  const int M = static_cast<int>(h.size());
  const double dth = 2.0 * kPi / M;
  const Vec curv = h + (roll(h, -1) - 2.0 * h + roll(h, 1)) / (dth * dth);
  return curv.minCoeff();
}

// ---------------------------------------------------------------------------
// convex projection
// ---------------------------------------------------------------------------

/// Boundary points x_j = h_j * theta_hat + h'_j * theta_hat_perp with
/// centered differences for h'.
[[nodiscard]] inline std::vector<Eigen::Vector2d> reconstruct_points(const Vec& h) {
  const int M = static_cast<int>(h.size());
  const double dth = 2.0 * kPi / M;
  const Vec th = grid_angles(M);
  const Vec hp = (roll(h, -1) - roll(h, 1)) / (2.0 * dth);
  std::vector<Eigen::Vector2d> pts(M);
  for (int j = 0; j < M; ++j) {
    const double c = std::cos(th[j]), s = std::sin(th[j]);
    pts[j] = {h[j] * c - hp[j] * s, h[j] * s + hp[j] * c};
  }
  return pts;
}

namespace detail {

/// Andrew monotone-chain convex hull; returns hull vertices (counterclockwise).
[[nodiscard]] inline std::vector<Eigen::Vector2d> convex_hull(
    std::vector<Eigen::Vector2d> pts) {
  std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) {
    return a[0] < b[0] || (a[0] == b[0] && a[1] < b[1]);
  });
  pts.erase(std::unique(pts.begin(), pts.end(),
                        [](const auto& a, const auto& b) {
                          return a[0] == b[0] && a[1] == b[1];
                        }),
            pts.end());
  const int n = static_cast<int>(pts.size());
  if (n < 3) throw DegenerateBody("convex hull degenerated to fewer than 3 points");
  auto cross = [](const Eigen::Vector2d& o, const Eigen::Vector2d& a,
                  const Eigen::Vector2d& b) {
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
  };
  std::vector<Eigen::Vector2d> hull(2 * n);
  int k = 0;
  for (int i = 0; i < n; ++i) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  const int lower = k + 1;
  for (int i = n - 2; i >= 0; --i) {
    while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  if (hull.size() < 3)
    throw DegenerateBody("convex hull degenerated to a segment");
  return hull;
}

}  // namespace detail

/// Restores discrete convexity: reconstruct boundary points, hull them, and
/// resample the hull's support function on the original grid.  Inputs that
/// already satisfy the convexity invariant are returned unchanged, which
/// makes the operation idempotent up to tol_convex.
[[nodiscard]] inline Vec project_to_convex(const Vec& h, double tol_convex = kTolConvex) {
  const double scale = std::max(1.0, h.abs().maxCoeff());
  if (min_curv(h) >= -tol_convex * scale) return h;
  const auto hull = detail::convex_hull(reconstruct_points(h));
  const int M = static_cast<int>(h.size());
  const Vec th = grid_angles(M);
  Vec out(M);
  for (int j = 0; j < M; ++j) {
    const double c = std::cos(th[j]), s = std::sin(th[j]);
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& v : hull) best = std::max(best, v[0] * c + v[1] * s);
    out[j] = best;
  }
  return out;
}

/// Support samples of the halfplane intersection P = inter_j {<x, theta_j> <= g_j},
/// the largest convex body whose support does not exceed g.  Exact on valid
/// support data (every constraint active) and never exceeds g, unlike the
/// hull-of-boundary-points projection, which can overshoot at eroded corners.
/// Computed by polar duality: the polar of P is conv{theta_j / g_j}, and the
/// vertices of P correspond to edges of that dual hull.
[[nodiscard]] inline Vec convex_minorant(const Vec& g) {
  if (!(g.minCoeff() > 0.0))
    throw DegenerateBody("convex_minorant needs the origin strictly inside");
  const int M = static_cast<int>(g.size());
  const Vec th = grid_angles(M);
  std::vector<Eigen::Vector2d> dual(M);
  for (int j = 0; j < M; ++j)
    dual[j] = {std::cos(th[j]) / g[j], std::sin(th[j]) / g[j]};
  const auto hull = detail::convex_hull(std::move(dual));
  const int n = static_cast<int>(hull.size());
  std::vector<Eigen::Vector2d> verts;
  verts.reserve(n);
  for (int i = 0; i < n; ++i) {
    const auto& a = hull[i];
    const auto& b = hull[(i + 1) % n];
    const double det = a[0] * b[1] - a[1] * b[0];
    if (std::abs(det) < 1e-300) continue;
    verts.emplace_back((b[1] - a[1]) / det, (a[0] - b[0]) / det);
  }
  if (verts.size() < 3)
    throw DegenerateBody("convex_minorant: halfplane intersection degenerated");
  Vec out(M);
  for (int j = 0; j < M; ++j) {
    const double c = std::cos(th[j]), s = std::sin(th[j]);
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& v : verts) best = std::max(best, v[0] * c + v[1] * s);
    out[j] = best;
  }
  return out;
}

/// Inscribed morphological opening: erode by eps, take the exact convex
/// minorant, dilate by eps.  The result is contained in the input body, has
/// discrete curvature radius >= eps, and reproduces the input exactly
/// whenever its curvature radius already exceeds eps.
[[nodiscard]] inline Vec opening(const Vec& h, double eps) {
  return convex_minorant(h - eps) + eps;
}

// ---------------------------------------------------------------------------
// Chebyshev radii (inradius / circumradius with centers)
// ---------------------------------------------------------------------------

struct Radii {
  double r_in;
  double R_out;
  Eigen::Vector2d c_in;
  Eigen::Vector2d c_out;
};

namespace detail {

/// Revised simplex on the 3-row dual of the Chebyshev-center LP over the
/// sampled half-plane constraints  <c, theta_j> + r <= h_j.
///   minimize (sense=+1) or maximize (sense=-1)  h^T lambda
///   subject to  sum_j lambda_j theta_hat_j = 0,  sum_j lambda_j = 1, lambda >= 0.
/// The optimal dual multipliers y = (c_x, c_y, value) solve B^T y = h_B.
[[nodiscard]] inline Eigen::Vector3d chebyshev_lp(const Vec& h, int sense) {
  const int M = static_cast<int>(h.size());
  const Vec th = grid_angles(M);
  auto col = [&](int j) {
    return Eigen::Vector3d(std::cos(th[j]), std::sin(th[j]), 1.0);
  };
  std::array<int, 3> basis = {0, M / 3, 2 * M / 3};
  const Eigen::Vector3d rhs(0.0, 0.0, 1.0);
  const double tol = 1e-12 * std::max(1.0, h.abs().maxCoeff());
  const int max_pivots = 12 * M;

  Eigen::Matrix3d B;
  Eigen::Vector3d lam, y;
  for (int pivot = 0; pivot < max_pivots; ++pivot) {
    for (int i = 0; i < 3; ++i) B.col(i) = col(basis[i]);
    const auto lu = B.fullPivLu();
    lam = lu.solve(rhs);
    Eigen::Vector3d hB(h[basis[0]], h[basis[1]], h[basis[2]]);
    y = B.transpose().fullPivLu().solve(hB);

    // entering column: most negative (min) / most positive (max) reduced cost
    const bool bland = pivot > 6 * M;  // anti-cycling fallback
    int enter = -1;
    double best = 0.0;
    for (int j = 0; j < M; ++j) {
      const double rc = sense * (h[j] - y.dot(col(j)));
      if (rc < -tol) {
        if (bland) { enter = j; break; }
        if (rc < best) { best = rc; enter = j; }
      }
    }
    if (enter < 0) return y;  // optimal

    const Eigen::Vector3d d = lu.solve(col(enter));
    int leave = -1;
    double tmin = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 3; ++i) {
      if (d[i] > 1e-14) {
        const double t = lam[i] / d[i];
        if (t < tmin - 1e-15 || (t < tmin + 1e-15 && leave >= 0 &&
                                 basis[i] < basis[leave])) {
          tmin = t;
          leave = i;
        }
      }
    }
    if (leave < 0)
      throw SolverError("LPFailure", "chebyshev LP unbounded (invalid support data)");
    basis[leave] = enter;
  }
  throw SolverError("LPFailure", "chebyshev LP did not converge",
                    {{"basis", {basis[0], basis[1], basis[2]}}});
}

}  // namespace detail

/// Inradius and circumradius with their centers, via discrete Chebyshev LPs
/// over the sampled directions.
[[nodiscard]] inline Radii inradius_outradius(const Vec& h) {
  // r_in = max_c min_j (h_j - <c, theta_j>): dual is minimize h^T lambda.
  const Eigen::Vector3d yin = detail::chebyshev_lp(h, +1);
  // R_out = min_c max_j (h_j - <c, theta_j>): dual is maximize h^T lambda.
  const Eigen::Vector3d yout = detail::chebyshev_lp(h, -1);
  Radii r;
  r.c_in = {yin[0], yin[1]};
  r.r_in = yin[2];
  r.c_out = {yout[0], yout[1]};
  r.R_out = yout[2];
  if (!(r.r_in > 0)) throw DegenerateBody("non-positive inradius");
  return r;
}

// ---------------------------------------------------------------------------
// normalization
// ---------------------------------------------------------------------------

/// Translates the body so its Steiner point is at the origin (canonical
/// normalization applied before solving).  Returns the shifted samples and
/// the applied shift.
[[nodiscard]] inline std::pair<Vec, Eigen::Vector2d> steiner_normalize(const Vec& h) {
  const Eigen::Vector2d s = steiner_point(h);
  const int M = static_cast<int>(h.size());
  const Vec th = grid_angles(M);
  Vec out = h - s[0] * th.cos() - s[1] * th.sin();
  if (out.minCoeff() <= 0)
    throw DegenerateBody("support not strictly positive after normalization");
  return {std::move(out), s};
}

}  // namespace bernoulli
