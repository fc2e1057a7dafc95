// ============================================================================
// io.hpp -- CSV and JSON serialization for support functions, ring matrices,
// and boundary gradients.  All numeric output carries 17 significant digits
// so values round-trip exactly through text.
// ============================================================================
#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "bernoulli/convex_geometry.hpp"
#include "bernoulli/errors.hpp"
#include "bernoulli/ring_solver.hpp"

namespace bernoulli {

namespace detail {

/// Shortest representation with 17 significant digits (round-trip exact).
[[nodiscard]] inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open output file: " + path.string());
  return f;
}

}  // namespace detail

/// CSV schema: theta,h
inline void write_support_csv(const std::filesystem::path& path, const Vec& h) {
  auto f = detail::open_out(path);
  const Vec th = grid_angles(static_cast<int>(h.size()));
  f << "theta,h\n";
  for (int j = 0; j < h.size(); ++j)
    f << detail::fmt17(th[j]) << ',' << detail::fmt17(h[j]) << '\n';
}

/// CSV schema: theta,t,h (one row per grid node, level-major within theta)
inline void write_ring_csv(const std::filesystem::path& path, const Mat& H) {
  auto f = detail::open_out(path);
  const int M = static_cast<int>(H.rows());
  const int L = static_cast<int>(H.cols()) - 1;
  const Vec th = grid_angles(M);
  f << "theta,t,h\n";
  for (int j = 0; j < M; ++j)
    for (int k = 0; k <= L; ++k)
      f << detail::fmt17(th[j]) << ',' << detail::fmt17(static_cast<double>(k) / L)
        << ',' << detail::fmt17(H(j, k)) << '\n';
}

/// CSV schema: theta,grad_outer,grad_inner
inline void write_gradient_csv(const std::filesystem::path& path, const Vec& g_outer,
                               const Vec& g_inner) {
  if (g_outer.size() != g_inner.size())
    throw GridMismatch("gradient CSV: boundary grids disagree");
  auto f = detail::open_out(path);
  const Vec th = grid_angles(static_cast<int>(g_outer.size()));
  f << "theta,grad_outer,grad_inner\n";
  for (int j = 0; j < g_outer.size(); ++j)
    f << detail::fmt17(th[j]) << ',' << detail::fmt17(g_outer[j]) << ','
      << detail::fmt17(g_inner[j]) << '\n';
}

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  auto f = detail::open_out(path);
  f << j.dump(2) << '\n';
}

[[nodiscard]] inline nlohmann::json vec_to_json(const Vec& v) {
  nlohmann::json arr = nlohmann::json::array();
  for (int i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

}  // namespace bernoulli
