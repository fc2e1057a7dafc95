// ============================================================================
// errors.hpp -- structured error types shared by all solver modules.
//
// Every failure mode that can escape a public entry point is represented by a
// SolverError subclass carrying a machine-readable kind tag plus a context
// payload, so front ends can serialize failures uniformly.
// ============================================================================
#pragma once

#include <stdexcept>
#include <string>
#include <utility>

#include <nlohmann/json.hpp>

namespace bernoulli {

/// Base class for all numerical-failure exceptions.  `kind()` is a stable
/// machine-readable tag; `context()` carries structured diagnostic data.
class SolverError : public std::runtime_error {
 public:
  SolverError(std::string kind, const std::string& detail,
              nlohmann::json context = nlohmann::json::object())
      : std::runtime_error(detail),
        kind_(std::move(kind)),
        context_(std::move(context)) {}

  [[nodiscard]] const std::string& kind() const noexcept { return kind_; }
  [[nodiscard]] const nlohmann::json& context() const noexcept { return context_; }

  /// Serialized form used by the CLI on exit code 1.
  [[nodiscard]] nlohmann::json to_json() const {
    return {{"kind", kind_}, {"detail", what()}, {"context", context_}};
  }

 private:
  std::string kind_;
  nlohmann::json context_;
};

/// Newton iteration on the ring PDE stopped making progress.
class NewtonDivergence : public SolverError {
 public:
  explicit NewtonDivergence(const std::string& detail,
                            nlohmann::json ctx = nlohmann::json::object())
      : SolverError("NewtonDivergence", detail, std::move(ctx)) {}
};

/// An iterate lost the discrete-convexity margin required by the
/// level-set formulas (radius of curvature fell below the floor).
class ConvexityLoss : public SolverError {
 public:
  explicit ConvexityLoss(const std::string& detail,
                         nlohmann::json ctx = nlohmann::json::object())
      : SolverError("ConvexityLoss", detail, std::move(ctx)) {}
};

/// Monotonicity in t could not be maintained at the current resolution.
class GridTooCoarse : public SolverError {
 public:
  explicit GridTooCoarse(const std::string& detail,
                         nlohmann::json ctx = nlohmann::json::object())
      : SolverError("GridTooCoarse", detail, std::move(ctx)) {}
};

/// A fixed-point trial loop failed to converge within its budget.
class TrialDivergence : public SolverError {
 public:
  explicit TrialDivergence(const std::string& detail,
                           nlohmann::json ctx = nlohmann::json::object())
      : SolverError("TrialDivergence", detail, std::move(ctx)) {}
};

/// A requested tau lies below the Bernoulli constant of its domain.
class InfeasibleTau : public SolverError {
 public:
  explicit InfeasibleTau(const std::string& detail,
                         nlohmann::json ctx = nlohmann::json::object())
      : SolverError("InfeasibleTau", detail, std::move(ctx)) {}
};

/// Feasibility observations inconsistent with monotonicity in tau.
class BracketInversion : public SolverError {
 public:
  explicit BracketInversion(const std::string& detail,
                            nlohmann::json ctx = nlohmann::json::object())
      : SolverError("BracketInversion", detail, std::move(ctx)) {}
};

/// A body degenerated to (numerically) a segment or point.
class DegenerateBody : public SolverError {
 public:
  explicit DegenerateBody(const std::string& detail,
                          nlohmann::json ctx = nlohmann::json::object())
      : SolverError("DegenerateBody", detail, std::move(ctx)) {}
};

/// Grids (direction count or level count) of two operands disagree.
class GridMismatch : public SolverError {
 public:
  explicit GridMismatch(const std::string& detail,
                        nlohmann::json ctx = nlohmann::json::object())
      : SolverError("GridMismatch", detail, std::move(ctx)) {}
};

}  // namespace bernoulli
