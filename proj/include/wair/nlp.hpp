#pragma once

// Augmented-Lagrangian NLP solver:
//
//   minimize  J(y)  subject to  c(y) = 0,  g(y) >= 0,  lower <= y <= upper.
//
// Inner problems are minimized with a damped BFGS method and backtracking
// line search. When the problem supplies constraint Jacobians the BFGS model
// is seeded with the Gauss-Newton curvature of the augmented Lagrangian;
// otherwise it starts from a scaled identity and all derivatives come from
// central differences.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace wair::nlp {

using Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

using ScalarFn = std::function<double(const VectorXd&)>;
using VectorFn = std::function<VectorXd(const VectorXd&)>;
using JacobianFn = std::function<SparseMatrix(const VectorXd&)>;

struct NlpProblem {
  int dimension = 0;
  ScalarFn cost;
  VectorFn cost_gradient;          // optional; central differences otherwise
  VectorFn cost_hessian_diagonal;  // optional; seeds the curvature model
  VectorFn equalities;             // optional
  JacobianFn equality_jacobian;    // optional
  VectorFn inequalities;           // optional, feasible when >= 0
  JacobianFn inequality_jacobian;  // optional
  VectorXd lower;                  // empty means unbounded
  VectorXd upper;
  VectorXd initial_guess;

  /// Throws std::invalid_argument on missing callbacks or size mismatches.
  void validate() const;
};

struct SolveOptions {
  double tol_eq = 1e-6;
  double tol_ineq = 1e-6;
  double tol_step = 1e-10;
  /// Lagrangian-gradient tolerance relative to max(1, |grad J(y0)|_inf).
  double tol_optimality = 1e-4;
  int max_outer_iterations = 200;
  int max_inner_iterations = 500;
  double penalty_initial = 10.0;
  double penalty_growth = 10.0;
  double penalty_max = 1e10;
  double fd_step = 1e-6;
  int bfgs_memory = 30;
  /// Inner iterations between re-seeding the curvature model from Jacobians.
  int curvature_refresh = 8;
  bool verbose = false;
};

enum class SolveStatus { kConverged, kMaxIterations, kLineSearchFailure };

std::string to_string(SolveStatus status);

struct SolveReport {
  SolveStatus status = SolveStatus::kMaxIterations;
  int outer_iterations = 0;
  int inner_iterations = 0;
  double final_cost = 0.0;
  double max_equality_violation = 0.0;
  double min_inequality_margin = 0.0;
  double lagrangian_gradient_norm = 0.0;
  double penalty = 0.0;
  double wall_time = 0.0;
  std::string message;
  /// max |c| (and bound/inequality violation) after each accepted outer iteration.
  std::vector<double> violation_history;
};

/// Multiplier estimates, reusable for warm starts.
struct Multipliers {
  VectorXd equality;    // lambda
  VectorXd inequality;  // mu >= 0, general inequalities followed by bound rows
};

struct SolveResult {
  VectorXd solution;
  Multipliers multipliers;
  SolveReport report;
};

/// Central differences with per-coordinate step h * max(1, |y_i|).
/// Throws std::domain_error if the callback returns a non-finite value.
VectorXd fd_gradient(const ScalarFn& fn, const VectorXd& y, double h = 1e-6);

SolveResult solve(const NlpProblem& problem, const SolveOptions& options = {},
                  const std::optional<Multipliers>& warm_multipliers = std::nullopt);

}  // namespace wair::nlp
