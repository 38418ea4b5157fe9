#pragma once

// Direct-collocation transcription with cubic Hermite state interpolants,
// piecewise-linear inputs and defects at interval midpoints. Everything here
// is independent of the robot model: dynamics enter as a callback.

#include <functional>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace wair {

using Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// xdot = f(x, u).
using DynamicsFn = std::function<VectorXd(const VectorXd& x, const VectorXd& u)>;

/// Knot states/inputs plus final time. The decision vector is laid out as
/// Y = [x_1 .. x_N, u_1 .. u_N, t_f].
struct Transcription {
  std::vector<double> knot_times;  // 0 = t_1 < ... < t_N = t_f
  std::vector<VectorXd> states;
  std::vector<VectorXd> inputs;
  bool free_final_time = false;

  /// N knots uniformly spaced on [0, final_time], zero-initialized.
  static Transcription uniform(int knots, double final_time, int state_dim, int input_dim);

  int knots() const { return static_cast<int>(knot_times.size()); }
  int state_dim() const { return states.empty() ? 0 : static_cast<int>(states.front().size()); }
  int input_dim() const { return inputs.empty() ? 0 : static_cast<int>(inputs.front().size()); }
  double final_time() const { return knot_times.back(); }
  double interval(int j) const { return knot_times[j + 1] - knot_times[j]; }

  int decision_dim() const { return knots() * (state_dim() + input_dim()) + 1; }
  int state_offset(int k) const { return k * state_dim(); }
  int input_offset(int k) const { return knots() * state_dim() + k * input_dim(); }
  int final_time_offset() const { return decision_dim() - 1; }

  /// Throws std::invalid_argument on inconsistent sizes or non-increasing times.
  void validate() const;
  VectorXd to_decision_vector() const;
  /// Copy with states/inputs/t_f taken from `y`; knot times rescale with t_f.
  Transcription with_decision_vector(const VectorXd& y) const;
};

struct CostWeights {
  VectorXd state;  // diagonal of Q
  VectorXd input;  // diagonal of R
};

struct ReferenceTrajectory {
  std::vector<VectorXd> states;  // x_r at each knot
};

/// J = sum_k e_k^T Q e_k + sum_{k<N} u_k^T R u_k with e_k = x_r,k - x_k.
/// The input sum skips the last knot. Uses compensated summation.
double cost(const Transcription& tr, const ReferenceTrajectory& refs, const CostWeights& weights);
/// Gradient of cost() with respect to the decision vector.
VectorXd cost_gradient(const Transcription& tr, const ReferenceTrajectory& refs,
                       const CostWeights& weights);
/// Diagonal of the (constant) Hessian of cost().
VectorXd cost_hessian_diagonal(const Transcription& tr, const CostWeights& weights);

/// Linear interpolation of knot inputs. Throws std::out_of_range outside [t_1, t_N].
VectorXd input_interpolate(const std::vector<VectorXd>& inputs,
                           const std::vector<double>& knot_times, double t);

struct HermiteCoefficients {
  VectorXd c0, c1, c2, c3;
  VectorXd value(double sigma) const;
  /// d/dsigma; divide by h for the time derivative.
  VectorXd slope(double sigma) const;
};

HermiteCoefficients hermite_coefficients(const VectorXd& x_j, const VectorXd& x_j1,
                                         const VectorXd& f_j, const VectorXd& f_j1, double h);

struct InterpolatedState {
  VectorXd x;
  VectorXd x_dot;
};

/// Cubic Hermite interpolant through the knots with endpoint slopes
/// f(x_k, u_k). Throws std::out_of_range outside [t_1, t_N].
InterpolatedState state_interpolate(const Transcription& tr, const DynamicsFn& f, double t);

/// One block of state_dim rows per interval:
/// f(x_int(t_c), u_int(t_c)) - xdot_int(t_c) at the interval midpoint t_c.
VectorXd collocation_defects(const Transcription& tr, const DynamicsFn& f);

/// Jacobian of collocation_defects() with respect to the decision vector,
/// built from central-difference Jacobians of f at knots and midpoints.
/// The t_f column is filled only for free-final-time transcriptions.
SparseMatrix collocation_defect_jacobian(const Transcription& tr, const DynamicsFn& f,
                                         double fd_step = 1e-6);

struct GoalSpec {
  VectorXd target;
  std::vector<int> components;  // indices of x(t_N) that are constrained
};

/// [x(t_1) - start; (x(t_N) - goal.target)[goal.components]].
VectorXd boundary_residuals(const Transcription& tr, const VectorXd& start, const GoalSpec& goal);
SparseMatrix boundary_jacobian(const Transcription& tr, const GoalSpec& goal);

/// Central-difference Jacobian of f with respect to the stacked [x; u].
Eigen::MatrixXd dynamics_jacobian(const DynamicsFn& f, const VectorXd& x, const VectorXd& u,
                                  double fd_step = 1e-6);

}  // namespace wair
