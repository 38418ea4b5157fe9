#include "wair/collocation.hpp"

#include <cmath>
#include <stdexcept>

namespace wair {

Transcription Transcription::uniform(int knots, double final_time, int state_dim, int input_dim) {
  if (knots < 2) throw std::invalid_argument("Transcription: need at least two knots");
  if (!(final_time > 0.0)) throw std::invalid_argument("Transcription: final time must be positive");
  Transcription tr;
  tr.knot_times.resize(knots);
  for (int k = 0; k < knots; ++k) {
    tr.knot_times[k] = final_time * static_cast<double>(k) / static_cast<double>(knots - 1);
  }
  tr.knot_times.back() = final_time;
  tr.states.assign(knots, VectorXd::Zero(state_dim));
  tr.inputs.assign(knots, VectorXd::Zero(input_dim));
  return tr;
}

void Transcription::validate() const {
  const std::size_t n = knot_times.size();
  if (n < 2 || states.size() != n || inputs.size() != n) {
    throw std::invalid_argument("Transcription: knot arrays must share a length of at least 2");
  }
  if (knot_times.front() != 0.0) throw std::invalid_argument("Transcription: t_1 must be 0");
  for (std::size_t k = 1; k < n; ++k) {
    if (!(knot_times[k] > knot_times[k - 1])) {
      throw std::invalid_argument("Transcription: knot times must be strictly increasing");
    }
  }
  for (std::size_t k = 0; k < n; ++k) {
    if (states[k].size() != states.front().size() || inputs[k].size() != inputs.front().size()) {
      throw std::invalid_argument("Transcription: inconsistent knot dimensions");
    }
  }
}

VectorXd Transcription::to_decision_vector() const {
  VectorXd y(decision_dim());
  for (int k = 0; k < knots(); ++k) {
    y.segment(state_offset(k), state_dim()) = states[k];
    y.segment(input_offset(k), input_dim()) = inputs[k];
  }
  y[final_time_offset()] = final_time();
  return y;
}

Transcription Transcription::with_decision_vector(const VectorXd& y) const {
  if (y.size() != decision_dim()) {
    throw std::invalid_argument("Transcription: decision vector has the wrong size");
  }
  Transcription tr = *this;
  for (int k = 0; k < knots(); ++k) {
    tr.states[k] = y.segment(state_offset(k), state_dim());
    tr.inputs[k] = y.segment(input_offset(k), input_dim());
  }
  const double t_f = y[final_time_offset()];
  if (t_f != final_time()) {
    const double scale = t_f / final_time();
    for (double& t : tr.knot_times) t *= scale;
    tr.knot_times.back() = t_f;
  }
  return tr;
}

namespace {

// Neumaier compensated summation.
class Summation {
 public:
  void add(double v) {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v)) {
      compensation_ += (sum_ - t) + v;
    } else {
      compensation_ += (v - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + compensation_; }

 private:
  double sum_ = 0.0;
  double compensation_ = 0.0;
};

void check_cost_dims(const Transcription& tr, const ReferenceTrajectory& refs,
                     const CostWeights& weights) {
  if (static_cast<int>(refs.states.size()) != tr.knots() ||
      weights.state.size() != tr.state_dim() || weights.input.size() != tr.input_dim()) {
    throw std::invalid_argument("cost: dimensions of references or weights do not match");
  }
}

}  // namespace

double cost(const Transcription& tr, const ReferenceTrajectory& refs, const CostWeights& weights) {
  check_cost_dims(tr, refs, weights);
  Summation sum;
  for (int k = 0; k < tr.knots(); ++k) {
    const VectorXd e = refs.states[k] - tr.states[k];
    for (int i = 0; i < e.size(); ++i) sum.add(weights.state[i] * e[i] * e[i]);
    if (k + 1 < tr.knots()) {
      const VectorXd& u = tr.inputs[k];
      for (int i = 0; i < u.size(); ++i) sum.add(weights.input[i] * u[i] * u[i]);
    }
  }
  return sum.value();
}

VectorXd cost_gradient(const Transcription& tr, const ReferenceTrajectory& refs,
                       const CostWeights& weights) {
  check_cost_dims(tr, refs, weights);
  VectorXd g = VectorXd::Zero(tr.decision_dim());
  for (int k = 0; k < tr.knots(); ++k) {
    g.segment(tr.state_offset(k), tr.state_dim()) =
        -2.0 * weights.state.cwiseProduct(refs.states[k] - tr.states[k]);
    if (k + 1 < tr.knots()) {
      g.segment(tr.input_offset(k), tr.input_dim()) = 2.0 * weights.input.cwiseProduct(tr.inputs[k]);
    }
  }
  return g;
}

VectorXd cost_hessian_diagonal(const Transcription& tr, const CostWeights& weights) {
  VectorXd h = VectorXd::Zero(tr.decision_dim());
  for (int k = 0; k < tr.knots(); ++k) {
    h.segment(tr.state_offset(k), tr.state_dim()) = 2.0 * weights.state;
    if (k + 1 < tr.knots()) h.segment(tr.input_offset(k), tr.input_dim()) = 2.0 * weights.input;
  }
  return h;
}

namespace {

// Interval j with t_j <= t <= t_j+1; the last interval owns t_N.
int locate_interval(const std::vector<double>& knot_times, double t) {
  const double span = knot_times.back() - knot_times.front();
  const double slack = 1e-12 * std::max(1.0, span);
  if (!(t >= knot_times.front() - slack && t <= knot_times.back() + slack)) {
    throw std::out_of_range("interpolation time outside the knot range");
  }
  const int last = static_cast<int>(knot_times.size()) - 2;
  for (int j = 0; j < last; ++j) {
    if (t < knot_times[j + 1]) return j;
  }
  return last;
}

}  // namespace

VectorXd input_interpolate(const std::vector<VectorXd>& inputs,
                           const std::vector<double>& knot_times, double t) {
  if (inputs.size() != knot_times.size() || inputs.size() < 2) {
    throw std::invalid_argument("input_interpolate: need matching knot arrays of length >= 2");
  }
  const int j = locate_interval(knot_times, t);
  const double dt = knot_times[j + 1] - knot_times[j];
  return inputs[j] + (t - knot_times[j]) / dt * (inputs[j + 1] - inputs[j]);
}

VectorXd HermiteCoefficients::value(double sigma) const {
  return c0 + sigma * (c1 + sigma * (c2 + sigma * c3));
}

VectorXd HermiteCoefficients::slope(double sigma) const {
  return c1 + sigma * (2.0 * c2 + 3.0 * sigma * c3);
}

HermiteCoefficients hermite_coefficients(const VectorXd& x_j, const VectorXd& x_j1,
                                         const VectorXd& f_j, const VectorXd& f_j1, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("hermite_coefficients: h must be positive");
  HermiteCoefficients c;
  c.c0 = x_j;
  c.c1 = h * f_j;
  c.c2 = -3.0 * x_j - 2.0 * h * f_j + 3.0 * x_j1 - h * f_j1;
  c.c3 = 2.0 * x_j + h * f_j - 2.0 * x_j1 + h * f_j1;
  return c;
}

InterpolatedState state_interpolate(const Transcription& tr, const DynamicsFn& f, double t) {
  const int j = locate_interval(tr.knot_times, t);
  const double h = tr.interval(j);
  const HermiteCoefficients c =
      hermite_coefficients(tr.states[j], tr.states[j + 1], f(tr.states[j], tr.inputs[j]),
                           f(tr.states[j + 1], tr.inputs[j + 1]), h);
  const double sigma = (t - tr.knot_times[j]) / h;
  return {c.value(sigma), c.slope(sigma) / h};
}

VectorXd collocation_defects(const Transcription& tr, const DynamicsFn& f) {
  tr.validate();
  const int n = tr.knots();
  const int nx = tr.state_dim();
  std::vector<VectorXd> knot_f(n);
  for (int k = 0; k < n; ++k) knot_f[k] = f(tr.states[k], tr.inputs[k]);

  VectorXd defects(nx * (n - 1));
  for (int j = 0; j + 1 < n; ++j) {
    const double h = tr.interval(j);
    const HermiteCoefficients c =
        hermite_coefficients(tr.states[j], tr.states[j + 1], knot_f[j], knot_f[j + 1], h);
    const VectorXd u_mid = 0.5 * (tr.inputs[j] + tr.inputs[j + 1]);
    defects.segment(j * nx, nx) = f(c.value(0.5), u_mid) - c.slope(0.5) / h;
  }
  return defects;
}

Eigen::MatrixXd dynamics_jacobian(const DynamicsFn& f, const VectorXd& x, const VectorXd& u,
                                  double fd_step) {
  const int nx = static_cast<int>(x.size());
  const int nu = static_cast<int>(u.size());
  Eigen::MatrixXd jac(nx, nx + nu);
  VectorXd xp = x;
  VectorXd up = u;
  for (int i = 0; i < nx + nu; ++i) {
    double& slot = i < nx ? xp[i] : up[i - nx];
    const double saved = slot;
    const double step = fd_step * std::max(1.0, std::abs(saved));
    slot = saved + step;
    const VectorXd plus = f(xp, up);
    slot = saved - step;
    const VectorXd minus = f(xp, up);
    slot = saved;
    jac.col(i) = (plus - minus) / (2.0 * step);
  }
  return jac;
}

SparseMatrix collocation_defect_jacobian(const Transcription& tr, const DynamicsFn& f,
                                         double fd_step) {
  tr.validate();
  const int n = tr.knots();
  const int nx = tr.state_dim();
  const int nu = tr.input_dim();
  const double t_f = tr.final_time();

  std::vector<VectorXd> knot_f(n);
  std::vector<Eigen::MatrixXd> knot_jac(n);
  for (int k = 0; k < n; ++k) {
    knot_f[k] = f(tr.states[k], tr.inputs[k]);
    knot_jac[k] = dynamics_jacobian(f, tr.states[k], tr.inputs[k], fd_step);
  }

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(n - 1) * nx * (2 * (nx + nu) + 1));
  auto emit = [&](int row0, int col0, const Eigen::MatrixXd& block) {
    for (int r = 0; r < block.rows(); ++r) {
      for (int c = 0; c < block.cols(); ++c) {
        if (block(r, c) != 0.0) triplets.emplace_back(row0 + r, col0 + c, block(r, c));
      }
    }
  };

  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(nx, nx);
  for (int j = 0; j + 1 < n; ++j) {
    const double h = tr.interval(j);
    const VectorXd x_mid = 0.5 * (tr.states[j] + tr.states[j + 1]) + h / 8.0 * (knot_f[j] - knot_f[j + 1]);
    const VectorXd u_mid = 0.5 * (tr.inputs[j] + tr.inputs[j + 1]);
    const Eigen::MatrixXd mid_jac = dynamics_jacobian(f, x_mid, u_mid, fd_step);
    const auto a_mid = mid_jac.leftCols(nx);
    const auto b_mid = mid_jac.rightCols(nu);
    const auto a_j = knot_jac[j].leftCols(nx);
    const auto b_j = knot_jac[j].rightCols(nu);
    const auto a_j1 = knot_jac[j + 1].leftCols(nx);
    const auto b_j1 = knot_jac[j + 1].rightCols(nu);

    const int row = j * nx;
    emit(row, tr.state_offset(j), a_mid * (0.5 * eye + h / 8.0 * a_j) + 1.5 / h * eye + 0.25 * a_j);
    emit(row, tr.input_offset(j), h / 8.0 * a_mid * b_j + 0.5 * b_mid + 0.25 * b_j);
    emit(row, tr.state_offset(j + 1), a_mid * (0.5 * eye - h / 8.0 * a_j1) - 1.5 / h * eye + 0.25 * a_j1);
    emit(row, tr.input_offset(j + 1), -h / 8.0 * a_mid * b_j1 + 0.5 * b_mid + 0.25 * b_j1);
    if (tr.free_final_time) {
      const double dh_dtf = h / t_f;
      const VectorXd d_dh = a_mid * (knot_f[j] - knot_f[j + 1]) / 8.0 +
                            1.5 / (h * h) * (tr.states[j + 1] - tr.states[j]);
      emit(row, tr.final_time_offset(), dh_dtf * d_dh);
    }
  }

  SparseMatrix jac(nx * (n - 1), tr.decision_dim());
  jac.setFromTriplets(triplets.begin(), triplets.end());
  return jac;
}

VectorXd boundary_residuals(const Transcription& tr, const VectorXd& start, const GoalSpec& goal) {
  const int nx = tr.state_dim();
  if (start.size() != nx || goal.target.size() != nx) {
    throw std::invalid_argument("boundary_residuals: start/goal dimension mismatch");
  }
  VectorXd r(nx + static_cast<int>(goal.components.size()));
  r.head(nx) = tr.states.front() - start;
  const VectorXd& last = tr.states.back();
  for (std::size_t i = 0; i < goal.components.size(); ++i) {
    const int c = goal.components[i];
    r[nx + static_cast<int>(i)] = last[c] - goal.target[c];
  }
  return r;
}

SparseMatrix boundary_jacobian(const Transcription& tr, const GoalSpec& goal) {
  const int nx = tr.state_dim();
  const int rows = nx + static_cast<int>(goal.components.size());
  std::vector<Eigen::Triplet<double>> triplets;
  for (int i = 0; i < nx; ++i) triplets.emplace_back(i, tr.state_offset(0) + i, 1.0);
  const int last = tr.state_offset(tr.knots() - 1);
  for (std::size_t i = 0; i < goal.components.size(); ++i) {
    triplets.emplace_back(nx + static_cast<int>(i), last + goal.components[i], 1.0);
  }
  SparseMatrix jac(rows, tr.decision_dim());
  jac.setFromTriplets(triplets.begin(), triplets.end());
  return jac;
}

}  // namespace wair
