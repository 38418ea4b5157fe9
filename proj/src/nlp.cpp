#include "wair/nlp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <iostream>
#include <limits>
#include <memory>
#include <stdexcept>

namespace wair::nlp {

std::string to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::kConverged: return "converged";
    case SolveStatus::kMaxIterations: return "max-iter";
    case SolveStatus::kLineSearchFailure: return "line-search-failure";
  }
  return "unknown";
}

void NlpProblem::validate() const {
  if (dimension <= 0) throw std::invalid_argument("NlpProblem: dimension must be positive");
  if (!cost) throw std::invalid_argument("NlpProblem: cost callback is required");
  if (initial_guess.size() != dimension) {
    throw std::invalid_argument("NlpProblem: initial guess has the wrong size");
  }
  if (!initial_guess.allFinite()) throw std::invalid_argument("NlpProblem: initial guess must be finite");
  if ((lower.size() != 0 && lower.size() != dimension) ||
      (upper.size() != 0 && upper.size() != dimension)) {
    throw std::invalid_argument("NlpProblem: bounds have the wrong size");
  }
  if (lower.size() != 0 && upper.size() != 0 && (lower.array() > upper.array()).any()) {
    throw std::invalid_argument("NlpProblem: lower bound exceeds upper bound");
  }
  if (equality_jacobian && !equalities) {
    throw std::invalid_argument("NlpProblem: equality Jacobian without equality callback");
  }
  if (inequality_jacobian && !inequalities) {
    throw std::invalid_argument("NlpProblem: inequality Jacobian without inequality callback");
  }
}

VectorXd fd_gradient(const ScalarFn& fn, const VectorXd& y, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("fd_gradient: step must be positive");
  VectorXd g(y.size());
  VectorXd probe = y;
  for (int i = 0; i < y.size(); ++i) {
    const double step = h * std::max(1.0, std::abs(y[i]));
    probe[i] = y[i] + step;
    const double plus = fn(probe);
    probe[i] = y[i] - step;
    const double minus = fn(probe);
    probe[i] = y[i];
    if (!std::isfinite(plus) || !std::isfinite(minus)) {
      throw std::domain_error("fd_gradient: callback returned a non-finite value");
    }
    g[i] = (plus - minus) / (2.0 * step);
  }
  return g;
}

namespace {

using Clock = std::chrono::steady_clock;
using Eigen::MatrixXd;

double inf_norm(const VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

// The solver works on the free coordinates z; coordinates with lower == upper
// are pinned. Finite bounds on free coordinates become inequality rows that
// follow the problem's own inequalities.
class AugmentedLagrangian {
 public:
  AugmentedLagrangian(const NlpProblem& problem, const SolveOptions& options)
      : problem_(problem), options_(options) {
    const int n = problem.dimension;
    base_ = problem.initial_guess;
    for (int i = 0; i < n; ++i) {
      const double lo = problem.lower.size() ? problem.lower[i] : -kInf;
      const double hi = problem.upper.size() ? problem.upper[i] : kInf;
      if (lo == hi) {
        base_[i] = lo;
        continue;
      }
      const int k = static_cast<int>(free_.size());
      free_.push_back(i);
      if (std::isfinite(lo)) bound_rows_.push_back({k, lo, +1.0});
      if (std::isfinite(hi)) bound_rows_.push_back({k, hi, -1.0});
    }
    std::vector<Eigen::Triplet<double>> t;
    for (int k = 0; k < free_dim(); ++k) t.emplace_back(free_[k], k, 1.0);
    selection_.resize(n, free_dim());
    selection_.setFromTriplets(t.begin(), t.end());

    structured_ = (!problem.equalities || problem.equality_jacobian) &&
                  (!problem.inequalities || problem.inequality_jacobian);
    const VectorXd y0 = expand(initial_z());
    eq_dim_ = problem.equalities ? static_cast<int>(problem.equalities(y0).size()) : 0;
    general_ineq_dim_ = problem.inequalities ? static_cast<int>(problem.inequalities(y0).size()) : 0;
  }

  static constexpr double kInf = std::numeric_limits<double>::infinity();

  int free_dim() const { return static_cast<int>(free_.size()); }
  int eq_dim() const { return eq_dim_; }
  int ineq_dim() const { return general_ineq_dim_ + static_cast<int>(bound_rows_.size()); }
  bool structured() const { return structured_; }

  VectorXd initial_z() const {
    VectorXd z(free_dim());
    for (int k = 0; k < free_dim(); ++k) z[k] = base_[free_[k]];
    return z;
  }

  VectorXd expand(const VectorXd& z) const {
    VectorXd y = base_;
    for (int k = 0; k < free_dim(); ++k) y[free_[k]] = z[k];
    return y;
  }

  struct Values {
    double cost = 0.0;
    VectorXd eq;
    VectorXd ineq;
  };

  Values values(const VectorXd& z) const {
    const VectorXd y = expand(z);
    Values v;
    v.cost = problem_.cost(y);
    v.eq = problem_.equalities ? problem_.equalities(y) : VectorXd();
    v.ineq.resize(ineq_dim());
    if (general_ineq_dim_) v.ineq.head(general_ineq_dim_) = problem_.inequalities(y);
    for (std::size_t r = 0; r < bound_rows_.size(); ++r) {
      const BoundRow& b = bound_rows_[r];
      v.ineq[general_ineq_dim_ + static_cast<int>(r)] = b.sign * (z[b.index] - b.bound);
    }
    if (v.eq.size() != eq_dim_ || (general_ineq_dim_ && v.ineq.size() != ineq_dim())) {
      throw std::runtime_error("solve: constraint callback changed its output size");
    }
    return v;
  }

  static double violation(const Values& v) {
    double viol = inf_norm(v.eq);
    if (v.ineq.size()) viol = std::max(viol, -std::min(0.0, v.ineq.minCoeff()));
    return viol;
  }

  double merit(const Values& v, const VectorXd& lambda, const VectorXd& mu, double rho) const {
    double m = v.cost;
    if (v.eq.size()) m += lambda.dot(v.eq) + 0.5 * rho * v.eq.squaredNorm();
    for (int i = 0; i < v.ineq.size(); ++i) {
      const double shifted = std::max(0.0, mu[i] - rho * v.ineq[i]);
      m += (shifted * shifted - mu[i] * mu[i]) / (2.0 * rho);
    }
    return m;
  }

  double merit(const VectorXd& z, const VectorXd& lambda, const VectorXd& mu, double rho) const {
    return merit(values(z), lambda, mu, rho);
  }

  struct Linearization {
    VectorXd cost_gradient;
    SparseMatrix eq_jac;    // general rows, free columns
    SparseMatrix ineq_jac;  // general rows, free columns (bound rows handled separately)
  };

  Linearization linearize(const VectorXd& z) const {
    const VectorXd y = expand(z);
    Linearization lin;
    if (problem_.cost_gradient) {
      lin.cost_gradient = problem_.cost_gradient(y);
      lin.cost_gradient = selection_.transpose() * lin.cost_gradient;
    } else {
      lin.cost_gradient = fd_gradient([&](const VectorXd& zz) { return problem_.cost(expand(zz)); }, z,
                                      options_.fd_step);
    }
    if (problem_.equalities) lin.eq_jac = problem_.equality_jacobian(y) * selection_;
    if (problem_.inequalities) lin.ineq_jac = problem_.inequality_jacobian(y) * selection_;
    return lin;
  }

  // Gradient of the merit from a linearization: grad J + Jc^T (lambda + rho c) - Jg^T shifted.
  VectorXd merit_gradient(const Linearization& lin, const Values& v, const VectorXd& lambda,
                          const VectorXd& mu, double rho) const {
    VectorXd g = lin.cost_gradient;
    if (eq_dim_) g += lin.eq_jac.transpose() * (lambda + rho * v.eq);
    const VectorXd shifted = (mu - rho * v.ineq).cwiseMax(0.0);
    if (general_ineq_dim_) g -= lin.ineq_jac.transpose() * shifted.head(general_ineq_dim_);
    for (std::size_t r = 0; r < bound_rows_.size(); ++r) {
      const BoundRow& b = bound_rows_[r];
      g[b.index] -= b.sign * shifted[general_ineq_dim_ + static_cast<int>(r)];
    }
    return g;
  }

  VectorXd merit_gradient(const VectorXd& z, const Values& v, const VectorXd& lambda,
                          const VectorXd& mu, double rho, Linearization* lin_out) const {
    if (structured_) {
      Linearization lin = linearize(z);
      VectorXd g = merit_gradient(lin, v, lambda, mu, rho);
      if (lin_out) *lin_out = std::move(lin);
      return g;
    }
    return fd_gradient([&](const VectorXd& zz) { return merit(zz, lambda, mu, rho); }, z,
                       options_.fd_step);
  }

  // Lagrangian gradient grad J + Jc^T lambda - Jg^T mu.
  VectorXd lagrangian_gradient(const VectorXd& z, const VectorXd& lambda, const VectorXd& mu) const {
    if (structured_) {
      const Linearization lin = linearize(z);
      VectorXd g = lin.cost_gradient;
      if (eq_dim_) g += lin.eq_jac.transpose() * lambda;
      if (general_ineq_dim_) g -= lin.ineq_jac.transpose() * mu.head(general_ineq_dim_);
      for (std::size_t r = 0; r < bound_rows_.size(); ++r) {
        const BoundRow& b = bound_rows_[r];
        g[b.index] -= b.sign * mu[general_ineq_dim_ + static_cast<int>(r)];
      }
      return g;
    }
    auto lagrangian = [&](const VectorXd& zz) {
      const Values v = values(zz);
      double l = v.cost;
      if (eq_dim_) l += lambda.dot(v.eq);
      if (v.ineq.size()) l -= mu.dot(v.ineq);
      return l;
    };
    return fd_gradient(lagrangian, z, options_.fd_step);
  }

  // Dense Gauss-Newton curvature of the merit at z.
  MatrixXd curvature(const VectorXd& z, const Linearization& lin, const Values& v, const VectorXd& mu,
                     double rho) const {
    const int nf = free_dim();
    MatrixXd b = MatrixXd::Zero(nf, nf);
    if (problem_.cost_hessian_diagonal) {
      const VectorXd h = selection_.transpose() * problem_.cost_hessian_diagonal(expand(z));
      b.diagonal() += h.cwiseMax(0.0);
    }
    if (eq_dim_) {
      const Eigen::SparseMatrix<double> jtj = (lin.eq_jac.transpose() * lin.eq_jac).pruned();
      b += rho * MatrixXd(jtj);
    }
    const VectorXd shifted = mu - rho * v.ineq;
    if (general_ineq_dim_) {
      std::vector<Eigen::Triplet<double>> t;
      for (int r = 0; r < general_ineq_dim_; ++r) {
        if (shifted[r] > 0.0) t.emplace_back(r, r, 1.0);
      }
      Eigen::SparseMatrix<double> active(general_ineq_dim_, general_ineq_dim_);
      active.setFromTriplets(t.begin(), t.end());
      const Eigen::SparseMatrix<double> jac = lin.ineq_jac;
      const Eigen::SparseMatrix<double> jtj = jac.transpose() * active * jac;
      b += rho * MatrixXd(jtj);
    }
    for (std::size_t r = 0; r < bound_rows_.size(); ++r) {
      if (shifted[general_ineq_dim_ + static_cast<int>(r)] > 0.0) b(bound_rows_[r].index, bound_rows_[r].index) += rho;
    }
    return b;
  }

 private:
  struct BoundRow {
    int index;
    double bound;
    double sign;  // +1: z - lo >= 0, -1: hi - z >= 0
  };

  const NlpProblem& problem_;
  const SolveOptions& options_;
  VectorXd base_;
  std::vector<int> free_;
  std::vector<BoundRow> bound_rows_;
  SparseMatrix selection_;
  bool structured_ = false;
  int eq_dim_ = 0;
  int general_ineq_dim_ = 0;
};

// Inverse-Hessian model: seed operator (scaled identity or a factorized
// Gauss-Newton matrix) plus a limited memory of damped BFGS pairs.
class QuasiNewtonModel {
 public:
  explicit QuasiNewtonModel(int memory) : memory_(memory) {}

  void seed_identity() {
    pairs_.clear();
    llt_.reset();
    scale_ = 1.0;
  }

  /// Replaces the seed operator; stored pairs are kept.
  bool seed_matrix(MatrixXd b) {
    const double top = std::max(1.0, b.diagonal().cwiseAbs().maxCoeff());
    double shift = 1e-10 * top;
    for (int attempt = 0; attempt < 12; ++attempt) {
      MatrixXd shifted = b;
      shifted.diagonal().array() += shift;
      auto llt = std::make_unique<Eigen::LLT<MatrixXd>>(shifted);
      if (llt->info() == Eigen::Success) {
        llt_ = std::move(llt);
        return true;
      }
      shift *= 100.0;
    }
    seed_identity();
    return false;
  }

  bool has_matrix_seed() const { return static_cast<bool>(llt_); }
  bool has_pairs() const { return !pairs_.empty(); }

  VectorXd apply_inverse(const VectorXd& g) const {
    VectorXd q = g;
    std::vector<double> alpha(pairs_.size());
    for (int i = static_cast<int>(pairs_.size()) - 1; i >= 0; --i) {
      alpha[i] = pairs_[i].rho * pairs_[i].s.dot(q);
      q -= alpha[i] * pairs_[i].y;
    }
    VectorXd r = llt_ ? VectorXd(llt_->solve(q)) : VectorXd(scale_ * q);
    for (std::size_t i = 0; i < pairs_.size(); ++i) {
      const double beta = pairs_[i].rho * pairs_[i].y.dot(r);
      r += pairs_[i].s * (alpha[i] - beta);
    }
    return r;
  }

  // `model_step` is true when s was taken along -H g, so that B s = -alpha g.
  void update(const VectorXd& s, VectorXd y, const VectorXd& g, double alpha, bool model_step) {
    double sy = s.dot(y);
    if (model_step) {
      const double sbs = -alpha * s.dot(g);
      if (sbs > 0.0 && sy < 0.2 * sbs) {
        const double theta = 0.8 * sbs / (sbs - sy);
        y = theta * y - (1.0 - theta) * alpha * g;
        sy = s.dot(y);
      }
    }
    if (!(sy > 1e-12 * s.norm() * y.norm()) || !std::isfinite(sy)) return;
    if (!llt_ && pairs_.empty()) scale_ = sy / y.squaredNorm();
    pairs_.push_back({s, std::move(y), 1.0 / sy});
    if (static_cast<int>(pairs_.size()) > memory_) pairs_.pop_front();
  }

 private:
  struct Pair {
    VectorXd s;
    VectorXd y;
    double rho;
  };
  int memory_;
  std::deque<Pair> pairs_;
  std::unique_ptr<Eigen::LLT<MatrixXd>> llt_;
  double scale_ = 1.0;
};

enum class InnerStatus { kGradient, kStep, kLineSearch, kMaxIterations };

struct InnerResult {
  VectorXd z;
  AugmentedLagrangian::Values values;
  VectorXd gradient;
  InnerStatus status = InnerStatus::kMaxIterations;
  int iterations = 0;
};

InnerResult minimize_inner(const AugmentedLagrangian& al, const SolveOptions& options, VectorXd z,
                           const VectorXd& lambda, const VectorXd& mu, double rho, double tol_gradient) {
  InnerResult out;
  QuasiNewtonModel model(options.bfgs_memory);
  model.seed_identity();

  AugmentedLagrangian::Values v = al.values(z);
  double phi = al.merit(v, lambda, mu, rho);
  AugmentedLagrangian::Linearization lin;
  VectorXd g = al.merit_gradient(z, v, lambda, mu, rho, &lin);
  const bool use_curvature = al.structured();
  int since_seed = 0;
  if (use_curvature) model.seed_matrix(al.curvature(z, lin, v, mu, rho));

  for (int it = 0; it < options.max_inner_iterations; ++it) {
    if (inf_norm(g) <= tol_gradient) {
      out.status = InnerStatus::kGradient;
      break;
    }
    if (use_curvature && since_seed >= options.curvature_refresh) {
      model.seed_matrix(al.curvature(z, lin, v, mu, rho));
      since_seed = 0;
    }

    VectorXd d = -model.apply_inverse(g);
    bool model_step = true;
    if (!d.allFinite() || g.dot(d) >= -1e-14 * g.norm() * d.norm()) {
      d = -g;
      model_step = false;
    }

    const double slope = g.dot(d);
    double alpha = 1.0;
    bool accepted = false;
    VectorXd z_new;
    AugmentedLagrangian::Values v_new;
    double phi_new = phi;
    for (int ls = 0; ls < 60; ++ls) {
      z_new = z + alpha * d;
      v_new = al.values(z_new);
      phi_new = al.merit(v_new, lambda, mu, rho);
      if (std::isfinite(phi_new) && phi_new <= phi + 1e-4 * alpha * slope) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    ++out.iterations;
    ++since_seed;

    if (!accepted) {
      // Retry once from a fresh model before giving up.
      if (model.has_pairs() || (model_step && !use_curvature)) {
        if (use_curvature) {
          model.seed_matrix(al.curvature(z, lin, v, mu, rho));
          since_seed = 0;
        } else {
          model.seed_identity();
        }
        if (model_step) continue;
      }
      out.status = InnerStatus::kLineSearch;
      break;
    }

    const VectorXd s = z_new - z;
    AugmentedLagrangian::Linearization lin_new;
    const VectorXd g_new = al.merit_gradient(z_new, v_new, lambda, mu, rho, &lin_new);
    model.update(s, g_new - g, g, alpha, model_step);

    z = std::move(z_new);
    v = std::move(v_new);
    phi = phi_new;
    g = g_new;
    lin = std::move(lin_new);

    if (inf_norm(s) <= options.tol_step * (1.0 + inf_norm(z))) {
      out.status = InnerStatus::kStep;
      break;
    }
  }
  if (out.status == InnerStatus::kMaxIterations && inf_norm(g) <= tol_gradient) {
    out.status = InnerStatus::kGradient;
  }
  out.z = std::move(z);
  out.values = std::move(v);
  out.gradient = std::move(g);
  return out;
}

}  // namespace

SolveResult solve(const NlpProblem& problem, const SolveOptions& options,
                  const std::optional<Multipliers>& warm_multipliers) {
  problem.validate();
  const auto start_time = Clock::now();
  AugmentedLagrangian al(problem, options);

  VectorXd z = al.initial_z();
  VectorXd lambda = VectorXd::Zero(al.eq_dim());
  VectorXd mu = VectorXd::Zero(al.ineq_dim());
  if (warm_multipliers) {
    if (warm_multipliers->equality.size() == lambda.size()) lambda = warm_multipliers->equality;
    if (warm_multipliers->inequality.size() == mu.size()) mu = warm_multipliers->inequality.cwiseMax(0.0);
  }
  double rho = options.penalty_initial;

  SolveResult result;
  SolveReport& report = result.report;

  AugmentedLagrangian::Values values = al.values(z);
  double violation = AugmentedLagrangian::violation(values);
  const double gradient_scale = [&] {
    VectorXd g0 = al.structured()
                      ? al.linearize(z).cost_gradient
                      : fd_gradient([&](const VectorXd& zz) { return al.values(zz).cost; }, z, options.fd_step);
    return std::max(1.0, inf_norm(g0));
  }();
  const double tol_gradient = options.tol_optimality * gradient_scale;

  auto feasible = [&](const AugmentedLagrangian::Values& v) {
    const bool eq_ok = inf_norm(v.eq) <= options.tol_eq;
    const bool ineq_ok = v.ineq.size() == 0 || v.ineq.minCoeff() >= -options.tol_ineq;
    return eq_ok && ineq_ok;
  };

  double optimality = inf_norm(al.lagrangian_gradient(z, lambda, mu));
  report.status = SolveStatus::kMaxIterations;
  bool converged = feasible(values) && optimality <= tol_gradient;

  double inner_tol = std::max(tol_gradient, 1e-2 * gradient_scale);
  int stalled = 0;
  int no_progress = 0;
  int outer = 0;
  for (; outer < options.max_outer_iterations && !converged; ++outer) {
    const InnerResult inner = minimize_inner(al, options, z, lambda, mu, rho, inner_tol);
    report.inner_iterations += inner.iterations;
    const double new_violation = AugmentedLagrangian::violation(inner.values);
    if (options.verbose) {
      std::cerr << "outer " << outer << " rho " << rho << " inner " << inner.iterations << " status "
                << static_cast<int>(inner.status) << " viol " << new_violation << " |g| "
                << inf_norm(inner.gradient) << " cost " << inner.values.cost << "\n";
    }

    if (!(new_violation <= violation + 1e-12) && !feasible(inner.values)) {
      // Keep the last accepted iterate and tighten the penalty.
      if (rho >= options.penalty_max) {
        if (++stalled >= 3) {
          report.message = "stalled at maximum penalty";
          ++outer;
          break;
        }
      }
      rho = std::min(rho * options.penalty_growth, options.penalty_max);
      continue;
    }

    const bool moved = (inner.z - z).cwiseAbs().maxCoeff() > 0.0;
    no_progress = moved ? 0 : no_progress + 1;
    z = inner.z;
    values = inner.values;
    inner_tol = std::max(tol_gradient, 0.1 * inner_tol);
    report.violation_history.push_back(new_violation);

    // First-order multiplier update; the merit gradient at z is then the
    // Lagrangian gradient at the updated multipliers.
    lambda += rho * values.eq;
    mu = (mu - rho * values.ineq).cwiseMax(0.0);
    optimality = inf_norm(inner.gradient);

    const bool inner_done = inner.status == InnerStatus::kGradient || inner.status == InnerStatus::kStep;
    if (feasible(values) && inner_done && optimality <= tol_gradient) {
      converged = true;
      ++outer;
      break;
    }

    if (no_progress >= 3 && inner.status == InnerStatus::kLineSearch) {
      report.status = SolveStatus::kLineSearchFailure;
      report.message = "line search made no progress";
      ++outer;
      break;
    }

    const bool insufficient = !feasible(values) && new_violation > 0.25 * violation;
    if (rho >= options.penalty_max && !feasible(values) && new_violation > 0.99 * violation) {
      if (++stalled >= 3) {
        report.message = "stalled at maximum penalty";
        ++outer;
        violation = new_violation;
        break;
      }
    } else {
      stalled = 0;
    }
    if (insufficient) rho = std::min(rho * options.penalty_growth, options.penalty_max);
    violation = new_violation;
  }

  if (converged) {
    report.status = SolveStatus::kConverged;
  } else if (report.status != SolveStatus::kLineSearchFailure && report.message.empty()) {
    report.message = "iteration limit reached";
  }

  report.outer_iterations = outer;
  report.final_cost = values.cost;
  report.max_equality_violation = inf_norm(values.eq);
  report.min_inequality_margin = values.ineq.size() ? values.ineq.minCoeff() : 0.0;
  report.lagrangian_gradient_norm = optimality;
  report.penalty = rho;
  report.wall_time = std::chrono::duration<double>(Clock::now() - start_time).count();

  result.solution = al.expand(z);
  result.multipliers.equality = lambda;
  result.multipliers.inequality = mu;
  return result;
}

}  // namespace wair::nlp
