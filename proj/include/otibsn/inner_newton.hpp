// SPDX-FileCopyrightText: 2026 The otibsn authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "otibsn/core.hpp"
#include "otibsn/feasibility.hpp"
#include "otibsn/krylov.hpp"
#include "otibsn/semidual.hpp"
#include "otibsn/sparsify.hpp"

namespace otibsn {

struct NewtonOptions {
  double eta = 1e-4;
  double armijo_sigma = 1e-4;
  double armijo_beta = 0.8;
  double cg_rel_tol = 1e-10;
  /// 0 selects 2n.
  int cg_max_iters = 0;
  int max_backtracks = 200;

  static NewtonOptions from(const SolverConfig& config) {
    return {config.eta, config.armijo_sigma, config.armijo_beta, config.cg_rel_tol,
            config.cg_max_iters, 200};
  }
};

struct NewtonStepResult {
  DualState gamma;
  /// Accepted step length; 0 when the gradient vanished and nothing moved.
  double step = 0.0;
  int cg_iters = 0;
  /// Softmax cache at the returned gamma.
  RowSoftmaxCache cache;
  double grad_norm = 0.0;
  double rho = 0.0;
  Index nnz = 0;
  /// g^T d for the Newton direction d.
  double directional_derivative = 0.0;
  double objective_before = 0.0;
  /// L(gamma + t d) - L(gamma).
  double objective_change = 0.0;
  int backtracks = 0;
};

namespace detail {

inline NewtonStepResult newton_step_cached(const LogPlan& plan, const DualState& state,
                                           const RowSoftmaxCache& cache, const Vector& gradient,
                                           const OtProblem& problem, const NewtonOptions& opts,
                                           Index anchor) {
  const Index m = problem.rows();
  const Index n = problem.cols();
  NewtonStepResult out;
  out.gamma = state;
  out.grad_norm = gradient.norm();
  out.objective_before = semidual_value(cache, state.gamma, problem, opts.eta);
  if (out.grad_norm == 0.0) {
    out.cache = cache;
    return out;
  }

  out.rho = threshold_rho(opts.eta, m, n, out.grad_norm);
  SparseHessianOp hessian(sparsify_p(cache, out.rho, anchor), problem.a(), opts.eta);
  out.nnz = hessian.p_rho().nnz();

  // The gradient sums to zero analytically; drop its rounding residue along 1
  // so the shifted solve cannot amplify it by 1/||g||.
  Vector rhs = -gradient;
  rhs.array() -= rhs.mean();
  const int cap = opts.cg_max_iters > 0 ? opts.cg_max_iters : static_cast<int>(2 * n);
  CgResult cg = cg_solve(hessian, out.grad_norm, rhs, opts.cg_rel_tol, cap);
  out.cg_iters = cg.iterations;
  Vector direction = std::move(cg.solution);
  direction.array() -= direction.mean();

  out.directional_derivative = gradient.dot(direction);
  if (!(out.directional_derivative < 0.0)) {
    throw Error(ErrorCode::LineSearchStalled, "Newton direction is not a descent direction");
  }

  double step = 1.0;
  for (int trial = 0; trial < opts.max_backtracks; ++trial) {
    const Vector candidate = state.gamma + step * direction;
    RowSoftmaxCache trial_cache = compute_p(plan, candidate, problem, opts.eta);
    const double change =
        semidual_change(cache, trial_cache, problem, opts.eta, gradient, direction, step);
    if (change <= opts.armijo_sigma * step * out.directional_derivative) {
      out.gamma.gamma = candidate;
      out.step = step;
      out.cache = std::move(trial_cache);
      out.objective_change = change;
      out.backtracks = trial;
      return out;
    }
    step *= opts.armijo_beta;
  }
  throw Error(ErrorCode::LineSearchStalled, "Armijo backtracking did not terminate");
}

}  // namespace detail

/// One sparsified Newton step: threshold P, solve (H_rho + ||g|| I) d = -g by
/// CG, and backtrack from t = 1 until the Armijo condition holds.
inline NewtonStepResult newton_step(const LogPlan& plan, const DualState& state,
                                    const OtProblem& problem, const NewtonOptions& opts) {
  const RowSoftmaxCache cache = compute_p(plan, state.gamma, problem, opts.eta);
  const Vector gradient = semidual_gradient(cache, problem);
  return detail::newton_step_cached(plan, state, cache, gradient, problem, opts,
                                    choose_anchor(problem.a()));
}

enum class InnerStopReason { InexactCriterion, GradientTarget, GradFloor, MaxInner };

constexpr std::string_view to_string(InnerStopReason reason) {
  switch (reason) {
    case InnerStopReason::InexactCriterion: return "InexactCriterion";
    case InnerStopReason::GradientTarget: return "GradientTarget";
    case InnerStopReason::GradFloor: return "GradFloor";
    case InnerStopReason::MaxInner: return "MaxInner";
  }
  return "Unknown";
}

/// Per-step diagnostics.
struct InnerStepLog {
  double step = 0.0;
  int cg_iters = 0;
  double grad_norm_before = 0.0;
  double grad_norm_after = 0.0;
  double directional_derivative = 0.0;
  double objective_change = 0.0;
  double gamma_sum = 0.0;
  double gamma_norm = 0.0;
  Index nnz = 0;
};

struct InnerReport {
  int newton_iters = 0;
  int cg_iters_total = 0;
  double final_grad_norm = 0.0;
  InnerStopReason stop_reason = InnerStopReason::MaxInner;
  std::vector<double> step_sizes;
  std::vector<InnerStepLog> steps;
  /// D(P_Omega(X), X) at the last evaluation of the full criterion; negative if never evaluated.
  double final_divergence = -1.0;
};

/// When the inner loop may stop.
struct InnerStopRule {
  enum class Kind { Bregman, Gradient };
  Kind kind = Kind::Bregman;
  /// Inexactness tolerance mu_k, or the gradient-norm target.
  double tol = 1e-4;
  /// Multiplier on mu_k in the Bregman test.
  double scale = 1.0;

  static InnerStopRule bregman(double mu_k, double scale) { return {Kind::Bregman, mu_k, scale}; }
  static InnerStopRule gradient(double target) { return {Kind::Gradient, target, 1.0}; }
};

inline double inner_scale_factor(InnerScale scale, Index m, Index n) {
  return scale == InnerScale::MinDim ? static_cast<double>(std::min(m, n)) : 1.0;
}

struct InnerResult {
  DualState gamma;
  /// log(diag(a) P(gamma)) at the returned gamma.
  LogPlan plan;
  InnerReport report;
  RowSoftmaxCache cache;
};

/// Called after every Newton step with (gamma, cache, gradient norm).
using InnerObserver = std::function<void(const DualState&, const RowSoftmaxCache&, double)>;

/// D(P_Omega(X), X) for X = diag(a) P(gamma).
inline double inexactness(const LogPlan& recovered, const OtProblem& problem) {
  const FeasiblePlan rounded = round_to_feasible(recovered.linear(), problem.a(), problem.b());
  return bregman_div(rounded.entries, recovered);
}

inline InnerResult inner_solve_with(const LogPlan& plan, const DualState& gamma0,
                                    const OtProblem& problem, const SolverConfig& config,
                                    const InnerStopRule& rule, int outer_k,
                                    const InnerObserver& observer = {}) {
  const NewtonOptions opts = NewtonOptions::from(config);
  const Index anchor = choose_anchor(problem.a());
  InnerResult out;
  out.gamma = gamma0;
  out.gamma.generation = outer_k;
  out.cache = compute_p(plan, out.gamma.gamma, problem, config.eta);
  Vector gradient = semidual_gradient(out.cache, problem);
  double gnorm = gradient.norm();
  InnerReport& report = out.report;

  auto finish = [&](InnerStopReason reason) {
    report.stop_reason = reason;
    report.final_grad_norm = gnorm;
    out.plan = recovered_plan(plan, out.gamma.gamma, problem, config.eta, out.cache);
    return out;
  };

  if (rule.kind == InnerStopRule::Kind::Gradient && gnorm < rule.tol) {
    return finish(InnerStopReason::GradientTarget);
  }
  if (gnorm <= config.grad_floor) return finish(InnerStopReason::GradFloor);

  for (int v = 0; v < config.max_inner; ++v) {
    NewtonStepResult step = detail::newton_step_cached(plan, out.gamma, out.cache, gradient,
                                                       problem, opts, anchor);
    out.gamma = std::move(step.gamma);
    out.cache = std::move(step.cache);
    if (config.recenter_every > 0 && (v + 1) % config.recenter_every == 0) {
      out.gamma.gamma.array() -= out.gamma.gamma.mean();
    }
    gradient = semidual_gradient(out.cache, problem);
    const double gnorm_before = gnorm;
    gnorm = gradient.norm();

    ++report.newton_iters;
    report.cg_iters_total += step.cg_iters;
    report.step_sizes.push_back(step.step);
    report.steps.push_back({step.step, step.cg_iters, gnorm_before, gnorm,
                            step.directional_derivative, step.objective_change,
                            out.gamma.gamma.sum(), out.gamma.gamma.norm(), step.nnz});
    if (observer) observer(out.gamma, out.cache, gnorm);

    if (rule.kind == InnerStopRule::Kind::Gradient) {
      if (gnorm < rule.tol) return finish(InnerStopReason::GradientTarget);
    } else if (gnorm < rule.tol) {
      const LogPlan candidate =
          recovered_plan(plan, out.gamma.gamma, problem, config.eta, out.cache);
      report.final_divergence = inexactness(candidate, problem);
      if (report.final_divergence <= rule.scale * rule.tol) {
        return finish(InnerStopReason::InexactCriterion);
      }
    }
    if (gnorm <= config.grad_floor) return finish(InnerStopReason::GradFloor);
  }
  return finish(InnerStopReason::MaxInner);
}

/// Newton phase of outer iteration `outer_k` with inexactness tolerance mu_k.
/// The cheap test ||g|| < mu_k runs first; only then the Bregman test
/// D(P_Omega(X), X) <= scale * mu_k with scale = min(m, n) or 1.
inline InnerResult inner_solve(const LogPlan& plan, const DualState& gamma0,
                               const OtProblem& problem, const SolverConfig& config, double mu_k,
                               int outer_k) {
  const double scale = inner_scale_factor(config.inner_scale, problem.rows(), problem.cols());
  return inner_solve_with(plan, gamma0, problem, config, InnerStopRule::bregman(mu_k, scale),
                          outer_k);
}

}  // namespace otibsn
