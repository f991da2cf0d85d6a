// SPDX-FileCopyrightText: 2026 The otibsn authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <string_view>
#include <vector>

#include "otibsn/core.hpp"
#include "otibsn/feasibility.hpp"
#include "otibsn/inner_newton.hpp"
#include "otibsn/semidual.hpp"
#include "otibsn/sinkhorn.hpp"
#include "otibsn/trajectory.hpp"

namespace otibsn {

/// mu_k = max(mu0 / (k+1)^2, floor).
struct MuSchedule {
  double mu0 = 1e-4;
  double floor = 1e-11;

  static MuSchedule from(const SolverConfig& config) { return {config.mu0, config.mu_floor}; }
};

inline double mu(const MuSchedule& schedule, int k) {
  if (k < 0) throw Error(ErrorCode::InvalidConfig, "schedule index must be nonnegative");
  const double kp1 = static_cast<double>(k) + 1.0;
  return std::max(schedule.mu0 / (kp1 * kp1), schedule.floor);
}

enum class OuterStopReason { KktReached, MaxOuter, TimeBudget };

constexpr std::string_view to_string(OuterStopReason reason) {
  switch (reason) {
    case OuterStopReason::KktReached: return "KktReached";
    case OuterStopReason::MaxOuter: return "MaxOuter";
    case OuterStopReason::TimeBudget: return "TimeBudget";
  }
  return "Unknown";
}

struct OuterResult {
  LogPlan final_logplan;
  FeasiblePlan rounded_plan;
  /// <C, rounded_plan>.
  double objective = 0.0;
  KktReport kkt;
  int outer_iters = 0;
  Trajectory trajectory;
  OuterStopReason stop_reason = OuterStopReason::MaxOuter;
  Vector gamma;
  Vector zeta;
  /// Newton steps for IBSN, Sinkhorn sweeps for the Sinkhorn-based solvers.
  long long inner_total = 0;
  long long cg_total = 0;
  long long warm_sweeps = 0;
  double wall_seconds = 0.0;
  std::vector<InnerReport> inner_reports;

  bool converged() const noexcept { return stop_reason == OuterStopReason::KktReached; }
};

namespace detail {

struct Certificate {
  FeasiblePlan rounded;
  double objective;
  KktReport kkt;
};

inline Certificate certify(const LogPlan& plan, const Vector& gamma, const OtProblem& problem) {
  Certificate c{round_to_feasible(plan.linear(), problem.a(), problem.b()), 0.0, {}};
  c.objective = transport_cost(problem.cost(), c.rounded.entries);
  if (!std::isfinite(c.objective)) {
    throw Error(ErrorCode::NumericalFailure, "objective is not finite");
  }
  c.kkt = kkt_residual(c.rounded.entries, gamma, problem.cost(), problem.a(), problem.b());
  return c;
}

inline std::optional<double> gap_of(const SolverConfig& config, double objective) {
  if (!config.reference_value) return std::nullopt;
  return std::abs(objective - *config.reference_value);
}

inline void finalize(OuterResult& out, const LogPlan& plan, const Vector& gamma, Vector zeta,
                     Certificate cert, const SolveClock& clock) {
  out.final_logplan = plan;
  out.rounded_plan = std::move(cert.rounded);
  out.objective = cert.objective;
  out.kkt = std::move(cert.kkt);
  out.gamma = gamma;
  out.zeta = std::move(zeta);
  out.wall_seconds = clock.seconds();
}

}  // namespace detail

/// Inexact Bregman proximal point with sparse Newton inner solves, from
/// X0 = a b^T. Each outer iteration warm-starts with Sinkhorn, runs Newton
/// until the inexact criterion at mu_k holds, and takes X = diag(a) P(gamma).
/// Stops once the KKT residual of the rounded plan is below kkt_tol.
inline OuterResult ibsn_solve(const OtProblem& problem, const SolverConfig& config) {
  config.validate();
  const SolveClock clock(config.record_time);
  const MuSchedule schedule = MuSchedule::from(config);
  const double eta = config.eta;
  LogPlan plan = initial_plan(problem);
  TwoDualState carry = TwoDualState::zeros(problem.rows(), problem.cols());
  OuterResult out;

  for (int k = 0; k < config.max_outer; ++k) {
    const WarmStartResult warm =
        warm_start(plan, problem, eta, config.warm_tol, carry, config.warm_max_sweeps);
    out.warm_sweeps += warm.sweeps;

    const double mu_k = mu(schedule, k);
    const double scale = inner_scale_factor(config.inner_scale, problem.rows(), problem.cols());
    InnerObserver observer;
    if (config.log_inner) {
      observer = [&](const DualState& g, const RowSoftmaxCache& cache, double gnorm) {
        const LogPlan x = recovered_plan(plan, g.gamma, problem, eta, cache);
        const detail::Certificate c = detail::certify(x, g.gamma, problem);
        out.trajectory.record({k, out.inner_total, out.cg_total, clock.seconds(), c.objective,
                               c.kkt.delta_kkt, gnorm, detail::gap_of(config, c.objective)});
      };
    }
    InnerResult inner = inner_solve_with(plan, warm.gamma, problem, config,
                                         InnerStopRule::bregman(mu_k, scale), k, observer);
    out.inner_total += inner.report.newton_iters;
    out.cg_total += inner.report.cg_iters_total;

    // Carry gamma and the row potential that is optimal for it against the new plan.
    plan = std::move(inner.plan);
    carry.gamma = inner.gamma.gamma;
    carry = zeta_update(plan, carry, problem, eta);
    out.outer_iters = k + 1;

    detail::Certificate cert = detail::certify(plan, carry.gamma, problem);
    out.trajectory.record({k, out.inner_total, out.cg_total, clock.seconds(), cert.objective,
                           cert.kkt.delta_kkt, inner.report.final_grad_norm,
                           detail::gap_of(config, cert.objective)});
    out.inner_reports.push_back(std::move(inner.report));

    const bool done = cert.kkt.delta_kkt < config.kkt_tol;
    const bool out_of_time = clock.elapsed() >= config.time_budget_seconds;
    if (done || out_of_time || k + 1 == config.max_outer) {
      out.stop_reason = done          ? OuterStopReason::KktReached
                        : out_of_time ? OuterStopReason::TimeBudget
                                      : OuterStopReason::MaxOuter;
      detail::finalize(out, plan, carry.gamma, carry.zeta, std::move(cert), clock);
      return out;
    }
  }
  return out;  // unreachable: max_outer >= 1
}

/// Same outer loop, with plain Sinkhorn sweeps as the inner solver. After each
/// zeta-update the column error is tested against mu_k and, if small enough,
/// the Bregman criterion on chi.
inline OuterResult ibsink_solve(const OtProblem& problem, const SolverConfig& config) {
  config.validate();
  const SolveClock clock(config.record_time);
  const MuSchedule schedule = MuSchedule::from(config);
  const double eta = config.eta;
  const double scale = inner_scale_factor(config.inner_scale, problem.rows(), problem.cols());
  LogPlan plan = initial_plan(problem);
  TwoDualState state = TwoDualState::zeros(problem.rows(), problem.cols());
  OuterResult out;

  for (int k = 0; k < config.max_outer; ++k) {
    const double mu_k = mu(schedule, k);
    InnerReport report;
    report.stop_reason = InnerStopReason::MaxInner;
    LogPlan next;
    double err = 0.0;
    for (int sweep = 1;; ++sweep) {
      state = zeta_update(plan, state, problem, eta);
      ++report.newton_iters;
      const Matrix log_chi = log_coupling(plan, state, problem, eta);
      err = (exp_entries(log_chi).colwise().sum().transpose().matrix() - problem.b()).norm();
      if (err < mu_k) {
        next = LogPlan(log_chi);
        report.final_divergence = inexactness(next, problem);
        if (report.final_divergence <= scale * mu_k) {
          report.stop_reason = InnerStopReason::InexactCriterion;
          break;
        }
      }
      if (sweep >= config.sinkhorn_max_sweeps) {
        next = LogPlan(log_chi);
        break;
      }
      state = gamma_update(plan, state, problem, eta);
    }
    report.final_grad_norm = err;
    out.inner_total += report.newton_iters;
    plan = std::move(next);
    state = zeta_update(plan, state, problem, eta);
    out.outer_iters = k + 1;

    detail::Certificate cert = detail::certify(plan, state.gamma, problem);
    out.trajectory.record({k, out.inner_total, 0, clock.seconds(), cert.objective,
                           cert.kkt.delta_kkt, err, detail::gap_of(config, cert.objective)});
    out.inner_reports.push_back(std::move(report));

    const bool done = cert.kkt.delta_kkt < config.kkt_tol;
    const bool out_of_time = clock.elapsed() >= config.time_budget_seconds;
    if (done || out_of_time || k + 1 == config.max_outer) {
      out.stop_reason = done          ? OuterStopReason::KktReached
                        : out_of_time ? OuterStopReason::TimeBudget
                                      : OuterStopReason::MaxOuter;
      detail::finalize(out, plan, state.gamma, state.zeta, std::move(cert), clock);
      return out;
    }
  }
  return out;
}

/// Solves the entropic problem min <C, X> + eta * sum X (log X - 1) once: the
/// log plan is all zeros, so the subproblem cost is exactly C. Newton runs
/// until the semi-dual gradient norm is below config.kkt_tol.
inline OuterResult eot_single_solve(const OtProblem& problem, const SolverConfig& config) {
  config.validate();
  const SolveClock clock(config.record_time);
  const LogPlan ones(Matrix::Zero(problem.rows(), problem.cols()));
  OuterResult out;
  const WarmStartResult warm =
      warm_start(ones, problem, config.eta, config.warm_tol,
                 TwoDualState::zeros(problem.rows(), problem.cols()), config.warm_max_sweeps);
  out.warm_sweeps = warm.sweeps;
  InnerResult inner = inner_solve_with(ones, warm.gamma, problem, config,
                                       InnerStopRule::gradient(config.kkt_tol), 0);
  out.inner_total = inner.report.newton_iters;
  out.cg_total = inner.report.cg_iters_total;
  out.outer_iters = 1;
  out.stop_reason = inner.report.stop_reason == InnerStopReason::GradientTarget
                        ? OuterStopReason::KktReached
                        : OuterStopReason::MaxOuter;
  detail::Certificate cert = detail::certify(inner.plan, inner.gamma.gamma, problem);
  out.trajectory.record({0, out.inner_total, out.cg_total, clock.seconds(), cert.objective,
                         cert.kkt.delta_kkt, inner.report.final_grad_norm,
                         detail::gap_of(config, cert.objective)});
  detail::finalize(out, inner.plan, inner.gamma.gamma,
                   zeta_from_cache(inner.cache, problem, config.eta), std::move(cert), clock);
  out.inner_reports.push_back(std::move(inner.report));
  return out;
}

/// What a plain Sinkhorn run is asked to reach.
enum class SinkhornTarget {
  /// L1 column error after a zeta-update below kkt_tol.
  Marginal,
  /// KKT residual of the rounded plan below kkt_tol.
  Kkt,
};

/// Plain entropic Sinkhorn at eta from X0 = a b^T, used as a baseline. A
/// trajectory row is written every `check_every` sweeps; outer_k counts rows.
/// Stops on the target, the sweep cap, or the time budget.
inline OuterResult sinkhorn_baseline(const OtProblem& problem, const SolverConfig& config,
                                     SinkhornTarget target, int check_every = 10) {
  config.validate();
  if (check_every < 1) throw Error(ErrorCode::InvalidConfig, "check_every must be positive");
  const SolveClock clock(config.record_time);
  const double eta = config.eta;
  const LogPlan base = initial_plan(problem);
  TwoDualState state = TwoDualState::zeros(problem.rows(), problem.cols());
  OuterResult out;
  for (long long sweep = 1;; ++sweep) {
    state = zeta_update(base, state, problem, eta);
    out.inner_total = sweep;
    const bool cap = sweep >= config.sinkhorn_max_sweeps;
    const bool out_of_time = clock.elapsed() >= config.time_budget_seconds;
    double err = -1.0;
    bool done = false;
    if (target == SinkhornTarget::Marginal) {
      err = (coupling_col_sums(base, state, problem, eta) - problem.b()).lpNorm<1>();
      done = err < config.kkt_tol;
    }
    if (done || cap || out_of_time || sweep % check_every == 0) {
      const LogPlan plan(log_coupling(base, state, problem, eta));
      if (err < 0.0) err = (plan.linear().colwise().sum().transpose() - problem.b()).lpNorm<1>();
      detail::Certificate cert = detail::certify(plan, state.gamma, problem);
      if (target == SinkhornTarget::Kkt) done = cert.kkt.delta_kkt < config.kkt_tol;
      out.trajectory.record({out.outer_iters, out.inner_total, 0, clock.seconds(),
                             cert.objective, cert.kkt.delta_kkt, err,
                             detail::gap_of(config, cert.objective)});
      ++out.outer_iters;
      if (done || cap || out_of_time) {
        out.stop_reason = done          ? OuterStopReason::KktReached
                          : out_of_time ? OuterStopReason::TimeBudget
                                        : OuterStopReason::MaxOuter;
        detail::finalize(out, plan, state.gamma, state.zeta, std::move(cert), clock);
        return out;
      }
    }
    state = gamma_update(base, state, problem, eta);
  }
}

}  // namespace otibsn
