// SPDX-FileCopyrightText: 2026 The otibsn authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "otibsn/core.hpp"
#include "otibsn/parallel.hpp"
#include "otibsn/semidual.hpp"

namespace otibsn {

/// Column potential gamma and row potential zeta of the two-dual subproblem.
struct TwoDualState {
  Vector gamma;
  Vector zeta;

  static TwoDualState zeros(Index m, Index n) {
    return {Vector::Zero(n), Vector::Zero(m)};
  }
};

namespace detail {

inline void check_state(const LogPlan& plan, const TwoDualState& state, const OtProblem& problem) {
  check_shapes(plan, state.gamma.size(), problem);
  if (state.zeta.size() != problem.rows()) {
    throw Error(ErrorCode::ShapeMismatch, "zeta length differs from the number of rows");
  }
}

}  // namespace detail

/// log chi_ij = log X_ij + (zeta_i + gamma_j - C_ij) / eta.
inline Matrix log_coupling(const LogPlan& plan, const TwoDualState& state,
                           const OtProblem& problem, double eta) {
  detail::check_state(plan, state, problem);
  Matrix out(problem.rows(), problem.cols());
  for (Index i = 0; i < problem.rows(); ++i) {
    for (Index j = 0; j < problem.cols(); ++j) {
      out(i, j) = plan.log_entries()(i, j) +
                  (state.zeta[i] + state.gamma[j] - problem.cost()(i, j)) / eta;
    }
  }
  return out;
}

/// Row and column sums of chi.
inline Vector coupling_row_sums(const LogPlan& plan, const TwoDualState& state,
                                const OtProblem& problem, double eta) {
  return exp_entries(log_coupling(plan, state, problem, eta)).rowwise().sum();
}

inline Vector coupling_col_sums(const LogPlan& plan, const TwoDualState& state,
                                const OtProblem& problem, double eta) {
  return exp_entries(log_coupling(plan, state, problem, eta)).colwise().sum().transpose();
}

/// Z(gamma, zeta) = -a^T zeta - b^T gamma + eta * sum_ij chi_ij.
inline double two_dual_value(const LogPlan& plan, const TwoDualState& state,
                             const OtProblem& problem, double eta) {
  const double mass = exp_entries(log_coupling(plan, state, problem, eta)).sum();
  return -problem.a().dot(state.zeta) - problem.b().dot(state.gamma) + eta * mass;
}

/// Exact minimization over zeta: afterwards the rows of chi sum to a.
inline TwoDualState zeta_update(const LogPlan& plan, const TwoDualState& state,
                                const OtProblem& problem, double eta) {
  detail::check_state(plan, state, problem);
  TwoDualState next = state;
  const Index n = problem.cols();
  parallel_for_rows(problem.rows(), [&](Index i) {
    const auto log_x = plan.log_entries().row(i);
    const auto cost = problem.cost().row(i);
    double peak = -std::numeric_limits<double>::infinity();
    for (Index j = 0; j < n; ++j) {
      peak = std::max(peak, log_x[j] + (state.gamma[j] - cost[j]) / eta);
    }
    double total = 0.0;
    for (Index j = 0; j < n; ++j) {
      total += std::exp(log_x[j] + (state.gamma[j] - cost[j]) / eta - peak);
    }
    next.zeta[i] = eta * (std::log(problem.a()[i]) - peak - std::log(total));
  });
  return next;
}

/// Exact minimization over gamma: afterwards the columns of chi sum to b.
inline TwoDualState gamma_update(const LogPlan& plan, const TwoDualState& state,
                                 const OtProblem& problem, double eta) {
  detail::check_state(plan, state, problem);
  const Index m = problem.rows();
  const Index n = problem.cols();
  const Matrix& log_x = plan.log_entries();
  const Matrix& cost = problem.cost();
  Vector peak = Vector::Constant(n, -std::numeric_limits<double>::infinity());
  for (Index i = 0; i < m; ++i) {
    for (Index j = 0; j < n; ++j) {
      peak[j] = std::max(peak[j], log_x(i, j) + (state.zeta[i] - cost(i, j)) / eta);
    }
  }
  Vector total = Vector::Zero(n);
  for (Index i = 0; i < m; ++i) {
    for (Index j = 0; j < n; ++j) {
      total[j] += std::exp(log_x(i, j) + (state.zeta[i] - cost(i, j)) / eta - peak[j]);
    }
  }
  TwoDualState next = state;
  for (Index j = 0; j < n; ++j) {
    next.gamma[j] = eta * (std::log(problem.b()[j]) - peak[j] - std::log(total[j]));
  }
  return next;
}

struct WarmStartResult {
  DualState gamma;
  Vector zeta;
  int sweeps = 0;
  /// ||chi^T 1 - b||_2 measured right after the last zeta-update.
  double gradient_norm = 0.0;
};

/// Alternating zeta/gamma updates from `start` until the column error after a
/// zeta-update (the semi-dual gradient norm) is below warm_tol; gamma is then
/// shifted to zero sum, with zeta shifted the opposite way so chi is unchanged.
inline WarmStartResult warm_start(const LogPlan& plan, const OtProblem& problem, double eta,
                                  double warm_tol, const TwoDualState& start,
                                  int max_sweeps = 100000) {
  if (!(warm_tol > 0.0)) throw Error(ErrorCode::InvalidConfig, "warm_tol must be positive");
  TwoDualState state = start;
  WarmStartResult result;
  while (true) {
    state = zeta_update(plan, state, problem, eta);
    ++result.sweeps;
    result.gradient_norm = (coupling_col_sums(plan, state, problem, eta) - problem.b()).norm();
    if (result.gradient_norm < warm_tol) break;
    if (result.sweeps >= max_sweeps) {
      throw Error(ErrorCode::WarmStartStalled, "Sinkhorn warm start hit its sweep cap");
    }
    state = gamma_update(plan, state, problem, eta);
  }
  const double mean = state.gamma.mean();
  state.gamma.array() -= mean;
  state.zeta.array() += mean;
  result.gamma.gamma = std::move(state.gamma);
  result.zeta = std::move(state.zeta);
  return result;
}

inline WarmStartResult warm_start(const LogPlan& plan, const OtProblem& problem, double eta,
                                  double warm_tol) {
  return warm_start(plan, problem, eta, warm_tol,
                    TwoDualState::zeros(problem.rows(), problem.cols()));
}

struct EotResult {
  LogPlan plan;
  TwoDualState state;
  int iterations = 0;
  bool converged = false;
  /// ||chi^T 1 - b||_1 after every zeta-update.
  std::vector<double> marginal_errors;
};

/// Plain entropic OT by Sinkhorn from X = a b^T. Each iteration is a
/// zeta-update, a convergence check on the L1 column error, then a
/// gamma-update. The returned plan is chi right after the last zeta-update.
inline EotResult sinkhorn_solve_eot(const OtProblem& problem, double eta, double tol,
                                    int max_iters) {
  if (!(tol > 0.0)) throw Error(ErrorCode::InvalidConfig, "tol must be positive");
  const LogPlan base = initial_plan(problem);
  EotResult result;
  result.state = TwoDualState::zeros(problem.rows(), problem.cols());
  while (result.iterations < max_iters) {
    result.state = zeta_update(base, result.state, problem, eta);
    ++result.iterations;
    const double err =
        (coupling_col_sums(base, result.state, problem, eta) - problem.b()).lpNorm<1>();
    result.marginal_errors.push_back(err);
    if (err < tol) {
      result.converged = true;
      break;
    }
    if (result.iterations < max_iters) {
      result.state = gamma_update(base, result.state, problem, eta);
    }
  }
  result.plan = LogPlan(log_coupling(base, result.state, problem, eta));
  return result;
}

}  // namespace otibsn
