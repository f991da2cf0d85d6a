// SPDX-FileCopyrightText: 2026 The otibsn authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>

#include "otibsn/core.hpp"
#include "otibsn/parallel.hpp"

namespace otibsn {

/// Inner dual variable of outer iteration `generation`.
struct DualState {
  Vector gamma;
  int generation = 0;
};

/// P(gamma) together with the stabilized log-normalizer of every row:
///   row_logsumexp_i = log sum_j X_ij exp((gamma_j - C_ij) / eta).
struct RowSoftmaxCache {
  Matrix p;
  Vector row_logsumexp;
};

namespace detail {

inline void check_shapes(const LogPlan& plan, Index gamma_size, const OtProblem& problem) {
  if (plan.rows() != problem.rows() || plan.cols() != problem.cols() ||
      gamma_size != problem.cols()) {
    throw Error(ErrorCode::ShapeMismatch, "log plan, dual variable and problem disagree in size");
  }
}

/// Fills `logits` with log X_ij + (gamma_j - C_ij - r_i)/eta, where r_i is the row max of
/// gamma - C, and returns r_i / eta. Subtracting r_i before dividing keeps a constant shift in
/// the cost from costing precision when eta is small.
inline double row_logits(const LogPlan& plan, const Vector& gamma, const OtProblem& problem,
                         double eta, Index i, double* logits) {
  const auto log_x = plan.log_entries().row(i);
  const auto cost = problem.cost().row(i);
  double ref = -std::numeric_limits<double>::infinity();
  for (Index j = 0; j < problem.cols(); ++j) ref = std::max(ref, gamma[j] - cost[j]);
  for (Index j = 0; j < problem.cols(); ++j) {
    logits[j] = log_x[j] + ((gamma[j] - cost[j]) - ref) / eta;
  }
  return ref / eta;
}

}  // namespace detail

inline RowSoftmaxCache compute_p(const LogPlan& plan, const Vector& gamma,
                                 const OtProblem& problem, double eta) {
  detail::check_shapes(plan, gamma.size(), problem);
  const Index m = problem.rows();
  const Index n = problem.cols();
  RowSoftmaxCache cache{Matrix(m, n), Vector(m)};
  parallel_for_rows(m, [&](Index i) {
    double* row = cache.p.row(i).data();
    const double base = detail::row_logits(plan, gamma, problem, eta, i, row);
    double peak = -std::numeric_limits<double>::infinity();
    for (Index j = 0; j < n; ++j) peak = std::max(peak, row[j]);
    double total = 0.0;
    for (Index j = 0; j < n; ++j) {
      row[j] = std::exp(row[j] - peak);
      total += row[j];
    }
    for (Index j = 0; j < n; ++j) row[j] /= total;
    cache.row_logsumexp[i] = base + (peak + std::log(total));
  });
  if (!cache.row_logsumexp.allFinite()) {
    throw Error(ErrorCode::NumericalOverflow, "row log-normalizer is not finite");
  }
  return cache;
}

inline RowSoftmaxCache compute_p(const LogPlan& plan, const DualState& state,
                                 const OtProblem& problem, double eta) {
  return compute_p(plan, state.gamma, problem, eta);
}

/// L(gamma) = -b^T gamma + eta * sum_i a_i * row_logsumexp_i.
inline double semidual_value(const RowSoftmaxCache& cache, const Vector& gamma,
                             const OtProblem& problem, double eta) {
  return -problem.b().dot(gamma) + eta * problem.a().dot(cache.row_logsumexp);
}

/// g = P^T a - b.
inline Vector semidual_gradient(const RowSoftmaxCache& cache, const OtProblem& problem) {
  return cache.p.transpose() * problem.a() - problem.b();
}

/// (1/eta) (diag(P^T a) v - P^T (a .* (P v))), without forming the n x n matrix.
inline Vector hessian_matvec_exact(const RowSoftmaxCache& cache, const OtProblem& problem,
                                   double eta, const Vector& v) {
  const Vector column_mass = cache.p.transpose() * problem.a();
  const Vector row_mix = (cache.p * v).cwiseProduct(problem.a());
  return (column_mass.cwiseProduct(v) - cache.p.transpose() * row_mix) / eta;
}

/// Row potential eliminated in closed form: zeta_i = eta log a_i - eta * row_logsumexp_i.
inline Vector zeta_from_cache(const RowSoftmaxCache& cache, const OtProblem& problem,
                              double eta) {
  return eta * (problem.a().array().log() - cache.row_logsumexp.array()).matrix();
}

/// log(diag(a) P(gamma)), the primal plan recovered from gamma.
inline LogPlan recovered_plan(const LogPlan& plan, const Vector& gamma, const OtProblem& problem,
                              double eta, const RowSoftmaxCache& cache) {
  const Index m = problem.rows();
  const Index n = problem.cols();
  Matrix log_x(m, n);
  for (Index i = 0; i < m; ++i) {
    const double shift = std::log(problem.a()[i]) - cache.row_logsumexp[i];
    const auto prev = plan.log_entries().row(i);
    const auto cost = problem.cost().row(i);
    for (Index j = 0; j < n; ++j) {
      log_x(i, j) = prev[j] + (gamma[j] - cost[j]) / eta + shift;
    }
  }
  return LogPlan(std::move(log_x));
}

namespace detail {

/// expm1(w) - w, accurate for small |w|.
inline double expm1_minus_linear(double w) {
  if (std::abs(w) < 1e-3) {
    const double w2 = w * w;
    return w2 * (0.5 + w * (1.0 / 6.0 + w * (1.0 / 24.0 + w / 120.0)));
  }
  return std::expm1(w) - w;
}

}  // namespace detail

/// L(gamma + step*direction) - L(gamma), evaluated without cancelling two
/// O(1) objective values. `cache` belongs to gamma and `trial` to the shifted
/// point. The change splits as step*g^T d + eta*sum_i a_i R_i with
///   R_i = log sum_j P_ij exp(w_j),  w = step*d/eta - (row mean under P_i),
/// and R_i >= 0. Rows with small |w| use log1p(sum_j P_ij (expm1(w_j) - w_j));
/// other rows fall back to the difference of log-normalizers.
inline double semidual_change(const RowSoftmaxCache& cache, const RowSoftmaxCache& trial,
                              const OtProblem& problem, double eta, const Vector& gradient,
                              const Vector& direction, double step) {
  const Index m = problem.rows();
  const Index n = problem.cols();
  const Vector u = direction * (step / eta);
  double curvature = 0.0;
  for (Index i = 0; i < m; ++i) {
    const auto p = cache.p.row(i);
    const double mean = p.dot(u);
    double spread = 0.0;
    for (Index j = 0; j < n; ++j) spread = std::max(spread, std::abs(u[j] - mean));
    double r;
    if (spread <= 0.5) {
      double acc = 0.0;
      for (Index j = 0; j < n; ++j) acc += p[j] * detail::expm1_minus_linear(u[j] - mean);
      r = std::log1p(acc);
    } else {
      r = trial.row_logsumexp[i] - cache.row_logsumexp[i] - mean;
    }
    curvature += problem.a()[i] * r;
  }
  return step * gradient.dot(direction) + eta * curvature;
}

}  // namespace otibsn
