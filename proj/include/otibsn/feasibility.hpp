// SPDX-FileCopyrightText: 2026 The otibsn authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>

#include "otibsn/core.hpp"

namespace otibsn {

/// A nonnegative matrix whose marginals are a and b.
struct FeasiblePlan {
  Matrix entries;
};

/// Maps a nonnegative matrix onto the transport polytope: shrink rows that
/// carry too much mass, then shrink columns of the row-scaled matrix, then
/// spread the missing mass with a rank-one correction.
inline FeasiblePlan round_to_feasible(const Matrix& x, const Vector& a, const Vector& b) {
  const Index m = x.rows();
  const Index n = x.cols();
  if (a.size() != m || b.size() != n) {
    throw Error(ErrorCode::ShapeMismatch, "plan and marginals disagree in size");
  }
  if ((x.array() < 0.0).any() || !x.allFinite()) {
    throw Error(ErrorCode::NumericalFailure, "rounding needs a finite nonnegative matrix");
  }
  FeasiblePlan out{x};
  Matrix& f = out.entries;
  for (Index i = 0; i < m; ++i) {
    const double row_sum = f.row(i).sum();
    if (row_sum > a[i]) f.row(i) *= a[i] / row_sum;
  }
  const Vector col_sums = f.colwise().sum().transpose();
  for (Index j = 0; j < n; ++j) {
    if (col_sums[j] > b[j]) f.col(j) *= b[j] / col_sums[j];
  }
  const Vector err_r = (a - f.rowwise().sum()).cwiseMax(0.0);
  const Vector err_c = (b - f.colwise().sum().transpose()).cwiseMax(0.0);
  const double mass = err_r.sum();
  if (mass > 0.0) f.noalias() += err_r * err_c.transpose() / mass;
  return out;
}

namespace detail {

/// One entry of x log(x/y) - x + y given log y.
inline double bregman_term(double x, double log_y) {
  const double y = std::exp(log_y);
  if (x <= 0.0) return y;
  return x * (std::log(x) - log_y) - (x - y);
}

}  // namespace detail

/// D(X, Y) = sum x_ij log(x_ij / y_ij) - sum x + sum y, with 0 log 0 = 0 and
/// Y given through its logarithm. Summed entrywise, so each term is >= 0.
inline double bregman_div(const Matrix& x, const Matrix& log_y) {
  if (x.rows() != log_y.rows() || x.cols() != log_y.cols()) {
    throw Error(ErrorCode::ShapeMismatch, "Bregman divergence of mismatched shapes");
  }
  double total = 0.0;
  for (Index k = 0; k < x.size(); ++k) {
    total += detail::bregman_term(x.data()[k], log_y.data()[k]);
  }
  return total;
}

inline double bregman_div(const Matrix& x, const LogPlan& log_y) {
  return bregman_div(x, log_y.log_entries());
}

/// zeta_i = min_j (C_ij - gamma_j).
inline Vector c_transform(const Vector& gamma, const Matrix& cost) {
  if (gamma.size() != cost.cols()) throw Error(ErrorCode::ShapeMismatch, "c-transform shapes");
  return (cost.rowwise() - gamma.transpose()).rowwise().minCoeff();
}

struct KktReport {
  double delta_p = 0.0;
  double delta_d = 0.0;
  double delta_c = 0.0;
  double delta_kkt = 0.0;
  Vector zeta_used;
};

/// Relative KKT residual of the transport LP at (X, gamma, c-transform of gamma).
inline KktReport kkt_residual(const Matrix& x, const Vector& gamma, const Matrix& cost,
                              const Vector& a, const Vector& b) {
  if (x.rows() != cost.rows() || x.cols() != cost.cols() || a.size() != cost.rows() ||
      b.size() != cost.cols()) {
    throw Error(ErrorCode::ShapeMismatch, "KKT residual shapes");
  }
  KktReport report;
  report.zeta_used = c_transform(gamma, cost);
  Matrix slack = cost;
  slack.colwise() -= report.zeta_used;
  slack.rowwise() -= gamma.transpose();

  const double row_res = (x.rowwise().sum() - a).norm() / (1.0 + a.norm());
  const double col_res = (x.colwise().sum().transpose() - b).norm() / (1.0 + b.norm());
  const double neg_res = x.cwiseMin(0.0).norm() / (1.0 + x.norm());
  report.delta_p = std::max({row_res, col_res, neg_res});
  const double cost_scale = 1.0 + cost.norm();
  report.delta_d = slack.cwiseMin(0.0).norm() / cost_scale;
  report.delta_c = std::abs(x.cwiseProduct(slack).sum()) / cost_scale;
  report.delta_kkt = std::max({report.delta_p, report.delta_d, report.delta_c});
  return report;
}

/// |<C, X> - optimal_value|.
inline double gap(const FeasiblePlan& plan, const Matrix& cost, double optimal_value) {
  return std::abs(transport_cost(cost, plan.entries) - optimal_value);
}

}  // namespace otibsn
