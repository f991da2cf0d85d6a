// SPDX-FileCopyrightText: 2026 The otibsn authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <utility>

#include "otibsn/error.hpp"

namespace otibsn {

using Index = Eigen::Index;
/// Dense row-major storage for cost matrices, plans and their logarithms.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// Log-plan entries are clamped here; exp(kLogFloor) underflows to exactly 0.
inline constexpr double kLogFloor = -1e6;
/// Allowed deviation of a marginal's total mass from 1.
inline constexpr double kMarginalSumTol = 1e-12;

namespace detail {

inline std::string position(Index i, Index j) {
  std::ostringstream os;
  os << "(" << i << ", " << j << ")";
  return os.str();
}

inline void check_cost_entries(const Matrix& cost) {
  if (cost.size() == 0) throw Error(ErrorCode::InvalidCost, "cost matrix is empty");
  for (Index i = 0; i < cost.rows(); ++i) {
    for (Index j = 0; j < cost.cols(); ++j) {
      const double c = cost(i, j);
      if (!std::isfinite(c)) {
        throw Error(ErrorCode::InvalidCost, "non-finite entry at " + position(i, j));
      }
      if (c < 0.0) throw Error(ErrorCode::InvalidCost, "negative entry at " + position(i, j));
    }
  }
}

inline void check_marginal(const Vector& v, const char* name) {
  for (Index i = 0; i < v.size(); ++i) {
    if (!(v[i] > 0.0) || !std::isfinite(v[i])) {
      std::ostringstream os;
      os << name << "[" << i << "] = " << v[i] << " is not strictly positive";
      throw Error(ErrorCode::MarginalNotPositive, os.str());
    }
  }
  const double total = v.sum();
  if (std::abs(total - 1.0) > kMarginalSumTol) {
    std::ostringstream os;
    os.precision(17);
    os << name << " sums to " << total << ", expected 1";
    throw Error(ErrorCode::MarginalNotNormalized, os.str());
  }
}

}  // namespace detail

/// Checks shapes, cost entries and both marginals, in that order. Throws on
/// the first violated invariant. Does not require the cost to be normalized.
inline void validate(const Matrix& cost, const Vector& a, const Vector& b) {
  if (a.size() == 0 || b.size() == 0 || cost.rows() != a.size() || cost.cols() != b.size()) {
    std::ostringstream os;
    os << "cost is " << cost.rows() << "x" << cost.cols() << ", marginals have lengths "
       << a.size() << " and " << b.size();
    throw Error(ErrorCode::ShapeMismatch, os.str());
  }
  detail::check_cost_entries(cost);
  detail::check_marginal(a, "a");
  detail::check_marginal(b, "b");
}

/// Divides by the largest entry; an all-zero matrix is returned unchanged.
inline Matrix normalize_cost(const Matrix& raw_cost) {
  detail::check_cost_entries(raw_cost);
  const double peak = raw_cost.maxCoeff();
  if (peak == 0.0) return raw_cost;
  return raw_cost / peak;
}

/// Rescales a positive vector to unit mass. Used only where the caller asked
/// for explicit renormalization.
inline Vector renormalize_marginal(const Vector& v) {
  const double total = v.sum();
  if (!(total > 0.0) || !std::isfinite(total)) {
    throw Error(ErrorCode::MarginalNotPositive, "marginal has no positive mass");
  }
  return v / total;
}

/// An immutable, validated transport instance.
class OtProblem {
 public:
  OtProblem(Matrix cost, Vector a, Vector b)
      : cost_(std::move(cost)), a_(std::move(a)), b_(std::move(b)) {
    validate(cost_, a_, b_);
  }

  /// Builds an instance from raw data, scaling the cost to unit max norm.
  static OtProblem from_raw(const Matrix& raw_cost, Vector a, Vector b) {
    if (a.size() == 0 || b.size() == 0 || raw_cost.rows() != a.size() ||
        raw_cost.cols() != b.size()) {
      validate(raw_cost, a, b);  // reports the shape mismatch
    }
    return OtProblem(normalize_cost(raw_cost), std::move(a), std::move(b));
  }

  const Matrix& cost() const noexcept { return cost_; }
  const Vector& source_marginal() const noexcept { return a_; }
  const Vector& target_marginal() const noexcept { return b_; }
  const Vector& a() const noexcept { return a_; }
  const Vector& b() const noexcept { return b_; }
  Index rows() const noexcept { return cost_.rows(); }
  Index cols() const noexcept { return cost_.cols(); }

 private:
  Matrix cost_;
  Vector a_;
  Vector b_;
};

inline void validate(const OtProblem& problem) {
  validate(problem.cost(), problem.a(), problem.b());
}

/// Logarithm of a positive plan, floored at kLogFloor.
/// Entrywise exp that underflows to exactly zero. Eigen's vectorized exp clamps large
/// negative arguments, which would turn floored log entries into tiny positive masses.
inline Matrix exp_entries(const Matrix& log_values) {
  return log_values.unaryExpr([](double v) { return std::exp(v); });
}

class LogPlan {
 public:
  LogPlan() = default;

  explicit LogPlan(Matrix log_entries) : log_(std::move(log_entries)) {
    for (Index k = 0; k < log_.size(); ++k) {
      double& v = log_.data()[k];
      if (std::isnan(v) || v == std::numeric_limits<double>::infinity()) {
        throw Error(ErrorCode::NumericalFailure, "log plan entry is NaN or +inf");
      }
      if (v < kLogFloor) v = kLogFloor;
    }
  }

  const Matrix& log_entries() const noexcept { return log_; }
  Index rows() const noexcept { return log_.rows(); }
  Index cols() const noexcept { return log_.cols(); }

  Matrix linear() const { return exp_entries(log_); }
  double mass() const { return exp_entries(log_).sum(); }

 private:
  Matrix log_;
};

/// X0 = a b^T in log form.
inline LogPlan initial_plan(const OtProblem& problem) {
  const Vector log_a = problem.a().array().log().matrix();
  const Vector log_b = problem.b().array().log().matrix();
  Matrix log_x(problem.rows(), problem.cols());
  for (Index i = 0; i < problem.rows(); ++i) {
    for (Index j = 0; j < problem.cols(); ++j) log_x(i, j) = log_a[i] + log_b[j];
  }
  return LogPlan(std::move(log_x));
}

enum class InnerScale { MinDim, One };

struct SolverConfig {
  double eta = 1e-4;
  double mu0 = 1e-4;
  double mu_floor = 1e-11;
  InnerScale inner_scale = InnerScale::MinDim;
  double warm_tol = 1e-3;
  double kkt_tol = 1e-11;
  int max_outer = 300;
  int max_inner = 1000;
  double cg_rel_tol = 1e-10;
  /// 0 selects 2n.
  int cg_max_iters = 0;
  double armijo_sigma = 1e-4;
  double armijo_beta = 0.8;
  std::uint64_t seed = 0;

  /// Inner Newton loops stop once the gradient norm is at this level, since
  /// the gradient cannot be resolved further in double precision.
  double grad_floor = 1e-14;
  int warm_max_sweeps = 100000;
  /// Cap on Sinkhorn sweeps per outer iteration for the Sinkhorn-based solvers.
  int sinkhorn_max_sweeps = 1000000;
  /// Recenter gamma every this many Newton steps; 0 disables.
  int recenter_every = 0;
  double time_budget_seconds = std::numeric_limits<double>::infinity();
  bool record_time = true;
  /// Also record a trajectory row after every inner iteration.
  bool log_inner = false;
  /// Optimal objective for the Gap column, when known.
  std::optional<double> reference_value;

  void validate() const {
    auto require = [](bool ok, const char* what) {
      if (!ok) throw Error(ErrorCode::InvalidConfig, what);
    };
    require(eta > 0.0 && std::isfinite(eta), "eta must be positive");
    require(mu0 > 0.0, "mu0 must be positive");
    require(mu_floor > 0.0, "mu_floor must be positive");
    require(warm_tol > 0.0, "warm_tol must be positive");
    require(kkt_tol > 0.0, "kkt_tol must be positive");
    require(cg_rel_tol > 0.0, "cg_rel_tol must be positive");
    require(grad_floor >= 0.0, "grad_floor must be nonnegative");
    require(max_outer >= 1, "max_outer must be at least 1");
    require(max_inner >= 1, "max_inner must be at least 1");
    require(cg_max_iters >= 0, "cg_max_iters must be nonnegative");
    require(warm_max_sweeps >= 1, "warm_max_sweeps must be at least 1");
    require(sinkhorn_max_sweeps >= 1, "sinkhorn_max_sweeps must be at least 1");
    require(armijo_sigma > 0.0 && armijo_sigma < 1.0, "armijo_sigma must lie in (0, 1)");
    require(armijo_beta > 0.0 && armijo_beta < 1.0, "armijo_beta must lie in (0, 1)");
    require(time_budget_seconds >= 0.0, "time budget must be nonnegative");
  }

  int cg_iteration_cap(Index n) const {
    return cg_max_iters > 0 ? cg_max_iters : static_cast<int>(2 * n);
  }
};

/// Frobenius inner product <C, X>.
inline double transport_cost(const Matrix& cost, const Matrix& plan) {
  return cost.cwiseProduct(plan).sum();
}

}  // namespace otibsn
