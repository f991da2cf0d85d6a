// SPDX-FileCopyrightText: 2026 The otibsn authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <concepts>
#include <functional>

#include "otibsn/core.hpp"

namespace otibsn {

/// A symmetric operator applied without materializing its matrix.
template <class Op>
concept LinearOperator = requires(const Op& op, const Vector& v) {
  { op.apply(v) } -> std::convertible_to<Vector>;
  { op.size() } -> std::convertible_to<Index>;
};

struct CgResult {
  Vector solution;
  int iterations = 0;
  /// ||(A + shift I) x - rhs||, recomputed from the returned x.
  double final_residual = 0.0;
};

/// Plain conjugate gradient on (A + shift I) x = rhs, started from x = 0.
/// Stops once the recursive residual drops below rel_tol * ||rhs|| or after
/// max_iters iterations. `on_iterate`, when set, sees every iterate.
template <LinearOperator Op>
CgResult cg_solve(const Op& op, double shift, const Vector& rhs, double rel_tol, int max_iters,
                  const std::function<void(const Vector&)>& on_iterate = {}) {
  const Index n = op.size();
  if (rhs.size() != n) throw Error(ErrorCode::ShapeMismatch, "rhs length differs from operator");
  if (!rhs.allFinite()) throw Error(ErrorCode::NumericalFailure, "rhs is not finite");
  if (shift < 0.0) throw Error(ErrorCode::InvalidConfig, "shift must be nonnegative");
  if (shift == 0.0 && std::abs(rhs.sum()) > 1e-12 * std::max(1.0, rhs.lpNorm<1>())) {
    throw Error(ErrorCode::InconsistentSystem,
                "unshifted system with a right-hand side outside the range");
  }

  auto apply_shifted = [&](const Vector& v) -> Vector {
    Vector out = op.apply(v);
    if (shift != 0.0) out += shift * v;
    return out;
  };

  CgResult result;
  result.solution = Vector::Zero(n);
  const double rhs_norm = rhs.norm();
  if (rhs_norm == 0.0) return result;
  const double target = rel_tol * rhs_norm;

  Vector r = rhs;
  Vector p = r;
  double rr = r.squaredNorm();
  while (result.iterations < max_iters && std::sqrt(rr) > target) {
    const Vector ap = apply_shifted(p);
    const double pap = p.dot(ap);
    if (!(pap > 0.0)) {
      throw Error(ErrorCode::NotPositiveDefinite, "curvature p^T A p is not positive");
    }
    const double alpha = rr / pap;
    result.solution += alpha * p;
    r -= alpha * ap;
    const double rr_next = r.squaredNorm();
    p = r + (rr_next / rr) * p;
    rr = rr_next;
    ++result.iterations;
    if (on_iterate) on_iterate(result.solution);
  }
  result.final_residual = (apply_shifted(result.solution) - rhs).norm();
  return result;
}

}  // namespace otibsn
