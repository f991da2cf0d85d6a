// SPDX-FileCopyrightText: 2026 The otibsn authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Eigenvalues>

#include <cmath>
#include <utility>
#include <vector>

#include "otibsn/core.hpp"
#include "otibsn/semidual.hpp"

namespace otibsn {

/// Smallest index attaining max_i a_i.
inline Index choose_anchor(const Vector& a) {
  Index best = 0;
  for (Index i = 1; i < a.size(); ++i) {
    if (a[i] > a[best]) best = i;
  }
  return best;
}

/// rho = eta * ||g|| / (m n).
inline double threshold_rho(double eta, Index m, Index n, double grad_norm) {
  return eta / (static_cast<double>(m) * static_cast<double>(n)) * grad_norm;
}

/// Thresholded row-stochastic matrix. Every row except the anchor is held in
/// CSR form (the anchor's CSR slot is empty); the anchor row is kept dense
/// and unmodified so that every column has positive weight.
class SparseRowStochastic {
 public:
  SparseRowStochastic(Index cols, std::vector<Index> row_offsets, std::vector<Index> col_indices,
                      std::vector<double> values, Index anchor_index, Vector anchor_row)
      : cols_(cols),
        row_offsets_(std::move(row_offsets)),
        col_indices_(std::move(col_indices)),
        values_(std::move(values)),
        anchor_index_(anchor_index),
        anchor_row_(std::move(anchor_row)) {}

  Index rows() const noexcept { return static_cast<Index>(row_offsets_.size()) - 1; }
  Index cols() const noexcept { return cols_; }
  Index anchor_index() const noexcept { return anchor_index_; }
  const Vector& anchor_row() const noexcept { return anchor_row_; }
  const std::vector<Index>& row_offsets() const noexcept { return row_offsets_; }
  const std::vector<Index>& col_indices() const noexcept { return col_indices_; }
  const std::vector<double>& values() const noexcept { return values_; }
  /// Stored entries including the dense anchor row.
  Index nnz() const noexcept { return static_cast<Index>(values_.size()) + cols_; }

  /// P_rho v.
  Vector apply(const Vector& v) const {
    Vector out(rows());
    for (Index i = 0; i < rows(); ++i) {
      if (i == anchor_index_) {
        out[i] = anchor_row_.dot(v);
        continue;
      }
      double acc = 0.0;
      for (Index k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k) {
        acc += values_[k] * v[col_indices_[k]];
      }
      out[i] = acc;
    }
    return out;
  }

  /// P_rho^T w, accumulated in row order.
  Vector apply_transpose(const Vector& w) const {
    Vector out = Vector::Zero(cols_);
    for (Index i = 0; i < rows(); ++i) {
      if (i == anchor_index_) {
        out += w[i] * anchor_row_;
        continue;
      }
      for (Index k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k) {
        out[col_indices_[k]] += values_[k] * w[i];
      }
    }
    return out;
  }

  Matrix to_dense() const {
    Matrix dense = Matrix::Zero(rows(), cols_);
    for (Index i = 0; i < rows(); ++i) {
      if (i == anchor_index_) {
        dense.row(i) = anchor_row_.transpose();
        continue;
      }
      for (Index k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k) {
        dense(i, col_indices_[k]) = values_[k];
      }
    }
    return dense;
  }

 private:
  Index cols_;
  std::vector<Index> row_offsets_;
  std::vector<Index> col_indices_;
  std::vector<double> values_;
  Index anchor_index_;
  Vector anchor_row_;
};

/// Keeps P_ij >= rho in every non-anchor row and renormalizes the kept
/// entries. A row with no surviving entry keeps only its largest entry
/// (first one on ties), set to 1.
inline SparseRowStochastic sparsify_p(const RowSoftmaxCache& cache, double rho, Index anchor) {
  const Matrix& p = cache.p;
  const Index m = p.rows();
  const Index n = p.cols();
  if (anchor < 0 || anchor >= m) throw Error(ErrorCode::ShapeMismatch, "anchor row out of range");
  std::vector<Index> offsets(static_cast<std::size_t>(m) + 1, 0);
  std::vector<Index> cols;
  std::vector<double> vals;
  for (Index i = 0; i < m; ++i) {
    offsets[i] = static_cast<Index>(vals.size());
    if (i == anchor) continue;
    const auto row = p.row(i);
    const std::size_t start = vals.size();
    double kept = 0.0;
    bool dropped = false;
    for (Index j = 0; j < n; ++j) {
      if (row[j] >= rho && row[j] > 0.0) {
        cols.push_back(j);
        vals.push_back(row[j]);
        kept += row[j];
      } else if (row[j] > 0.0) {
        dropped = true;
      }
    }
    if (vals.size() == start) {
      Index best = 0;
      for (Index j = 1; j < n; ++j) {
        if (row[j] > row[best]) best = j;
      }
      cols.push_back(best);
      vals.push_back(1.0);
      continue;
    }
    if (dropped) {
      for (std::size_t k = start; k < vals.size(); ++k) vals[k] /= kept;
    }
  }
  offsets[m] = static_cast<Index>(vals.size());
  return SparseRowStochastic(n, std::move(offsets), std::move(cols), std::move(vals), anchor,
                             p.row(anchor).transpose());
}

/// H_rho = (diag(P_rho^T a) - P_rho^T diag(a) P_rho) / eta as a matrix-free operator.
class SparseHessianOp {
 public:
  SparseHessianOp(SparseRowStochastic p_rho, Vector weights, double eta)
      : p_rho_(std::move(p_rho)), weights_(std::move(weights)), eta_(eta) {
    if (weights_.size() != p_rho_.rows()) {
      throw Error(ErrorCode::ShapeMismatch, "weights do not match the sparse matrix");
    }
    diag_cache_ = p_rho_.apply_transpose(weights_);
  }

  Index size() const noexcept { return p_rho_.cols(); }
  double eta() const noexcept { return eta_; }
  const SparseRowStochastic& p_rho() const noexcept { return p_rho_; }
  const Vector& weights() const noexcept { return weights_; }
  const Vector& diag_cache() const noexcept { return diag_cache_; }

  Vector apply(const Vector& v) const {
    const Vector mixed = p_rho_.apply(v).cwiseProduct(weights_);
    return (diag_cache_.cwiseProduct(v) - p_rho_.apply_transpose(mixed)) / eta_;
  }

  /// Dense n x n assembly, for tests and diagnostics on small instances.
  Matrix to_dense() const {
    const Matrix p = p_rho_.to_dense();
    Matrix h = -(p.transpose() * weights_.asDiagonal() * p);
    h.diagonal() += diag_cache_;
    return h / eta_;
  }

 private:
  SparseRowStochastic p_rho_;
  Vector weights_;
  double eta_;
  Vector diag_cache_;
};

inline Vector hessian_matvec_sparse(const SparseHessianOp& op, const Vector& v) {
  return op.apply(v);
}

struct SpectralBounds {
  double lambda_min_perp;
  double lambda_max;
};

/// Orthonormal (Helmert) basis of the complement of the all-ones vector, as columns.
inline Matrix ones_complement_basis(Index n) {
  Matrix q = Matrix::Zero(n, n - 1);
  for (Index k = 1; k < n; ++k) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(k) * static_cast<double>(k + 1));
    for (Index j = 0; j < k; ++j) q(j, k - 1) = scale;
    q(k, k - 1) = -static_cast<double>(k) * scale;
  }
  return q;
}

/// Extreme eigenvalues of H_rho on the complement of 1 and on the whole space.
/// Dense eigendecomposition, so limited to n <= 64.
inline SpectralBounds spectral_bounds_check(const SparseHessianOp& op) {
  const Index n = op.size();
  if (n > 64) throw Error(ErrorCode::TestOnlyLimit, "spectral check needs n <= 64");
  const Matrix h = op.to_dense();
  const Matrix sym = 0.5 * (h + h.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> full(sym);
  SpectralBounds bounds{0.0, full.eigenvalues().maxCoeff()};
  if (n == 1) return bounds;
  const Matrix q = ones_complement_basis(n);
  const Eigen::MatrixXd restricted = q.transpose() * sym * q;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> perp(restricted, Eigen::EigenvaluesOnly);
  bounds.lambda_min_perp = perp.eigenvalues().minCoeff();
  return bounds;
}

}  // namespace otibsn
