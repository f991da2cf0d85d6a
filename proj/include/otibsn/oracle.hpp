// SPDX-FileCopyrightText: 2026 The otibsn authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <limits>
#include <utility>
#include <vector>

#include "otibsn/core.hpp"
#include "otibsn/feasibility.hpp"

namespace otibsn {

inline constexpr Index kOracleMaxCells = 4096;

namespace detail {

struct Cell {
  Index i;
  Index j;
};

/// Northwest-corner walk. Every step advances exactly one index (the row on
/// ties), so the visited cells form a spanning tree of m + n - 1 cells, some
/// of them possibly zero.
inline std::vector<Cell> northwest_walk(const Vector& a, const Vector& b, Matrix& x) {
  const Index m = a.size();
  const Index n = b.size();
  x = Matrix::Zero(m, n);
  Vector ra = a;
  Vector rb = b;
  std::vector<Cell> cells;
  Index i = 0;
  Index j = 0;
  while (true) {
    const double q = std::min(ra[i], rb[j]);
    x(i, j) = q;
    cells.push_back({i, j});
    if (i == m - 1 && j == n - 1) break;
    const bool row_done = ra[i] <= rb[j];
    ra[i] -= q;
    rb[j] -= q;
    if (j == n - 1 || (i < m - 1 && row_done)) {
      ra[i] = 0.0;
      ++i;
    } else {
      rb[j] = 0.0;
      ++j;
    }
  }
  return cells;
}

}  // namespace detail

/// The monotone (northwest-corner) coupling of a and b. Optimal for costs
/// c(i - j) with c convex, such as the squared index distance.
inline FeasiblePlan northwest_monotone(const Vector& a, const Vector& b) {
  if (a.size() == 0 || b.size() == 0) {
    throw Error(ErrorCode::ShapeMismatch, "marginals must be nonempty");
  }
  FeasiblePlan plan;
  detail::northwest_walk(a, b, plan.entries);
  return plan;
}

struct LpSolution {
  FeasiblePlan plan;
  double value = 0.0;
  /// Optimal row and column potentials: u_i + v_j <= C_ij with equality on the basis.
  Vector u;
  Vector v;
  int pivots = 0;
};

/// Exact transportation LP by the primal transportation simplex. The basis is
/// a spanning tree over row and column nodes; entering cells follow Dantzig's
/// rule, switching to Bland's rule during runs of degenerate pivots.
inline LpSolution exact_small_lp(const OtProblem& problem) {
  const Index m = problem.rows();
  const Index n = problem.cols();
  if (m * n > kOracleMaxCells) {
    throw Error(ErrorCode::OracleTooLarge, "exact LP is limited to 4096 cells");
  }
  const Matrix& cost = problem.cost();
  Matrix x;
  std::vector<detail::Cell> basis = detail::northwest_walk(problem.a(), problem.b(), x);

  const Index nodes = m + n;  // rows 0..m-1, columns m..m+n-1
  Vector pot(nodes);
  std::vector<std::vector<std::pair<Index, std::size_t>>> adj(static_cast<std::size_t>(nodes));
  std::vector<Index> parent(static_cast<std::size_t>(nodes));
  std::vector<std::size_t> parent_edge(static_cast<std::size_t>(nodes));
  std::vector<Index> order;
  order.reserve(static_cast<std::size_t>(nodes));

  // Builds adjacency and a BFS tree rooted at `root`; fills potentials when asked.
  auto build_tree = [&](Index root, bool potentials) {
    for (auto& list : adj) list.clear();
    for (std::size_t e = 0; e < basis.size(); ++e) {
      adj[basis[e].i].push_back({m + basis[e].j, e});
      adj[m + basis[e].j].push_back({basis[e].i, e});
    }
    std::fill(parent.begin(), parent.end(), Index{-1});
    order.clear();
    order.push_back(root);
    parent[root] = root;
    if (potentials) pot[root] = 0.0;
    for (std::size_t head = 0; head < order.size(); ++head) {
      const Index node = order[head];
      for (const auto& [next, e] : adj[node]) {
        if (parent[next] != -1) continue;
        parent[next] = node;
        parent_edge[next] = e;
        if (potentials) pot[next] = cost(basis[e].i, basis[e].j) - pot[node];
        order.push_back(next);
      }
    }
    if (static_cast<Index>(order.size()) != nodes) {
      throw Error(ErrorCode::OracleFailed, "basis is not a spanning tree");
    }
  };

  constexpr double kReducedTol = 1e-12;
  constexpr int kDegenerateRun = 32;
  const long long pivot_cap = 50LL * m * n + 1000;
  int degenerate_run = 0;
  LpSolution out;

  while (true) {
    build_tree(0, true);
    const bool bland = degenerate_run >= kDegenerateRun;
    Index ei = -1;
    Index ej = -1;
    double best = -kReducedTol;
    for (Index i = 0; i < m && !(bland && ei >= 0); ++i) {
      for (Index j = 0; j < n; ++j) {
        const double reduced = cost(i, j) - pot[i] - pot[m + j];
        if (reduced < best) {
          ei = i;
          ej = j;
          if (bland) break;
          best = reduced;
        }
      }
    }
    if (ei < 0) break;
    if (++out.pivots > pivot_cap) {
      throw Error(ErrorCode::OracleFailed, "transportation simplex exceeded its pivot cap");
    }

    // Cycle: entering cell (+), then the tree path from column ej back to row ei,
    // alternating -, +, - ...
    build_tree(ei, false);
    std::vector<std::pair<std::size_t, bool>> path;  // (basis edge, is minus)
    bool minus = true;
    for (Index node = m + ej; node != ei; node = parent[node]) {
      path.push_back({parent_edge[node], minus});
      minus = !minus;
    }
    double theta = std::numeric_limits<double>::infinity();
    std::size_t leave = basis.size();
    for (const auto& [e, is_minus] : path) {
      if (!is_minus) continue;
      const double val = x(basis[e].i, basis[e].j);
      const auto key = [&](std::size_t k) { return basis[k].i * n + basis[k].j; };
      if (leave == basis.size() || val < theta ||
          (val == theta && bland && key(e) < key(leave))) {
        theta = val;
        leave = e;
      }
    }
    for (const auto& [e, is_minus] : path) {
      double& val = x(basis[e].i, basis[e].j);
      val = is_minus ? val - theta : val + theta;
    }
    x(ei, ej) = theta;
    x(basis[leave].i, basis[leave].j) = 0.0;
    basis[leave] = {ei, ej};
    degenerate_run = theta > 0.0 ? 0 : degenerate_run + 1;
  }

  out.plan.entries = x;
  out.value = transport_cost(cost, x);
  out.u = pot.head(m);
  out.v = pot.tail(n);
  return out;
}

}  // namespace otibsn
