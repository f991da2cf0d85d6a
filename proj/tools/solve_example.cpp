// SPDX-FileCopyrightText: 2026 The otibsn authors
// SPDX-License-Identifier: Apache-2.0

// Minimal library use: solve a random instance and compare with the exact LP.

#include <cstdio>

#include "otibsn/otibsn.hpp"

int main() {
  const otibsn::OtProblem problem = otibsn::gen_square(24, 24, 1);

  otibsn::SolverConfig config;
  config.eta = 1e-3;
  const otibsn::OuterResult result = otibsn::ibsn_solve(problem, config);
  const otibsn::LpSolution exact = otibsn::exact_small_lp(problem);

  std::printf("outer %d, newton %lld, cg %lld\n", result.outer_iters, result.inner_total,
              result.cg_total);
  std::printf("objective %.15f (exact %.15f), kkt %.2e\n", result.objective, exact.value,
              result.kkt.delta_kkt);
  return result.converged() ? 0 : 2;
}
