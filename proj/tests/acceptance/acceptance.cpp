// SPDX-FileCopyrightText: 2026 The otibsn authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance checks 1-14. Prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails.

#include <cli.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "otibsn/otibsn.hpp"
#include "test_support.hpp"

using namespace otibsn;
namespace ts = otibsn::testing;
namespace fs = std::filesystem;

namespace {

/// Collects failures of one criterion; keeps the first message and a running summary.
class Verdict {
 public:
  void require(bool ok, const std::string& what) {
    ++checks_;
    if (!ok) {
      ++failures_;
      if (first_failure_.empty()) first_failure_ = what;
    }
  }
  void note(const std::string& s) { summary_ = s; }
  bool ok() const { return failures_ == 0 && checks_ > 0; }
  std::string line() const {
    std::ostringstream out;
    out << checks_ << " checks";
    if (!summary_.empty()) out << ", " << summary_;
    if (failures_ > 0) out << "; " << failures_ << " failed, first: " << first_failure_;
    return out.str();
  }

 private:
  long checks_ = 0;
  long failures_ = 0;
  std::string first_failure_;
  std::string summary_;
};

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

OtProblem generate(const std::string& kind, Index m, Index n, std::uint64_t seed) {
  if (kind == "square") return gen_square(m, n, seed);
  if (kind == "spherical") return gen_spherical(m, n, seed);
  return gen_uniform(m, n, seed);
}

SolverConfig quiet_config(double eta) {
  SolverConfig c;
  c.eta = eta;
  c.record_time = false;
  return c;
}

// 1. IBSN reaches the exact LP optimum.
Verdict exactness() {
  Verdict v;
  const std::vector<Index> sizes{8, 16, 32};
  const std::vector<std::string> costs{"uniform", "square", "spherical"};
  double worst_gap = 0.0;
  double worst_kkt = 0.0;
  const auto start = std::chrono::steady_clock::now();
  for (int k = 0; k < 20; ++k) {
    const Index size = sizes[static_cast<std::size_t>(k % 3)];
    const std::string& cost = costs[static_cast<std::size_t>((k / 3) % 3)];
    const OtProblem p = generate(cost, size, size, static_cast<std::uint64_t>(k));
    SolverConfig c = quiet_config(1e-3);
    c.kkt_tol = 1e-10;
    c.max_outer = 3000;
    const OuterResult r = ibsn_solve(p, c);
    const double g = gap(r.rounded_plan, p.cost(), exact_small_lp(p).value);
    const std::string tag = cost + " " + std::to_string(size) + " seed " + std::to_string(k);
    v.require(g <= 1e-8, tag + ": gap " + fmt(g));
    v.require(r.kkt.delta_kkt <= 1e-10, tag + ": kkt " + fmt(r.kkt.delta_kkt));
    worst_gap = std::max(worst_gap, g);
    worst_kkt = std::max(worst_kkt, r.kkt.delta_kkt);
  }
  v.note("max gap " + fmt(worst_gap) + ", max kkt " + fmt(worst_kkt) + ", " +
         fmt(seconds_since(start)) + " s");
  return v;
}

/// Orthonormal basis of the complement of the ones vector from a QR factorization.
Matrix complement_basis(Index n) {
  Matrix seed = Matrix::Identity(n, n);
  seed.col(0).setOnes();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(seed);
  const Matrix q = qr.householderQ();
  return q.rightCols(n - 1);
}

struct HessianVerdicts {
  Verdict kernel;
  Verdict spectrum;
  Verdict error;
};

// 2-4. Sparsified Hessian kernel, eigenvalue bounds and approximation error.
HessianVerdicts hessian_properties() {
  HessianVerdicts out;
  double worst_kernel = 0.0;
  double worst_min_eig = 0.0;
  double worst_max_ratio = 0.0;
  double worst_err_ratio = 0.0;
  int fallback_rows = 0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const ts::HessianDraw d = ts::random_hessian_draw(s);
    const Index m = d.p.rows();
    const Index n = d.p.cols();
    const Index anchor = choose_anchor(d.a);
    const SparseHessianOp op(sparsify_p(ts::cache_from(d.p), d.rho, anchor), d.a, d.eta);
    const std::string tag = "draw " + std::to_string(s);

    Matrix hr(n, n);
    for (Index j = 0; j < n; ++j) hr.col(j) = op.apply(Vector::Unit(n, j));
    std::vector<bool> fallback;
    const Matrix q = ts::naive_threshold(d.p, d.rho, anchor, &fallback);
    const Matrix hr_ref = ts::dense_hessian(q, d.a, d.eta);

    const double kernel = op.apply(Vector::Ones(n)).lpNorm<Eigen::Infinity>();
    out.kernel.require(kernel <= 1e-12 / d.eta, tag + ": |H 1| " + fmt(kernel));
    const double asym = (hr - hr.transpose()).cwiseAbs().maxCoeff();
    out.kernel.require(asym <= 1e-12 / d.eta, tag + ": asymmetry " + fmt(asym));
    const double mismatch = (hr - hr_ref).cwiseAbs().maxCoeff();
    out.kernel.require(mismatch <= 1e-12 / d.eta, tag + ": differs from reference by " +
                                                      fmt(mismatch));
    const Matrix sym = 0.5 * (hr + hr.transpose());
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym, Eigen::EigenvaluesOnly);
    const double lmin = eig.eigenvalues().minCoeff();
    out.kernel.require(lmin >= -1e-10 / d.eta, tag + ": lambda_min " + fmt(lmin));
    worst_kernel = std::max(worst_kernel, kernel * d.eta);
    worst_min_eig = std::min(worst_min_eig, lmin * d.eta);

    const double lmax = eig.eigenvalues().maxCoeff();
    out.spectrum.require(lmax <= 1.0 / (2.0 * d.eta) + 1e-9, tag + ": lambda_max " + fmt(lmax));
    worst_max_ratio = std::max(worst_max_ratio, lmax * 2.0 * d.eta);
    const double pmin = d.p.row(anchor).minCoeff();
    const double lower = static_cast<double>(n) * d.a[anchor] * pmin * pmin / d.eta;
    if (n > 1) {
      const Matrix basis = complement_basis(n);
      const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> perp(basis.transpose() * sym * basis,
                                                                Eigen::EigenvaluesOnly);
      const double lperp = perp.eigenvalues().minCoeff();
      out.spectrum.require(lperp >= lower - 1e-12,
                           tag + ": lambda_min on complement " + fmt(lperp) + " < " + fmt(lower));
      const SpectralBounds lib = spectral_bounds_check(op);
      out.spectrum.require(lib.lambda_min_perp >= lower - 1e-12,
                           tag + ": library lambda_min on complement " + fmt(lib.lambda_min_perp));
      out.spectrum.require(lib.lambda_max <= 1.0 / (2.0 * d.eta) + 1e-9,
                           tag + ": library lambda_max " + fmt(lib.lambda_max));
    }

    const Matrix h = ts::dense_hessian(d.p, d.a, d.eta);
    const double err = ts::spectral_norm(h - hr);
    const double bound = 6.0 * m * n * d.a.maxCoeff() * d.rho / d.eta;
    out.error.require(err <= bound + 1e-12, tag + ": |H - H_rho| " + fmt(err) + " > " + fmt(bound));
    if (bound > 0.0) worst_err_ratio = std::max(worst_err_ratio, err / bound);

    Matrix diff = d.p - op.p_rho().to_dense();
    for (Index i = 0; i < m; ++i) {
      if (fallback[static_cast<std::size_t>(i)]) {
        diff.row(i).setZero();
        ++fallback_rows;
      }
    }
    const double rho = d.rho;
    out.error.require(ts::operator_inf_norm(diff) <= 2.0 * n * rho + 1e-12,
                      tag + ": inf-norm of P - P_rho");
    out.error.require(ts::operator_one_norm(diff) <= 2.0 * m * n * rho + 1e-12,
                      tag + ": 1-norm of P - P_rho");
    out.error.require(ts::spectral_norm(diff) <= 2.0 * std::sqrt(double(m)) * n * rho + 1e-12,
                      tag + ": 2-norm of P - P_rho");
  }
  out.kernel.note("max eta|H 1| " + fmt(worst_kernel) + ", min eta lambda " + fmt(worst_min_eig));
  out.spectrum.note("max 2 eta lambda_max " + fmt(worst_max_ratio));
  out.error.note("max error/bound " + fmt(worst_err_ratio) + ", fallback rows excluded " +
                 std::to_string(fallback_rows));
  return out;
}

Vector reference_gradient(const Matrix& log_x, const Vector& gamma, const OtProblem& p,
                          double eta) {
  return ts::naive_p(log_x, gamma, p.cost(), eta).transpose() * p.a() - p.b();
}

// 5. Gradient and Hessian products against finite differences.
Verdict derivatives() {
  Verdict v;
  double worst_g = 0.0;
  double worst_h = 0.0;
  for (double eta : {1e-1, 1e-2}) {
    for (std::uint64_t s = 0; s < 20; ++s) {
      const Index m = 2 + static_cast<Index>((s * 5) % 15);
      const Index n = 2 + static_cast<Index>((s * 7) % 15);
      const OtProblem p = gen_uniform(m, n, 100 + s);
      Matrix log_x = initial_plan(p).log_entries();
      log_x += 0.3 * Eigen::Map<const Matrix>(ts::random_vector(m * n, 200 + s).data(), m, n);
      const LogPlan plan(log_x);
      // A random gamma saturates P at small eta (entries near 1e-28, Hessian near 1e-26),
      // where relative errors are meaningless; perturb the Sinkhorn warm start instead.
      const Vector gamma = warm_start(plan, p, eta, 1e-3).gamma.gamma +
                           ts::random_vector(n, 300 + s, 0.1 * eta);
      const std::string tag = "eta " + fmt(eta) + " seed " + std::to_string(s);

      const RowSoftmaxCache cache = compute_p(plan, gamma, p, eta);
      const Vector g = semidual_gradient(cache, p);
      const double h = 1e-4 * eta;
      Vector fd(n);
      for (Index j = 0; j < n; ++j) {
        Vector up = gamma;
        Vector down = gamma;
        up[j] += h;
        down[j] -= h;
        fd[j] = static_cast<double>(
            (ts::naive_semidual(log_x, up, p.cost(), p.a(), p.b(), eta) -
             ts::naive_semidual(log_x, down, p.cost(), p.a(), p.b(), eta)) /
            (2.0L * h));
      }
      const double gerr = (g - fd).norm() / g.norm();
      v.require(gerr <= 1e-5, tag + ": gradient error " + fmt(gerr));
      worst_g = std::max(worst_g, gerr);

      Vector dir = ts::random_vector(n, 400 + s);
      dir /= dir.norm();
      const Vector hv = hessian_matvec_exact(cache, p, eta, dir);
      const Vector fdh = (reference_gradient(log_x, gamma + h * dir, p, eta) -
                          reference_gradient(log_x, gamma - h * dir, p, eta)) /
                         (2.0 * h);
      const double herr = (hv - fdh).norm() / hv.norm();
      v.require(herr <= 1e-4, tag + ": Hessian error " + fmt(herr));
      worst_h = std::max(worst_h, herr);
    }
  }
  v.note("max gradient error " + fmt(worst_g) + ", max Hessian error " + fmt(worst_h));
  return v;
}

// 6-7. Zero-sum iterates and Armijo decrease from the step logs of full runs.
std::pair<Verdict, Verdict> inner_logs() {
  Verdict zero_sum;
  Verdict armijo;
  double worst_sum = 0.0;
  double worst_slack = 0.0;
  long steps = 0;
  struct Run {
    std::string cost;
    double eta;
  };
  for (const Run& run : {Run{"uniform", 1e-3}, Run{"square", 1e-3}, Run{"uniform", 1e-2}}) {
    const OtProblem p = generate(run.cost, 32, 32, 1);
    SolverConfig c = quiet_config(run.eta);
    c.max_outer = 3000;
    const OuterResult r = ibsn_solve(p, c);
    const std::string tag = run.cost + " eta " + fmt(run.eta);
    zero_sum.require(r.converged(), tag + ": run did not converge");
    for (const InnerReport& report : r.inner_reports) {
      for (const InnerStepLog& s : report.steps) {
        ++steps;
        const double scale = std::max(1.0, s.gamma_norm);
        zero_sum.require(std::abs(s.gamma_sum) <= 1e-8 * scale,
                         tag + ": |1^T gamma| " + fmt(s.gamma_sum));
        worst_sum = std::max(worst_sum, std::abs(s.gamma_sum) / scale);
        const double required = c.armijo_sigma * s.step * std::abs(s.directional_derivative);
        armijo.require(-s.objective_change >= required - 1e-12,
                       tag + ": decrease " + fmt(-s.objective_change) + " < " + fmt(required));
        armijo.require(s.step > 0.0 && s.step <= 1.0, tag + ": step " + fmt(s.step));
        worst_slack = std::max(worst_slack, required + s.objective_change);
      }
    }
  }
  zero_sum.note(std::to_string(steps) + " steps, max |1^T gamma|/max(1,|gamma|) " + fmt(worst_sum));
  armijo.note("max shortfall " + fmt(worst_slack));
  return {zero_sum, armijo};
}

// 8. Local quadratic convergence of the inner Newton solver.
Verdict local_rate() {
  Verdict v;
  const double eta = 1e-2;
  const OtProblem p = gen_uniform(16, 16, 8);
  const LogPlan plan = initial_plan(p);
  const DualState start = warm_start(plan, p, eta, 1e-3).gamma;
  SolverConfig c = quiet_config(eta);
  c.max_inner = 200;
  const InnerResult reference =
      inner_solve_with(plan, start, p, c, InnerStopRule::gradient(1e-15), 0);
  const Vector star = reference.gamma.gamma;

  std::vector<double> errors{(start.gamma - star).norm()};
  const InnerResult run = inner_solve_with(
      plan, start, p, c, InnerStopRule::gradient(1e-13), 0,
      [&](const DualState& g, const RowSoftmaxCache&, double) {
        errors.push_back((g.gamma - star).norm());
      });
  v.require(run.report.final_grad_norm <= 1e-13,
            "gradient " + fmt(run.report.final_grad_norm) + " above 1e-13");
  // Errors at the level of the reference point's own rounding carry no rate information.
  std::vector<double> e;
  for (double x : errors) {
    if (x > 1e-12) e.push_back(x);
  }
  v.require(e.size() >= 3, "fewer than three resolvable errors");
  if (e.size() >= 3) {
    const std::size_t k = e.size() - 3;
    v.require(e[k + 1] <= 1e4 * e[k] * e[k], "e1 > 1e4 e0^2");
    v.require(e[k + 2] <= 1e4 * e[k + 1] * e[k + 1], "e2 > 1e4 e1^2");
    v.require(e[k + 2] / e[k + 1] <= 0.1 * (e[k + 1] / e[k]), "ratio shrank less than 10x");
    v.note("errors " + fmt(e[k]) + ", " + fmt(e[k + 1]) + ", " + fmt(e[k + 2]));
  }
  return v;
}

// 9. Rounding hits the marginals exactly.
Verdict rounding() {
  Verdict v;
  std::mt19937_64 gen(2024);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> size(1, 20);
  double worst = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const Index m = size(gen);
    const Index n = size(gen);
    Vector a(m);
    Vector b(n);
    for (Index i = 0; i < m; ++i) a[i] = 0.01 + unit(gen);
    for (Index j = 0; j < n; ++j) b[j] = 0.01 + unit(gen);
    a /= a.sum();
    b /= b.sum();
    Matrix x = Matrix::Zero(m, n);
    switch (t % 5) {
      case 0:
        break;
      case 1:
        x = a * b.transpose();
        break;
      case 2:
        x(static_cast<Index>(gen() % m), static_cast<Index>(gen() % n)) = std::pow(10.0, 4 * unit(gen) - 2);
        break;
      case 3:
        for (Index k = 0; k < x.size(); ++k) x.data()[k] = unit(gen) * std::pow(10.0, 6 * unit(gen) - 3);
        break;
      default:
        for (Index k = 0; k < x.size(); ++k) x.data()[k] = unit(gen) < 0.7 ? 0.0 : unit(gen);
    }
    const FeasiblePlan f = round_to_feasible(x, a, b);
    const double rows = (ts::row_sums(f.entries) - a).lpNorm<Eigen::Infinity>();
    const double cols = (ts::col_sums(f.entries) - b).lpNorm<Eigen::Infinity>();
    const std::string tag = "matrix " + std::to_string(t);
    v.require(rows <= 1e-12, tag + ": row error " + fmt(rows));
    v.require(cols <= 1e-12, tag + ": column error " + fmt(cols));
    v.require(f.entries.minCoeff() >= 0.0, tag + ": negative entry");
    worst = std::max({worst, rows, cols});
  }
  v.note("max marginal error " + fmt(worst));
  return v;
}

// 10. Inexactness schedule.
Verdict schedule() {
  Verdict v;
  const MuSchedule s = MuSchedule::from(SolverConfig{});
  v.require(mu(s, 0) == 1e-4, "mu(0) != 1e-4");
  v.require(std::abs(mu(s, 9) - 1e-6) <= 1e-6 * 1e-15, "mu(9) != 1e-6");
  for (int k = 0; k <= 100000; ++k) {
    const double kp1 = k + 1.0;
    const double formula = std::max(1e-4 / (kp1 * kp1), 1e-11);
    v.require(mu(s, k) == formula, "mu(" + std::to_string(k) + ") differs from the formula");
    if (k >= 3163) v.require(mu(s, k) == 1e-11, "floor not binding at " + std::to_string(k));
  }
  int first = 0;
  while (mu(s, first) > 1e-11) ++first;
  v.note("floor binds from k = " + std::to_string(first));
  return v;
}

// 11. Sinkhorn updates match one marginal exactly.
Verdict sinkhorn_marginals() {
  Verdict v;
  double worst = 0.0;
  for (const std::string cost : {"uniform", "square", "spherical"}) {
    for (std::uint64_t s = 0; s < 2; ++s) {
      const OtProblem p = generate(cost, 12, 10, s);
      SolverConfig warm = quiet_config(1e-2);
      warm.max_outer = 2;
      warm.kkt_tol = 1e-300;
      const std::vector<LogPlan> plans{initial_plan(p), ibsink_solve(p, warm).final_logplan};
      for (const LogPlan& plan : plans) {
        for (double eta : {1e-1, 1e-2, 1e-3, 1e-4}) {
          TwoDualState st = TwoDualState::zeros(p.rows(), p.cols());
          const std::string tag = cost + " seed " + std::to_string(s) + " eta " + fmt(eta);
          for (int sweep = 0; sweep < 25; ++sweep) {
            st = zeta_update(plan, st, p, eta);
            Matrix chi = ts::naive_coupling(plan.log_entries(), st.zeta, st.gamma, p.cost(), eta);
            const double rows = (ts::row_sums(chi) - p.a()).lpNorm<Eigen::Infinity>();
            v.require(rows <= 1e-12, tag + ": row error " + fmt(rows));
            st = gamma_update(plan, st, p, eta);
            chi = ts::naive_coupling(plan.log_entries(), st.zeta, st.gamma, p.cost(), eta);
            const double cols = (ts::col_sums(chi) - p.b()).lpNorm<Eigen::Infinity>();
            v.require(cols <= 1e-12, tag + ": column error " + fmt(cols));
            worst = std::max({worst, rows, cols});
          }
        }
      }
    }
  }
  v.note("max error " + fmt(worst));
  return v;
}

// 12. Newton and Sinkhorn agree on the entropic problem.
Verdict eot_agreement() {
  Verdict v;
  double worst = 0.0;
  for (const std::string cost : {"uniform", "square", "spherical"}) {
    for (std::uint64_t s = 0; s < 4; ++s) {
      const OtProblem p = generate(cost, 8, 8, 50 + s);
      SolverConfig c = quiet_config(1e-2);
      c.kkt_tol = 1e-12;
      const OuterResult newton = eot_single_solve(p, c);
      const EotResult sink = sinkhorn_solve_eot(p, 1e-2, 1e-14, 1000000);
      const std::string tag = cost + " seed " + std::to_string(50 + s);
      v.require(sink.converged, tag + ": Sinkhorn did not converge");
      const double d = (newton.final_logplan.linear() - sink.plan.linear()).cwiseAbs().maxCoeff();
      v.require(d <= 1e-6, tag + ": max entry difference " + fmt(d));
      worst = std::max(worst, d);
    }
  }
  v.note("max entry difference " + fmt(worst));
  return v;
}

// 13. IBSN needs fewer inner iterations than IBSink and less time than plain Sinkhorn.
Verdict orderings() {
  Verdict v;
  const OtProblem p = gen_square(32, 32, 0);
  SolverConfig c;
  c.eta = 1e-3;
  c.kkt_tol = 1e-9;
  c.max_outer = 3000;
  const OuterResult ibsn = ibsn_solve(p, c);
  const OuterResult ibsink = ibsink_solve(p, c);
  v.require(ibsn.converged(), "IBSN did not reach the tolerance");
  v.require(ibsink.converged(), "IBSink did not reach the tolerance");
  v.require(ibsn.inner_total < ibsink.inner_total,
            "Newton steps " + std::to_string(ibsn.inner_total) + " >= sweeps " +
                std::to_string(ibsink.inner_total));

  // Plain Sinkhorn is timed to the same KKT target; a run that does not get
  // there within the budget has a time-to-target of at least the budget.
  SolverConfig plain = c;
  plain.time_budget_seconds = std::max(2.0, 20.0 * ibsn.wall_seconds);
  const OuterResult sink = sinkhorn_baseline(p, plain, SinkhornTarget::Kkt);
  v.require(ibsn.wall_seconds < sink.wall_seconds,
            "IBSN " + fmt(ibsn.wall_seconds) + " s not below Sinkhorn " +
                fmt(sink.wall_seconds) + " s");
  v.note("Newton steps " + std::to_string(ibsn.inner_total) + " vs IBSink sweeps " +
         std::to_string(ibsink.inner_total) + "; IBSN " + fmt(ibsn.wall_seconds) +
         " s vs Sinkhorn " + fmt(sink.wall_seconds) + " s (" +
         (sink.converged() ? "reached" : "capped at kkt " + fmt(sink.kkt.delta_kkt)) + ")");
  return v;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// 14. Identical flags give byte-identical trajectories.
Verdict determinism() {
  Verdict v;
  const fs::path dir = fs::temp_directory_path() / "otibsn_acceptance_determinism";
  fs::remove_all(dir);
  fs::create_directories(dir);
  for (const std::string algo : {"ibsn", "ibsink"}) {
    std::string first;
    for (int run = 0; run < 2; ++run) {
      const std::string out = (dir / (algo + std::to_string(run) + ".csv")).string();
      const std::vector<std::string> args{"otibsn", "solve", "--algo", algo, "--cost", "uniform",
                                          "--size", "24", "24", "--seed", "3", "--eta", "1e-3",
                                          "--threads", "1", "--no-timing", "--log-inner",
                                          "--out", out};
      std::vector<const char*> argv;
      for (const auto& a : args) argv.push_back(a.c_str());
      std::ostringstream sink;
      const int code = cli::run_cli(static_cast<int>(argv.size()), argv.data(), sink, sink);
      v.require(code == cli::kExitOk, algo + ": exit code " + std::to_string(code));
      const std::string text = slurp(out);
      v.require(!text.empty(), algo + ": empty trajectory");
      if (run == 0) {
        first = text;
      } else {
        v.require(text == first, algo + ": trajectories differ");
      }
    }
  }
  fs::remove_all(dir);
  v.note("ibsn and ibsink, 24x24, --threads 1");
  return v;
}

}  // namespace

int main() {
  int failed = 0;
  auto report = [&](int id, const std::function<Verdict()>& check) {
    Verdict v;
    try {
      v = check();
    } catch (const std::exception& e) {
      v.require(false, std::string("exception: ") + e.what());
    }
    if (!v.ok()) ++failed;
    std::printf("criterion %2d: %s  %s\n", id, v.ok() ? "PASS" : "FAIL", v.line().c_str());
    std::fflush(stdout);
  };

  report(1, exactness);
  std::optional<HessianVerdicts> hv;
  report(2, [&] {
    hv = hessian_properties();
    return hv->kernel;
  });
  report(3, [&] { return hv.value().spectrum; });
  report(4, [&] { return hv.value().error; });
  report(5, derivatives);
  std::optional<std::pair<Verdict, Verdict>> logs;
  report(6, [&] {
    logs = inner_logs();
    return logs->first;
  });
  report(7, [&] { return logs.value().second; });
  report(8, local_rate);
  report(9, rounding);
  report(10, schedule);
  report(11, sinkhorn_marginals);
  report(12, eot_agreement);
  report(13, orderings);
  report(14, determinism);
  std::printf("%d of 14 criteria failed\n", failed);
  return failed == 0 ? 0 : 1;
}
