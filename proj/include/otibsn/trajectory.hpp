// SPDX-FileCopyrightText: 2026 The otibsn authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <cmath>
#include <cstdio>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "otibsn/error.hpp"

namespace otibsn {

struct TrajectoryRecord {
  int outer_k = 0;
  long long inner_total = 0;
  long long cg_total = 0;
  double wall_seconds = 0.0;
  double objective = 0.0;
  double kkt = 0.0;
  double grad_norm = 0.0;
  std::optional<double> gap;

  bool operator==(const TrajectoryRecord&) const = default;
};

inline constexpr const char* kTrajectoryHeader =
    "outer_k,inner_total,cg_total,wall_seconds,objective,kkt,grad_norm,gap";

class Trajectory {
 public:
  /// Appends a record; wall time and outer index may not go backwards.
  void record(const TrajectoryRecord& rec) {
    if (!std::isfinite(rec.objective) || !std::isfinite(rec.kkt) ||
        !std::isfinite(rec.grad_norm) || !std::isfinite(rec.wall_seconds) ||
        (rec.gap && !std::isfinite(*rec.gap))) {
      throw Error(ErrorCode::NumericalFailure, "trajectory record has a non-finite field");
    }
    if (!records_.empty()) {
      if (rec.wall_seconds < records_.back().wall_seconds) {
        throw Error(ErrorCode::ClockError, "wall time went backwards");
      }
      if (rec.outer_k < records_.back().outer_k) {
        throw Error(ErrorCode::ClockError, "outer index went backwards");
      }
    }
    records_.push_back(rec);
  }

  const std::vector<TrajectoryRecord>& records() const noexcept { return records_; }
  std::size_t size() const noexcept { return records_.size(); }
  bool empty() const noexcept { return records_.empty(); }
  const TrajectoryRecord& back() const { return records_.back(); }

  void write_csv(std::ostream& out) const {
    out << kTrajectoryHeader << '\n';
    char buf[64];
    auto real = [&](double v) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      return std::string(buf);
    };
    for (const auto& r : records_) {
      out << r.outer_k << ',' << r.inner_total << ',' << r.cg_total << ',' << real(r.wall_seconds)
          << ',' << real(r.objective) << ',' << real(r.kkt) << ',' << real(r.grad_norm) << ',';
      if (r.gap) out << real(*r.gap);
      out << '\n';
    }
  }

  std::string to_csv() const {
    std::ostringstream out;
    write_csv(out);
    return out.str();
  }

  static Trajectory parse_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != kTrajectoryHeader) {
      throw Error(ErrorCode::ParseError, "trajectory CSV header missing or wrong");
    }
    Trajectory t;
    int line_no = 1;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      std::vector<std::string> fields;
      std::string field;
      std::istringstream ls(line);
      while (std::getline(ls, field, ',')) fields.push_back(field);
      if (!line.empty() && line.back() == ',') fields.emplace_back();
      if (fields.size() != 8) {
        throw Error(ErrorCode::ParseError,
                    "trajectory line " + std::to_string(line_no) + " needs 8 fields");
      }
      try {
        TrajectoryRecord r;
        r.outer_k = std::stoi(fields[0]);
        r.inner_total = std::stoll(fields[1]);
        r.cg_total = std::stoll(fields[2]);
        r.wall_seconds = std::stod(fields[3]);
        r.objective = std::stod(fields[4]);
        r.kkt = std::stod(fields[5]);
        r.grad_norm = std::stod(fields[6]);
        if (!fields[7].empty()) r.gap = std::stod(fields[7]);
        t.record(r);
      } catch (const std::logic_error&) {
        throw Error(ErrorCode::ParseError,
                    "trajectory line " + std::to_string(line_no) + " has a bad number");
      }
    }
    return t;
  }

  static Trajectory parse_csv(const std::string& text) {
    std::istringstream in(text);
    return parse_csv(in);
  }

 private:
  std::vector<TrajectoryRecord> records_;
};

inline void record(Trajectory& trajectory, const TrajectoryRecord& snapshot) {
  trajectory.record(snapshot);
}

/// Monotonic seconds since construction; reports 0 when disabled, which
/// makes trajectories byte-reproducible.
class SolveClock {
 public:
  explicit SolveClock(bool enabled = true)
      : enabled_(enabled), start_(std::chrono::steady_clock::now()) {}

  double seconds() const {
    if (!enabled_) return 0.0;
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

  /// Real elapsed time, ignoring `enabled`; used for time budgets.
  double elapsed() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  bool enabled_;
  std::chrono::steady_clock::time_point start_;
};

}  // namespace otibsn
