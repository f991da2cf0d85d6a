// SPDX-FileCopyrightText: 2026 The otibsn authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <atomic>
#include <thread>
#include <vector>

#include "otibsn/core.hpp"

namespace otibsn {

namespace detail {
inline std::atomic<int>& thread_setting() {
  static std::atomic<int> threads{1};
  return threads;
}
}  // namespace detail

/// Number of threads used by the row-parallel kernels. One thread gives
/// bitwise reproducible results; more threads only split independent rows.
inline void set_num_threads(int threads) { detail::thread_setting() = std::max(1, threads); }
inline int num_threads() { return detail::thread_setting().load(); }

/// Calls body(i) for every i in [0, count). Rows are split into contiguous
/// blocks; body must only write state owned by row i.
template <class Body>
void parallel_for_rows(Index count, Body&& body) {
  const int threads = static_cast<int>(std::min<Index>(num_threads(), count / 64 + 1));
  if (threads <= 1) {
    for (Index i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(threads);
  const Index block = (count + threads - 1) / threads;
  for (int t = 0; t < threads; ++t) {
    const Index begin = t * block;
    const Index end = std::min(count, begin + block);
    if (begin >= end) break;
    pool.emplace_back([begin, end, &body] {
      for (Index i = begin; i < end; ++i) body(i);
    });
  }
  for (auto& worker : pool) worker.join();
}

}  // namespace otibsn
