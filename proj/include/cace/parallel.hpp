// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace cace {

inline unsigned default_workers() {
  const unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : n;
}

/// Runs fn(begin, end) over fixed-size blocks of [0, n) and returns the block
/// results in block order. Block boundaries do not depend on `workers`, so a
/// reduction over the returned vector is bit-identical for any thread count.
template <class Fn>
auto run_blocks(std::int64_t n, std::int64_t block, unsigned workers, Fn fn) {
  using R = decltype(fn(std::int64_t{0}, std::int64_t{0}));
  const std::int64_t nblocks = n <= 0 ? 0 : (n + block - 1) / block;
  std::vector<R> out(static_cast<std::size_t>(nblocks));
  std::atomic<std::int64_t> next{0};
  std::exception_ptr err;
  std::mutex err_mu;
  auto work = [&] {
    for (;;) {
      const std::int64_t b = next.fetch_add(1);
      if (b >= nblocks) return;
      try {
        out[b] = fn(b * block, std::min(n, (b + 1) * block));
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mu);
        if (!err) err = std::current_exception();
        next = nblocks;
      }
    }
  };
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::int64_t>(nblocks, 1))));
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned i = 0; i < workers; ++i) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (err) std::rethrow_exception(err);
  return out;
}

}  // namespace cace
