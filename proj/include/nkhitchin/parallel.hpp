#pragma once

// Fixed-partition worker pool for parameter sweeps. Results land in
// pre-sized slots, so output order never depends on scheduling.

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace nkh {

/// Worker count from NK_THREADS; unset or invalid means one worker.
inline unsigned worker_count() {
  const char* env = std::getenv("NK_THREADS");
  if (env == nullptr) return 1;
  try {
    const long n = std::stol(env);
    return n >= 1 ? static_cast<unsigned>(n) : 1U;
  } catch (const std::exception&) {
    return 1;
  }
}

/// out[i] = fn(i) for i < n. Worker w handles the contiguous block
/// [w*n/W, (w+1)*n/W). The first exception (lowest index) is rethrown.
template <class T, class Fn>
std::vector<T> parallel_map(std::size_t n, Fn&& fn, unsigned workers = worker_count()) {
  std::vector<T> out(n);
  std::vector<std::exception_ptr> errors(n);
  const std::size_t w = std::max<std::size_t>(1, std::min<std::size_t>(workers, n));
  auto run_block = [&](std::size_t k) {
    const std::size_t lo = k * n / w;
    const std::size_t hi = (k + 1) * n / w;
    for (std::size_t i = lo; i < hi; ++i) {
      try {
        out[i] = fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (w == 1) {
    run_block(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(w);
    for (std::size_t k = 0; k < w; ++k) pool.emplace_back(run_block, k);
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

}  // namespace nkh
