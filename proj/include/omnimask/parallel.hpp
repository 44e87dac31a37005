#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace omnimask {

namespace detail {
inline std::atomic<int>& thread_setting() {
  static std::atomic<int> n{0};
  return n;
}
}  // namespace detail

/// Worker count used by the per-row kernels. 0 selects the hardware default.
inline void set_thread_count(int n) { detail::thread_setting().store(std::max(0, n)); }

inline int thread_count() {
  const int n = detail::thread_setting().load();
  if (n > 0) return n;
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

/// Runs body(i) for i in [begin, end) over contiguous blocks. Work items must
/// be independent; output is identical for any thread count.
template <typename Body>
void parallel_for(int begin, int end, Body&& body) {
  const int total = end - begin;
  if (total <= 0) return;
  const int workers = std::min(thread_count(), total);
  if (workers <= 1) {
    for (int i = begin; i < end; ++i) body(i);
    return;
  }
  std::exception_ptr error;
  std::mutex error_mutex;
  auto run_block = [&](int w) {
    const int lo = begin + static_cast<int>(static_cast<long long>(total) * w / workers);
    const int hi = begin + static_cast<int>(static_cast<long long>(total) * (w + 1) / workers);
    try {
      for (int i = lo; i < hi; ++i) body(i);
    } catch (...) {
      std::lock_guard lock(error_mutex);
      if (!error) error = std::current_exception();
    }
  };
  std::vector<std::jthread> pool;
  pool.reserve(static_cast<std::size_t>(workers - 1));
  for (int w = 1; w < workers; ++w) pool.emplace_back(run_block, w);
  run_block(0);
  pool.clear();
  if (error) std::rethrow_exception(error);
}

}  // namespace omnimask
