#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "typpert/error.hpp"

namespace typpert {

namespace detail {
inline std::atomic<int>& thread_override() {
  static std::atomic<int> n{0};
  return n;
}
}  // namespace detail

/// Worker count: set_thread_count() if called, else TYPPERT_THREADS, else the
/// hardware concurrency.
inline int thread_count() {
  if (int n = detail::thread_override().load(); n > 0) return n;
  if (const char* env = std::getenv("TYPPERT_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n > 0) return n;
    } catch (...) {
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

inline void set_thread_count(int n) { detail::thread_override().store(n > 0 ? n : 0); }

/// out[i] = f(i) for i in [0, n). Work is claimed dynamically but every
/// result lands at its own index, so the output never depends on the
/// worker count. The exception of the lowest failing index is rethrown.
template <class F>
auto parallel_map(std::size_t n, F&& f) -> std::vector<decltype(f(std::size_t{}))> {
  using R = decltype(f(std::size_t{}));
  std::vector<R> out(n);
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(thread_count()), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) out[i] = f(i);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::mutex failure_lock;
  std::size_t failed_at = n;
  std::exception_ptr failure;
  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        out[i] = f(i);
      } catch (...) {
        std::lock_guard<std::mutex> g(failure_lock);
        if (i < failed_at) {
          failed_at = i;
          failure = std::current_exception();
        }
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return out;
}

/// Pairwise (tree) sum in index order; T needs + and a copy constructor.
template <class T>
T pairwise_sum(const std::vector<T>& xs, std::size_t first, std::size_t count) {
  require(count > 0, ErrorKind::input, "pairwise_sum of nothing");
  if (count == 1) return xs[first];
  const std::size_t half = count / 2;
  return pairwise_sum(xs, first, half) + pairwise_sum(xs, first + half, count - half);
}

template <class T>
T pairwise_sum(const std::vector<T>& xs) {
  return pairwise_sum(xs, 0, xs.size());
}

}  // namespace typpert
