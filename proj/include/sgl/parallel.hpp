#ifndef SGL_PARALLEL_HPP
#define SGL_PARALLEL_HPP

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace sgl {

/// Worker count taken from SGL_NUM_THREADS; 1 when unset or invalid.
inline std::size_t thread_count() {
  const char* env = std::getenv("SGL_NUM_THREADS");
  if (env == nullptr) return 1;
  try {
    const long v = std::stol(env);
    if (v <= 0) return std::max<std::size_t>(1, std::thread::hardware_concurrency());
    return static_cast<std::size_t>(v);
  } catch (...) {
    return 1;
  }
}

/// Runs fn(i) for i in [0, n) on up to thread_count() threads.
///
/// Work items must be independent; each writes only its own outputs, so the
/// result does not depend on the thread count. The first exception thrown by
/// any item is rethrown on the calling thread.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  const std::size_t workers = std::min(thread_count(), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += workers) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace sgl

#endif  // SGL_PARALLEL_HPP
