#pragma once

#include <condition_variable>
#include <cstddef>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace autosmart {

/// Minimal persistent worker pool. Tasks are index ranges; every result slot
/// is owned by exactly one index, so output is identical for any worker
/// count. With zero workers everything runs inline on the caller.
class ThreadPool {
 public:
  explicit ThreadPool(int n_workers);
  ~ThreadPool();

  ThreadPool(const ThreadPool&) = delete;
  ThreadPool& operator=(const ThreadPool&) = delete;

  int workers() const { return static_cast<int>(threads_.size()); }

  /// Runs fn(i) for i in [0, n); blocks until all indices are done.
  void for_each_index(size_t n, const std::function<void(size_t)>& fn);

 private:
  void worker_loop();

  std::vector<std::thread> threads_;
  std::mutex mu_;
  std::condition_variable cv_work_;
  std::condition_variable cv_done_;
  const std::function<void(size_t)>* fn_ = nullptr;
  size_t next_ = 0;
  size_t total_ = 0;
  size_t in_flight_ = 0;
  bool stop_ = false;
};

/// Convenience wrapper tolerating a null pool.
inline void parallel_for(ThreadPool* pool, size_t n,
                         const std::function<void(size_t)>& fn) {
  if (pool != nullptr && pool->workers() > 1 && n > 1) {
    pool->for_each_index(n, fn);
  } else {
    for (size_t i = 0; i < n; ++i) fn(i);
  }
}

}  // namespace autosmart
