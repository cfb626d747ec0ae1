#include "autosmart/parallel.hpp"

namespace autosmart {

ThreadPool::ThreadPool(int n_workers) {
  if (n_workers < 0) n_workers = 0;
  threads_.reserve(static_cast<size_t>(n_workers));
  for (int i = 0; i < n_workers; ++i)
    threads_.emplace_back([this] { worker_loop(); });
}

ThreadPool::~ThreadPool() {
  {
    std::lock_guard<std::mutex> lock(mu_);
    stop_ = true;
  }
  cv_work_.notify_all();
  for (auto& t : threads_) t.join();
}

void ThreadPool::worker_loop() {
  for (;;) {
    size_t index;
    {
      std::unique_lock<std::mutex> lock(mu_);
      cv_work_.wait(lock, [this] { return stop_ || next_ < total_; });
      if (stop_ && next_ >= total_) return;
      index = next_++;
      ++in_flight_;
    }
    (*fn_)(index);
    {
      std::lock_guard<std::mutex> lock(mu_);
      --in_flight_;
      if (next_ >= total_ && in_flight_ == 0) cv_done_.notify_all();
    }
  }
}

void ThreadPool::for_each_index(size_t n, const std::function<void(size_t)>& fn) {
  if (n == 0) return;
  if (threads_.empty()) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::unique_lock<std::mutex> lock(mu_);
  fn_ = &fn;
  next_ = 0;
  total_ = n;
  cv_work_.notify_all();
  // the caller helps out instead of idling
  while (true) {
    if (next_ >= total_) break;
    size_t index = next_++;
    ++in_flight_;
    lock.unlock();
    fn(index);
    lock.lock();
    --in_flight_;
  }
  cv_done_.wait(lock, [this] { return next_ >= total_ && in_flight_ == 0; });
  fn_ = nullptr;
  total_ = 0;
}

}  // namespace autosmart
