#pragma once

#include <chrono>
#include <condition_variable>
#include <deque>
#include <mutex>
#include <optional>
#include <vector>

namespace nop::config {

/// Multi-producer queue that never blocks the producer. When full, the oldest
/// element is discarded and the `lost` flag is raised until someone reads it.
template <typename T>
class BoundedQueue {
public:
  explicit BoundedQueue(std::size_t capacity = 1024) : capacity_(capacity) {}

  void push(T item) {
    {
      std::lock_guard lock(mu_);
      if (items_.size() >= capacity_) {
        items_.pop_front();
        lost_ = true;
      }
      items_.push_back(std::move(item));
    }
    cv_.notify_one();
  }

  std::optional<T> pop(std::chrono::milliseconds wait = std::chrono::milliseconds{0}) {
    std::unique_lock lock(mu_);
    if (wait.count() > 0) cv_.wait_for(lock, wait, [&] { return !items_.empty(); });
    if (items_.empty()) return std::nullopt;
    T item = std::move(items_.front());
    items_.pop_front();
    return item;
  }

  std::vector<T> drain() {
    std::lock_guard lock(mu_);
    std::vector<T> out(std::make_move_iterator(items_.begin()), std::make_move_iterator(items_.end()));
    items_.clear();
    return out;
  }

  /// Returns and clears the overflow flag.
  bool take_lost() {
    std::lock_guard lock(mu_);
    return std::exchange(lost_, false);
  }

  std::size_t size() const {
    std::lock_guard lock(mu_);
    return items_.size();
  }
  std::size_t capacity() const { return capacity_; }

private:
  std::size_t capacity_;
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::deque<T> items_;
  bool lost_ = false;
};

}  // namespace nop::config
