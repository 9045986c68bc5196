#include "nop/runtime/vision_worker.hpp"

#include <chrono>

namespace nop::runtime {

VisionWorker::VisionWorker(bool threaded) : threaded_(threaded) {
  if (threaded_) thread_ = std::thread([this] { loop(); });
}

VisionWorker::~VisionWorker() {
  {
    std::lock_guard lock(mu_);
    quit_ = true;
  }
  cv_.notify_all();
  if (thread_.joinable()) thread_.join();
}

VisionResult VisionWorker::run(const VisionJob& job) {
  const auto t0 = std::chrono::steady_clock::now();
  auto det = std::make_shared<const vision::Detections>(vision::run_pipeline(*job.frame, *job.lut, job.lens, job.params));
  const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return {job.id, std::move(det), job.pose, ms};
}

void VisionWorker::submit(VisionJob job) {
  if (!threaded_) {
    last_submitted_ = job.id;
    done_ = run(job);
    return;
  }
  {
    std::lock_guard lock(mu_);
    if (pending_) ++dropped_;
    last_submitted_ = job.id;
    pending_ = std::move(job);
  }
  cv_.notify_all();
}

std::optional<VisionResult> VisionWorker::take(bool wait) {
  std::unique_lock lock(mu_);
  if (wait && threaded_) {
    cv_.wait(lock, [&] { return quit_ || (done_ && done_->job_id == last_submitted_); });
  }
  return std::exchange(done_, std::nullopt);
}

std::uint64_t VisionWorker::dropped() const {
  std::lock_guard lock(mu_);
  return dropped_;
}

void VisionWorker::loop() {
  for (;;) {
    VisionJob job;
    {
      std::unique_lock lock(mu_);
      cv_.wait(lock, [&] { return quit_ || pending_.has_value(); });
      if (quit_) return;
      job = std::move(*pending_);
      pending_.reset();
      busy_ = true;
    }
    VisionResult r = run(job);
    {
      std::lock_guard lock(mu_);
      done_ = std::move(r);
      busy_ = false;
    }
    cv_.notify_all();
  }
}

}  // namespace nop::runtime
