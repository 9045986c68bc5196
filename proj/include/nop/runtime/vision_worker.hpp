#pragma once

#include <condition_variable>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <thread>

#include "nop/behavior.hpp"
#include "nop/vision/color_lut.hpp"
#include "nop/vision/detect.hpp"
#include "nop/vision/image.hpp"

namespace nop::runtime {

struct VisionJob {
  std::uint64_t id = 0;
  std::shared_ptr<const vision::YuyvImage> frame;
  std::shared_ptr<const vision::ColorLUT> lut;
  vision::VisionParams params;
  vision::LensModel lens;
  /// Camera pose at capture time, passed through to the result.
  behavior::CameraPose pose;
};

struct VisionResult {
  std::uint64_t job_id = 0;
  std::shared_ptr<const vision::Detections> detections;
  behavior::CameraPose pose;
  double elapsed_ms = 0.0;
};

/// Runs the vision pipeline in its own thread. The mailbox holds one frame: a frame that
/// has not been started when a newer one arrives is dropped.
class VisionWorker {
public:
  explicit VisionWorker(bool threaded = true);
  ~VisionWorker();
  VisionWorker(const VisionWorker&) = delete;
  VisionWorker& operator=(const VisionWorker&) = delete;

  void submit(VisionJob job);
  /// Result of the most recently submitted frame. With `wait`, blocks until it is ready;
  /// otherwise returns the newest finished result not yet taken.
  std::optional<VisionResult> take(bool wait);

  std::uint64_t dropped() const;

private:
  void loop();
  static VisionResult run(const VisionJob& job);

  bool threaded_;
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::optional<VisionJob> pending_;
  std::optional<VisionResult> done_;
  std::uint64_t last_submitted_ = 0;
  std::uint64_t dropped_ = 0;
  bool busy_ = false;
  bool quit_ = false;
  std::thread thread_;
};

}  // namespace nop::runtime
