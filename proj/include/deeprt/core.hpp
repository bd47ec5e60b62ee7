#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <vector>

namespace deeprt {

// All timestamps and durations are integer microseconds. Signed so that
// subtraction is safe; invariants keep stored values non-negative.
using TimeUs = std::int64_t;
using DurUs = std::int64_t;

struct Shape {
  int channels = 0;
  int height = 0;
  int width = 0;

  auto operator<=>(const Shape&) const = default;

  bool valid() const { return channels > 0 && height > 0 && width > 0; }

  // Resolution downgrade target: spatial dims floor-halved, channels kept.
  Shape halved() const { return Shape{channels, height / 2, width / 2}; }

  std::string label() const;
};

// Execution category: frames of the same model and input shape can share a
// batch.
struct Category {
  std::string model;
  Shape shape;

  auto operator<=>(const Category&) const = default;

  std::string label() const;
};

// Batching/scheduling state is additionally split by real-time flag so that
// best-effort streams never share a window with deadline-bearing ones.
struct CategoryKey {
  Category category;
  bool real_time = true;

  auto operator<=>(const CategoryKey&) const = default;

  std::string label() const;
};

struct Request {
  std::string id;
  Category category;
  bool real_time = true;
  DurUs period_us = 0;
  DurUs deadline_us = 0;  // relative deadline, applies to every frame
  int num_frames = 0;
  TimeUs first_release_us = 0;

  bool operator==(const Request&) const = default;

  CategoryKey key() const { return CategoryKey{category, real_time}; }

  void validate() const;  // throws InvalidConfig
};

struct Frame {
  std::string request_id;
  int seq = 0;
  TimeUs release_us = 0;
  TimeUs deadline_us = 0;  // absolute
};

// One dispatchable batch. Frames share the instance's release and deadline;
// per-frame deadlines are retained inside `frames` for miss accounting.
struct JobInstance {
  std::uint64_t id = 0;
  CategoryKey key;
  std::vector<Frame> frames;
  TimeUs release_us = 0;
  DurUs relative_deadline_us = 0;
  DurUs wcet_us = 0;
  bool downgraded = false;

  int batch() const { return static_cast<int>(frames.size()); }
  TimeUs deadline_us() const { return release_us + relative_deadline_us; }
};

// Per-frame outcome. finish = release + batch_wait + queue_wait + exec.
struct LatencyRecord {
  std::string request_id;
  int seq = 0;
  bool real_time = true;
  TimeUs release_us = 0;
  TimeUs deadline_us = 0;   // absolute
  DurUs batch_wait_us = 0;  // release -> entered a batch
  DurUs queue_wait_us = 0;  // batch formed -> execution start
  DurUs exec_us = 0;
  TimeUs finish_us = 0;
  bool missed = false;
  DurUs overdue_us = 0;

  TimeUs batch_release_us() const { return release_us + batch_wait_us; }
  TimeUs start_us() const { return batch_release_us() + queue_wait_us; }
  std::string frame_id() const;
};

// Expands a request into its periodic frame releases.
std::vector<Frame> frame_stream(const Request& request);

}  // namespace deeprt
