#include "deeprt/core.hpp"

#include "deeprt/error.hpp"

namespace deeprt {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::UnknownCategory: return "unknown category";
    case ErrorKind::BatchTooLarge: return "batch too large";
    case ErrorKind::DuplicateCategory: return "duplicate category";
    case ErrorKind::DuplicateRequest: return "duplicate request";
    case ErrorKind::ParseError: return "parse error";
    case ErrorKind::MonotonicityViolation: return "monotonicity violation";
    case ErrorKind::EmptyCategory: return "empty category";
    case ErrorKind::DegenerateDeadline: return "degenerate deadline";
    case ErrorKind::NotIdle: return "not idle";
    case ErrorKind::EmptyQueue: return "empty queue";
    case ErrorKind::WorkerBusy: return "worker busy";
    case ErrorKind::UnsortedInput: return "unsorted input";
    case ErrorKind::InvalidConfig: return "invalid config";
  }
  return "unknown error";
}

std::string Shape::label() const {
  return std::to_string(channels) + "x" + std::to_string(height) + "x" +
         std::to_string(width);
}

std::string Category::label() const { return model + ":" + shape.label(); }

std::string CategoryKey::label() const {
  return category.label() + (real_time ? "" : ":nonrt");
}

void Request::validate() const {
  if (id.empty())
    throw SchedError(ErrorKind::InvalidConfig, "request id is empty");
  if (category.model.empty() || !category.shape.valid())
    throw SchedError(ErrorKind::InvalidConfig,
                     "request " + id + " has an invalid category");
  if (period_us <= 0)
    throw SchedError(ErrorKind::InvalidConfig,
                     "request " + id + " has non-positive period");
  if (deadline_us <= 0)
    throw SchedError(ErrorKind::InvalidConfig,
                     "request " + id + " has non-positive deadline");
  if (num_frames < 1)
    throw SchedError(ErrorKind::InvalidConfig,
                     "request " + id + " has no frames");
  if (first_release_us < 0)
    throw SchedError(ErrorKind::InvalidConfig,
                     "request " + id + " has negative first release");
}

std::string LatencyRecord::frame_id() const {
  return request_id + "#" + std::to_string(seq);
}

std::vector<Frame> frame_stream(const Request& request) {
  request.validate();
  std::vector<Frame> frames;
  frames.reserve(static_cast<std::size_t>(request.num_frames));
  for (int k = 0; k < request.num_frames; ++k) {
    TimeUs release = request.first_release_us + DurUs{k} * request.period_us;
    frames.push_back(
        Frame{request.id, k, release, release + request.deadline_us});
  }
  return frames;
}

}  // namespace deeprt
