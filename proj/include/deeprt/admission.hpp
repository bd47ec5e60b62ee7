#pragma once

#include <deque>
#include <optional>
#include <queue>
#include <string>
#include <utility>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "deeprt/core.hpp"
#include "deeprt/disbatcher.hpp"
#include "deeprt/profile.hpp"

namespace deeprt {

using Rational = boost::multiprecision::cpp_rational;

// ---------------------------------------------------------------------------
// System snapshot: everything admission needs, decoupled from the live
// engine so the test can be replayed and unit-tested in isolation.

struct RequestState {
  Request request;
  int remaining_frames = 0;     // releases not yet emitted
  TimeUs next_release_us = 0;   // release instant of the next frame

  bool operator==(const RequestState&) const = default;
};

struct WindowView {
  CategoryKey key;
  DurUs window_us = 0;
  TimeUs next_joint_us = 0;
  DurUs min_deadline_us = 0;
  std::vector<std::pair<std::string, TimeUs>> pending;  // (request, release)

  bool operator==(const WindowView&) const = default;
};

struct QueuedJobView {
  std::uint64_t job_id = 0;
  CategoryKey key;
  TimeUs release_us = 0;
  TimeUs deadline_us = 0;  // absolute
  DurUs wcet_us = 0;

  bool operator==(const QueuedJobView&) const = default;
};

struct InFlightView {
  std::uint64_t job_id = 0;
  CategoryKey key;
  TimeUs finish_us = 0;
  TimeUs deadline_us = 0;  // absolute

  bool operator==(const InFlightView&) const = default;
};

struct SystemSnapshot {
  TimeUs now = 0;
  std::vector<WindowView> windows;
  std::vector<QueuedJobView> queued;  // dispatch order
  std::optional<InFlightView> in_flight;
  std::vector<RequestState> requests;  // active requests only
  std::uint64_t next_job_id = 0;

  bool operator==(const SystemSnapshot&) const = default;
};

// ---------------------------------------------------------------------------
// Phase 1: utilization filter. Per category, the expected frames per window
// n_g = floor(sum of window/period over member requests); the category's
// synthetic task utilization is wcet(n_g) / window. The sum over categories
// must stay at or below 1. Exact rational arithmetic, no float drift.

struct UtilizationEntry {
  CategoryKey key;
  DurUs window_us = 0;
  long long frames_per_window = 0;  // n_g
  DurUs wcet_us = 0;                // wcet at batch n_g
  Rational utilization;
};

struct UtilizationReport {
  std::vector<UtilizationEntry> entries;
  Rational total;
  bool pass = false;
  std::string reason;

  double total_as_double() const;
};

UtilizationReport phase1_utilization(const SystemSnapshot& snapshot,
                                     const Request& pending,
                                     const ExecutionProfile& profile,
                                     const NonRtConfig& nonrt);

// ---------------------------------------------------------------------------
// Phase 2 inputs: replay the batching rules over every remaining frame to
// predict the exact job instances the disbatcher will emit.

struct PseudoJob {
  TimeUs release_us = 0;
  TimeUs deadline_us = 0;  // absolute
  DurUs wcet_us = 0;
  CategoryKey key;
  std::vector<std::pair<std::string, TimeUs>> frames;  // (request, release)

  int batch() const { return static_cast<int>(frames.size()); }
};

// Future batch jobs under window batching, in creation order (joint time,
// then category). pending == nullptr replays only the current population.
std::vector<PseudoJob> generate_pseudo_jobs(const SystemSnapshot& snapshot,
                                            const Request* pending,
                                            const ExecutionProfile& profile,
                                            const NonRtConfig& nonrt);

// Future per-frame jobs (batch 1) for sequential EDF admission.
std::vector<PseudoJob> generate_frame_jobs(const SystemSnapshot& snapshot,
                                           const Request* pending,
                                           const ExecutionProfile& profile);

// ---------------------------------------------------------------------------
// EDF imitator: fast-forwards a non-preemptive, non-idling
// earliest-deadline-first worker over the predicted jobs, without simulating
// idle time. Jobs are executed back to back; when the queue runs dry, time
// jumps to the next release (all jobs sharing that instant become ready
// together). A deadline miss anywhere makes the plan unschedulable.
//
// The run is incremental: feed() accepts future jobs in release order and
// executes as far as the fed horizon allows, so a run may be split at any
// point, carried, and resumed with identical results.

struct ImitatorJob {
  TimeUs release_us = 0;
  TimeUs deadline_us = 0;  // absolute
  DurUs wcet_us = 0;
  CategoryKey key;
  std::uint64_t tiebreak = 0;  // creation id; orders equal-deadline jobs
};

class EdfImitator {
 public:
  explicit EdfImitator(TimeUs start_us) : t_(start_us) {}

  // Account for a non-preemptible job already running: time advances to its
  // finish first. Call before seeding or feeding.
  void set_in_flight(TimeUs finish_us, TimeUs deadline_us);

  // Jobs already sitting in the execution queue (released in the past).
  // Call before the first feed. Returns the job's result index.
  std::size_t add_queued(const ImitatorJob& job);

  // Future releases, non-decreasing in release_us. Returns result index.
  std::size_t feed(const ImitatorJob& job);

  // No more input; drain the queue.
  void finish();

  bool failed() const { return failed_; }
  bool finished() const { return finished_; }
  bool schedulable() const { return finished_ && !failed_; }
  TimeUs time_us() const { return t_; }
  // Predicted finish per input index; -1 where execution never got there
  // (only possible after a failure).
  const std::vector<TimeUs>& finish_times() const { return finishes_; }

 private:
  struct Entry {
    TimeUs deadline_us;
    TimeUs release_us;
    CategoryKey key;
    std::uint64_t tiebreak;
    DurUs wcet_us;
    std::size_t index;

    bool operator>(const Entry& o) const {
      return std::tie(deadline_us, release_us, key, tiebreak) >
             std::tie(o.deadline_us, o.release_us, o.key, o.tiebreak);
    }
  };

  void step(bool final);

  TimeUs t_;
  bool started_ = false;
  bool finished_ = false;
  bool failed_ = false;
  TimeUs last_fed_release_ = 0;
  bool any_fed_ = false;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<Entry>> queue_;
  std::deque<Entry> pending_;
  std::vector<TimeUs> finishes_;
};

// Convenience one-shot wrapper. Finish times come back in input order:
// queued seeds first, then future jobs.
struct ImitatorResult {
  bool schedulable = false;
  std::vector<TimeUs> finish_us;
  TimeUs end_us = 0;
};

ImitatorResult run_imitator(TimeUs start_us,
                            const std::optional<InFlightView>& in_flight,
                            const std::vector<QueuedJobView>& queued,
                            const std::vector<ImitatorJob>& future);

// ---------------------------------------------------------------------------
// Full admission test.

struct AdmissionOptions {
  NonRtConfig nonrt{};
  // Run the replay test even when the utilization filter already rejected,
  // to audit the filter's soundness.
  bool evaluate_phase2_on_phase1_reject = false;
  // Per-frame (sequential EDF) admission instead of window batching.
  bool frame_level = false;
};

struct AdmissionDecision {
  bool admitted = false;
  int rejected_phase = 0;  // 0 when admitted, else 1 or 2
  std::string reason;
  UtilizationReport utilization;
  std::optional<bool> phase2_would_accept;

  // Predictions from the replay (valid when admitted).
  std::vector<std::pair<std::uint64_t, TimeUs>> queued_finish_us;
  std::vector<TimeUs> future_finish_us;  // pseudo-job creation order
  std::optional<TimeUs> in_flight_finish_us;
  DurUs predicted_max_latency_us = -1;  // over the pending request's frames
  std::size_t pseudo_job_count = 0;
};

AdmissionDecision admit(const SystemSnapshot& snapshot, const Request& pending,
                        const ExecutionProfile& profile,
                        const AdmissionOptions& options = {});

}  // namespace deeprt
