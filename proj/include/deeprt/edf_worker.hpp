#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <tuple>
#include <vector>

#include "deeprt/core.hpp"

namespace deeprt {

// Total order for dispatch: earliest absolute deadline first, then earliest
// release, then category, then creation id. Everything after the deadline
// exists only to make simulation runs reproducible.
struct JobOrderKey {
  TimeUs deadline_us = 0;
  TimeUs release_us = 0;
  CategoryKey key;
  std::uint64_t id = 0;

  auto operator<=>(const JobOrderKey&) const = default;
};

JobOrderKey order_key(const JobInstance& job);

class ExecutionQueue {
 public:
  void push(JobInstance job);
  const JobInstance& peek() const;  // throws EmptyQueue
  JobInstance pop_earliest();       // throws EmptyQueue
  bool empty() const { return jobs_.empty(); }
  std::size_t size() const { return jobs_.size(); }

  // Queue contents in dispatch order, for admission snapshots.
  std::vector<const JobInstance*> snapshot() const;

 private:
  std::map<JobOrderKey, JobInstance> jobs_;
};

// Maps a job and its global dispatch index to the simulated execution time.
using ExecModel =
    std::function<DurUs(const JobInstance& job, std::uint64_t dispatch_index)>;

ExecModel exact_exec_model();
// Adds uniform extra time in [0, max_extra_us], deterministically per
// dispatch index for a given seed.
ExecModel jitter_exec_model(DurUs max_extra_us, std::uint64_t seed);
// Wraps a model so dispatches [start_index, start_index + count) run
// extra_us longer: a burst of overruns.
ExecModel inject_overruns(ExecModel base, std::uint64_t start_index, int count,
                          DurUs extra_us);

struct CompletionRecord {
  std::uint64_t job_id = 0;
  CategoryKey key;
  bool downgraded = false;
  int batch = 0;
  TimeUs start_us = 0;
  TimeUs finish_us = 0;
  DurUs actual_exec_us = 0;
  DurUs profiled_wcet_us = 0;
  std::vector<LatencyRecord> frames;
};

// Execution beyond the profiled bound; zero when the job ran on time.
DurUs detect_overrun(const CompletionRecord& record);

// One non-preemptive executor. start() commits the job and precomputes the
// whole completion record (simulated time is deterministic given the exec
// model); complete() frees the worker once the finish instant is reached.
class Worker {
 public:
  struct InFlight {
    JobInstance job;
    TimeUs start_us = 0;
    TimeUs finish_us = 0;
  };

  bool idle() const { return !current_.has_value(); }
  const InFlight& current() const;  // throws NotIdle when idle

  CompletionRecord start(const JobInstance& job, TimeUs now,
                         const ExecModel& exec_model,
                         std::uint64_t dispatch_index);  // throws WorkerBusy
  void complete(TimeUs now);

 private:
  std::optional<InFlight> current_;
};

}  // namespace deeprt
