#pragma once

#include <map>
#include <set>
#include <vector>

#include "deeprt/core.hpp"
#include "deeprt/profile.hpp"

namespace deeprt {

// Window length for a set of relative deadlines: half the tightest one,
// floored. Jobs batched on such windows inherit a deadline of one window
// past the closing joint, which is never later than any member frame's own
// deadline; meeting the job deadline therefore meets every frame deadline.
DurUs window_length(const std::vector<DurUs>& deadlines);

// Best-effort streams get a fixed coarse window and a floor on how often
// their frames are taken, so they add bounded load.
struct NonRtConfig {
  DurUs window_us = 1'000'000;
  DurUs min_period_us = 100'000;
};

// Applies the best-effort period floor; real-time requests pass through.
Request effective_request(const Request& request, const NonRtConfig& nonrt);

struct CategoryWindowState {
  CategoryKey key;
  DurUs window_us = 0;
  TimeUs next_joint_us = 0;
  DurUs min_deadline_us = 0;  // tightest member deadline (real-time only)
  std::vector<Frame> pending;
  std::set<std::string> members;
};

// Groups released frames into per-category recurrent time windows and turns
// each closing window into batch job instances.
class Disbatcher {
 public:
  explicit Disbatcher(NonRtConfig nonrt = {}) : nonrt_(nonrt) {}

  const NonRtConfig& nonrt_config() const { return nonrt_; }

  // Creates the category window on first sight. A tighter deadline shrinks
  // the window and restarts it at now; a looser one changes nothing.
  void register_request(const Request& request, TimeUs now);

  void enqueue_frame(const Frame& frame, TimeUs now);

  // Closes the window ending at state.next_joint_us and advances the joint.
  // Pending frames become jobs released at the joint with deadline one
  // window later; counts above the profiled max batch split into chunks in
  // release order. An empty window yields no jobs.
  std::vector<JobInstance> close_window(const CategoryKey& key, TimeUs joint,
                                        const ExecutionProfile& profile,
                                        const Shape& lookup_shape,
                                        std::uint64_t& next_job_id);

  // Idle-time dispatch: takes the pending frames immediately instead of
  // waiting for the joint. Only legal when the worker sits idle with an
  // empty queue. The job deadline is what joint batching would have given
  // (next joint plus one window); the joint itself stays in place.
  std::vector<JobInstance> early_dispatch(const CategoryKey& key, TimeUs now,
                                          const ExecutionProfile& profile,
                                          const Shape& lookup_shape,
                                          std::uint64_t& next_job_id,
                                          bool worker_idle, bool queue_empty);

  bool has(const CategoryKey& key) const { return states_.count(key) > 0; }
  const CategoryWindowState& state(const CategoryKey& key) const;
  const std::map<CategoryKey, CategoryWindowState>& states() const {
    return states_;
  }
  const CategoryKey& key_for_request(const std::string& request_id) const;

 private:
  std::vector<JobInstance> make_jobs(CategoryWindowState& st, TimeUs release,
                                     DurUs relative_deadline,
                                     const ExecutionProfile& profile,
                                     const Shape& lookup_shape,
                                     std::uint64_t& next_job_id);

  NonRtConfig nonrt_;
  std::map<CategoryKey, CategoryWindowState> states_;
  std::map<std::string, CategoryKey> request_keys_;
};

}  // namespace deeprt
