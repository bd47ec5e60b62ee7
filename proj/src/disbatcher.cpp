#include "deeprt/disbatcher.hpp"

#include <algorithm>
#include <cassert>

#include "deeprt/error.hpp"

namespace deeprt {

DurUs window_length(const std::vector<DurUs>& deadlines) {
  if (deadlines.empty())
    throw SchedError(ErrorKind::EmptyCategory,
                     "window length over no deadlines");
  DurUs min = *std::min_element(deadlines.begin(), deadlines.end());
  if (min < 2)
    throw SchedError(ErrorKind::DegenerateDeadline,
                     "deadline " + std::to_string(min) +
                         "us leaves a zero-length window");
  return min / 2;
}

Request effective_request(const Request& request, const NonRtConfig& nonrt) {
  if (request.real_time) return request;
  Request r = request;
  r.period_us = std::max(r.period_us, nonrt.min_period_us);
  return r;
}

void Disbatcher::register_request(const Request& request, TimeUs now) {
  request.validate();
  if (request_keys_.count(request.id))
    throw SchedError(ErrorKind::DuplicateRequest, request.id);

  CategoryKey key = request.key();
  auto it = states_.find(key);
  if (it == states_.end()) {
    CategoryWindowState st;
    st.key = key;
    st.window_us = key.real_time ? window_length({request.deadline_us})
                                 : nonrt_.window_us;
    st.min_deadline_us = request.deadline_us;
    st.next_joint_us = now + st.window_us;
    st.members.insert(request.id);
    states_.emplace(key, std::move(st));
  } else {
    CategoryWindowState& st = it->second;
    st.members.insert(request.id);
    st.min_deadline_us = std::min(st.min_deadline_us, request.deadline_us);
    if (key.real_time) {
      DurUs w = window_length({st.min_deadline_us});
      if (w < st.window_us) {
        // Shrink-only. The joint may move earlier but never later: frames
        // already pending were promised the old joint, and pushing it out
        // can land them past their own deadlines.
        st.window_us = w;
        st.next_joint_us = std::min(st.next_joint_us, now + w);
      }
    }
  }
  request_keys_.emplace(request.id, key);
}

void Disbatcher::enqueue_frame(const Frame& frame, TimeUs now) {
  auto kit = request_keys_.find(frame.request_id);
  if (kit == request_keys_.end())
    throw SchedError(ErrorKind::UnknownCategory,
                     "frame from unregistered request " + frame.request_id);
  assert(frame.release_us == now);
  (void)now;
  states_.at(kit->second).pending.push_back(frame);
}

std::vector<JobInstance> Disbatcher::make_jobs(CategoryWindowState& st,
                                               TimeUs release,
                                               DurUs relative_deadline,
                                               const ExecutionProfile& profile,
                                               const Shape& lookup_shape,
                                               std::uint64_t& next_job_id) {
  std::vector<JobInstance> jobs;
  Category lookup{st.key.category.model, lookup_shape};
  int cap = profile.max_batch(lookup);
  std::size_t taken = 0;
  while (taken < st.pending.size()) {
    std::size_t count =
        std::min<std::size_t>(static_cast<std::size_t>(cap),
                              st.pending.size() - taken);
    JobInstance job;
    job.id = next_job_id++;
    job.key = st.key;
    job.frames.assign(st.pending.begin() + static_cast<std::ptrdiff_t>(taken),
                      st.pending.begin() +
                          static_cast<std::ptrdiff_t>(taken + count));
    job.release_us = release;
    job.relative_deadline_us = relative_deadline;
    job.wcet_us = profile.wcet_us(lookup, static_cast<int>(count));
    job.downgraded = lookup_shape != st.key.category.shape;
    jobs.push_back(std::move(job));
    taken += count;
  }
  st.pending.clear();
  return jobs;
}

std::vector<JobInstance> Disbatcher::close_window(
    const CategoryKey& key, TimeUs joint, const ExecutionProfile& profile,
    const Shape& lookup_shape, std::uint64_t& next_job_id) {
  auto it = states_.find(key);
  if (it == states_.end())
    throw SchedError(ErrorKind::UnknownCategory, key.label());
  CategoryWindowState& st = it->second;
  assert(joint == st.next_joint_us);
  st.next_joint_us = joint + st.window_us;
  if (st.pending.empty()) return {};
  return make_jobs(st, joint, st.window_us, profile, lookup_shape,
                   next_job_id);
}

std::vector<JobInstance> Disbatcher::early_dispatch(
    const CategoryKey& key, TimeUs now, const ExecutionProfile& profile,
    const Shape& lookup_shape, std::uint64_t& next_job_id, bool worker_idle,
    bool queue_empty) {
  if (!worker_idle || !queue_empty)
    throw SchedError(ErrorKind::NotIdle,
                     "early dispatch needs an idle worker and empty queue");
  auto it = states_.find(key);
  if (it == states_.end())
    throw SchedError(ErrorKind::UnknownCategory, key.label());
  CategoryWindowState& st = it->second;
  if (st.pending.empty()) return {};
  // Released now, but with the deadline the joint would have assigned, so
  // pulling work forward never tightens it.
  DurUs relative = st.next_joint_us + st.window_us - now;
  return make_jobs(st, now, relative, profile, lookup_shape, next_job_id);
}

const CategoryWindowState& Disbatcher::state(const CategoryKey& key) const {
  auto it = states_.find(key);
  if (it == states_.end())
    throw SchedError(ErrorKind::UnknownCategory, key.label());
  return it->second;
}

const CategoryKey& Disbatcher::key_for_request(
    const std::string& request_id) const {
  auto it = request_keys_.find(request_id);
  if (it == request_keys_.end())
    throw SchedError(ErrorKind::UnknownCategory,
                     "unregistered request " + request_id);
  return it->second;
}

}  // namespace deeprt
