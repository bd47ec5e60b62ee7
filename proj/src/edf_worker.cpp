#include "deeprt/edf_worker.hpp"

#include <algorithm>
#include <random>

#include "deeprt/error.hpp"

namespace deeprt {

JobOrderKey order_key(const JobInstance& job) {
  return JobOrderKey{job.deadline_us(), job.release_us, job.key, job.id};
}

void ExecutionQueue::push(JobInstance job) {
  jobs_.emplace(order_key(job), std::move(job));
}

const JobInstance& ExecutionQueue::peek() const {
  if (jobs_.empty()) throw SchedError(ErrorKind::EmptyQueue, "peek");
  return jobs_.begin()->second;
}

JobInstance ExecutionQueue::pop_earliest() {
  if (jobs_.empty()) throw SchedError(ErrorKind::EmptyQueue, "pop");
  auto it = jobs_.begin();
  JobInstance job = std::move(it->second);
  jobs_.erase(it);
  return job;
}

std::vector<const JobInstance*> ExecutionQueue::snapshot() const {
  std::vector<const JobInstance*> out;
  out.reserve(jobs_.size());
  for (const auto& [key, job] : jobs_) out.push_back(&job);
  return out;
}

ExecModel exact_exec_model() {
  return [](const JobInstance& job, std::uint64_t) { return job.wcet_us; };
}

ExecModel jitter_exec_model(DurUs max_extra_us, std::uint64_t seed) {
  return [max_extra_us, seed](const JobInstance& job,
                              std::uint64_t dispatch_index) {
    // Seeded per dispatch so execution times do not depend on call order.
    std::mt19937_64 rng(seed ^ (dispatch_index * 0x9e3779b97f4a7c15ull));
    std::uniform_int_distribution<DurUs> extra(0, max_extra_us);
    return job.wcet_us + extra(rng);
  };
}

ExecModel inject_overruns(ExecModel base, std::uint64_t start_index, int count,
                          DurUs extra_us) {
  return [base = std::move(base), start_index, count, extra_us](
             const JobInstance& job, std::uint64_t dispatch_index) {
    DurUs t = base(job, dispatch_index);
    if (dispatch_index >= start_index &&
        dispatch_index < start_index + static_cast<std::uint64_t>(count))
      t += extra_us;
    return t;
  };
}

DurUs detect_overrun(const CompletionRecord& record) {
  return std::max<DurUs>(0, record.actual_exec_us - record.profiled_wcet_us);
}

const Worker::InFlight& Worker::current() const {
  if (!current_) throw SchedError(ErrorKind::NotIdle, "worker is idle");
  return *current_;
}

CompletionRecord Worker::start(const JobInstance& job, TimeUs now,
                               const ExecModel& exec_model,
                               std::uint64_t dispatch_index) {
  if (current_)
    throw SchedError(ErrorKind::WorkerBusy,
                     "job " + std::to_string(current_->job.id) +
                         " still in flight");
  DurUs actual = exec_model(job, dispatch_index);

  CompletionRecord rec;
  rec.job_id = job.id;
  rec.key = job.key;
  rec.downgraded = job.downgraded;
  rec.batch = job.batch();
  rec.start_us = now;
  rec.finish_us = now + actual;
  rec.actual_exec_us = actual;
  rec.profiled_wcet_us = job.wcet_us;
  rec.frames.reserve(job.frames.size());
  for (const Frame& f : job.frames) {
    LatencyRecord lr;
    lr.request_id = f.request_id;
    lr.seq = f.seq;
    lr.real_time = job.key.real_time;
    lr.release_us = f.release_us;
    lr.deadline_us = f.deadline_us;
    lr.batch_wait_us = job.release_us - f.release_us;
    lr.queue_wait_us = now - job.release_us;
    lr.exec_us = actual;
    lr.finish_us = rec.finish_us;
    lr.missed = rec.finish_us > f.deadline_us;
    lr.overdue_us = lr.missed ? rec.finish_us - f.deadline_us : 0;
    rec.frames.push_back(std::move(lr));
  }

  current_ = InFlight{job, now, rec.finish_us};
  return rec;
}

void Worker::complete(TimeUs now) {
  if (!current_) throw SchedError(ErrorKind::NotIdle, "nothing in flight");
  if (now != current_->finish_us)
    throw SchedError(ErrorKind::WorkerBusy,
                     "completion at " + std::to_string(now) +
                         " but job finishes at " +
                         std::to_string(current_->finish_us));
  current_.reset();
}

}  // namespace deeprt
