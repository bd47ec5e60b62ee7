#include "deeprt/engine.hpp"

#include <algorithm>
#include <cassert>
#include <set>
#include <stdexcept>

#include "deeprt/error.hpp"

namespace deeprt {

namespace {

// Event ordering at one instant decides who sees what. Completions run
// first, so the freed worker only picks among jobs queued strictly earlier;
// arrivals are admitted before this instant's joints and releases touch the
// state; joints close before frames land, so a frame released exactly at a
// joint belongs to the new window. The payload tiebreaks (category for
// joints, request for the rest) keep equal-time processing deterministic.
enum class EvKind { Complete = 0, Arrival = 1, Joint = 2, FrameRelease = 3 };

struct Event {
  TimeUs time = 0;
  EvKind kind = EvKind::Complete;
  CategoryKey key;         // Joint
  std::string request_id;  // Arrival, FrameRelease
  TimeUs joint_us = 0;     // Joint validity stamp
  int seq = 0;             // FrameRelease
  std::uint64_t serial = 0;

  bool operator<(const Event& o) const {
    return std::tie(time, kind, key, request_id, seq, serial) <
           std::tie(o.time, o.kind, o.key, o.request_id, o.seq, o.serial);
  }
};

struct ReqState {
  Request original;
  Request eff;  // best-effort period floor applied
  int next_seq = 0;
  TimeUs next_release_us = 0;

  int remaining() const { return eff.num_frames - next_seq; }
};

class Engine {
 public:
  Engine(const std::vector<Request>& trace, const ExecutionProfile& profile,
         const EngineOptions& options)
      : trace_(trace),
        profile_(profile),
        opts_(options),
        disb_(options.nonrt),
        adapt_(profile),
        exec_model_(options.exec_model ? options.exec_model
                                       : exact_exec_model()) {}

  EngineResult run();

 private:
  bool window_mode() const {
    return opts_.mode == EngineOptions::Mode::WindowBatching;
  }

  void push_event(Event e) {
    e.serial = next_serial_++;
    events_.insert(std::move(e));
  }

  void on_complete(TimeUs t);
  void on_arrival(TimeUs t, const Request& request);
  void on_joint(const CategoryKey& key, TimeUs joint);
  void on_frame(TimeUs t, const std::string& request_id);

  void register_request(TimeUs t, const Request& request);
  void enqueue_jobs(std::vector<JobInstance> jobs, bool early);
  void dispatch(TimeUs t);
  void try_early_dispatch(TimeUs t);
  Shape shape_for(const CategoryKey& key) const;
  void schedule_joint_chain(const CategoryKey& key);
  bool category_live(const CategoryWindowState& st) const;
  SystemSnapshot capture(TimeUs t) const;

  const std::vector<Request>& trace_;
  const ExecutionProfile& profile_;
  const EngineOptions& opts_;

  std::set<Event> events_;
  std::uint64_t next_serial_ = 0;

  Disbatcher disb_;
  ExecutionQueue queue_;
  Worker worker_;
  AdaptationModule adapt_;
  ExecModel exec_model_;

  std::map<std::string, ReqState> requests_;
  std::uint64_t next_job_id_ = 0;
  std::uint64_t dispatch_counter_ = 0;
  CompletionRecord in_flight_record_;

  int consecutive_rejections_ = 0;
  bool offering_stopped_ = false;

  EngineResult result_;
};

Shape Engine::shape_for(const CategoryKey& key) const {
  if (window_mode() && opts_.adaptation && adapt_.known(key))
    return adapt_.effective_shape(key);
  return key.category.shape;
}

SystemSnapshot Engine::capture(TimeUs t) const {
  SystemSnapshot snap;
  snap.now = t;
  for (const auto& [key, st] : disb_.states()) {
    WindowView wv;
    wv.key = key;
    wv.window_us = st.window_us;
    wv.next_joint_us = st.next_joint_us;
    wv.min_deadline_us = st.min_deadline_us;
    for (const Frame& f : st.pending)
      wv.pending.emplace_back(f.request_id, f.release_us);
    snap.windows.push_back(std::move(wv));
  }
  for (const JobInstance* job : queue_.snapshot())
    snap.queued.push_back(QueuedJobView{job->id, job->key, job->release_us,
                                        job->deadline_us(), job->wcet_us});
  if (!worker_.idle()) {
    const Worker::InFlight& fl = worker_.current();
    snap.in_flight = InFlightView{fl.job.id, fl.job.key, fl.finish_us,
                                  fl.job.deadline_us()};
  }
  for (const auto& [id, rs] : requests_)
    if (rs.remaining() > 0)
      snap.requests.push_back(
          RequestState{rs.original, rs.remaining(), rs.next_release_us});
  snap.next_job_id = next_job_id_;
  return snap;
}

void Engine::enqueue_jobs(std::vector<JobInstance> jobs, bool early) {
  for (JobInstance& job : jobs) {
    result_.creation_log.push_back(JobCreationEntry{
        job.id, job.key, job.release_us, job.deadline_us(), job.batch(),
        job.downgraded, early});
    queue_.push(std::move(job));
  }
}

void Engine::dispatch(TimeUs t) {
  JobInstance job = queue_.pop_earliest();
  in_flight_record_ = worker_.start(job, t, exec_model_, dispatch_counter_++);
  push_event(Event{.time = in_flight_record_.finish_us,
                   .kind = EvKind::Complete});
}

void Engine::try_early_dispatch(TimeUs t) {
  // Soonest-closing window first; category order breaks ties.
  const CategoryWindowState* best = nullptr;
  for (const auto& [key, st] : disb_.states()) {
    if (st.pending.empty()) continue;
    if (!best || std::tie(st.next_joint_us, key) <
                     std::tie(best->next_joint_us, best->key))
      best = &st;
  }
  if (!best) return;
  std::vector<JobInstance> jobs =
      disb_.early_dispatch(best->key, t, profile_, shape_for(best->key),
                           next_job_id_, true, true);
  enqueue_jobs(std::move(jobs), true);
  if (!queue_.empty()) dispatch(t);
}

bool Engine::category_live(const CategoryWindowState& st) const {
  if (!st.pending.empty()) return true;
  for (const std::string& id : st.members) {
    auto it = requests_.find(id);
    if (it != requests_.end() && it->second.remaining() > 0) return true;
  }
  return false;
}

void Engine::schedule_joint_chain(const CategoryKey& key) {
  const CategoryWindowState& st = disb_.state(key);
  push_event(Event{.time = st.next_joint_us,
                   .kind = EvKind::Joint,
                   .key = key,
                   .joint_us = st.next_joint_us});
}

void Engine::register_request(TimeUs t, const Request& request) {
  Request eff = effective_request(request, opts_.nonrt);
  ReqState rs;
  rs.original = request;
  rs.eff = eff;
  rs.next_release_us = eff.first_release_us;
  requests_.emplace(request.id, std::move(rs));
  if (window_mode()) {
    disb_.register_request(eff, t);
    adapt_.ensure(eff.key());
    schedule_joint_chain(eff.key());
  }
  push_event(Event{.time = eff.first_release_us,
                   .kind = EvKind::FrameRelease,
                   .request_id = request.id});
}

void Engine::on_arrival(TimeUs t, const Request& request) {
  if (offering_stopped_) {
    ++result_.unoffered;
    return;
  }
  ++result_.offered;

  AdmissionOutcome outcome;
  outcome.request_id = request.id;
  outcome.at_us = t;
  outcome.jobs_created_before = result_.creation_log.size();
  if (opts_.admit_all) {
    outcome.decision.admitted = true;
    outcome.decision.reason = "replayed";
    outcome.decision.utilization.pass = true;
  } else {
    AdmissionOptions aopts;
    aopts.nonrt = opts_.nonrt;
    aopts.evaluate_phase2_on_phase1_reject =
        opts_.evaluate_phase2_on_phase1_reject;
    aopts.frame_level = !window_mode();
    outcome.decision = admit(capture(t), request, profile_, aopts);
  }

  if (outcome.decision.admitted) {
    ++result_.admitted;
    consecutive_rejections_ = 0;
    register_request(t, request);
  } else {
    if (outcome.decision.rejected_phase == 1)
      ++result_.rejected_phase1;
    else
      ++result_.rejected_phase2;
    ++consecutive_rejections_;
    if (opts_.stop_after_rejections > 0 &&
        consecutive_rejections_ >= opts_.stop_after_rejections)
      offering_stopped_ = true;
  }
  result_.admissions.push_back(std::move(outcome));
}

void Engine::on_joint(const CategoryKey& key, TimeUs joint) {
  const CategoryWindowState& st = disb_.state(key);
  if (st.next_joint_us != joint) return;  // superseded by a window restart
  std::vector<JobInstance> jobs =
      disb_.close_window(key, joint, profile_, shape_for(key), next_job_id_);
  enqueue_jobs(std::move(jobs), false);
  if (category_live(st)) schedule_joint_chain(key);
}

void Engine::on_frame(TimeUs t, const std::string& request_id) {
  ReqState& rs = requests_.at(request_id);
  Frame f{request_id, rs.next_seq, t, t + rs.eff.deadline_us};
  ++rs.next_seq;
  ++result_.frames_released;
  if (rs.next_seq < rs.eff.num_frames) {
    rs.next_release_us += rs.eff.period_us;
    push_event(Event{.time = rs.next_release_us,
                     .kind = EvKind::FrameRelease,
                     .request_id = request_id,
                     .seq = rs.next_seq});
  }
  if (window_mode()) {
    disb_.enqueue_frame(f, t);
  } else {
    JobInstance job;
    job.id = next_job_id_++;
    job.key = rs.eff.key();
    job.release_us = t;
    job.relative_deadline_us = rs.eff.deadline_us;
    job.wcet_us = profile_.wcet_us(rs.eff.category, 1);
    job.frames.push_back(std::move(f));
    std::vector<JobInstance> one;
    one.push_back(std::move(job));
    enqueue_jobs(std::move(one), false);
  }
}

void Engine::on_complete(TimeUs t) {
  CompletionRecord rec = in_flight_record_;
  worker_.complete(t);
  result_.frames_processed += static_cast<std::uint64_t>(rec.batch);
  for (const LatencyRecord& lr : rec.frames) result_.records.push_back(lr);

  if (window_mode() && opts_.adaptation) {
    // Delta against the full-shape budget: a downgraded batch that runs
    // cheaper than full resolution would have produces a saving.
    DurUs reference = rec.profiled_wcet_us;
    try {
      reference = profile_.wcet_us(rec.key.category, rec.batch);
    } catch (const SchedError&) {
      // No full-shape entry for this batch size; fall back to the job's own
      // budget (overruns still detected, savings not credited).
    }
    DurUs delta = rec.actual_exec_us - reference;
    AdaptAction action = adapt_.on_completion(rec.key, delta);
    if (action != AdaptAction::None || delta > 0)
      result_.adaptation_events.push_back(AdaptationEvent{
          t, rec.key, action, adapt_.state(rec.key).penalty_us});
  }
  result_.completions.push_back(std::move(rec));

  if (!queue_.empty()) dispatch(t);
}

EngineResult Engine::run() {
  std::set<std::string> seen;
  for (const Request& r : trace_) {
    r.validate();
    if (!seen.insert(r.id).second)
      throw SchedError(ErrorKind::DuplicateRequest, r.id);
    push_event(Event{.time = r.first_release_us,
                     .kind = EvKind::Arrival,
                     .request_id = r.id});
  }
  std::map<std::string, const Request*> by_id;
  for (const Request& r : trace_) by_id[r.id] = &r;

  while (!events_.empty()) {
    TimeUs t = events_.begin()->time;
    while (!events_.empty() && events_.begin()->time == t) {
      Event e = *events_.begin();
      events_.erase(events_.begin());
      switch (e.kind) {
        case EvKind::Complete:
          on_complete(t);
          break;
        case EvKind::Arrival:
          on_arrival(t, *by_id.at(e.request_id));
          break;
        case EvKind::Joint:
          on_joint(e.key, e.joint_us);
          break;
        case EvKind::FrameRelease:
          on_frame(t, e.request_id);
          break;
      }
    }
    // The instant is fully processed; an idle worker takes the earliest
    // deadline now, or pulls pending frames forward into the idle gap.
    if (worker_.idle() && !queue_.empty()) dispatch(t);
    if (worker_.idle() && queue_.empty() && opts_.early_dispatch &&
        window_mode())
      try_early_dispatch(t);
  }

  if (!worker_.idle() || !queue_.empty())
    throw std::logic_error("engine stopped with work outstanding");
  for (const auto& [key, st] : disb_.states())
    if (!st.pending.empty())
      throw std::logic_error("engine stopped with unbatched frames");
  if (result_.frames_released != result_.frames_processed)
    throw std::logic_error("released/processed frame counts diverge");

  for (const auto& [key, st] : disb_.states())
    if (adapt_.known(key)) result_.final_penalties[key] = adapt_.state(key);
  return std::move(result_);
}

}  // namespace

EngineResult run_engine(const std::vector<Request>& trace,
                        const ExecutionProfile& profile,
                        const EngineOptions& options) {
  return Engine(trace, profile, options).run();
}

}  // namespace deeprt
