#include "deeprt/baselines.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <deque>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <stdexcept>

#include "deeprt/error.hpp"

namespace deeprt {

int aimd_step(int current_batch, DurUs observed_latency_us, DurUs slo_us,
              const AimdConfig& cfg) {
  if (current_batch < 1)
    throw SchedError(ErrorKind::InvalidConfig, "batch < 1");
  if (observed_latency_us <= slo_us) return current_batch + cfg.additive_step;
  int next = static_cast<int>(
      std::floor(static_cast<double>(current_batch) *
                 cfg.multiplicative_factor));
  return std::max(1, next);
}

namespace {

// Work is tracked in ticks, L per exclusively-served microsecond, with
// L = lcm(1..C) so the per-microsecond share L/c is always an integer and
// the whole simulation stays in exact integer arithmetic.
struct BatchJob {
  std::vector<Frame> frames;
  TimeUs formed_us = 0;
  TimeUs service_start_us = 0;
  DurUs wcet_us = 0;
  std::int64_t remaining_ticks = 0;
};

struct CategoryServer {
  Category category;
  std::deque<Frame> pending;
  std::deque<BatchJob> ready;
  std::optional<BatchJob> active;
  int aimd_batch = 1;
  DurUs slo_us = 0;  // tightest member deadline
  long long remaining_releases = 0;
  std::uint64_t pending_epoch = 0;  // invalidates delay timers
};

enum class BevKind { Release = 0, DelayTimer = 1, Review = 2 };

struct Bevent {
  TimeUs time = 0;
  BevKind kind = BevKind::Release;
  std::string request_id;  // Release
  int seq = 0;             // Release
  Category category;       // DelayTimer
  std::uint64_t epoch = 0;
  std::uint64_t version = 0;  // Review validity
  std::uint64_t serial = 0;

  bool operator<(const Bevent& o) const {
    return std::tie(time, kind, request_id, seq, category, serial) <
           std::tie(o.time, o.kind, o.request_id, o.seq, o.category,
                    o.serial);
  }
};

class BaselineSim {
 public:
  BaselineSim(const std::vector<Request>& trace,
              const ExecutionProfile& profile, const BaselineOptions& opts)
      : trace_(trace), profile_(profile), opts_(opts) {}

  EngineResult run();

 private:
  void push_event(Bevent e) {
    e.serial = next_serial_++;
    events_.insert(std::move(e));
  }

  // Moves simulated work forward to t. Between events the busy set is
  // constant, so each active job earns (t - last) * L / c ticks.
  void advance(TimeUs t) {
    if (t < last_t_) throw std::logic_error("time went backwards");
    DurUs dt = t - last_t_;
    last_t_ = t;
    if (dt == 0 || busy_ == 0) return;
    std::int64_t share = dt * (lcm_ / busy_);
    for (auto& [cat, srv] : servers_)
      if (srv.active) srv.active->remaining_ticks -= share;
  }

  void reschedule_review() {
    ++version_;
    std::optional<DurUs> dt_min;
    for (auto& [cat, srv] : servers_) {
      if (!srv.active) continue;
      // ceil(remaining * c / L) microseconds until this job can drain
      std::int64_t num = srv.active->remaining_ticks * busy_;
      DurUs dt = (num + lcm_ - 1) / lcm_;
      if (!dt_min || dt < *dt_min) dt_min = dt;
    }
    if (dt_min)
      push_event(Bevent{.time = last_t_ + std::max<DurUs>(1, *dt_min),
                        .kind = BevKind::Review,
                        .version = version_});
  }

  void start_service(CategoryServer& srv, TimeUs t) {
    assert(!srv.active && !srv.ready.empty());
    srv.active = std::move(srv.ready.front());
    srv.ready.pop_front();
    srv.active->service_start_us = t;
    DurUs actual = srv.active->wcet_us;
    if (opts_.exec_model) {
      JobInstance ji;
      ji.id = dispatch_counter_;
      ji.key = CategoryKey{srv.category, true};
      ji.frames = srv.active->frames;
      ji.release_us = srv.active->formed_us;
      ji.wcet_us = srv.active->wcet_us;
      actual = opts_.exec_model(ji, dispatch_counter_);
    }
    ++dispatch_counter_;
    srv.active->remaining_ticks = actual * lcm_;
    ++busy_;
  }

  void form_batch(CategoryServer& srv, TimeUs t, std::size_t count) {
    assert(count >= 1 && count <= srv.pending.size());
    BatchJob job;
    job.frames.assign(srv.pending.begin(),
                      srv.pending.begin() + static_cast<std::ptrdiff_t>(count));
    srv.pending.erase(srv.pending.begin(),
                      srv.pending.begin() + static_cast<std::ptrdiff_t>(count));
    ++srv.pending_epoch;
    job.formed_us = t;
    job.wcet_us = profile_.wcet_us(srv.category, static_cast<int>(count));
    srv.ready.push_back(std::move(job));
    if (!srv.active) start_service(srv, t);
  }

  // Policy hook: called when frames or server availability change.
  void try_form(CategoryServer& srv, TimeUs t) {
    switch (opts_.kind) {
      case BaselineOptions::Kind::Aimd: {
        // Dispatch only into a free server; batch adapts between 1 and the
        // profiled cap.
        if (srv.active || srv.pending.empty()) return;
        int cap = profile_.max_batch(srv.category);
        std::size_t count = std::min<std::size_t>(
            srv.pending.size(),
            static_cast<std::size_t>(std::min(srv.aimd_batch, cap)));
        form_batch(srv, t, count);
        break;
      }
      case BaselineOptions::Kind::FixedBatch: {
        while (srv.pending.size() >=
               static_cast<std::size_t>(opts_.batch_size))
          form_batch(srv, t, static_cast<std::size_t>(opts_.batch_size));
        // Nothing more will ever arrive: flush the partial tail.
        if (srv.remaining_releases == 0 && !srv.pending.empty())
          form_batch(srv, t, srv.pending.size());
        break;
      }
      case BaselineOptions::Kind::FixedBatchDelay: {
        while (srv.pending.size() >=
               static_cast<std::size_t>(opts_.batch_size))
          form_batch(srv, t, static_cast<std::size_t>(opts_.batch_size));
        if (!srv.pending.empty()) {
          // Timer anchored to the oldest waiting frame.
          push_event(Bevent{.time = srv.pending.front().release_us +
                                    opts_.max_delay_us,
                            .kind = BevKind::DelayTimer,
                            .category = srv.category,
                            .epoch = srv.pending_epoch});
        }
        break;
      }
    }
  }

  void complete_ready_jobs(TimeUs t);

  const std::vector<Request>& trace_;
  const ExecutionProfile& profile_;
  const BaselineOptions& opts_;

  std::set<Bevent> events_;
  std::uint64_t next_serial_ = 0;
  std::map<Category, CategoryServer> servers_;
  std::map<std::string, const Request*> by_id_;
  std::int64_t lcm_ = 1;
  int busy_ = 0;
  TimeUs last_t_ = 0;
  std::uint64_t version_ = 0;
  std::uint64_t job_counter_ = 0;
  std::uint64_t dispatch_counter_ = 0;

  EngineResult result_;
};

void BaselineSim::complete_ready_jobs(TimeUs t) {
  for (auto& [cat, srv] : servers_) {
    while (srv.active && srv.active->remaining_ticks <= 0) {
      BatchJob job = std::move(*srv.active);
      srv.active.reset();
      --busy_;

      CompletionRecord rec;
      rec.job_id = job_counter_++;
      rec.key = CategoryKey{cat, true};
      rec.batch = static_cast<int>(job.frames.size());
      rec.start_us = job.service_start_us;
      rec.finish_us = t;
      rec.actual_exec_us = t - job.service_start_us;
      rec.profiled_wcet_us = job.wcet_us;
      DurUs max_latency = 0;
      for (const Frame& f : job.frames) {
        LatencyRecord lr;
        lr.request_id = f.request_id;
        lr.seq = f.seq;
        lr.real_time = by_id_.at(f.request_id)->real_time;
        lr.release_us = f.release_us;
        lr.deadline_us = f.deadline_us;
        lr.batch_wait_us = job.formed_us - f.release_us;
        lr.queue_wait_us = job.service_start_us - job.formed_us;
        lr.exec_us = rec.actual_exec_us;
        lr.finish_us = t;
        lr.missed = t > f.deadline_us;
        lr.overdue_us = lr.missed ? t - f.deadline_us : 0;
        max_latency = std::max(max_latency, t - f.release_us);
        result_.records.push_back(lr);
        rec.frames.push_back(std::move(lr));
      }
      result_.frames_processed +=
          static_cast<std::uint64_t>(job.frames.size());
      result_.completions.push_back(std::move(rec));

      if (opts_.kind == BaselineOptions::Kind::Aimd)
        srv.aimd_batch = aimd_step(srv.aimd_batch, max_latency, srv.slo_us,
                                   opts_.aimd);
      if (!srv.ready.empty()) start_service(srv, t);
      try_form(srv, t);
    }
  }
}

EngineResult BaselineSim::run() {
  if (opts_.kind != BaselineOptions::Kind::Aimd && opts_.batch_size < 1)
    throw SchedError(ErrorKind::InvalidConfig, "batch_size < 1");
  if (opts_.kind == BaselineOptions::Kind::FixedBatchDelay &&
      opts_.max_delay_us < 0)
    throw SchedError(ErrorKind::InvalidConfig, "negative max_delay");

  std::set<std::string> seen;
  for (const Request& r : trace_) {
    r.validate();
    if (!seen.insert(r.id).second)
      throw SchedError(ErrorKind::DuplicateRequest, r.id);
    by_id_[r.id] = &r;
    CategoryServer& srv = servers_[r.category];
    if (srv.slo_us == 0) {
      srv.category = r.category;
      srv.slo_us = r.deadline_us;
      srv.aimd_batch = std::max(1, opts_.aimd.initial_batch);
    } else {
      srv.slo_us = std::min(srv.slo_us, r.deadline_us);
    }
    srv.remaining_releases += r.num_frames;
    if (opts_.kind != BaselineOptions::Kind::Aimd) {
      int cap = profile_.max_batch(r.category);
      if (opts_.batch_size > cap)
        throw SchedError(ErrorKind::BatchTooLarge,
                         "batch_size " + std::to_string(opts_.batch_size) +
                             " beyond profile cap for " + r.category.label());
    }
    for (const Frame& f : frame_stream(r))
      push_event(Bevent{.time = f.release_us,
                        .kind = BevKind::Release,
                        .request_id = r.id,
                        .seq = f.seq});
  }
  if (servers_.size() > 24)
    throw SchedError(ErrorKind::InvalidConfig,
                     "more than 24 categories overflows the share scale");
  for (std::int64_t c = 1;
       c <= static_cast<std::int64_t>(servers_.size()); ++c)
    lcm_ = std::lcm(lcm_, c);

  result_.offered = result_.admitted = trace_.size();

  while (!events_.empty()) {
    Bevent e = *events_.begin();
    events_.erase(events_.begin());
    advance(e.time);
    switch (e.kind) {
      case BevKind::Release: {
        const Request& r = *by_id_.at(e.request_id);
        TimeUs release = e.time;
        CategoryServer& srv = servers_.at(r.category);
        srv.pending.push_back(
            Frame{r.id, e.seq, release, release + r.deadline_us});
        --srv.remaining_releases;
        ++result_.frames_released;
        try_form(srv, e.time);
        break;
      }
      case BevKind::DelayTimer: {
        CategoryServer& srv = servers_.at(e.category);
        // Stale timers mutate nothing; rescheduling on them would stale the
        // one live review and let two stale events regenerate each other.
        if (srv.pending_epoch != e.epoch || srv.pending.empty()) continue;
        form_batch(srv, e.time, srv.pending.size());
        break;
      }
      case BevKind::Review: {
        if (e.version != version_) continue;
        complete_ready_jobs(e.time);
        break;
      }
    }
    reschedule_review();
  }

  for (const auto& [cat, srv] : servers_)
    if (srv.active || !srv.ready.empty() || !srv.pending.empty())
      throw std::logic_error("baseline stopped with work outstanding");
  if (result_.frames_released != result_.frames_processed)
    throw std::logic_error("released/processed frame counts diverge");
  return std::move(result_);
}

}  // namespace

EngineResult run_baseline(const std::vector<Request>& trace,
                          const ExecutionProfile& profile,
                          const BaselineOptions& options) {
  return BaselineSim(trace, profile, options).run();
}

}  // namespace deeprt
