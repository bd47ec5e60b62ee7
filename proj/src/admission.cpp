#include "deeprt/admission.hpp"

#include <algorithm>
#include <map>

#include "deeprt/error.hpp"

namespace deeprt {

double UtilizationReport::total_as_double() const {
  return total.convert_to<double>();
}

namespace {

struct HypoWindow {
  DurUs window_us = 0;
  TimeUs next_joint_us = 0;
  DurUs min_deadline_us = 0;
  std::vector<std::pair<std::string, TimeUs>> pending;
};

// The windows as they would look right after registering the pending
// request: mirrors Disbatcher::register_request (create, or shrink with
// the joint clamped so it never moves later).
std::map<CategoryKey, HypoWindow> hypothetical_windows(
    const SystemSnapshot& snapshot, const Request* pending,
    const NonRtConfig& nonrt) {
  std::map<CategoryKey, HypoWindow> windows;
  for (const WindowView& wv : snapshot.windows)
    windows[wv.key] = HypoWindow{wv.window_us, wv.next_joint_us,
                                 wv.min_deadline_us, wv.pending};
  if (pending) {
    CategoryKey key = pending->key();
    auto it = windows.find(key);
    if (it == windows.end()) {
      HypoWindow hw;
      hw.window_us = key.real_time ? window_length({pending->deadline_us})
                                   : nonrt.window_us;
      hw.min_deadline_us = pending->deadline_us;
      hw.next_joint_us = snapshot.now + hw.window_us;
      windows.emplace(key, std::move(hw));
    } else {
      HypoWindow& hw = it->second;
      hw.min_deadline_us = std::min(hw.min_deadline_us, pending->deadline_us);
      if (key.real_time) {
        DurUs w = window_length({hw.min_deadline_us});
        if (w < hw.window_us) {
          hw.window_us = w;
          hw.next_joint_us = std::min(hw.next_joint_us, snapshot.now + w);
        }
      }
    }
  }
  return windows;
}

long long rational_floor(const Rational& r) {
  return static_cast<long long>(
      boost::multiprecision::cpp_int(numerator(r) / denominator(r)));
}

}  // namespace

UtilizationReport phase1_utilization(const SystemSnapshot& snapshot,
                                     const Request& pending,
                                     const ExecutionProfile& profile,
                                     const NonRtConfig& nonrt) {
  auto windows = hypothetical_windows(snapshot, &pending, nonrt);

  // Window-lengths per period, summed per category over the active
  // population plus the candidate.
  std::map<CategoryKey, Rational> rate;
  auto add = [&](const Request& r) {
    Request eff = effective_request(r, nonrt);
    auto it = windows.find(eff.key());
    if (it == windows.end())
      throw SchedError(ErrorKind::UnknownCategory,
                       "no window for " + eff.key().label());
    rate[eff.key()] += Rational(it->second.window_us, eff.period_us);
  };
  for (const RequestState& rs : snapshot.requests)
    if (rs.remaining_frames > 0) add(rs.request);
  add(pending);

  UtilizationReport report;
  for (const auto& [key, frames_per_window] : rate) {
    long long n_g = rational_floor(frames_per_window);
    if (n_g == 0) continue;  // below one frame per window: no task to model
    const HypoWindow& hw = windows.at(key);
    DurUs wcet =
        profile.wcet_us(key.category, static_cast<int>(n_g));  // full shape
    UtilizationEntry entry;
    entry.key = key;
    entry.window_us = hw.window_us;
    entry.frames_per_window = n_g;
    entry.wcet_us = wcet;
    entry.utilization = Rational(wcet, hw.window_us);
    report.total += entry.utilization;
    report.entries.push_back(std::move(entry));
  }
  report.pass = report.total <= 1;
  if (!report.pass)
    report.reason = "utilization " + std::to_string(report.total_as_double()) +
                    " exceeds 1";
  return report;
}

std::vector<PseudoJob> generate_pseudo_jobs(const SystemSnapshot& snapshot,
                                            const Request* pending,
                                            const ExecutionProfile& profile,
                                            const NonRtConfig& nonrt) {
  auto windows = hypothetical_windows(snapshot, pending, nonrt);

  struct Ref {
    TimeUs release_us;
    std::string request_id;
  };
  std::map<CategoryKey, std::vector<Ref>> future;
  auto add = [&](const Request& r, int remaining, TimeUs next_release) {
    Request eff = effective_request(r, nonrt);
    if (!windows.count(eff.key()))
      throw SchedError(ErrorKind::UnknownCategory,
                       "no window for " + eff.key().label());
    auto& refs = future[eff.key()];
    for (int i = 0; i < remaining; ++i)
      refs.push_back(Ref{next_release + DurUs{i} * eff.period_us, eff.id});
  };
  for (const RequestState& rs : snapshot.requests)
    if (rs.remaining_frames > 0)
      add(rs.request, rs.remaining_frames, rs.next_release_us);
  if (pending) add(*pending, pending->num_frames, pending->first_release_us);

  std::vector<PseudoJob> out;
  for (auto& [key, hw] : windows) {
    // Bucket every remaining frame of this category by the joint that will
    // batch it. Frames already pending close at the (possibly restarted)
    // next joint; a future release r lands in the window that is open at r.
    std::map<TimeUs, std::vector<std::pair<std::string, TimeUs>>> buckets;
    for (const auto& [req, release] : hw.pending)
      buckets[hw.next_joint_us].emplace_back(req, release);
    auto fit = future.find(key);
    if (fit != future.end()) {
      std::sort(fit->second.begin(), fit->second.end(),
                [](const Ref& a, const Ref& b) {
                  return std::tie(a.release_us, a.request_id) <
                         std::tie(b.release_us, b.request_id);
                });
      for (const Ref& ref : fit->second) {
        TimeUs joint =
            ref.release_us < hw.next_joint_us
                ? hw.next_joint_us
                : hw.next_joint_us +
                      ((ref.release_us - hw.next_joint_us) / hw.window_us +
                       1) *
                          hw.window_us;
        buckets[joint].emplace_back(ref.request_id, ref.release_us);
      }
    }
    if (buckets.empty()) continue;
    int cap = profile.max_batch(key.category);  // full shape, conservative
    for (auto& [joint, refs] : buckets) {
      std::size_t taken = 0;
      while (taken < refs.size()) {
        std::size_t count = std::min<std::size_t>(
            static_cast<std::size_t>(cap), refs.size() - taken);
        PseudoJob pj;
        pj.release_us = joint;
        pj.deadline_us = joint + hw.window_us;
        pj.key = key;
        pj.frames.assign(
            refs.begin() + static_cast<std::ptrdiff_t>(taken),
            refs.begin() + static_cast<std::ptrdiff_t>(taken + count));
        pj.wcet_us = profile.wcet_us(key.category, static_cast<int>(count));
        out.push_back(std::move(pj));
        taken += count;
      }
    }
  }
  // Creation order of the live engine: joint instant, then category.
  std::stable_sort(out.begin(), out.end(),
                   [](const PseudoJob& a, const PseudoJob& b) {
                     return std::tie(a.release_us, a.key) <
                            std::tie(b.release_us, b.key);
                   });
  return out;
}

std::vector<PseudoJob> generate_frame_jobs(const SystemSnapshot& snapshot,
                                           const Request* pending,
                                           const ExecutionProfile& profile) {
  std::vector<PseudoJob> out;
  auto add = [&](const Request& r, int remaining, TimeUs next_release) {
    DurUs wcet = profile.wcet_us(r.category, 1);
    for (int i = 0; i < remaining; ++i) {
      TimeUs release = next_release + DurUs{i} * r.period_us;
      PseudoJob pj;
      pj.release_us = release;
      pj.deadline_us = release + r.deadline_us;
      pj.wcet_us = wcet;
      pj.key = r.key();
      pj.frames.emplace_back(r.id, release);
      out.push_back(std::move(pj));
    }
  };
  for (const RequestState& rs : snapshot.requests)
    if (rs.remaining_frames > 0)
      add(rs.request, rs.remaining_frames, rs.next_release_us);
  if (pending) add(*pending, pending->num_frames, pending->first_release_us);
  std::stable_sort(out.begin(), out.end(),
                   [](const PseudoJob& a, const PseudoJob& b) {
                     return std::tie(a.release_us, a.frames.front().first) <
                            std::tie(b.release_us, b.frames.front().first);
                   });
  return out;
}

void EdfImitator::set_in_flight(TimeUs finish_us, TimeUs deadline_us) {
  if (started_)
    throw SchedError(ErrorKind::InvalidConfig,
                     "in-flight job must be set before any other input");
  if (finish_us < t_)
    throw SchedError(ErrorKind::InvalidConfig,
                     "in-flight job finishes in the past");
  started_ = true;
  t_ = finish_us;
  if (t_ > deadline_us) failed_ = true;  // already committed to a miss
}

std::size_t EdfImitator::add_queued(const ImitatorJob& job) {
  if (any_fed_ || finished_)
    throw SchedError(ErrorKind::InvalidConfig,
                     "queued jobs must be added before feeding");
  started_ = true;
  std::size_t index = finishes_.size();
  finishes_.push_back(-1);
  queue_.push(Entry{job.deadline_us, job.release_us, job.key, job.tiebreak,
                    job.wcet_us, index});
  return index;
}

std::size_t EdfImitator::feed(const ImitatorJob& job) {
  if (finished_)
    throw SchedError(ErrorKind::InvalidConfig, "feed after finish");
  if (any_fed_ && job.release_us < last_fed_release_)
    throw SchedError(ErrorKind::UnsortedInput,
                     "releases must be non-decreasing");
  started_ = true;
  std::size_t index = finishes_.size();
  finishes_.push_back(-1);
  pending_.push_back(Entry{job.deadline_us, job.release_us, job.key,
                           job.tiebreak, job.wcet_us, index});
  last_fed_release_ = job.release_us;
  any_fed_ = true;
  step(false);
  return index;
}

void EdfImitator::finish() {
  if (finished_) return;
  finished_ = true;
  step(true);
}

// Executes as far as the fed horizon permits. A pop at time t is only sound
// once every release earlier than t is known; a queue-empty jump to release
// r is only sound once all jobs sharing r are known. Unfed jobs can only
// carry releases at or after the last fed one, which gives both bounds.
void EdfImitator::step(bool final) {
  for (;;) {
    if (failed_) {
      pending_.clear();
      return;
    }
    while (!pending_.empty() && pending_.front().release_us < t_) {
      queue_.push(pending_.front());
      pending_.pop_front();
    }
    if (!queue_.empty()) {
      if (!final && t_ > last_fed_release_) return;
      Entry e = queue_.top();
      queue_.pop();
      t_ += e.wcet_us;
      finishes_[e.index] = t_;
      if (t_ > e.deadline_us) failed_ = true;
      continue;
    }
    if (pending_.empty()) return;
    TimeUs r0 = pending_.front().release_us;
    if (!final && r0 >= last_fed_release_) return;
    if (t_ < r0) t_ = r0;
    while (!pending_.empty() && pending_.front().release_us == r0) {
      queue_.push(pending_.front());
      pending_.pop_front();
    }
  }
}

ImitatorResult run_imitator(TimeUs start_us,
                            const std::optional<InFlightView>& in_flight,
                            const std::vector<QueuedJobView>& queued,
                            const std::vector<ImitatorJob>& future) {
  EdfImitator im(start_us);
  if (in_flight) im.set_in_flight(in_flight->finish_us, in_flight->deadline_us);
  for (const QueuedJobView& q : queued)
    im.add_queued(
        ImitatorJob{q.release_us, q.deadline_us, q.wcet_us, q.key, q.job_id});
  for (const ImitatorJob& j : future) im.feed(j);
  im.finish();
  return ImitatorResult{im.schedulable(), im.finish_times(), im.time_us()};
}

AdmissionDecision admit(const SystemSnapshot& snapshot, const Request& pending,
                        const ExecutionProfile& profile,
                        const AdmissionOptions& options) {
  pending.validate();
  for (const RequestState& rs : snapshot.requests)
    if (rs.request.id == pending.id)
      throw SchedError(ErrorKind::DuplicateRequest, pending.id);
  if (pending.first_release_us < snapshot.now)
    throw SchedError(ErrorKind::InvalidConfig,
                     "request " + pending.id + " would release in the past");

  AdmissionDecision d;
  if (options.frame_level) {
    d.utilization.pass = true;
    d.utilization.reason = "not evaluated (frame-level admission)";
  } else {
    try {
      d.utilization =
          phase1_utilization(snapshot, pending, profile, options.nonrt);
    } catch (const SchedError& e) {
      d.utilization.pass = false;
      d.utilization.reason = e.what();
    }
    if (!d.utilization.pass && !options.evaluate_phase2_on_phase1_reject) {
      d.rejected_phase = 1;
      d.reason = d.utilization.reason;
      return d;
    }
  }

  bool schedulable = false;
  try {
    std::vector<PseudoJob> pseudo =
        options.frame_level
            ? generate_frame_jobs(snapshot, &pending, profile)
            : generate_pseudo_jobs(snapshot, &pending, profile, options.nonrt);
    d.pseudo_job_count = pseudo.size();

    EdfImitator im(snapshot.now);
    if (snapshot.in_flight) {
      im.set_in_flight(snapshot.in_flight->finish_us,
                       snapshot.in_flight->deadline_us);
      d.in_flight_finish_us = snapshot.in_flight->finish_us;
    }
    std::vector<std::size_t> queued_index;
    for (const QueuedJobView& q : snapshot.queued)
      queued_index.push_back(im.add_queued(ImitatorJob{
          q.release_us, q.deadline_us, q.wcet_us, q.key, q.job_id}));
    std::vector<std::size_t> future_index;
    for (std::size_t i = 0; i < pseudo.size(); ++i)
      future_index.push_back(im.feed(ImitatorJob{
          pseudo[i].release_us, pseudo[i].deadline_us, pseudo[i].wcet_us,
          pseudo[i].key, snapshot.next_job_id + i}));
    im.finish();
    schedulable = im.schedulable();

    if (schedulable) {
      const std::vector<TimeUs>& fin = im.finish_times();
      for (std::size_t i = 0; i < snapshot.queued.size(); ++i)
        d.queued_finish_us.emplace_back(snapshot.queued[i].job_id,
                                        fin[queued_index[i]]);
      for (std::size_t i = 0; i < pseudo.size(); ++i) {
        TimeUs f = fin[future_index[i]];
        d.future_finish_us.push_back(f);
        for (const auto& [req, release] : pseudo[i].frames)
          if (req == pending.id)
            d.predicted_max_latency_us =
                std::max(d.predicted_max_latency_us, f - release);
      }
    } else {
      d.reason = "replay misses a deadline";
    }
  } catch (const SchedError& e) {
    schedulable = false;
    d.reason = e.what();
  }

  if (!options.frame_level && !d.utilization.pass) {
    d.rejected_phase = 1;
    d.reason = d.utilization.reason;
    d.phase2_would_accept = schedulable;
    return d;
  }
  if (!schedulable) {
    d.rejected_phase = 2;
    return d;
  }
  d.admitted = true;
  return d;
}

}  // namespace deeprt
