#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "deeprt/admission.hpp"
#include "deeprt/error.hpp"
#include "deeprt/profile.hpp"
#include "oracle_edf.hpp"

using namespace deeprt;

namespace {

const Category kCat{"m", Shape{3, 8, 8}};
const CategoryKey kKey{kCat, true};

ExecutionProfile affine_profile(DurUs base = 2'000, DurUs per = 1'000,
                                int max_batch = 16) {
  return synth_profile({ProfileRule{"m", kCat.shape, base, per, max_batch}},
                       false);
}

Request make_request(const std::string& id, DurUs period, DurUs deadline,
                     int n = 4, TimeUs first = 0,
                     const Category& cat = kCat) {
  return Request{id, cat, true, period, deadline, n, first};
}

// A self-consistent snapshot holding one already-registered request whose
// whole frame stream is still to come.
SystemSnapshot snapshot_with(const Request& r, TimeUs now = 0) {
  SystemSnapshot snap;
  snap.now = now;
  WindowView wv;
  wv.key = r.key();
  wv.window_us = window_length({r.deadline_us});
  wv.next_joint_us = now + wv.window_us;
  wv.min_deadline_us = r.deadline_us;
  snap.windows.push_back(std::move(wv));
  snap.requests.push_back(RequestState{r, r.num_frames, r.first_release_us});
  return snap;
}

ImitatorJob ijob(TimeUs release, TimeUs abs_deadline, DurUs wcet,
                 std::uint64_t tiebreak) {
  return ImitatorJob{release, abs_deadline, wcet, kKey, tiebreak};
}

}  // namespace

TEST_CASE("utilization sums window-rate floors against the profile") {
  auto profile = affine_profile();
  auto snap = snapshot_with(make_request("a", 50'000, 100'000, 8));
  Request pending = make_request("b", 25'000, 100'000, 8);

  auto report = phase1_utilization(snap, pending, profile, {});
  REQUIRE(report.entries.size() == 1);
  CHECK(report.entries[0].window_us == 50'000);
  CHECK(report.entries[0].frames_per_window == 3);  // floor(1 + 2)
  CHECK(report.entries[0].wcet_us == 5'000);
  CHECK(report.total == Rational(1, 10));
  CHECK(report.pass);
}

TEST_CASE("a lone 3.5ms model at a 10ms period fills 35 percent") {
  ExecutionProfile profile;
  profile.insert(Category{"rn50", Shape{3, 224, 224}}, {3'500});
  SystemSnapshot snap;
  Request pending{"a", Category{"rn50", Shape{3, 224, 224}}, true,
                  10'000, 20'000, 4, 0};
  auto report = phase1_utilization(snap, pending, profile, {});
  REQUIRE(report.entries.size() == 1);
  CHECK(report.entries[0].window_us == 10'000);
  CHECK(report.entries[0].frames_per_window == 1);
  CHECK(report.total == Rational(7, 20));
  CHECK(report.total_as_double() == doctest::Approx(0.35));
  CHECK(report.pass);
}

TEST_CASE("the filter rejects strictly above 1 and admits exactly 1") {
  // Two categories at 0.7 + 0.4 overload; trimming the second to 0.3 fits.
  Category other{"o", Shape{3, 8, 8}};
  auto profile = synth_profile(
      {ProfileRule{"m", kCat.shape, 34'000, 1'000, 4},
       ProfileRule{"o", other.shape, 19'000, 1'000, 4}},
      false);
  auto snap = snapshot_with(make_request("a", 50'000, 100'000, 8));

  auto report = phase1_utilization(
      snap, make_request("b", 50'000, 100'000, 8, 0, other), profile, {});
  CHECK(report.total == Rational(11, 10));
  CHECK_FALSE(report.pass);
  CHECK(report.reason.find("exceeds 1") != std::string::npos);

  auto tight = synth_profile(
      {ProfileRule{"m", kCat.shape, 34'000, 1'000, 4},
       ProfileRule{"o", other.shape, 14'000, 1'000, 4}},
      false);
  report = phase1_utilization(
      snap, make_request("b", 50'000, 100'000, 8, 0, other), tight, {});
  CHECK(report.total == Rational(1));
  CHECK(report.pass);
}

TEST_CASE("categories below one frame per window do not register") {
  auto profile = affine_profile();
  SystemSnapshot snap;
  auto report = phase1_utilization(
      snap, make_request("a", 1'000'000, 100'000, 2), profile, {});
  CHECK(report.entries.empty());
  CHECK(report.total == 0);
  CHECK(report.pass);
}

TEST_CASE("window replay batches remaining frames at their joints") {
  auto profile = affine_profile();
  SystemSnapshot snap;  // empty, now = 0
  Request pending = make_request("r", 25'000, 100'000, 4);

  auto jobs = generate_pseudo_jobs(snap, &pending, profile, {});
  REQUIRE(jobs.size() == 2);
  CHECK(jobs[0].release_us == 50'000);
  CHECK(jobs[0].deadline_us == 100'000);
  CHECK(jobs[0].batch() == 2);
  CHECK(jobs[0].wcet_us == 4'000);
  REQUIRE(jobs[0].frames.size() == 2);
  CHECK(jobs[0].frames[0].second == 0);
  CHECK(jobs[0].frames[1].second == 25'000);
  CHECK(jobs[1].release_us == 100'000);
  CHECK(jobs[1].deadline_us == 150'000);
  CHECK(jobs[1].frames[0].second == 50'000);
  CHECK(jobs[1].frames[1].second == 75'000);
}

TEST_CASE("a frame released exactly at a joint joins the next window") {
  auto profile = affine_profile();
  SystemSnapshot snap;
  Request pending = make_request("r", 25'000, 100'000, 1, 50'000);
  auto jobs = generate_pseudo_jobs(snap, &pending, profile, {});
  REQUIRE(jobs.size() == 1);
  CHECK(jobs[0].release_us == 100'000);
}

TEST_CASE("a tighter pending deadline re-anchors every future joint") {
  auto profile = affine_profile();
  // Existing request runs on W=100000 joints; the newcomer halves them.
  auto snap = snapshot_with(make_request("a", 100'000, 200'000, 4));
  REQUIRE(snap.windows[0].window_us == 100'000);
  Request pending = make_request("b", 100'000, 100'000, 2);

  auto jobs = generate_pseudo_jobs(snap, &pending, profile, {});
  CHECK(jobs.size() >= 2);
  for (const auto& job : jobs) {
    CHECK(job.deadline_us - job.release_us == 50'000);
    CHECK((job.release_us % 50'000) == 0);
  }
}

TEST_CASE("a late shrink keeps the sooner joint in the replay") {
  auto profile = affine_profile();
  SystemSnapshot snap;
  snap.now = 25'000;
  WindowView wv;
  wv.key = kKey;
  wv.window_us = 30'000;
  wv.next_joint_us = 30'000;
  wv.min_deadline_us = 60'000;
  wv.pending = {{"a", 5'000}};
  snap.windows.push_back(wv);
  Request pending = make_request("b", 25'000, 54'000, 1, 25'000);

  auto jobs = generate_pseudo_jobs(snap, &pending, profile, {});
  REQUIRE(jobs.size() == 1);
  CHECK(jobs[0].release_us == 30'000);  // not pushed out to 52'000
  CHECK(jobs[0].deadline_us == 57'000);
  CHECK(jobs[0].batch() == 2);
}

TEST_CASE("frames already pending in a window close at its next joint") {
  auto profile = affine_profile();
  SystemSnapshot snap;
  snap.now = 40'000;
  WindowView wv;
  wv.key = kKey;
  wv.window_us = 50'000;
  wv.next_joint_us = 50'000;
  wv.min_deadline_us = 100'000;
  wv.pending = {{"a", 10'000}, {"a", 35'000}};
  snap.windows.push_back(wv);

  auto jobs = generate_pseudo_jobs(snap, nullptr, profile, {});
  REQUIRE(jobs.size() == 1);
  CHECK(jobs[0].release_us == 50'000);
  CHECK(jobs[0].batch() == 2);
}

TEST_CASE("replay splits oversize windows exactly like the disbatcher") {
  auto profile = affine_profile(2'000, 1'000, 2);
  SystemSnapshot snap;
  Request pending = make_request("r", 10'000, 100'000, 5);
  auto jobs = generate_pseudo_jobs(snap, &pending, profile, {});
  REQUIRE(jobs.size() == 3);
  CHECK(jobs[0].batch() == 2);
  CHECK(jobs[1].batch() == 2);
  CHECK(jobs[2].batch() == 1);
  CHECK(jobs[0].release_us == jobs[1].release_us);
}

TEST_CASE("per-frame replay emits batch-1 jobs in release order") {
  auto profile = affine_profile();
  auto snap = snapshot_with(make_request("b", 40'000, 80'000, 2, 5'000));
  Request pending = make_request("a", 30'000, 60'000, 2);
  auto jobs = generate_frame_jobs(snap, &pending, profile);
  REQUIRE(jobs.size() == 4);
  TimeUs prev = 0;
  for (const auto& job : jobs) {
    CHECK(job.batch() == 1);
    CHECK(job.wcet_us == 3'000);
    CHECK(job.release_us >= prev);
    prev = job.release_us;
  }
  CHECK(jobs[0].frames[0].first == "a");   // 0 before 5000
  CHECK(jobs[1].frames[0].first == "b");
  CHECK(jobs[0].deadline_us == 60'000);
  CHECK(jobs[1].deadline_us == 85'000);
}

TEST_CASE("imitator runs released jobs back to back") {
  auto res = run_imitator(0, std::nullopt, {},
                          {ijob(0, 5, 3, 0), ijob(1, 11, 3, 1)});
  CHECK(res.schedulable);
  REQUIRE(res.finish_us.size() == 2);
  CHECK(res.finish_us[0] == 3);
  CHECK(res.finish_us[1] == 6);
  CHECK(res.end_us == 6);
}

TEST_CASE("imitator reports the first miss") {
  auto res = run_imitator(0, std::nullopt, {}, {ijob(0, 5, 6, 0)});
  CHECK_FALSE(res.schedulable);
  CHECK(res.finish_us[0] == 6);
}

TEST_CASE("imitator jumps over idle gaps") {
  auto res = run_imitator(0, std::nullopt, {},
                          {ijob(0, 3, 2, 0), ijob(5, 8, 2, 1)});
  CHECK(res.schedulable);
  CHECK(res.finish_us[0] == 2);
  CHECK(res.finish_us[1] == 7);
}

TEST_CASE("queued jobs execute in deadline order from the start time") {
  std::vector<QueuedJobView> queued{
      QueuedJobView{7, kKey, 0, 50, 10},
      QueuedJobView{3, kKey, 0, 30, 5},
  };
  auto res = run_imitator(10, std::nullopt, queued, {});
  CHECK(res.schedulable);
  CHECK(res.finish_us[0] == 25);  // input order: id 7 ran second
  CHECK(res.finish_us[1] == 15);
}

TEST_CASE("an in-flight job blocks the timeline until its finish") {
  auto res = run_imitator(100, InFlightView{0, kKey, 150, 200}, {},
                          {ijob(100, 200, 10, 0)});
  CHECK(res.schedulable);
  CHECK(res.finish_us[0] == 160);

  // Already committed to a miss: nothing else even runs.
  res = run_imitator(100, InFlightView{0, kKey, 150, 140}, {},
                     {ijob(100, 500, 10, 0)});
  CHECK_FALSE(res.schedulable);
  CHECK(res.finish_us[0] == -1);
}

TEST_CASE("feeds must come in release order") {
  EdfImitator im(0);
  im.feed(ijob(100, 200, 10, 0));
  try {
    im.feed(ijob(50, 200, 10, 1));
    FAIL("expected UnsortedInput");
  } catch (const SchedError& e) {
    CHECK(e.kind() == ErrorKind::UnsortedInput);
  }
  EdfImitator done(0);
  done.finish();
  CHECK_THROWS_AS(done.feed(ijob(0, 10, 1, 0)), SchedError);
}

TEST_CASE("incremental feeding matches the one-pass reference exactly") {
  std::mt19937_64 rng(314'159);
  for (int round = 0; round < 500; ++round) {
    int n = 1 + static_cast<int>(rng() % 40);
    std::vector<oracle::Job> jobs;
    TimeUs release = 0;
    for (int i = 0; i < n; ++i) {
      release += static_cast<TimeUs>(rng() % 30);
      DurUs wcet = 1 + static_cast<DurUs>(rng() % 25);
      TimeUs deadline = release + 1 + static_cast<TimeUs>(rng() % 120);
      jobs.push_back(oracle::Job{release, deadline, wcet});
    }

    auto expected = oracle::edf_simulate(jobs);

    EdfImitator im(0);
    for (std::size_t i = 0; i < jobs.size(); ++i)
      im.feed(ijob(jobs[i].release_us, jobs[i].deadline_us, jobs[i].wcet_us,
                   i));
    im.finish();

    REQUIRE(im.schedulable() == expected.feasible);
    if (expected.feasible) {
      for (std::size_t i = 0; i < jobs.size(); ++i)
        CHECK(im.finish_times()[i] == expected.finish_us[i]);
    }
  }
}

TEST_CASE("imitator never overclaims against exhaustive search") {
  std::mt19937_64 rng(271'828);
  int edf_infeasible_but_some_order_works = 0;
  for (int round = 0; round < 300; ++round) {
    int n = 1 + static_cast<int>(rng() % 5);
    std::vector<oracle::Job> jobs;
    for (int i = 0; i < n; ++i) {
      TimeUs release = static_cast<TimeUs>(rng() % 20);
      jobs.push_back(oracle::Job{release,
                                 release + 1 + static_cast<TimeUs>(rng() % 19),
                                 1 + static_cast<DurUs>(rng() % 10)});
    }
    std::sort(jobs.begin(), jobs.end(),
              [](const oracle::Job& a, const oracle::Job& b) {
                return a.release_us < b.release_us;
              });

    EdfImitator im(0);
    for (std::size_t i = 0; i < jobs.size(); ++i)
      im.feed(ijob(jobs[i].release_us, jobs[i].deadline_us, jobs[i].wcet_us,
                   i));
    im.finish();

    bool feasible = oracle::any_nonidling_feasible(jobs);
    if (im.schedulable()) CHECK(feasible);
    if (!im.schedulable() && feasible) ++edf_infeasible_but_some_order_works;
  }
  // Non-preemptive EDF is not optimal; the gap cases are expected to exist
  // and are exactly what the exhaustive oracle is here to tell apart.
  CHECK(edf_infeasible_but_some_order_works > 0);
}

TEST_CASE("admission accepts a light request with latency predictions") {
  auto profile = affine_profile();
  SystemSnapshot snap;
  auto d = admit(snap, make_request("r", 25'000, 100'000, 4), profile);
  CHECK(d.admitted);
  CHECK(d.rejected_phase == 0);
  CHECK(d.utilization.pass);
  CHECK(d.pseudo_job_count == 2);
  CHECK(d.future_finish_us.size() == 2);
  CHECK(d.queued_finish_us.empty());
  // First batch closes at 50000 and runs 4000us; its frame released at 0
  // waited the longest.
  CHECK(d.future_finish_us[0] == 54'000);
  CHECK(d.predicted_max_latency_us == 54'000);
}

TEST_CASE("admission rejects on replay when a window cannot hold its work") {
  auto profile = affine_profile(6'000, 0, 16);  // every batch runs 6000us
  SystemSnapshot snap;
  // W = 5000: jobs are due one window after release but cost 6000.
  auto d = admit(snap, make_request("r", 10'000, 10'000, 2), profile);
  CHECK_FALSE(d.admitted);
  CHECK(d.rejected_phase == 2);
  CHECK(d.utilization.pass);  // floor(5000/10000) = 0 frames per window
  CHECK(d.reason == "replay misses a deadline");
}

TEST_CASE("admission rejects on utilization without running the replay") {
  auto profile = affine_profile(60'000, 1'000, 16);
  SystemSnapshot snap;
  Request pending = make_request("r", 10'000, 100'000, 4);

  auto d = admit(snap, pending, profile);
  CHECK_FALSE(d.admitted);
  CHECK(d.rejected_phase == 1);
  CHECK_FALSE(d.phase2_would_accept.has_value());

  AdmissionOptions audit;
  audit.evaluate_phase2_on_phase1_reject = true;
  d = admit(snap, pending, profile, audit);
  CHECK(d.rejected_phase == 1);
  REQUIRE(d.phase2_would_accept.has_value());
}

TEST_CASE("a batch beyond the profiled cap rejects with a reason") {
  auto profile = affine_profile(2'000, 1'000, 2);
  SystemSnapshot snap;
  // W = 50000 and p = 10000 put five frames in every window; the table
  // stops at two.
  auto d = admit(snap, make_request("r", 10'000, 100'000, 10), profile);
  CHECK_FALSE(d.admitted);
  CHECK(d.rejected_phase == 1);
  CHECK(d.reason.find("batch") != std::string::npos);
}

TEST_CASE("admission leaves the snapshot untouched") {
  auto profile = affine_profile();
  auto snap = snapshot_with(make_request("a", 50'000, 100'000, 8));
  SystemSnapshot copy = snap;
  admit(snap, make_request("b", 25'000, 100'000, 8), profile);
  CHECK(snap == copy);
}

TEST_CASE("admission input validation") {
  auto profile = affine_profile();
  auto snap = snapshot_with(make_request("a", 50'000, 100'000, 8));
  CHECK_THROWS_AS(admit(snap, make_request("a", 50'000, 100'000), profile),
                  SchedError);
  snap.now = 10'000;
  CHECK_THROWS_AS(
      admit(snap, make_request("b", 50'000, 100'000, 4, 5'000), profile),
      SchedError);
}

TEST_CASE("frame-level admission skips the utilization filter") {
  auto profile = affine_profile();
  SystemSnapshot snap;
  AdmissionOptions opts;
  opts.frame_level = true;

  auto d = admit(snap, make_request("r", 25'000, 100'000, 3), profile, opts);
  CHECK(d.admitted);
  CHECK(d.pseudo_job_count == 3);
  CHECK(d.utilization.reason ==
        "not evaluated (frame-level admission)");

  // One frame at a time cannot fit a wcet above the relative deadline.
  auto heavy = affine_profile(12'000, 0, 16);
  d = admit(snap, make_request("r", 25'000, 10'000, 3), heavy, opts);
  CHECK_FALSE(d.admitted);
  CHECK(d.rejected_phase == 2);
}
