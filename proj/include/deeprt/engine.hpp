#pragma once

#include <map>
#include <vector>

#include "deeprt/adaptation.hpp"
#include "deeprt/admission.hpp"
#include "deeprt/core.hpp"
#include "deeprt/disbatcher.hpp"
#include "deeprt/edf_worker.hpp"
#include "deeprt/profile.hpp"

namespace deeprt {

struct EngineOptions {
  enum class Mode {
    WindowBatching,  // windowed batches, two-phase admission
    FrameLevel,      // one job per frame, replay-only admission
  };
  Mode mode = Mode::WindowBatching;
  bool early_dispatch = true;
  bool adaptation = true;
  NonRtConfig nonrt{};
  ExecModel exec_model;  // empty: jobs run exactly their profiled wcet

  // Skip the admission test and take every offered request (replay runs).
  bool admit_all = false;
  // Stop offering new requests after this many consecutive rejections
  // (0 = never stop): saturation experiments.
  int stop_after_rejections = 0;
  bool evaluate_phase2_on_phase1_reject = false;
};

struct AdmissionOutcome {
  std::string request_id;
  TimeUs at_us = 0;
  AdmissionDecision decision;
  // Creation-log length when the decision was made; future predictions line
  // up with jobs created from this position on.
  std::size_t jobs_created_before = 0;
};

struct JobCreationEntry {
  std::uint64_t job_id = 0;
  CategoryKey key;
  TimeUs release_us = 0;
  TimeUs deadline_us = 0;
  int batch = 0;
  bool downgraded = false;
  bool early = false;
};

struct AdaptationEvent {
  TimeUs at_us = 0;
  CategoryKey key;
  AdaptAction action = AdaptAction::None;
  DurUs penalty_after_us = 0;
};

struct EngineResult {
  std::vector<LatencyRecord> records;          // completion order
  std::vector<CompletionRecord> completions;   // completion order
  std::vector<AdmissionOutcome> admissions;    // offer order
  std::vector<JobCreationEntry> creation_log;  // creation order
  std::vector<AdaptationEvent> adaptation_events;
  std::map<CategoryKey, PenaltyState> final_penalties;

  std::size_t offered = 0;
  std::size_t admitted = 0;
  std::size_t rejected_phase1 = 0;
  std::size_t rejected_phase2 = 0;
  std::size_t unoffered = 0;  // suppressed after the rejection streak

  std::uint64_t frames_released = 0;
  std::uint64_t frames_processed = 0;
};

// Simulates the full system over a request trace: admission at each arrival,
// window batching (or per-frame jobs), non-preemptive EDF dispatch, overrun
// adaptation. Runs to quiescence; every released frame is processed.
EngineResult run_engine(const std::vector<Request>& trace,
                        const ExecutionProfile& profile,
                        const EngineOptions& options);

}  // namespace deeprt
