#include "deeprt/sim.hpp"

#include <algorithm>
#include <set>

#include "deeprt/error.hpp"

namespace deeprt {

std::string to_string(Policy policy) {
  switch (policy) {
    case Policy::DeepRt: return "deeprt";
    case Policy::Aimd: return "aimd";
    case Policy::FixedBatch: return "batch";
    case Policy::FixedBatchDelay: return "batch-delay";
    case Policy::SequentialEdf: return "sedf";
  }
  return "?";
}

std::optional<Policy> parse_policy(const std::string& name) {
  for (Policy p : all_policies())
    if (to_string(p) == name) return p;
  return std::nullopt;
}

const std::vector<Policy>& all_policies() {
  static const std::vector<Policy> policies = {
      Policy::DeepRt, Policy::Aimd, Policy::FixedBatch,
      Policy::FixedBatchDelay, Policy::SequentialEdf};
  return policies;
}

SimResult run_simulation(const std::vector<Request>& trace, Policy policy,
                         const ExecutionProfile& profile,
                         const SimOptions& options) {
  std::vector<Request> effective_trace = trace;
  bool replay = options.replay_admitted.has_value();
  if (replay) {
    std::set<std::string> keep(options.replay_admitted->begin(),
                               options.replay_admitted->end());
    effective_trace.clear();
    for (const Request& r : trace)
      if (keep.count(r.id)) effective_trace.push_back(r);
  }

  bool engine_policy =
      policy == Policy::DeepRt || policy == Policy::SequentialEdf;

  ExecModel model = options.jitter_max_us > 0
                        ? jitter_exec_model(options.jitter_max_us, options.seed)
                        : exact_exec_model();
  if (options.inject)
    model = inject_overruns(std::move(model), options.inject->start_index,
                            options.inject->count, options.inject->extra_us);

  EngineResult er;
  if (engine_policy) {
    EngineOptions eopts;
    eopts.mode = policy == Policy::DeepRt
                     ? EngineOptions::Mode::WindowBatching
                     : EngineOptions::Mode::FrameLevel;
    eopts.early_dispatch = policy == Policy::DeepRt && options.early_dispatch;
    eopts.adaptation = policy == Policy::DeepRt && options.adaptation;
    eopts.nonrt = options.nonrt;
    eopts.admit_all = replay;
    eopts.stop_after_rejections = options.stop_after_rejections;
    eopts.evaluate_phase2_on_phase1_reject =
        options.evaluate_phase2_on_phase1_reject;
    eopts.exec_model = std::move(model);
    er = run_engine(effective_trace, profile, eopts);
  } else {
    BaselineOptions bopts;
    switch (policy) {
      case Policy::Aimd:
        bopts.kind = BaselineOptions::Kind::Aimd;
        break;
      case Policy::FixedBatch:
        bopts.kind = BaselineOptions::Kind::FixedBatch;
        break;
      default:
        bopts.kind = BaselineOptions::Kind::FixedBatchDelay;
        break;
    }
    bopts.aimd = options.aimd;
    bopts.batch_size = options.batch_size;
    bopts.max_delay_us = options.batch_delay_us;
    bopts.exec_model = std::move(model);
    er = run_baseline(effective_trace, profile, bopts);
  }

  SimResult out;
  out.metrics = compute_metrics(er.records, er.admitted, er.rejected_phase1,
                                er.rejected_phase2);
  out.engine = std::move(er);
  return out;
}

}  // namespace deeprt
