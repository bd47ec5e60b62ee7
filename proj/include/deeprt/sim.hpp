#pragma once

#include <optional>
#include <string>
#include <vector>

#include "deeprt/baselines.hpp"
#include "deeprt/engine.hpp"
#include "deeprt/metrics.hpp"
#include "deeprt/profile.hpp"

namespace deeprt {

enum class Policy {
  DeepRt,           // window batching + EDF + admission + adaptation
  Aimd,             // adaptive batch, fair-share execution
  FixedBatch,       // fixed batch size, fair-share execution
  FixedBatchDelay,  // fixed batch size with timeout, fair-share execution
  SequentialEdf,    // per-frame EDF, batch 1, replay-style admission
};

std::string to_string(Policy policy);
std::optional<Policy> parse_policy(const std::string& name);
const std::vector<Policy>& all_policies();

struct InjectSpec {
  std::uint64_t start_index = 0;  // global dispatch index
  int count = 5;
  DurUs extra_us = 0;
};

struct SimOptions {
  bool early_dispatch = true;
  bool adaptation = true;
  NonRtConfig nonrt{};

  // Execution-time disturbances (jobs otherwise run exactly their wcet).
  std::optional<InjectSpec> inject;
  DurUs jitter_max_us = 0;
  std::uint64_t seed = 0;

  // Restrict the trace to these ids and skip the admission test: replaying
  // another run's accepted set.
  std::optional<std::vector<std::string>> replay_admitted;
  int stop_after_rejections = 0;
  bool evaluate_phase2_on_phase1_reject = false;

  AimdConfig aimd{};
  int batch_size = 4;
  DurUs batch_delay_us = 25'000;
};

struct SimResult {
  Metrics metrics;
  EngineResult engine;
};

SimResult run_simulation(const std::vector<Request>& trace, Policy policy,
                         const ExecutionProfile& profile,
                         const SimOptions& options = {});

}  // namespace deeprt
