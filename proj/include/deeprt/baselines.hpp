#pragma once

#include <vector>

#include "deeprt/core.hpp"
#include "deeprt/engine.hpp"
#include "deeprt/profile.hpp"

namespace deeprt {

struct AimdConfig {
  int initial_batch = 1;
  int additive_step = 1;
  double multiplicative_factor = 0.5;
};

// Additive-increase / multiplicative-decrease batch control: grow the batch
// while the observed latency meets the target, back off multiplicatively
// (never below 1) when it does not.
int aimd_step(int current_batch, DurUs observed_latency_us, DurUs slo_us,
              const AimdConfig& cfg);

struct BaselineOptions {
  enum class Kind {
    Aimd,            // per-category adaptive batch, dispatch when idle
    FixedBatch,      // dispatch at exactly batch_size (flush at stream end)
    FixedBatchDelay  // dispatch at batch_size or when the oldest frame ages
  };
  Kind kind = Kind::Aimd;
  AimdConfig aimd{};
  int batch_size = 4;
  DurUs max_delay_us = 25'000;
  ExecModel exec_model;  // empty: batches run exactly their profiled wcet
};

// Simulates the baseline serving stacks: every category runs its own FIFO
// model instance and instances share the accelerator equally, so with c
// busy categories each progresses at rate 1/c. No admission test: every
// request is taken.
EngineResult run_baseline(const std::vector<Request>& trace,
                          const ExecutionProfile& profile,
                          const BaselineOptions& options);

}  // namespace deeprt
