#pragma once

#include <filesystem>
#include <vector>

#include "deeprt/core.hpp"

namespace deeprt {

struct ArrivalModel {
  enum class Kind { Fixed, Exponential };
  Kind kind = Kind::Fixed;
  DurUs value_us = 0;  // fixed gap, or mean gap for exponential
};

// Periods and deadlines are drawn from a gamma distribution (integer shape,
// so it reduces to a sum of exponentials) and rescaled so the sample means
// hit the configured targets exactly.
struct TraceConfig {
  std::uint64_t seed = 0;
  int num_requests = 0;
  DurUs mean_period_us = 0;
  DurUs mean_deadline_us = 0;
  int gamma_shape = 2;
  double gamma_scale = 5.0;
  ArrivalModel arrival{};
  std::vector<Category> pool;
  int frames_per_request = 0;
  double nonrt_fraction = 0.0;
};

std::vector<Request> gen_trace(const TraceConfig& config);

std::vector<Request> load_trace(const std::filesystem::path& path);
void save_trace(const std::vector<Request>& trace,
                const std::filesystem::path& path);

}  // namespace deeprt
