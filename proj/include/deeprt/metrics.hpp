#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "deeprt/core.hpp"

namespace deeprt {

struct Metrics {
  std::size_t total_frames = 0;
  std::size_t missed_frames = 0;
  double miss_rate = 0.0;
  std::size_t rt_frames = 0;
  std::size_t rt_missed = 0;
  double rt_miss_rate = 0.0;
  std::vector<DurUs> overdue_sorted;  // overdue of missed frames, ascending
  TimeUs makespan_us = 0;             // first release to last finish
  double throughput_fps = 0.0;
  std::size_t admitted = 0;
  std::size_t rejected_phase1 = 0;
  std::size_t rejected_phase2 = 0;
  int peak_concurrent_requests = 0;
  std::vector<LatencyRecord> records;
};

Metrics compute_metrics(std::vector<LatencyRecord> records,
                        std::size_t admitted, std::size_t rejected_phase1,
                        std::size_t rejected_phase2);

// q-th quantile of the overdue distribution; 0 when nothing missed.
DurUs overdue_quantile(const Metrics& metrics, double q);

void write_records_csv(std::ostream& out,
                       const std::vector<LatencyRecord>& records);
void write_records_csv(const std::filesystem::path& path,
                       const std::vector<LatencyRecord>& records);

void write_summary_json(std::ostream& out, const std::string& policy,
                        const Metrics& metrics);
void write_summary_json(const std::filesystem::path& path,
                        const std::string& policy, const Metrics& metrics);

}  // namespace deeprt
