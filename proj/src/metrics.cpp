#include "deeprt/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>

#include <json.hpp>

#include "deeprt/error.hpp"

namespace deeprt {

Metrics compute_metrics(std::vector<LatencyRecord> records,
                        std::size_t admitted, std::size_t rejected_phase1,
                        std::size_t rejected_phase2) {
  Metrics m;
  m.admitted = admitted;
  m.rejected_phase1 = rejected_phase1;
  m.rejected_phase2 = rejected_phase2;
  m.total_frames = records.size();

  TimeUs first_release = 0, last_finish = 0;
  std::map<std::string, std::pair<TimeUs, TimeUs>> spans;
  bool any = false;
  for (const LatencyRecord& r : records) {
    if (!any) {
      first_release = r.release_us;
      last_finish = r.finish_us;
      any = true;
    } else {
      first_release = std::min(first_release, r.release_us);
      last_finish = std::max(last_finish, r.finish_us);
    }
    if (r.missed) {
      ++m.missed_frames;
      m.overdue_sorted.push_back(r.overdue_us);
    }
    if (r.real_time) {
      ++m.rt_frames;
      if (r.missed) ++m.rt_missed;
    }
    auto [it, fresh] = spans.emplace(
        r.request_id, std::make_pair(r.release_us, r.finish_us));
    if (!fresh) {
      it->second.first = std::min(it->second.first, r.release_us);
      it->second.second = std::max(it->second.second, r.finish_us);
    }
  }
  std::sort(m.overdue_sorted.begin(), m.overdue_sorted.end());
  if (m.total_frames > 0)
    m.miss_rate = static_cast<double>(m.missed_frames) /
                  static_cast<double>(m.total_frames);
  if (m.rt_frames > 0)
    m.rt_miss_rate =
        static_cast<double>(m.rt_missed) / static_cast<double>(m.rt_frames);
  if (any) {
    m.makespan_us = last_finish - first_release;
    if (m.makespan_us > 0)
      m.throughput_fps = static_cast<double>(m.total_frames) * 1e6 /
                         static_cast<double>(m.makespan_us);
  }

  // Peak concurrency: requests whose release-to-finish spans intersect,
  // touching endpoints included.
  std::vector<TimeUs> starts, ends;
  for (const auto& [id, span] : spans) {
    starts.push_back(span.first);
    ends.push_back(span.second);
  }
  std::sort(starts.begin(), starts.end());
  std::sort(ends.begin(), ends.end());
  int active = 0;
  std::size_t ei = 0;
  for (TimeUs s : starts) {
    while (ei < ends.size() && ends[ei] < s) {
      --active;
      ++ei;
    }
    ++active;
    m.peak_concurrent_requests = std::max(m.peak_concurrent_requests, active);
  }

  m.records = std::move(records);
  return m;
}

DurUs overdue_quantile(const Metrics& metrics, double q) {
  if (metrics.overdue_sorted.empty()) return 0;
  if (q < 0.0 || q > 1.0)
    throw SchedError(ErrorKind::InvalidConfig, "quantile outside [0, 1]");
  std::size_t n = metrics.overdue_sorted.size();
  auto rank = static_cast<std::size_t>(
      std::ceil(q * static_cast<double>(n)));
  if (rank == 0) rank = 1;
  return metrics.overdue_sorted[rank - 1];
}

void write_records_csv(std::ostream& out,
                       const std::vector<LatencyRecord>& records) {
  out << "frame_id,request_id,release_us,batch_release_us,start_us,"
         "finish_us,deadline_us,missed,overdue_us\n";
  for (const LatencyRecord& r : records) {
    out << r.frame_id() << ',' << r.request_id << ',' << r.release_us << ','
        << r.batch_release_us() << ',' << r.start_us() << ',' << r.finish_us
        << ',' << r.deadline_us << ',' << (r.missed ? 1 : 0) << ','
        << r.overdue_us << '\n';
  }
}

void write_records_csv(const std::filesystem::path& path,
                       const std::vector<LatencyRecord>& records) {
  std::ofstream out(path);
  if (!out)
    throw SchedError(ErrorKind::InvalidConfig, "cannot write " + path.string());
  write_records_csv(out, records);
}

void write_summary_json(std::ostream& out, const std::string& policy,
                        const Metrics& metrics) {
  nlohmann::ordered_json j;
  j["policy"] = policy;
  j["miss_rate"] = metrics.miss_rate;
  j["throughput_fps"] = metrics.throughput_fps;
  j["admitted"] = metrics.admitted;
  j["rejected_phase1"] = metrics.rejected_phase1;
  j["rejected_phase2"] = metrics.rejected_phase2;
  out << j.dump(2) << "\n";
}

void write_summary_json(const std::filesystem::path& path,
                        const std::string& policy, const Metrics& metrics) {
  std::ofstream out(path);
  if (!out)
    throw SchedError(ErrorKind::InvalidConfig, "cannot write " + path.string());
  write_summary_json(out, policy, metrics);
}

}  // namespace deeprt
