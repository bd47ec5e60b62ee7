#include "deeprt/trace.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>

#include <json.hpp>

#include "deeprt/error.hpp"

namespace deeprt {

namespace {

// The raw stream is std::mt19937_64, whose output sequence the standard
// pins down exactly. Doubles come from the top 53 bits, so u is uniform on
// [0, 1) and 1-u never hits zero inside the log below. The per-request draw
// order is: gamma_shape period draws, gamma_shape deadline draws, category
// pick, best-effort pick, arrival gap.
double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double exponential(std::mt19937_64& rng, double mean) {
  return -mean * std::log(1.0 - uniform01(rng));
}

double erlang(std::mt19937_64& rng, int shape, double scale) {
  double sum = 0.0;
  for (int i = 0; i < shape; ++i) sum += exponential(rng, scale);
  return sum;
}

}  // namespace

std::vector<Request> gen_trace(const TraceConfig& cfg) {
  if (cfg.num_requests < 1)
    throw SchedError(ErrorKind::InvalidConfig, "num_requests < 1");
  if (cfg.frames_per_request < 1)
    throw SchedError(ErrorKind::InvalidConfig, "frames_per_request < 1");
  if (cfg.mean_period_us <= 0 || cfg.mean_deadline_us <= 0)
    throw SchedError(ErrorKind::InvalidConfig, "means must be positive");
  if (cfg.gamma_shape < 1)
    throw SchedError(ErrorKind::InvalidConfig, "gamma_shape < 1");
  if (cfg.gamma_scale <= 0.0)
    throw SchedError(ErrorKind::InvalidConfig, "gamma_scale <= 0");
  if (cfg.pool.empty())
    throw SchedError(ErrorKind::InvalidConfig, "category pool is empty");
  if (cfg.nonrt_fraction < 0.0 || cfg.nonrt_fraction > 1.0)
    throw SchedError(ErrorKind::InvalidConfig, "nonrt_fraction outside [0,1]");
  if (cfg.arrival.value_us < 0)
    throw SchedError(ErrorKind::InvalidConfig, "negative arrival gap");

  std::mt19937_64 rng(cfg.seed);
  int n = cfg.num_requests;

  std::vector<double> raw_period(static_cast<std::size_t>(n));
  std::vector<double> raw_deadline(static_cast<std::size_t>(n));
  std::vector<std::size_t> category(static_cast<std::size_t>(n));
  std::vector<bool> real_time(static_cast<std::size_t>(n));
  std::vector<TimeUs> first_release(static_cast<std::size_t>(n));

  TimeUs arrival = 0;
  for (int i = 0; i < n; ++i) {
    auto k = static_cast<std::size_t>(i);
    raw_period[k] = erlang(rng, cfg.gamma_shape, cfg.gamma_scale);
    raw_deadline[k] = erlang(rng, cfg.gamma_shape, cfg.gamma_scale);
    category[k] = static_cast<std::size_t>(rng() % cfg.pool.size());
    real_time[k] = !(uniform01(rng) < cfg.nonrt_fraction);
    first_release[k] = arrival;
    DurUs gap = cfg.arrival.value_us;
    if (cfg.arrival.kind == ArrivalModel::Kind::Exponential)
      gap = static_cast<DurUs>(std::llround(
          exponential(rng, static_cast<double>(cfg.arrival.value_us))));
    arrival += gap;
  }

  double mean_p = 0.0, mean_d = 0.0;
  for (int i = 0; i < n; ++i) {
    mean_p += raw_period[static_cast<std::size_t>(i)];
    mean_d += raw_deadline[static_cast<std::size_t>(i)];
  }
  mean_p /= n;
  mean_d /= n;

  int width = std::max<int>(3, static_cast<int>(
                                   std::to_string(n - 1).size()));
  std::vector<Request> trace;
  trace.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    auto k = static_cast<std::size_t>(i);
    Request r;
    std::string num = std::to_string(i);
    r.id = "r" + std::string(static_cast<std::size_t>(width) - num.size(),
                             '0') +
           num;
    r.category = cfg.pool[category[k]];
    r.real_time = real_time[k];
    r.period_us = std::max<DurUs>(
        1000, std::llround(raw_period[k] *
                           static_cast<double>(cfg.mean_period_us) / mean_p));
    r.deadline_us = std::max<DurUs>(
        2000,
        std::llround(raw_deadline[k] *
                     static_cast<double>(cfg.mean_deadline_us) / mean_d));
    r.num_frames = cfg.frames_per_request;
    r.first_release_us = first_release[k];
    r.validate();
    trace.push_back(std::move(r));
  }
  return trace;
}

std::vector<Request> load_trace(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in)
    throw SchedError(ErrorKind::ParseError, "cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw SchedError(ErrorKind::ParseError, path.string() + ": " + e.what());
  }
  std::vector<Request> trace;
  std::set<std::string> seen;
  try {
    for (const auto& jr : j.at("requests")) {
      Request r;
      r.id = jr.at("id").get<std::string>();
      r.category.model = jr.at("model").get<std::string>();
      r.category.shape = Shape{jr.at("shape").at(0).get<int>(),
                               jr.at("shape").at(1).get<int>(),
                               jr.at("shape").at(2).get<int>()};
      r.period_us = jr.at("period_us").get<DurUs>();
      r.deadline_us = jr.at("deadline_us").get<DurUs>();
      r.num_frames = jr.at("num_frames").get<int>();
      r.first_release_us = jr.at("first_release_us").get<TimeUs>();
      r.real_time = jr.at("real_time").get<bool>();
      r.validate();
      if (!seen.insert(r.id).second)
        throw SchedError(ErrorKind::DuplicateRequest,
                         r.id + " in " + path.string());
      trace.push_back(std::move(r));
    }
  } catch (const nlohmann::json::exception& e) {
    throw SchedError(ErrorKind::ParseError, path.string() + ": " + e.what());
  }
  return trace;
}

void save_trace(const std::vector<Request>& trace,
                const std::filesystem::path& path) {
  nlohmann::ordered_json requests = nlohmann::ordered_json::array();
  for (const Request& r : trace) {
    nlohmann::ordered_json jr;
    jr["id"] = r.id;
    jr["model"] = r.category.model;
    jr["shape"] = {r.category.shape.channels, r.category.shape.height,
                   r.category.shape.width};
    jr["period_us"] = r.period_us;
    jr["deadline_us"] = r.deadline_us;
    jr["num_frames"] = r.num_frames;
    jr["first_release_us"] = r.first_release_us;
    jr["real_time"] = r.real_time;
    requests.push_back(std::move(jr));
  }
  nlohmann::ordered_json j;
  j["requests"] = std::move(requests);
  std::ofstream out(path);
  if (!out)
    throw SchedError(ErrorKind::InvalidConfig, "cannot write " + path.string());
  out << j.dump(2) << "\n";
}

}  // namespace deeprt
