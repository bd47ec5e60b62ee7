// Command-line front end: synthesize profiles and traces, test admission,
// run a single policy, or compare policies on one trace.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "deeprt/error.hpp"
#include "deeprt/profile.hpp"
#include "deeprt/sim.hpp"
#include "deeprt/trace.hpp"

namespace {

using namespace deeprt;

Shape parse_shape(const std::string& text) {
  Shape s;
  char x1 = 0, x2 = 0;
  std::istringstream in(text);
  if (!(in >> s.channels >> x1 >> s.height >> x2 >> s.width) || x1 != 'x' ||
      x2 != 'x' || !s.valid() || !(in >> std::ws).eof())
    throw SchedError(ErrorKind::ParseError,
                     "shape '" + text + "' is not CxHxW");
  return s;
}

std::vector<Category> parse_pool(const std::string& text) {
  std::vector<Category> pool;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    auto at = item.find(':');
    if (at == std::string::npos)
      throw SchedError(ErrorKind::ParseError,
                       "pool entry '" + item + "' is not model:CxHxW");
    pool.push_back(
        Category{item.substr(0, at), parse_shape(item.substr(at + 1))});
  }
  if (pool.empty())
    throw SchedError(ErrorKind::ParseError, "empty category pool");
  return pool;
}

InjectSpec parse_inject(const std::string& text) {
  InjectSpec spec;
  char c1 = 0, c2 = 0;
  std::istringstream in(text);
  if (!(in >> spec.start_index >> c1 >> spec.count >> c2 >> spec.extra_us) ||
      c1 != ':' || c2 != ':' || spec.count < 1 || spec.extra_us < 0 ||
      !(in >> std::ws).eof())
    throw SchedError(ErrorKind::ParseError,
                     "inject '" + text + "' is not start:count:extra_us");
  return spec;
}

std::vector<std::string> read_id_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in)
    throw SchedError(ErrorKind::ParseError, "cannot open " + path.string());
  std::vector<std::string> ids;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) ids.push_back(line);
  return ids;
}

void write_id_file(const std::filesystem::path& path,
                   const std::vector<std::string>& ids) {
  std::ofstream out(path);
  if (!out)
    throw SchedError(ErrorKind::InvalidConfig, "cannot write " + path.string());
  for (const std::string& id : ids) out << id << "\n";
}

std::vector<std::string> admitted_ids(const EngineResult& er) {
  std::vector<std::string> ids;
  for (const AdmissionOutcome& a : er.admissions)
    if (a.decision.admitted) ids.push_back(a.request_id);
  return ids;
}

struct RunFlags {
  std::string trace_path, profile_path, out_dir;
  std::string policy = "deeprt";
  bool no_early_dispatch = false;
  bool no_adaptation = false;
  std::string inject_text, replay_path;
  DurUs jitter_us = 0;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int stop_after_rejections = 0;
  int batch_size = 4;
  double batch_delay_ms = 25.0;
  int aimd_step_size = 1;
  double aimd_factor = 0.5;
  double nonrt_window_ms = 1000.0;
  double nonrt_min_period_ms = 100.0;
};

void add_run_flags(CLI::App* cmd, RunFlags& f, bool with_policy) {
  cmd->add_option("--trace", f.trace_path, "trace JSON file")->required();
  cmd->add_option("--profile", f.profile_path, "profile JSONL file")
      ->required();
  if (with_policy)
    cmd->add_option("--policy", f.policy,
                    "deeprt|aimd|batch|batch-delay|sedf");
  cmd->add_flag("--no-early-dispatch", f.no_early_dispatch,
                "never pull pending frames into idle time");
  cmd->add_flag("--no-adaptation", f.no_adaptation,
                "disable overrun downgrades");
  cmd->add_option("--inject", f.inject_text,
                  "overrun burst start:count:extra_us");
  cmd->add_option("--jitter-us", f.jitter_us,
                  "uniform extra execution time bound");
  cmd->add_option("--seed", f.seed, "seed for execution jitter")
      ->each([&f](const std::string&) { f.seed_set = true; });
  cmd->add_option("--replay-admitted", f.replay_path,
                  "admit exactly the ids listed in this file");
  cmd->add_option("--stop-after-rejections", f.stop_after_rejections,
                  "stop offering requests after this rejection streak");
  cmd->add_option("--batch-size", f.batch_size, "fixed batch size");
  cmd->add_option("--batch-delay-ms", f.batch_delay_ms,
                  "batch timeout for batch-delay");
  cmd->add_option("--aimd-step", f.aimd_step_size, "aimd additive step");
  cmd->add_option("--aimd-factor", f.aimd_factor,
                  "aimd multiplicative backoff");
  cmd->add_option("--nonrt-window-ms", f.nonrt_window_ms,
                  "batching window for best-effort streams");
  cmd->add_option("--nonrt-min-period-ms", f.nonrt_min_period_ms,
                  "period floor for best-effort streams");
}

SimOptions make_options(const RunFlags& f) {
  SimOptions opts;
  opts.early_dispatch = !f.no_early_dispatch;
  opts.adaptation = !f.no_adaptation;
  opts.nonrt.window_us = static_cast<DurUs>(f.nonrt_window_ms * 1000.0);
  opts.nonrt.min_period_us =
      static_cast<DurUs>(f.nonrt_min_period_ms * 1000.0);
  if (!f.inject_text.empty()) opts.inject = parse_inject(f.inject_text);
  opts.jitter_max_us = f.jitter_us;
  if (f.jitter_us > 0) {
    if (f.seed_set) {
      opts.seed = f.seed;
    } else {
      opts.seed = std::random_device{}();
      std::cerr << "seed " << opts.seed << "\n";
    }
  }
  if (!f.replay_path.empty())
    opts.replay_admitted = read_id_file(f.replay_path);
  opts.stop_after_rejections = f.stop_after_rejections;
  opts.batch_size = f.batch_size;
  opts.batch_delay_us = static_cast<DurUs>(f.batch_delay_ms * 1000.0);
  opts.aimd.additive_step = f.aimd_step_size;
  opts.aimd.multiplicative_factor = f.aimd_factor;
  return opts;
}

void emit_run_outputs(const std::filesystem::path& dir, Policy policy,
                      const SimResult& res) {
  std::filesystem::create_directories(dir);
  std::string name = to_string(policy);
  write_records_csv(dir / (name + ".records.csv"), res.metrics.records);
  write_summary_json(dir / (name + ".summary.json"), name, res.metrics);
  if (policy == Policy::DeepRt || policy == Policy::SequentialEdf)
    write_id_file(dir / (name + ".admitted.txt"), admitted_ids(res.engine));
}

void print_summary_line(std::ostream& out, const std::string& name,
                        const Metrics& m) {
  out << name << "\tmiss_rate=" << m.miss_rate
      << "\tthroughput_fps=" << m.throughput_fps << "\tadmitted=" << m.admitted
      << "\trejected_phase1=" << m.rejected_phase1
      << "\trejected_phase2=" << m.rejected_phase2
      << "\tframes=" << m.total_frames << "\n";
}

int cmd_profile_synth(const std::vector<std::string>& models,
                      const std::vector<std::string>& shapes,
                      const std::vector<DurUs>& bases,
                      const std::vector<DurUs>& pers,
                      const std::vector<int>& max_batches,
                      const std::string& out, bool no_half_shapes) {
  if (models.size() != shapes.size() || models.size() != bases.size() ||
      models.size() != pers.size() || models.size() != max_batches.size() ||
      models.empty())
    throw SchedError(ErrorKind::InvalidConfig,
                     "--model/--shape/--base-us/--per-frame-us/--max-batch "
                     "must repeat together");
  std::vector<ProfileRule> rules;
  for (std::size_t i = 0; i < models.size(); ++i)
    rules.push_back(ProfileRule{models[i], parse_shape(shapes[i]), bases[i],
                                pers[i], max_batches[i]});
  ExecutionProfile profile = synth_profile(rules, !no_half_shapes);
  save_profile(profile, out);
  std::cout << "wrote " << profile.category_count() << " categories to "
            << out << "\n";
  return 0;
}

int cmd_profile_validate(const std::string& in) {
  ExecutionProfile profile = load_profile(in);
  std::size_t rows = 0;
  for (const auto& [cat, wcets] : profile.tables()) rows += wcets.size();
  std::cout << in << ": " << profile.category_count() << " categories, "
            << rows << " entries\n";
  return 0;
}

int cmd_trace_gen(const TraceConfig& cfg, const std::string& out) {
  std::vector<Request> trace = gen_trace(cfg);
  save_trace(trace, out);
  std::cout << "wrote " << trace.size() << " requests to " << out << "\n";
  return 0;
}

int cmd_admit(const RunFlags& f) {
  std::vector<Request> trace = load_trace(f.trace_path);
  ExecutionProfile profile = load_profile(f.profile_path);
  SimOptions opts = make_options(f);
  SimResult res = run_simulation(trace, Policy::DeepRt, profile, opts);
  for (const AdmissionOutcome& a : res.engine.admissions) {
    std::cout << a.request_id << "\t"
              << (a.decision.admitted
                      ? "admit"
                      : "reject-phase" +
                            std::to_string(a.decision.rejected_phase))
              << "\tutilization=" << a.decision.utilization.total_as_double();
    if (a.decision.admitted)
      std::cout << "\tpredicted_max_latency_us="
                << a.decision.predicted_max_latency_us;
    else
      std::cout << "\treason=" << a.decision.reason;
    std::cout << "\n";
  }
  std::cout << "admitted " << res.engine.admitted << "/"
            << res.engine.offered << "\n";
  return 0;
}

int cmd_run(const RunFlags& f) {
  auto policy = parse_policy(f.policy);
  if (!policy)
    throw SchedError(ErrorKind::InvalidConfig,
                     "unknown policy " + f.policy);
  std::vector<Request> trace = load_trace(f.trace_path);
  ExecutionProfile profile = load_profile(f.profile_path);
  SimResult res = run_simulation(trace, *policy, profile, make_options(f));
  if (!f.out_dir.empty()) emit_run_outputs(f.out_dir, *policy, res);
  print_summary_line(std::cout, to_string(*policy), res.metrics);
  return 0;
}

int cmd_compare(const RunFlags& f, const std::string& policies_text) {
  std::vector<Policy> policies;
  std::istringstream in(policies_text);
  std::string item;
  while (std::getline(in, item, ',')) {
    auto p = parse_policy(item);
    if (!p)
      throw SchedError(ErrorKind::InvalidConfig, "unknown policy " + item);
    if (*p != Policy::DeepRt) policies.push_back(*p);
  }

  std::vector<Request> trace = load_trace(f.trace_path);
  ExecutionProfile profile = load_profile(f.profile_path);
  SimOptions opts = make_options(f);

  // The reference policy picks the admitted set; everyone else replays it.
  SimResult ref = run_simulation(trace, Policy::DeepRt, profile, opts);
  if (!f.out_dir.empty()) emit_run_outputs(f.out_dir, Policy::DeepRt, ref);

  std::vector<std::pair<std::string, Metrics>> rows;
  rows.emplace_back(to_string(Policy::DeepRt), ref.metrics);

  SimOptions replay_opts = opts;
  replay_opts.replay_admitted = admitted_ids(ref.engine);
  for (Policy p : policies) {
    SimResult res = run_simulation(trace, p, profile, replay_opts);
    if (!f.out_dir.empty()) emit_run_outputs(f.out_dir, p, res);
    rows.emplace_back(to_string(p), res.metrics);
  }
  std::sort(rows.begin(), rows.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  for (const auto& [name, metrics] : rows)
    print_summary_line(std::cout, name, metrics);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"soft real-time batch scheduling simulator"};
  app.require_subcommand(1);

  // profile synth / validate
  auto* profile_cmd = app.add_subcommand("profile", "wcet profiles");
  profile_cmd->require_subcommand(1);
  auto* synth = profile_cmd->add_subcommand("synth", "generate affine wcets");
  std::vector<std::string> models, shapes;
  std::vector<DurUs> bases, pers;
  std::vector<int> max_batches;
  std::string out_path;
  bool no_half_shapes = false;
  synth->add_option("--model", models, "model name")->required();
  synth->add_option("--shape", shapes, "input shape CxHxW")->required();
  synth->add_option("--base-us", bases, "fixed cost per batch")->required();
  synth->add_option("--per-frame-us", pers, "cost per frame")->required();
  synth->add_option("--max-batch", max_batches, "largest batch")->required();
  synth->add_option("--out", out_path, "output JSONL")->required();
  synth->add_flag("--no-half-shapes", no_half_shapes,
                  "skip downgrade-target entries");

  auto* validate = profile_cmd->add_subcommand("validate", "check a profile");
  std::string validate_path;
  validate->add_option("--in", validate_path, "profile JSONL")->required();

  // trace gen
  auto* trace_cmd = app.add_subcommand("trace", "request traces");
  trace_cmd->require_subcommand(1);
  auto* gen = trace_cmd->add_subcommand("gen", "sample a random trace");
  TraceConfig tcfg;
  std::string trace_out, pool_text = "m0:3x224x224";
  double mean_period_ms = 50.0, mean_deadline_ms = 50.0, arrival_ms = 0.0;
  std::string arrival_kind = "fixed";
  tcfg.num_requests = 20;
  tcfg.frames_per_request = 30;
  gen->add_option("--seed", tcfg.seed, "rng seed")->required();
  gen->add_option("--requests", tcfg.num_requests, "request count");
  gen->add_option("--frames", tcfg.frames_per_request, "frames per request");
  gen->add_option("--mean-period-ms", mean_period_ms, "mean frame period");
  gen->add_option("--mean-deadline-ms", mean_deadline_ms, "mean deadline");
  gen->add_option("--gamma-shape", tcfg.gamma_shape, "gamma shape (integer)");
  gen->add_option("--gamma-scale", tcfg.gamma_scale, "gamma scale");
  gen->add_option("--pool", pool_text, "categories model:CxHxW,...");
  gen->add_option("--arrival", arrival_kind, "fixed|exp");
  gen->add_option("--arrival-ms", arrival_ms, "gap (fixed) or mean gap (exp)");
  gen->add_option("--nonrt-fraction", tcfg.nonrt_fraction,
                  "share of best-effort requests");
  gen->add_option("--out", trace_out, "output JSON")->required();

  // admit / run / compare
  RunFlags admit_flags, run_flags, compare_flags;
  auto* admit_cmd =
      app.add_subcommand("admit", "admission decisions only");
  add_run_flags(admit_cmd, admit_flags, false);

  auto* run_cmd = app.add_subcommand("run", "simulate one policy");
  add_run_flags(run_cmd, run_flags, true);
  run_cmd->add_option("--out-dir", run_flags.out_dir,
                      "write records/summary here");

  auto* compare_cmd =
      app.add_subcommand("compare", "replay one admitted set everywhere");
  add_run_flags(compare_cmd, compare_flags, false);
  std::string policies_text = "aimd,batch,batch-delay,sedf";
  compare_cmd->add_option("--policies", policies_text,
                          "comma list to compare against deeprt");
  compare_cmd->add_option("--out-dir", compare_flags.out_dir,
                          "write records/summary here");

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed())
      return cmd_profile_synth(models, shapes, bases, pers, max_batches,
                               out_path, no_half_shapes);
    if (validate->parsed()) return cmd_profile_validate(validate_path);
    if (gen->parsed()) {
      tcfg.mean_period_us = static_cast<DurUs>(mean_period_ms * 1000.0);
      tcfg.mean_deadline_us = static_cast<DurUs>(mean_deadline_ms * 1000.0);
      tcfg.pool = parse_pool(pool_text);
      if (arrival_kind == "fixed")
        tcfg.arrival.kind = ArrivalModel::Kind::Fixed;
      else if (arrival_kind == "exp")
        tcfg.arrival.kind = ArrivalModel::Kind::Exponential;
      else
        throw SchedError(ErrorKind::InvalidConfig,
                         "arrival must be fixed or exp");
      tcfg.arrival.value_us = static_cast<DurUs>(arrival_ms * 1000.0);
      return cmd_trace_gen(tcfg, trace_out);
    }
    if (admit_cmd->parsed()) return cmd_admit(admit_flags);
    if (run_cmd->parsed()) return cmd_run(run_flags);
    if (compare_cmd->parsed()) return cmd_compare(compare_flags, policies_text);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
