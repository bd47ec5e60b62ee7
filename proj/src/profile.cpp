#include "deeprt/profile.hpp"

#include <fstream>
#include <set>

#include <json.hpp>

#include "deeprt/error.hpp"

namespace deeprt {

bool ExecutionProfile::contains(const Category& category) const {
  return tables_.count(category) > 0;
}

int ExecutionProfile::max_batch(const Category& category) const {
  auto it = tables_.find(category);
  if (it == tables_.end())
    throw SchedError(ErrorKind::UnknownCategory, category.label());
  return static_cast<int>(it->second.size());
}

DurUs ExecutionProfile::wcet_us(const Category& category, int batch) const {
  auto it = tables_.find(category);
  if (it == tables_.end())
    throw SchedError(ErrorKind::UnknownCategory, category.label());
  if (batch < 1 || static_cast<std::size_t>(batch) > it->second.size())
    throw SchedError(ErrorKind::BatchTooLarge,
                     category.label() + " batch " + std::to_string(batch) +
                         " (profiled up to " +
                         std::to_string(it->second.size()) + ")");
  return it->second[static_cast<std::size_t>(batch) - 1];
}

void ExecutionProfile::insert(const Category& category,
                              std::vector<DurUs> wcets) {
  if (category.model.empty() || !category.shape.valid())
    throw SchedError(ErrorKind::InvalidConfig,
                     "profile entry with invalid category");
  if (wcets.empty())
    throw SchedError(ErrorKind::InvalidConfig,
                     category.label() + " has no batch entries");
  if (tables_.count(category))
    throw SchedError(ErrorKind::DuplicateCategory, category.label());
  DurUs prev = 0;
  for (std::size_t i = 0; i < wcets.size(); ++i) {
    if (wcets[i] <= 0)
      throw SchedError(ErrorKind::InvalidConfig,
                       category.label() + " batch " + std::to_string(i + 1) +
                           " has non-positive wcet");
    if (wcets[i] < prev)
      throw SchedError(ErrorKind::MonotonicityViolation,
                       category.label() + " wcet(" + std::to_string(i + 1) +
                           ") < wcet(" + std::to_string(i) + ")");
    prev = wcets[i];
  }
  tables_.emplace(category, std::move(wcets));
}

ExecutionProfile synth_profile(const std::vector<ProfileRule>& rules,
                               bool with_half_shapes) {
  std::set<Category> explicit_full;
  for (const auto& r : rules) explicit_full.insert(Category{r.model, r.shape});

  ExecutionProfile profile;
  auto emit = [&profile](const std::string& model, const Shape& shape,
                         DurUs base, DurUs per, int max_batch) {
    std::vector<DurUs> wcets;
    wcets.reserve(static_cast<std::size_t>(max_batch));
    for (int b = 1; b <= max_batch; ++b) wcets.push_back(base + DurUs{b} * per);
    profile.insert(Category{model, shape}, std::move(wcets));
  };

  for (const auto& r : rules) {
    if (r.max_batch < 1)
      throw SchedError(ErrorKind::InvalidConfig,
                       r.model + " rule has max_batch < 1");
    if (r.base_us < 0 || r.per_frame_us < 0 ||
        r.base_us + r.per_frame_us <= 0)
      throw SchedError(ErrorKind::InvalidConfig,
                       r.model + " rule has non-positive costs");
    emit(r.model, r.shape, r.base_us, r.per_frame_us, r.max_batch);
  }
  if (with_half_shapes) {
    for (const auto& r : rules) {
      Shape half = r.shape.halved();
      if (!half.valid()) continue;
      if (explicit_full.count(Category{r.model, half})) continue;
      DurUs per = std::max<DurUs>(1, r.per_frame_us / 4);
      emit(r.model, half, r.base_us, per, r.max_batch);
    }
  }
  return profile;
}

ExecutionProfile load_profile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in)
    throw SchedError(ErrorKind::ParseError, "cannot open " + path.string());

  // Collect rows first; batches may appear in any order but must end up
  // dense.
  std::map<Category, std::map<int, DurUs>> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
      Category cat{j.at("model").get<std::string>(),
                   Shape{j.at("shape").at(0).get<int>(),
                         j.at("shape").at(1).get<int>(),
                         j.at("shape").at(2).get<int>()}};
      int batch = j.at("batch_size").get<int>();
      DurUs wcet = j.at("wcet_us").get<DurUs>();
      if (batch < 1)
        throw SchedError(ErrorKind::ParseError, "batch_size < 1");
      if (!rows[cat].emplace(batch, wcet).second)
        throw SchedError(ErrorKind::DuplicateCategory,
                         cat.label() + " batch " + std::to_string(batch) +
                             " repeated at " + path.string() + ":" +
                             std::to_string(line_no));
    } catch (const nlohmann::json::exception& e) {
      throw SchedError(ErrorKind::ParseError,
                       path.string() + ":" + std::to_string(line_no) + ": " +
                           e.what());
    }
  }

  ExecutionProfile profile;
  for (auto& [cat, by_batch] : rows) {
    std::vector<DurUs> wcets;
    int expect = 1;
    for (auto& [batch, wcet] : by_batch) {
      if (batch != expect)
        throw SchedError(ErrorKind::ParseError,
                         cat.label() + " is missing batch " +
                             std::to_string(expect) + " in " + path.string());
      wcets.push_back(wcet);
      ++expect;
    }
    try {
      profile.insert(cat, std::move(wcets));
    } catch (const SchedError& e) {
      throw SchedError(e.kind(), std::string(e.what()) + " in " +
                                     path.string());
    }
  }
  return profile;
}

void save_profile(const ExecutionProfile& profile,
                  const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out)
    throw SchedError(ErrorKind::InvalidConfig,
                     "cannot write " + path.string());
  for (const auto& [cat, wcets] : profile.tables()) {
    for (std::size_t i = 0; i < wcets.size(); ++i) {
      nlohmann::ordered_json j;
      j["model"] = cat.model;
      j["shape"] = {cat.shape.channels, cat.shape.height, cat.shape.width};
      j["batch_size"] = i + 1;
      j["wcet_us"] = wcets[i];
      out << j.dump() << "\n";
    }
  }
}

}  // namespace deeprt
