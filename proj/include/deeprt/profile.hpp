#pragma once

#include <filesystem>
#include <map>
#include <vector>

#include "deeprt/core.hpp"

namespace deeprt {

// Worst-case execution times per (model, shape), indexed by batch size.
// Entries must be dense from batch 1 to max_batch and non-decreasing in the
// batch size: a larger batch can never be profiled as strictly faster.
class ExecutionProfile {
 public:
  bool contains(const Category& category) const;
  int max_batch(const Category& category) const;      // throws UnknownCategory
  DurUs wcet_us(const Category& category, int batch) const;

  // wcets[i] is the WCET for batch i+1. Throws DuplicateCategory,
  // MonotonicityViolation, or InvalidConfig.
  void insert(const Category& category, std::vector<DurUs> wcets);

  bool empty() const { return tables_.empty(); }
  std::size_t category_count() const { return tables_.size(); }
  const std::map<Category, std::vector<DurUs>>& tables() const {
    return tables_;
  }

  bool operator==(const ExecutionProfile&) const = default;

 private:
  std::map<Category, std::vector<DurUs>> tables_;
};

// Synthetic profile source: wcet(b) = base + b * per_frame.
struct ProfileRule {
  std::string model;
  Shape shape;
  DurUs base_us = 0;
  DurUs per_frame_us = 0;
  int max_batch = 0;
};

// Builds affine tables from rules. When with_half_shapes is set, each rule
// also emits the floor-halved shape with per-frame cost divided by 4 (pixel
// count drops 4x), so resolution downgrades have somewhere to land. Halved
// entries are skipped when a dimension would reach zero or when the rule set
// already covers the halved shape explicitly.
ExecutionProfile synth_profile(const std::vector<ProfileRule>& rules,
                               bool with_half_shapes = true);

// JSON-lines persistence, one record per (model, shape, batch).
ExecutionProfile load_profile(const std::filesystem::path& path);
void save_profile(const ExecutionProfile& profile,
                  const std::filesystem::path& path);

}  // namespace deeprt
