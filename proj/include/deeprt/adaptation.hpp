#pragma once

#include <map>

#include "deeprt/core.hpp"
#include "deeprt/profile.hpp"

namespace deeprt {

enum class AdaptAction { None, Downgrade, Restore };

struct PenaltyState {
  DurUs penalty_us = 0;
  bool downgraded = false;
};

// Per-category overrun bookkeeping. An overrun charges its excess to the
// category's penalty and drops the batching resolution to the half shape.
// While downgraded, each completion's delta against the full-shape budget
// (negative when the cheaper shape saves time) is added to the penalty; once
// it reaches zero the debt is paid and the category returns to full
// resolution.
class AdaptationModule {
 public:
  explicit AdaptationModule(const ExecutionProfile& profile)
      : profile_(&profile) {}

  void ensure(const CategoryKey& key);

  // delta_us = actual execution minus the full-shape budget for the batch.
  AdaptAction on_completion(const CategoryKey& key, DurUs delta_us);

  // Shape to batch and look up next for this category.
  Shape effective_shape(const CategoryKey& key) const;

  const PenaltyState& state(const CategoryKey& key) const;
  bool known(const CategoryKey& key) const { return states_.count(key) > 0; }

 private:
  bool can_downgrade(const CategoryKey& key) const;

  const ExecutionProfile* profile_;
  std::map<CategoryKey, PenaltyState> states_;
};

}  // namespace deeprt
