#include "deeprt/adaptation.hpp"

#include "deeprt/error.hpp"

namespace deeprt {

void AdaptationModule::ensure(const CategoryKey& key) {
  states_.try_emplace(key);
}

bool AdaptationModule::can_downgrade(const CategoryKey& key) const {
  Shape half = key.category.shape.halved();
  return half.valid() &&
         profile_->contains(Category{key.category.model, half});
}

AdaptAction AdaptationModule::on_completion(const CategoryKey& key,
                                            DurUs delta_us) {
  auto it = states_.find(key);
  if (it == states_.end())
    throw SchedError(ErrorKind::UnknownCategory, key.label());
  PenaltyState& st = it->second;

  if (!st.downgraded) {
    if (delta_us <= 0) return AdaptAction::None;  // within budget
    if (!can_downgrade(key)) return AdaptAction::None;  // nothing to trade
    st.penalty_us = delta_us;
    st.downgraded = true;
    return AdaptAction::Downgrade;
  }

  st.penalty_us += delta_us;
  if (st.penalty_us <= 0) {
    st.penalty_us = 0;
    st.downgraded = false;
    return AdaptAction::Restore;
  }
  return AdaptAction::None;
}

Shape AdaptationModule::effective_shape(const CategoryKey& key) const {
  auto it = states_.find(key);
  if (it == states_.end())
    throw SchedError(ErrorKind::UnknownCategory, key.label());
  return it->second.downgraded ? key.category.shape.halved()
                               : key.category.shape;
}

const PenaltyState& AdaptationModule::state(const CategoryKey& key) const {
  auto it = states_.find(key);
  if (it == states_.end())
    throw SchedError(ErrorKind::UnknownCategory, key.label());
  return it->second;
}

}  // namespace deeprt
