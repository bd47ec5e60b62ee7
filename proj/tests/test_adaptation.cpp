#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "deeprt/adaptation.hpp"
#include "deeprt/error.hpp"
#include "deeprt/profile.hpp"

using namespace deeprt;

namespace {

const CategoryKey kKey{Category{"m", Shape{3, 224, 224}}, true};

ExecutionProfile profile_with_halves() {
  return synth_profile({ProfileRule{"m", Shape{3, 224, 224}, 2'000, 1'000, 8}},
                       true);
}

}  // namespace

TEST_CASE("an overrun charges its excess and drops the resolution") {
  auto profile = profile_with_halves();
  AdaptationModule adapt(profile);
  adapt.ensure(kKey);
  CHECK(adapt.effective_shape(kKey) == Shape{3, 224, 224});

  CHECK(adapt.on_completion(kKey, 5'000) == AdaptAction::Downgrade);
  CHECK(adapt.state(kKey).penalty_us == 5'000);
  CHECK(adapt.state(kKey).downgraded);
  CHECK(adapt.effective_shape(kKey) == Shape{3, 112, 112});

  // Savings pay the debt down but do not flip the state early.
  CHECK(adapt.on_completion(kKey, -3'000) == AdaptAction::None);
  CHECK(adapt.state(kKey).penalty_us == 2'000);
  CHECK(adapt.state(kKey).downgraded);

  // The payment that crosses zero restores full resolution and resets.
  CHECK(adapt.on_completion(kKey, -3'000) == AdaptAction::Restore);
  CHECK(adapt.state(kKey).penalty_us == 0);
  CHECK_FALSE(adapt.state(kKey).downgraded);
  CHECK(adapt.effective_shape(kKey) == Shape{3, 224, 224});
}

TEST_CASE("running within budget never triggers anything") {
  auto profile = profile_with_halves();
  AdaptationModule adapt(profile);
  adapt.ensure(kKey);
  CHECK(adapt.on_completion(kKey, 0) == AdaptAction::None);
  CHECK(adapt.on_completion(kKey, -4'000) == AdaptAction::None);
  CHECK(adapt.state(kKey).penalty_us == 0);
  CHECK_FALSE(adapt.state(kKey).downgraded);
}

TEST_CASE("further overruns while downgraded deepen the debt, no cascade") {
  auto profile = profile_with_halves();
  AdaptationModule adapt(profile);
  adapt.ensure(kKey);
  adapt.on_completion(kKey, 5'000);
  CHECK(adapt.on_completion(kKey, 2'000) == AdaptAction::None);
  CHECK(adapt.state(kKey).penalty_us == 7'000);
  CHECK(adapt.effective_shape(kKey) == Shape{3, 112, 112});  // one step only
}

TEST_CASE("no half-shape entry means no downgrade and no debt") {
  // Tiny spatial dims halve to zero: the category has nothing to trade.
  CategoryKey tiny{Category{"m", Shape{3, 1, 8}}, true};
  auto profile =
      synth_profile({ProfileRule{"m", Shape{3, 1, 8}, 2'000, 1'000, 8}}, true);
  AdaptationModule adapt(profile);
  adapt.ensure(tiny);
  CHECK(adapt.on_completion(tiny, 5'000) == AdaptAction::None);
  CHECK(adapt.state(tiny).penalty_us == 0);
  CHECK_FALSE(adapt.state(tiny).downgraded);

  // Same story when the profile simply lacks the half shape.
  auto bare = synth_profile(
      {ProfileRule{"m", Shape{3, 224, 224}, 2'000, 1'000, 8}}, false);
  AdaptationModule adapt2(bare);
  adapt2.ensure(kKey);
  CHECK(adapt2.on_completion(kKey, 5'000) == AdaptAction::None);
  CHECK(adapt2.state(kKey).penalty_us == 0);
}

TEST_CASE("unknown categories are rejected") {
  auto profile = profile_with_halves();
  AdaptationModule adapt(profile);
  try {
    adapt.on_completion(kKey, 1'000);
    FAIL("expected UnknownCategory");
  } catch (const SchedError& e) {
    CHECK(e.kind() == ErrorKind::UnknownCategory);
  }
  CHECK_THROWS_AS(adapt.effective_shape(kKey), SchedError);
  CHECK_FALSE(adapt.known(kKey));
}

TEST_CASE("penalty is positive exactly while downgraded, for any history") {
  auto profile = profile_with_halves();
  AdaptationModule adapt(profile);
  adapt.ensure(kKey);
  std::mt19937_64 rng(7);
  for (int i = 0; i < 10'000; ++i) {
    DurUs delta = static_cast<DurUs>(rng() % 20'001) - 10'000;
    adapt.on_completion(kKey, delta);
    const PenaltyState& st = adapt.state(kKey);
    CHECK(st.penalty_us >= 0);
    CHECK(st.downgraded == (st.penalty_us > 0));
  }
}
