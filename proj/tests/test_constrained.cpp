#include <doctest.h>

#include <cmath>

#include "eosim/constrained.hpp"

using namespace eosim;

namespace {
const ModelConfig kCfg = ModelConfig::make(100.0, 0.01, 0.05);
}

TEST_CASE("projected step at a hand-computed point") {
    const ConstrainedState next = pgd_step(kCfg, ConstrainedState{0.5, 0.5});
    CHECK(next.alpha == doctest::Approx(0.5001875).epsilon(1e-15));
    CHECK(next.beta2 == doctest::Approx(0.5001875).epsilon(1e-15));
    CHECK(next.alpha < kCfg.clip_alpha);
}

TEST_CASE("projected step rejects states outside the set") {
    CHECK_THROWS_AS(pgd_step(kCfg, ConstrainedState{0.5, 2.5}), PreconditionError);
    CHECK_THROWS_AS(pgd_step(kCfg, ConstrainedState{0.2, 0.5}), PreconditionError);
}

TEST_CASE("constrained decay: climb, pin, exact geometric decay") {
    const ConstrainedRun run =
        simulate_constrained(kCfg, ConstrainedState{0.5, 0.5}, 5000);
    REQUIRE(run.states.size() == 5001);
    REQUIRE(run.t_cap.has_value());
    CHECK(*run.t_cap > 0);

    for (size_t t = static_cast<size_t>(*run.t_cap); t < run.states.size(); ++t)
        CHECK(run.states[t].alpha == kCfg.clip_alpha);

    const VerificationReport rep = verify_constrained_decay(run);
    CHECK(rep.pass());
    for (const auto& c : rep.checks) CHECK(!c.skipped);

    const double ratio_ref = 0.99960004;  // (1 - 2*lambda2/lambda1)^2
    const size_t tc = static_cast<size_t>(*run.t_cap);
    for (size_t t = tc; t + 1 < run.states.size(); ++t) {
        const double l0 = constrained_loss(kCfg, run.states[t]);
        const double l1 = constrained_loss(kCfg, run.states[t + 1]);
        if (l0 == 0.0) continue;
        CHECK(std::abs(l1 / l0 - ratio_ref) / ratio_ref <= 1e-10);
    }
}

TEST_CASE("run started at the cap has no climb phase") {
    const ConstrainedRun run =
        simulate_constrained(kCfg, ConstrainedState{kCfg.clip_alpha, 0.5}, 200);
    REQUIRE(run.t_cap.has_value());
    CHECK(*run.t_cap == 0);
    const VerificationReport rep = verify_constrained_decay(run);
    CHECK(rep.pass());
    bool any_skipped = false;
    for (const auto& c : rep.checks) any_skipped = any_skipped || c.skipped;
    CHECK(any_skipped);  // climb-phase checks have nothing to look at
}

TEST_CASE("high-beta2 starts never reach the cap") {
    const ConstrainedRun run =
        simulate_constrained(kCfg, ConstrainedState{0.5, 1.9}, 5000);
    CHECK(!run.t_cap.has_value());
    for (const auto& s : run.states) CHECK(s.alpha < kCfg.clip_alpha);
    CHECK_THROWS_AS(verify_constrained_decay(run), PreconditionError);
}

TEST_CASE("constrained loss helper") {
    CHECK(constrained_loss(kCfg, ConstrainedState{0.5, 0.5}) ==
          doctest::Approx(0.0028125).epsilon(1e-15));
    CHECK(constrained_loss(kCfg, ConstrainedState{1.0, 1.0}) == 0.0);
}
