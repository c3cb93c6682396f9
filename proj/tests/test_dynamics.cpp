#include <doctest.h>

#include <cmath>

#include "eosim/dynamics.hpp"
#include "eosim/regions.hpp"

using namespace eosim;

namespace {
const ModelConfig kCfg = ModelConfig::make(100.0, 0.01, 0.05);
}

TEST_CASE("gd step at a hand-computed point") {
    const StepOutcome out = gd_step(kCfg, Params{0.5, 0.05, 0.5});
    CHECK(out.next.alpha == doctest::Approx(0.4939375).epsilon(1e-14));
    CHECK(out.next.beta1 == doctest::Approx(-0.0125).epsilon(1e-14));
    CHECK(out.next.beta2 == doctest::Approx(0.5001875).epsilon(1e-14));
    CHECK(!out.beta1_clipped);
    CHECK(!out.alpha_sign_flip);
}

TEST_CASE("clip engages exactly on magnitude") {
    // raw beta1 update: 0.2*(1 - 1.25) = -0.05, inside the cap
    const StepOutcome small = gd_step(kCfg, Params{0.5, 0.2, 0.5});
    CHECK(small.next.beta1 == doctest::Approx(-0.05).epsilon(1e-14));
    CHECK(!small.beta1_clipped);

    // raw = 0.5*(1 - 1.25) = -0.125, beyond the cap
    const StepOutcome big = gd_step(kCfg, Params{0.5, 0.5, 0.5});
    CHECK(big.next.beta1 == -kCfg.clip_beta1);
    CHECK(big.beta1_clipped);
}

TEST_CASE("floor variant keeps big updates and inflates small ones") {
    const StepOutcome big = gd_step(kCfg, Params{0.5, 0.5, 0.5}, ClipVariant::floor_at);
    CHECK(big.next.beta1 == doctest::Approx(-0.125).epsilon(1e-14));

    const StepOutcome small =
        gd_step(kCfg, Params{0.5, 0.05, 0.5}, ClipVariant::floor_at);
    CHECK(small.next.beta1 == -kCfg.clip_beta1);
}

TEST_CASE("clipped equals unclipped bitwise while the cap is inactive") {
    const Params p{0.5, 0.05, 0.5};
    const StepOutcome a = gd_step(kCfg, p);
    const StepOutcome b = gd_step_unclipped(kCfg, p);
    CHECK(a.next.alpha == b.next.alpha);
    CHECK(a.next.beta1 == b.next.beta1);
    CHECK(a.next.beta2 == b.next.beta2);
}

TEST_CASE("minimizers are fixed points of every update rule") {
    const Params p{0.8, 0.0, 1.25};
    const StepOutcome a = gd_step(kCfg, p);
    CHECK(a.next.alpha == p.alpha);
    CHECK(a.next.beta1 == p.beta1);
    CHECK(a.next.beta2 == p.beta2);
    const StepOutcome b = gd_step_unclipped(kCfg, p);
    CHECK(b.next.alpha == p.alpha);

    const GfResult flow = gf_integrate(kCfg, p);
    CHECK(flow.converged);
    CHECK(flow.steps == 0);
    CHECK(flow.terminal.alpha == p.alpha);
}

TEST_CASE("simulate records every step in order") {
    const Params p0 = sample_init_region(kCfg, 42);
    const Trajectory traj = simulate(kCfg, p0, 100);
    REQUIRE(traj.records.size() == 101);
    CHECK(!traj.diverged);
    for (long t = 0; t <= 100; ++t)
        CHECK(traj.records[static_cast<size_t>(t)].t == t);
    CHECK(traj.records[0].params.alpha == p0.alpha);
    // derived columns belong to the recorded state
    const auto& r = traj.records[50];
    CHECK(r.parts.total == loss(kCfg, r.params));
}

TEST_CASE("runaway runs stop early and are flagged") {
    const ModelConfig wild = ModelConfig::make(100.0, 0.01, 1.0, true);
    const Trajectory traj =
        simulate(wild, Params{1.0, 0.5, 1.0}, 50, StepRule::unclipped);
    CHECK(traj.diverged);
    CHECK(traj.diverged_step >= 1);
    CHECK(traj.records.size() < 51);
    for (const auto& r : traj.records) CHECK(r.params.finite());
}

TEST_CASE("non-finite input raises with the last state attached") {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(gd_step(kCfg, Params{nan, 0.0, 0.0}), DivergedStateError);
}

TEST_CASE("gradient flow conserves gamma and lands on the minimizer set") {
    const Params p0 = sample_init_region(kCfg, 7);
    const GfResult res = gf_integrate(kCfg, p0, 1e-10, 100000000, 500);
    REQUIRE(res.converged);
    CHECK(res.max_gamma_drift <= 1e-8);
    CHECK(std::abs(res.terminal.alpha * res.terminal.beta2 - 1.0) <= 1e-6);
    CHECK(std::abs(res.terminal.beta1) <= 1e-6);
    REQUIRE(res.samples.size() >= 2);
    CHECK(res.samples.front().step == 0);
    CHECK(res.samples.back().step == res.steps);

    const GfsEstimate est = gfs_analytic(kCfg, p0);
    const double numeric_phi = kCfg.lambda1 * res.terminal.alpha * res.terminal.alpha;
    CHECK(std::abs(est.phi - numeric_phi) / est.phi <= 1e-5);
}

TEST_CASE("analytic flow limit at a hand-computed point") {
    const GfsEstimate est = gfs_analytic(kCfg, Params{0.55, 0.01, 0.6});
    CHECK(est.gamma == doctest::Approx(-0.0576).epsilon(1e-12));
    CHECK(est.alpha_inf_sq == doctest::Approx(0.97161463403930681).epsilon(1e-14));
    CHECK(est.phi == doctest::Approx(97.161463403930682).epsilon(1e-14));
}

TEST_CASE("floor-variant full runs stay finite") {
    const Params p0 = sample_init_region(kCfg, 5);
    const Trajectory traj =
        simulate(kCfg, p0, 500, StepRule::clipped, ClipVariant::floor_at);
    CHECK(traj.records.size() == 501);
}
