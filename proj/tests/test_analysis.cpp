#include <doctest.h>

#include <cmath>
#include <vector>

#include "eosim/analysis.hpp"
#include "eosim/regions.hpp"

using namespace eosim;

namespace {

const ModelConfig kCfg = ModelConfig::make(100.0, 0.01, 0.05);

Trajectory make_traj(const ModelConfig& cfg, const std::vector<Params>& pts) {
    Trajectory traj;
    traj.config = cfg;
    long t = 0;
    for (const Params& p : pts) traj.records.push_back(make_record(cfg, t++, p, false));
    return traj;
}

}  // namespace

TEST_CASE("phase detection on a synthetic rise and fall") {
    const std::vector<Params> pts = {
        {0.40, 0.0, 0.30}, {0.50, 0.0, 0.35}, {0.56, 0.0, 0.40},
        {0.54, 0.0, 0.45}, {0.52, 0.0, 0.50}, {0.53, 0.0, 0.80},
    };
    const Trajectory traj = make_traj(kCfg, pts);
    const PhaseReport ph = detect_phases(traj);
    REQUIRE(ph.t1.has_value());
    CHECK(*ph.t1 == 2);  // first alpha^2 >= 1.5/(lambda1*eta) = 0.3
    REQUIRE(ph.t2.has_value());
    CHECK(*ph.t2 == 2);  // alpha peaks
    REQUIRE(ph.t3.has_value());
    CHECK(*ph.t3 == 4);  // decrease ends
    REQUIRE(ph.t4.has_value());
    CHECK(*ph.t4 == 5);  // beta2 crosses 0.5*sqrt(lambda1*eta/2)

    // spikes mirror pointwise loss increases
    std::vector<long> expect;
    for (size_t t = 1; t < traj.records.size(); ++t)
        if (traj.records[t].parts.total > traj.records[t - 1].parts.total)
            expect.push_back(static_cast<long>(t));
    CHECK(ph.spikes == expect);
}

TEST_CASE("phase detection degenerate shapes") {
    const Trajectory falling =
        make_traj(kCfg, {{0.5, 0.0, 0.3}, {0.45, 0.0, 0.3}, {0.4, 0.0, 0.3}});
    const PhaseReport ph1 = detect_phases(falling);
    CHECK(!ph1.t2.has_value());
    CHECK(!ph1.t3.has_value());

    const Trajectory rising =
        make_traj(kCfg, {{0.4, 0.0, 0.3}, {0.5, 0.0, 0.3}, {0.6, 0.0, 0.3}});
    const PhaseReport ph2 = detect_phases(rising);
    REQUIRE(ph2.t2.has_value());
    CHECK(*ph2.t2 == 2);
    CHECK(!ph2.t3.has_value());
}

TEST_CASE("parameter-structure suite passes on an in-region run") {
    const Params p0 = sample_init_region(kCfg, 1);
    const Trajectory traj = simulate(kCfg, p0, 2000);
    const VerificationReport rep = verify_param_lemma(traj);
    CHECK(rep.pass());
    for (const auto& c : rep.checks) CHECK(!c.skipped);
}

TEST_CASE("parameter-structure suite preconditions") {
    CHECK_THROWS_AS(verify_param_lemma(Trajectory{}), PreconditionError);
    const Trajectory bad = simulate(kCfg, Params{0.3, 0.001, 0.5}, 10);
    CHECK_THROWS_AS(verify_param_lemma(bad), PreconditionError);
}

TEST_CASE("sharpness bands hold along an in-region run") {
    const Params p0 = sample_init_region(kCfg, 2);
    const Trajectory traj = simulate(kCfg, p0, 2000);
    const VerificationReport rep = verify_sharpness_bands(traj, detect_phases(traj));
    CHECK(rep.pass());
}

TEST_CASE("surrogate checks hold through the crossing time") {
    const Params p0 = sample_init_region(kCfg, 62);
    const Trajectory traj = simulate(kCfg, p0, 10000);
    const PhaseReport ph = detect_phases(traj);
    REQUIRE(ph.t4.has_value());
    const VerificationReport rep = verify_lhat(traj, ph);
    CHECK(rep.pass());
    for (const auto& c : rep.checks) CHECK(!c.skipped);

    const double slope = fit_decay_slope(traj, 0, *ph.t4);
    CHECK(slope >= 2.0 * std::log(1.0 - 4.0 * kCfg.lambda2 / kCfg.lambda1) - 1e-12);
    CHECK(slope <= 2.0 * std::log(1.0 - kCfg.lambda2 / kCfg.lambda1) + 1e-12);
}

TEST_CASE("surrogate checks are skipped before the crossing time exists") {
    const Params p0 = sample_init_region(kCfg, 1);
    const Trajectory traj = simulate(kCfg, p0, 20);
    const PhaseReport ph = detect_phases(traj);
    REQUIRE(!ph.t4.has_value());
    const VerificationReport rep = verify_lhat(traj, ph);
    CHECK(rep.pass());
    for (const auto& c : rep.checks) CHECK(c.skipped);
}

TEST_CASE("slope fit preconditions") {
    const Trajectory traj = simulate(kCfg, sample_init_region(kCfg, 1), 10);
    CHECK_THROWS_AS(fit_decay_slope(traj, 3, 3), PreconditionError);
    CHECK_THROWS_AS(fit_decay_slope(traj, -1, 5), PreconditionError);
}

TEST_CASE("flow-limit envelope at a hand-computed point") {
    const GfsBounds b = gfs_bounds(kCfg, Params{0.5, 0.01, 0.5});
    CHECK(b.lower == doctest::Approx(97.531245118712803).epsilon(1e-14));
    CHECK(b.upper == doctest::Approx(133.7604910788358).epsilon(1e-14));
    CHECK(b.lower < b.upper);
}

TEST_CASE("flow-limit envelope brackets the analytic limit along a run") {
    const Params p0 = sample_init_region(kCfg, 4);
    const Trajectory traj = simulate(kCfg, p0, 2000);
    const VerificationReport rep = verify_gfs(traj);
    CHECK(rep.pass());
}

TEST_CASE("balanced initializations start sharp") {
    for (double u = 0.47; u <= 0.64; u += 0.01) {
        const GfsEstimate est = gfs_analytic(kCfg, Params{u, 1e-3, u});
        CHECK(est.phi >= 99.0);
    }
}

TEST_CASE("abnormality detector flags sign flips and collapse") {
    const ModelConfig cfg = ModelConfig::make(100.0, 0.01, 0.05, true);
    const Trajectory traj =
        make_traj(cfg, {{0.5, 0.0, 0.3}, {-0.5, 0.0, 0.3}, {0.1, 0.0, 0.3}});
    const auto events = detect_abnormal(traj, 0.1);
    int flips = 0, collapses = 0;
    for (const auto& e : events) {
        if (e.kind == AbnormalEvent::Kind::sign_flip) {
            ++flips;
            CHECK(e.step >= 1);
        } else {
            ++collapses;
            CHECK(e.step == 2);  // lambda1*eta*alpha^2 = 0.05 < 0.1
        }
    }
    CHECK(flips == 2);
    CHECK(collapses == 1);

    const Params p0 = sample_init_region(kCfg, 1);
    CHECK(detect_abnormal(simulate(kCfg, p0, 500), 0.1).empty());
}

TEST_CASE("settling time is the start of the final good suffix") {
    const Params p0 = sample_init_region(kCfg, 62);
    const Trajectory traj = simulate(kCfg, p0, 10000);
    const auto t = convergence_time(traj, 1e-4, 0.1);
    REQUIRE(t.has_value());
    const double bound = 2.1 / kCfg.eta;
    for (size_t s = static_cast<size_t>(*t); s < traj.records.size(); ++s) {
        CHECK(traj.records[s].parts.total <= 1e-4);
        CHECK(traj.records[s].sharp.value <= bound);
    }
    if (*t > 0) {
        const auto& prev = traj.records[static_cast<size_t>(*t - 1)];
        CHECK((prev.parts.total > 1e-4 || prev.sharp.value > bound));
    }
    CHECK(!convergence_time(traj, 0.0, -2.1).has_value());
}
