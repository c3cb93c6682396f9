#include <doctest.h>

#include <cmath>

#include "eosim/model.hpp"
#include "oracles.hpp"

using namespace eosim;

namespace {
const ModelConfig kCfg = ModelConfig::make(100.0, 0.01, 0.05);
}

TEST_CASE("config validation enforces the regime the guarantees need") {
    CHECK_THROWS_AS(ModelConfig::make(50.0, 0.01, 0.05), ConfigError);
    CHECK_THROWS_AS(ModelConfig::make(100.0, 0.02, 0.05), ConfigError);
    CHECK_THROWS_AS(ModelConfig::make(100.0, 0.01, 0.2), ConfigError);
    CHECK_THROWS_AS(ModelConfig::make(100.0, 0.01, 0.001), ConfigError);
    CHECK_THROWS_AS(ModelConfig::make(-1.0, 0.01, 0.05), ConfigError);
    CHECK_NOTHROW(ModelConfig::make(50.0, 0.02, 0.2, true));
    CHECK_THROWS_AS(ModelConfig::make(-1.0, 0.01, 0.05, true), ConfigError);

    const ModelConfig edge = ModelConfig::make(100.0, 0.01, 0.02);
    CHECK(edge.eta == 2.0 / edge.lambda1);
}

TEST_CASE("derived clip thresholds") {
    CHECK(kCfg.clip_beta1 == doctest::Approx(0.05270462766947299).epsilon(1e-15));
    CHECK(kCfg.clip_beta1 ==
          doctest::Approx(std::sqrt(10.0 / (36.0 * 100.0))).epsilon(1e-15));
    CHECK(kCfg.clip_alpha == doctest::Approx(0.6324555320336759).epsilon(1e-15));
}

TEST_CASE("loss parts at a hand-computed point") {
    const Params p{0.5, 0.05, 0.5};
    const LossParts parts = loss_parts(kCfg, p);
    CHECK(parts.l1 == doctest::Approx(0.03125).epsilon(1e-15));
    CHECK(parts.l2 == doctest::Approx(0.0028125).epsilon(1e-15));
    CHECK(parts.total == doctest::Approx(0.0340625).epsilon(1e-15));
    CHECK(parts.total == loss(kCfg, p));
    CHECK(parts.lhat == doctest::Approx(0.23377223398316206).epsilon(1e-15));
}

TEST_CASE("gradient at a hand-computed point and at a minimizer") {
    const Vec3 g = gradient(kCfg, Params{0.5, 0.05, 0.5});
    CHECK(g[0] == doctest::Approx(0.12125).epsilon(1e-15));
    CHECK(g[1] == doctest::Approx(1.25).epsilon(1e-15));
    CHECK(g[2] == doctest::Approx(-0.00375).epsilon(1e-15));

    const Vec3 z = gradient(kCfg, Params{0.8, 0.0, 1.25});
    CHECK(z[0] == 0.0);
    CHECK(z[1] == 0.0);
    CHECK(z[2] == 0.0);
}

TEST_CASE("hessian entries at a hand-computed point") {
    const Mat3 h = hessian(kCfg, Params{0.5, 0.05, 0.5});
    CHECK(h[0][0] == doctest::Approx(0.2525).epsilon(1e-15));
    CHECK(h[0][1] == doctest::Approx(5.0).epsilon(1e-15));
    CHECK(h[0][2] == doctest::Approx(-0.005).epsilon(1e-15));
    CHECK(h[1][1] == doctest::Approx(25.0).epsilon(1e-15));
    CHECK(h[1][2] == 0.0);
    CHECK(h[2][2] == doctest::Approx(0.0025).epsilon(1e-15));
    CHECK(h[0][1] == h[1][0]);
    CHECK(h[0][2] == h[2][0]);
    CHECK(h[1][2] == h[2][1]);
}

TEST_CASE("gradient matches central finite differences") {
    oracles::TestRng rng(7);
    for (int i = 0; i < 100; ++i) {
        const Params p{rng.uniform(0.1, 3.0), rng.uniform(-0.1, 0.1),
                       rng.uniform(0.1, 3.0)};
        const Vec3 g = gradient(kCfg, p);
        const auto fd = oracles::fd_gradient(kCfg, p);
        for (int k = 0; k < 3; ++k) {
            const double scale = std::max(1.0, std::abs(fd[k]));
            CHECK(std::abs(g[k] - fd[k]) / scale <= 1e-6);
        }
    }
}

TEST_CASE("hessian matches differentiated gradient") {
    oracles::TestRng rng(11);
    for (int i = 0; i < 100; ++i) {
        const Params p{rng.uniform(0.1, 3.0), rng.uniform(-0.1, 0.1),
                       rng.uniform(0.1, 3.0)};
        const Mat3 h = hessian(kCfg, p);
        const Mat3 fd = oracles::fd_hessian(kCfg, p);
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) CHECK(std::abs(h[r][c] - fd[r][c]) <= 1e-5);
    }
}

TEST_CASE("sharpness against the power-iteration oracle") {
    oracles::TestRng rng(13);
    for (int i = 0; i < 200; ++i) {
        const Params p{rng.uniform(0.1, 3.0), rng.uniform(-0.1, 0.1),
                       rng.uniform(0.1, 3.0)};
        const SharpnessInfo s = sharpness_info(kCfg, p);
        const auto pw = oracles::power_iteration(hessian(kCfg, p));
        CHECK(std::abs(s.value - pw.value) / std::max(1.0, std::abs(pw.value)) <=
              1e-9);
        CHECK(std::abs(s.cos_beta1 - std::abs(pw.vec[1])) <= 1e-7);
    }
}

TEST_CASE("sharpness at a beta1 = 0 point is the alpha block eigenvalue") {
    const SharpnessInfo s = sharpness_info(kCfg, Params{0.6, 0.0, 5.0 / 3.0});
    CHECK(s.value == doctest::Approx(36.0).epsilon(1e-13));
    CHECK(s.cos_beta1 == 1.0);
    CHECK(!s.degenerate);
}

TEST_CASE("zero point has a well-defined sharpness") {
    const SharpnessInfo s = sharpness_info(kCfg, Params{0.0, 0.0, 0.0});
    CHECK(s.value == doctest::Approx(kCfg.lambda2).epsilon(1e-12));
    CHECK(std::isfinite(s.cos_beta1));
}

TEST_CASE("non-finite parameters are rejected") {
    const double inf = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(loss(kCfg, Params{inf, 0.0, 0.0}), DivergedStateError);
    CHECK_THROWS_AS(gradient(kCfg, Params{0.0, inf, 0.0}), DivergedStateError);
}
