#include "eosim/constrained.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "eosim/regions.hpp"

namespace eosim {

namespace {

double sq(double x) { return x * x; }

}  // namespace

double constrained_loss(const ModelConfig& cfg, const ConstrainedState& s) {
    return 0.5 * cfg.lambda2 * sq(s.alpha * s.beta2 - 1.0);
}

ConstrainedState pgd_step(const ModelConfig& cfg, const ConstrainedState& s,
                          double product_bound) {
    const Params as_params{s.alpha, 0.0, s.beta2};
    if (!in_constrained_region(cfg, as_params, product_bound).member)
        throw PreconditionError("pgd_step: state is outside the constrained set");
    const double miss = 1.0 - s.alpha * s.beta2;
    ConstrainedState next;
    next.alpha = std::min(s.alpha + cfg.eta * cfg.lambda2 * s.beta2 * miss,
                          cfg.clip_alpha);
    next.beta2 = s.beta2 + cfg.eta * cfg.lambda2 * s.alpha * miss;
    return next;
}

ConstrainedRun simulate_constrained(const ModelConfig& cfg,
                                    const ConstrainedState& s0, long steps,
                                    double product_bound) {
    ConstrainedRun run;
    run.config = cfg;
    run.states.reserve(static_cast<size_t>(steps) + 1);
    ConstrainedState s = s0;
    for (long t = 0; t <= steps; ++t) {
        if (!std::isfinite(s.alpha) || !std::isfinite(s.beta2))
            throw DivergedStateError("simulate_constrained: non-finite state",
                                     Params{s.alpha, 0.0, s.beta2});
        run.states.push_back(s);
        if (!run.t_cap.has_value() && s.alpha == cfg.clip_alpha) run.t_cap = t;
        if (t == steps) break;
        s = pgd_step(cfg, s, product_bound);
    }
    return run;
}

VerificationReport verify_constrained_decay(const ConstrainedRun& run) {
    if (!run.t_cap.has_value())
        throw PreconditionError("verify_constrained_decay: alpha never reached the cap");
    const ModelConfig& cfg = run.config;
    const long tc = *run.t_cap;
    const long n = static_cast<long>(run.states.size());
    const double ratio_ref = sq(1.0 - 2.0 * cfg.lambda2 / cfg.lambda1);

    CheckResult rise;
    rise.name = "pre_cap_alpha_increasing";
    rise.bound = "alpha(t+1) > alpha(t) for t < t_cap";
    CheckResult fall;
    fall.name = "pre_cap_loss_decreasing";
    fall.bound = "loss(t+1) < loss(t) for t < t_cap";
    CheckResult pinned;
    pinned.name = "post_cap_alpha_pinned";
    pinned.bound = "alpha(t) == clip_alpha for t >= t_cap";
    CheckResult decay;
    decay.name = "post_cap_decay_ratio";
    decay.bound =
        "loss(t+1)/loss(t) == (1-2*lambda2/lambda1)^2 within 1e-10 relative";
    rise.worst = fall.worst = std::numeric_limits<double>::infinity();
    decay.worst = 0.0;  // worst relative ratio error

    for (long t = 0; t + 1 <= tc; ++t) {
        const double da = run.states[t + 1].alpha - run.states[t].alpha;
        if (da < rise.worst) rise.worst = da;
        if (!(da > 0.0) && rise.first_violation < 0) rise.first_violation = t + 1;
        const double dl = constrained_loss(cfg, run.states[t]) -
                          constrained_loss(cfg, run.states[t + 1]);
        if (dl < fall.worst) fall.worst = dl;
        if (!(dl > 0.0) && fall.first_violation < 0) fall.first_violation = t + 1;
    }
    if (tc == 0) {
        rise.skipped = fall.skipped = true;
        rise.note = fall.note = "cap reached at t = 0";
        rise.worst = fall.worst = 0.0;
    }

    long ratio_obs = 0;
    for (long t = tc; t < n; ++t) {
        if (run.states[t].alpha != cfg.clip_alpha && pinned.first_violation < 0)
            pinned.first_violation = t;
        if (t + 1 < n) {
            const double l0 = constrained_loss(cfg, run.states[t]);
            if (l0 == 0.0) continue;  // fixed point
            const double q = constrained_loss(cfg, run.states[t + 1]) / l0;
            const double err = std::abs(q - ratio_ref) / ratio_ref;
            if (err > decay.worst) decay.worst = err;
            if (err > 1e-10 && decay.first_violation < 0) decay.first_violation = t;
            ++ratio_obs;
        }
    }
    if (ratio_obs == 0) {
        decay.skipped = true;
        decay.note = "no capped ratio observations";
    }
    decay.worst = ratio_obs == 0 ? 0.0 : 1e-10 - decay.worst;

    rise.pass = rise.first_violation < 0;
    fall.pass = fall.first_violation < 0;
    pinned.pass = pinned.first_violation < 0;
    decay.pass = decay.first_violation < 0;

    VerificationReport rep;
    rep.checks = {rise, fall, pinned, decay};
    return rep;
}

}  // namespace eosim
