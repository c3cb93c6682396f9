#include "eosim/dynamics.hpp"

#include <algorithm>
#include <cmath>

namespace eosim {

namespace {

constexpr double kAlphaRunaway = 1e6;

double clip_cap(double x, double c) {
    return std::copysign(std::min(std::abs(x), c), x);
}

double clip_floor(double x, double c) {
    return std::copysign(std::max(std::abs(x), c), x);
}

StepOutcome step_impl(const ModelConfig& cfg, const Params& p, StepRule rule,
                      ClipVariant variant) {
    if (!p.finite()) throw DivergedStateError("gd_step: non-finite state", p);
    const Vec3 g = gradient(cfg, p);
    const double raw_beta1 = p.beta1 - cfg.eta * g[1];

    StepOutcome out;
    out.next.alpha = p.alpha - cfg.eta * g[0];
    out.next.beta2 = p.beta2 - cfg.eta * g[2];
    if (rule == StepRule::clipped) {
        out.next.beta1 = (variant == ClipVariant::cap)
                             ? clip_cap(raw_beta1, cfg.clip_beta1)
                             : clip_floor(raw_beta1, cfg.clip_beta1);
        out.beta1_clipped = (out.next.beta1 != raw_beta1);
    } else {
        out.next.beta1 = raw_beta1;
    }
    out.alpha_sign_flip = p.alpha != 0.0 && out.next.alpha != 0.0 &&
                          (p.alpha > 0.0) != (out.next.alpha > 0.0);
    if (!out.next.finite())
        throw DivergedStateError("gd_step: step produced a non-finite state", p);
    return out;
}

}  // namespace

StepOutcome gd_step(const ModelConfig& cfg, const Params& p, ClipVariant variant) {
    return step_impl(cfg, p, StepRule::clipped, variant);
}

StepOutcome gd_step_unclipped(const ModelConfig& cfg, const Params& p) {
    return step_impl(cfg, p, StepRule::unclipped, ClipVariant::cap);
}

TrajectoryRecord make_record(const ModelConfig& cfg, long t, const Params& p,
                             bool beta1_clipped) {
    TrajectoryRecord rec;
    rec.t = t;
    rec.params = p;
    rec.parts = loss_parts(cfg, p);
    rec.sharp = sharpness_info(cfg, p);
    rec.beta1_clipped = beta1_clipped;
    return rec;
}

Trajectory simulate(const ModelConfig& cfg, const Params& p0, long steps,
                    StepRule rule, ClipVariant variant) {
    Trajectory traj;
    traj.config = cfg;
    traj.records.reserve(static_cast<size_t>(steps) + 1);

    Params p = p0;
    bool clipped = false;
    for (long t = 0; t <= steps; ++t) {
        if (!p.finite() || std::abs(p.alpha) > kAlphaRunaway) {
            traj.diverged = true;
            traj.diverged_step = t;
            return traj;
        }
        traj.records.push_back(make_record(cfg, t, p, clipped));
        if (t == steps) break;
        try {
            const StepOutcome out = step_impl(cfg, p, rule, variant);
            p = out.next;
            clipped = out.beta1_clipped;
        } catch (const DivergedStateError&) {
            traj.diverged = true;
            traj.diverged_step = t + 1;
            return traj;
        }
    }
    return traj;
}

GfResult gf_integrate(const ModelConfig& cfg, const Params& p0, double grad_tol,
                      long max_steps, long sample_stride) {
    if (!p0.finite()) throw DivergedStateError("gf_integrate: non-finite state", p0);
    const double h = std::min(1e-2, 1.0 / (10.0 * cfg.lambda1));
    const double l1 = cfg.lambda1, l2 = cfg.lambda2;

    double a = p0.alpha, b1 = p0.beta1, b2 = p0.beta2;
    const double gamma0 = a * a - b1 * b1 - b2 * b2;

    GfResult res;
    if (sample_stride > 0) res.samples.push_back({0, 0.0, p0});

    // negative gradient, kept local so the RK4 loop stays tight
    const auto rhs = [l1, l2](double a_, double b1_, double b2_, double& da,
                              double& db1, double& db2) {
        const double miss = 1.0 - a_ * b2_;
        da = -(l1 * b1_ * b1_ * a_ - l2 * b2_ * miss);
        db1 = -(l1 * a_ * a_ * b1_);
        db2 = l2 * a_ * miss;
    };

    long s = 0;
    for (; s < max_steps; ++s) {
        double k1a, k1b1, k1b2;
        rhs(a, b1, b2, k1a, k1b1, k1b2);
        const double ginf = std::max({std::abs(k1a), std::abs(k1b1), std::abs(k1b2)});
        if (ginf <= grad_tol) {
            res.converged = true;
            res.grad_inf = ginf;
            break;
        }

        double k2a, k2b1, k2b2;
        rhs(a + 0.5 * h * k1a, b1 + 0.5 * h * k1b1, b2 + 0.5 * h * k1b2, k2a, k2b1, k2b2);
        double k3a, k3b1, k3b2;
        rhs(a + 0.5 * h * k2a, b1 + 0.5 * h * k2b1, b2 + 0.5 * h * k2b2, k3a, k3b1, k3b2);
        double k4a, k4b1, k4b2;
        rhs(a + h * k3a, b1 + h * k3b1, b2 + h * k3b2, k4a, k4b1, k4b2);

        a += h / 6.0 * (k1a + 2.0 * k2a + 2.0 * k3a + k4a);
        b1 += h / 6.0 * (k1b1 + 2.0 * k2b1 + 2.0 * k3b1 + k4b1);
        b2 += h / 6.0 * (k1b2 + 2.0 * k2b2 + 2.0 * k3b2 + k4b2);

        if (!std::isfinite(a) || !std::isfinite(b1) || !std::isfinite(b2) ||
            std::abs(a) > kAlphaRunaway)
            throw DivergedStateError("gf_integrate: flow diverged", p0);

        const double drift = std::abs((a * a - b1 * b1 - b2 * b2) - gamma0);
        if (drift > res.max_gamma_drift) res.max_gamma_drift = drift;

        if (sample_stride > 0 && (s + 1) % sample_stride == 0)
            res.samples.push_back({s + 1, (s + 1) * h, Params{a, b1, b2}});
    }

    res.terminal = Params{a, b1, b2};
    res.steps = s;
    res.time = s * h;
    if (!res.converged) {
        double ga, gb1, gb2;
        rhs(a, b1, b2, ga, gb1, gb2);
        res.grad_inf = std::max({std::abs(ga), std::abs(gb1), std::abs(gb2)});
    }
    if (sample_stride > 0 &&
        (res.samples.empty() || res.samples.back().step != s))
        res.samples.push_back({s, s * h, res.terminal});
    return res;
}

GfsEstimate gfs_analytic(const ModelConfig& cfg, const Params& p) {
    if (!p.finite()) throw DivergedStateError("gfs_analytic: non-finite state", p);
    GfsEstimate est;
    est.gamma = p.alpha * p.alpha - p.beta1 * p.beta1 - p.beta2 * p.beta2;
    est.alpha_inf_sq = 0.5 * (est.gamma + std::sqrt(4.0 + est.gamma * est.gamma));
    est.phi = std::max(cfg.lambda1 * est.alpha_inf_sq,
                       cfg.lambda2 * est.alpha_inf_sq + cfg.lambda2 / est.alpha_inf_sq);
    return est;
}

}  // namespace eosim
