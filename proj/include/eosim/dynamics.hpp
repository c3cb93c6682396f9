#pragma once

#include <vector>

#include "eosim/model.hpp"

namespace eosim {

// How the beta1 coordinate clip is applied. `cap` limits the magnitude,
// Clip(x, c) = sign(x)*min{|x|, c}, and is what every guarantee in this
// project assumes. `floor_at` is the variant Clip(x, c) = sign(x)*max{|x|, c};
// it is exposed for exploration only and exempts a run from verification.
enum class ClipVariant { cap, floor_at };

enum class StepRule { clipped, unclipped };

struct StepOutcome {
    Params next;
    bool beta1_clipped = false;   // the clip changed the raw beta1 update
    bool alpha_sign_flip = false; // alpha crossed zero during the step
};

// One gradient-descent step
//   alpha <- alpha - eta * dL/dalpha
//   beta1 <- Clip(beta1 - eta * dL/dbeta1, clip_beta1)
//   beta2 <- beta2 - eta * dL/dbeta2
// Throws DivergedStateError if the input is non-finite or the step produces
// a non-finite state (the error carries the last finite state).
StepOutcome gd_step(const ModelConfig& cfg, const Params& p,
                    ClipVariant variant = ClipVariant::cap);

// Same update without the beta1 clip. Prone to alpha collapse and sign
// flips once beta1 escapes; see detect_abnormal.
StepOutcome gd_step_unclipped(const ModelConfig& cfg, const Params& p);

struct TrajectoryRecord {
    long t = 0;
    Params params;
    LossParts parts;
    SharpnessInfo sharp;
    bool beta1_clipped = false;  // whether the step arriving at t clipped
};

struct Trajectory {
    ModelConfig config;
    std::vector<TrajectoryRecord> records;
    bool diverged = false;
    long diverged_step = -1;  // first unusable step when diverged
};

// Record with all derived quantities computed from (cfg, params).
TrajectoryRecord make_record(const ModelConfig& cfg, long t, const Params& p,
                             bool beta1_clipped);

// Runs `steps` updates and returns records for t = 0..steps. A non-finite
// state or |alpha| > 1e6 stops the run early with diverged set and the
// partial trajectory retained.
Trajectory simulate(const ModelConfig& cfg, const Params& p0, long steps,
                    StepRule rule = StepRule::clipped,
                    ClipVariant variant = ClipVariant::cap);

struct GfSample {
    long step = 0;    // internal integrator step
    double time = 0.0;
    Params p;
};

struct GfResult {
    Params terminal;
    bool converged = false;
    long steps = 0;
    double time = 0.0;
    double grad_inf = 0.0;        // gradient infinity-norm at the terminal state
    double max_gamma_drift = 0.0; // worst |gamma(t) - gamma(0)| seen
    std::vector<GfSample> samples;
};

// Gradient flow theta' = -grad L(theta) integrated with fixed-step classical
// RK4, h = min(1e-2, 1/(10*lambda1)), until the gradient infinity-norm falls
// below grad_tol. The quantity gamma = alpha^2 - beta1^2 - beta2^2 is exactly
// conserved by the flow, so max_gamma_drift measures integration error.
// sample_stride > 0 keeps every stride-th state (plus initial and terminal).
// Returns converged = false if max_steps runs out first.
GfResult gf_integrate(const ModelConfig& cfg, const Params& p0,
                      double grad_tol = 1e-10, long max_steps = 100000000,
                      long sample_stride = 0);

// Closed-form gradient flow solution data: gamma is conserved, the flow sends
// beta1 -> 0 and alpha*beta2 -> 1, so the limiting alpha^2 solves
// alpha_inf^2 = (gamma + sqrt(4 + gamma^2))/2 and the limiting sharpness is
// phi = max{lambda1*alpha_inf^2, lambda2*alpha_inf^2 + lambda2/alpha_inf^2}.
struct GfsEstimate {
    double gamma = 0.0;
    double alpha_inf_sq = 0.0;
    double phi = 0.0;
};

GfsEstimate gfs_analytic(const ModelConfig& cfg, const Params& p);

}  // namespace eosim
