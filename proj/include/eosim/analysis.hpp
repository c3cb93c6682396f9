#pragma once

#include <optional>
#include <string>
#include <vector>

#include "eosim/dynamics.hpp"

namespace eosim {

// Phase markers read off a trajectory:
//   t1: first step with lambda1*eta*alpha^2 >= 1.5 (sharpening threshold)
//   t2: end of the maximal strict increase run of alpha starting at t = 0
//   t3: end of the maximal strict decrease run of alpha starting right after t2
//   t4: first step with beta2 >= 0.5*sqrt(lambda1*eta/2) (surrogate window end)
//   spikes: every step whose loss exceeds the previous one
struct PhaseReport {
    std::optional<long> t1, t2, t3, t4;
    std::vector<long> spikes;
};

PhaseReport detect_phases(const Trajectory& traj);

// One verified bound. worst is the smallest signed margin observed over the
// checked range (negative beyond the allowed slack means failure), and
// first_violation the step where the margin first went below the slack.
struct CheckResult {
    std::string name;
    std::string bound;
    bool pass = true;
    bool skipped = false;
    std::string note;
    double worst = 0.0;
    long first_violation = -1;
};

struct VerificationReport {
    std::vector<CheckResult> checks;
    bool pass() const;
};

// Per-step structure checks, valid for clipped runs started inside the
// initialization region (PreconditionError otherwise):
//   lambda1*alpha^2 <= sharpness <= 1.12*lambda1*alpha^2
//   |cos(top eigenvector, beta1 axis)| > 0.9
//   beta2 strictly increasing
// Band checks allow additive slack 1e-9 times the bound magnitude;
// monotonicity is strict float comparison.
VerificationReport verify_param_lemma(const Trajectory& traj);

// Sharpness band accounting around the threshold crossing t1:
//   before t1: sharpness in [1.1/eta, 1.7/eta], alpha strictly increasing
//   from t1 on: sharpness in [1.5/eta, 4.71/eta], lambda1*eta*alpha^2 in [1.5, 4.2]
// If t1 is absent the pre-threshold band is applied to the whole trajectory.
VerificationReport verify_sharpness_bands(const Trajectory& traj,
                                          const PhaseReport& phases);

// Surrogate loss checks on t <= t4. lhat carries no lambda2 weight, so the
// sandwich compares the weighted value:
//   0.75*l2 <= lambda2*lhat <= 3.3*l2, tightening to lambda2*lhat <= l2 when
//   alpha <= sqrt(2/(lambda1*eta)); per-step ratio lhat(t+1)/lhat(t) in
//   [(1-4*lambda2/lambda1)^2, (1-lambda2/lambda1)^2] for t < t4.
// Skipped with a notice when t4 was not reached or the window is empty.
VerificationReport verify_lhat(const Trajectory& traj, const PhaseReport& phases);

// Least-squares slope of log(lhat) against t over records [lo, hi] inclusive.
// Throws PreconditionError when the window has fewer than two records or
// lhat is not strictly positive inside it.
double fit_decay_slope(const Trajectory& traj, long lo, long hi);

// Envelope for the limiting gradient flow sharpness as a function of beta2:
//   lower = (1 - lambda1*eta*beta2^2)/(2*eta)
//           + lambda1*sqrt(4 + (1/(eta*lambda1) - beta2^2)^2)/2
//   upper = (4.2 - lambda1*eta*beta2^2)/(2*eta)
//           + lambda1*sqrt(4 + (4.2/(eta*lambda1) - beta2^2)^2)/2
struct GfsBounds {
    double lower = 0.0;
    double upper = 0.0;
};

GfsBounds gfs_bounds(const ModelConfig& cfg, const Params& p);

// Checks that the analytic flow estimate phi stays inside gfs_bounds at every
// record and that both bound sequences are nonincreasing along the run.
VerificationReport verify_gfs(const Trajectory& traj);

// Pathologies of the unclipped dynamics: alpha sign flips between consecutive
// records and the first collapse of lambda1*eta*alpha^2 below the threshold.
struct AbnormalEvent {
    enum class Kind { sign_flip, collapse };
    Kind kind;
    long step = 0;
};

std::vector<AbnormalEvent> detect_abnormal(const Trajectory& traj,
                                           double collapse_threshold = 0.1);

// First step T such that loss <= eps and sharpness <= (2 + delta)/eta hold at
// every step from T on; nullopt when the run never settles.
std::optional<long> convergence_time(const Trajectory& traj, double eps,
                                     double delta);

}  // namespace eosim
