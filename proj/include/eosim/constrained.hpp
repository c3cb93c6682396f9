#pragma once

#include <optional>
#include <vector>

#include "eosim/analysis.hpp"
#include "eosim/model.hpp"

namespace eosim {

// State of the constrained dynamics: beta1 is pinned at zero and alpha is
// capped at sqrt(2/(eta*lambda1)), so only (alpha, beta2) evolve.
struct ConstrainedState {
    double alpha = 0.0;
    double beta2 = 0.0;
};

// Projected gradient step on the constrained set:
//   alpha <- min{alpha + eta*lambda2*beta2*(1 - alpha*beta2), clip_alpha}
//   beta2 <- beta2 + eta*lambda2*alpha*(1 - alpha*beta2)
// The cap is applied by exact assignment, so alpha == clip_alpha compares
// bit-exactly once reached. PreconditionError if s is outside the set.
ConstrainedState pgd_step(const ModelConfig& cfg, const ConstrainedState& s,
                          double product_bound = 1.0);

struct ConstrainedRun {
    ModelConfig config;
    std::vector<ConstrainedState> states;  // t = 0..steps
    std::optional<long> t_cap;             // first step with alpha == clip_alpha
};

ConstrainedRun simulate_constrained(const ModelConfig& cfg,
                                    const ConstrainedState& s0, long steps,
                                    double product_bound = 1.0);

// Checks the two regimes of a constrained run (PreconditionError when the
// cap was never reached):
//   before t_cap: alpha strictly increases and the loss strictly decreases
//   from t_cap on: alpha stays exactly at the cap and consecutive losses
//   satisfy loss(t+1)/loss(t) == (1 - 2*lambda2/lambda1)^2 within 1e-10
//   relative (steps at an exact zero loss are skipped as fixed points).
VerificationReport verify_constrained_decay(const ConstrainedRun& run);

// Loss restricted to the constrained set: 0.5*lambda2*(alpha*beta2 - 1)^2.
double constrained_loss(const ModelConfig& cfg, const ConstrainedState& s);

}  // namespace eosim
