#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "eosim/model.hpp"

namespace eosim {

// One violated constraint: slack is the signed margin (negative or, for a
// strict bound, nonpositive means violated; the value reported is how far
// inside the bound the point would need to move).
struct ConstraintSlack {
    std::string name;
    double slack = 0.0;
};

struct RegionReport {
    bool member = false;
    std::vector<ConstraintSlack> violated;
};

// The gradient-descent initialization region. Membership means
//   sqrt(1.1/(lambda1*eta)) <= alpha <= sqrt(2/(lambda1*eta))
//   max{sqrt(6*eta*lambda1)/20, 3/(20*alpha), alpha} <= beta2 < 1/alpha
//   (lambda2*beta2/(500*lambda1*alpha))*(1-alpha*beta2)
//       <= beta1^2 <= (lambda2*beta2/(lambda1*alpha))*(1-alpha*beta2)
// Strict bounds are enforced with zero tolerance.
RegionReport in_init_region(const ModelConfig& cfg, const Params& p);

// Subset of the initialization region from which the rise/fall cycle around
// the stability threshold provably plays out: additionally
//   alpha <= sqrt(1.5/(lambda1*eta)), beta2 <= 0.2/alpha,
//   beta1^2 <= (lambda2*beta2/(50*lambda1*alpha))*(1-alpha*beta2).
// Nonempty only when lambda1*eta >= 5.5 (beta2 >= alpha and
// alpha*beta2 <= 0.2 force alpha^2 <= 0.2).
RegionReport in_eos_init_region(const ModelConfig& cfg, const Params& p);

// Step-size-free initialization set: members land in the initialization
// region simultaneously for every eta = 2r/(lambda1*alpha^2), r in [0.55, 1].
//   2*sqrt(5)/sqrt(lambda1) <= alpha < 1
//   max{alpha, sqrt(3)/(10*alpha)} <= beta2 < 1/alpha
//   lambda2*beta2/(500*lambda1*alpha) <= beta1^2/(1-alpha*beta2)
//       <= lambda2*beta2/(lambda1*alpha)
RegionReport in_rate_free_region(double lambda1, double lambda2, const Params& p);

// Set carrying the constrained (capped-alpha) dynamics:
//   1/sqrt(lambda1*eta) <= alpha <= sqrt(2/(lambda1*eta)),
//   beta1 == 0 exactly, 0 < alpha*beta2 <= product_bound.
RegionReport in_constrained_region(const ModelConfig& cfg, const Params& p,
                                   double product_bound = 1.0);

// Seeded samplers for the sets above. Sampling is triangular: alpha uniform
// over its interval, beta2 uniform over its interval given alpha, beta1^2
// log-uniform over its interval given both, beta1 sign from one extra bit.
// Open endpoints are shrunk by 1e-12 relative before drawing. Each draw is
// validated against the membership predicate and redrawn if boundary rounding
// pushed it outside; EmptyRegionError is raised after 1e5 failed draws or
// when the region is provably empty.
Params sample_init_region(const ModelConfig& cfg, std::uint64_t seed);
Params sample_eos_init_region(const ModelConfig& cfg, std::uint64_t seed);
Params sample_rate_free_region(double lambda1, double lambda2, std::uint64_t seed);
Params sample_constrained_region(const ModelConfig& cfg, std::uint64_t seed,
                                 double product_bound = 1.0);

// True when p (which must be in the rate-free region) lies in the
// initialization region for every eta = r * 2/(lambda1*alpha^2), r in r_grid.
// Bounds that coincide with the membership bounds at the grid ends are
// compared with a 1e-9 grace so rounding cannot flip the answer.
bool admits_rate_range(double lambda1, double lambda2, const Params& p,
                       std::span<const double> r_grid);

}  // namespace eosim
