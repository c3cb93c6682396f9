#include "eosim/regions.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace eosim {

namespace {

constexpr long kSampleBudget = 100000;
constexpr double kShrink = 1e-12;  // relative pullback from open endpoints

void require_finite(const Params& p, const char* where) {
    if (!p.finite()) throw DivergedStateError(std::string(where) + ": non-finite parameters", p);
}

// closed bound: satisfied when margin >= 0; strict bound: margin > 0
void check(RegionReport& rep, const char* name, double margin, bool strict = false) {
    const bool bad = strict ? !(margin > 0.0) : !(margin >= 0.0);
    if (bad) rep.violated.push_back({name, margin});
}

void finish(RegionReport& rep) { rep.member = rep.violated.empty(); }

// Deterministic uniforms built directly on the mt19937_64 stream; the
// standard distributions are implementation-defined, these are not.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    double u01() {  // [0, 1)
        return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
    }
    double uniform(double lo, double hi) { return lo + (hi - lo) * u01(); }
    double log_uniform(double lo, double hi) {
        return std::exp(uniform(std::log(lo), std::log(hi)));
    }
    bool coin() { return (eng_() & 1u) != 0; }

  private:
    std::mt19937_64 eng_;
};

double beta2_floor_init(const ModelConfig& cfg, double alpha) {
    return std::max({std::sqrt(6.0 * cfg.eta * cfg.lambda1) / 20.0,
                     3.0 / (20.0 * alpha), alpha});
}

}  // namespace

RegionReport in_init_region(const ModelConfig& cfg, const Params& p) {
    require_finite(p, "in_init_region");
    RegionReport rep;
    const double a_lo = std::sqrt(1.1 / (cfg.lambda1 * cfg.eta));
    const double a_hi = std::sqrt(2.0 / (cfg.lambda1 * cfg.eta));
    check(rep, "alpha_lower", p.alpha - a_lo);
    check(rep, "alpha_upper", a_hi - p.alpha);
    if (!(p.alpha > 0.0)) {  // the remaining bounds divide by alpha
        finish(rep);
        return rep;
    }
    check(rep, "beta2_lower", p.beta2 - beta2_floor_init(cfg, p.alpha));
    check(rep, "beta2_upper", 1.0 / p.alpha - p.beta2, /*strict=*/true);
    const double miss = 1.0 - p.alpha * p.beta2;
    const double scale = cfg.lambda2 * p.beta2 / (cfg.lambda1 * p.alpha) * miss;
    const double b1sq = p.beta1 * p.beta1;
    check(rep, "beta1_sq_lower", b1sq - scale / 500.0);
    check(rep, "beta1_sq_upper", scale - b1sq);
    finish(rep);
    return rep;
}

RegionReport in_eos_init_region(const ModelConfig& cfg, const Params& p) {
    RegionReport rep = in_init_region(cfg, p);
    check(rep, "eos_alpha_upper", std::sqrt(1.5 / (cfg.lambda1 * cfg.eta)) - p.alpha);
    if (p.alpha > 0.0) {
        check(rep, "eos_beta2_upper", 0.2 / p.alpha - p.beta2);
        const double miss = 1.0 - p.alpha * p.beta2;
        const double hi = cfg.lambda2 * p.beta2 / (50.0 * cfg.lambda1 * p.alpha) * miss;
        check(rep, "eos_beta1_sq_upper", hi - p.beta1 * p.beta1);
    }
    finish(rep);
    return rep;
}

RegionReport in_rate_free_region(double lambda1, double lambda2, const Params& p) {
    require_finite(p, "in_rate_free_region");
    RegionReport rep;
    check(rep, "alpha_lower", p.alpha - 2.0 * std::sqrt(5.0) / std::sqrt(lambda1));
    check(rep, "alpha_upper", 1.0 - p.alpha, /*strict=*/true);
    if (!(p.alpha > 0.0)) {
        finish(rep);
        return rep;
    }
    check(rep, "beta2_lower",
          p.beta2 - std::max(p.alpha, std::sqrt(3.0) / (10.0 * p.alpha)));
    check(rep, "beta2_upper", 1.0 / p.alpha - p.beta2, /*strict=*/true);
    const double miss = 1.0 - p.alpha * p.beta2;
    if (miss > 0.0) {
        const double ratio = p.beta1 * p.beta1 / miss;
        const double hi = lambda2 * p.beta2 / (lambda1 * p.alpha);
        check(rep, "beta1_ratio_lower", ratio - hi / 500.0);
        check(rep, "beta1_ratio_upper", hi - ratio);
    }
    finish(rep);
    return rep;
}

RegionReport in_constrained_region(const ModelConfig& cfg, const Params& p,
                                   double product_bound) {
    require_finite(p, "in_constrained_region");
    RegionReport rep;
    check(rep, "alpha_lower", p.alpha - 1.0 / std::sqrt(cfg.lambda1 * cfg.eta));
    check(rep, "alpha_upper", cfg.clip_alpha - p.alpha);
    if (p.beta1 != 0.0) rep.violated.push_back({"beta1_zero", -std::abs(p.beta1)});
    const double prod = p.alpha * p.beta2;
    check(rep, "product_lower", prod, /*strict=*/true);
    check(rep, "product_upper", product_bound - prod);
    finish(rep);
    return rep;
}

namespace {

// Shared triangular sampler for the initialization-style sets. The caller
// supplies the alpha interval, the beta2 interval given alpha, and the
// divisor of the beta1^2 upper bound (1 for the full region, 50 for the
// tighter subset).
template <typename Predicate, typename Beta2Window>
Params sample_triangular(const ModelConfig& cfg, std::uint64_t seed,
                         double a_lo, double a_hi, Beta2Window beta2_window,
                         double b1_divisor, Predicate member,
                         const char* region_name) {
    if (!(a_hi >= a_lo))
        throw EmptyRegionError(std::string(region_name) + ": empty alpha interval");
    Rng rng(seed);
    for (long attempt = 0; attempt < kSampleBudget; ++attempt) {
        const double alpha = rng.uniform(a_lo, a_hi);
        const auto [b2_lo, b2_hi] = beta2_window(alpha);
        if (!(b2_hi >= b2_lo)) continue;
        const double beta2 = rng.uniform(b2_lo, b2_hi);
        const double miss = 1.0 - alpha * beta2;
        const double hi = cfg.lambda2 * beta2 / (cfg.lambda1 * alpha) * miss / b1_divisor;
        const double lo = cfg.lambda2 * beta2 / (500.0 * cfg.lambda1 * alpha) * miss;
        if (!(lo > 0.0) || !(hi > lo)) continue;
        const double b1sq = rng.log_uniform(lo, hi);
        const double beta1 = rng.coin() ? std::sqrt(b1sq) : -std::sqrt(b1sq);
        const Params p{alpha, beta1, beta2};
        if (member(p)) return p;
    }
    throw EmptyRegionError(std::string(region_name) + ": sampling budget exhausted");
}

}  // namespace

Params sample_init_region(const ModelConfig& cfg, std::uint64_t seed) {
    const double a_lo = std::sqrt(1.1 / (cfg.lambda1 * cfg.eta));
    const double a_hi = std::sqrt(2.0 / (cfg.lambda1 * cfg.eta));
    return sample_triangular(
        cfg, seed, a_lo, a_hi,
        [&](double alpha) {
            return std::pair{beta2_floor_init(cfg, alpha),
                             (1.0 / alpha) * (1.0 - kShrink)};
        },
        1.0, [&](const Params& p) { return in_init_region(cfg, p).member; },
        "init_region");
}

Params sample_eos_init_region(const ModelConfig& cfg, std::uint64_t seed) {
    if (cfg.lambda1 * cfg.eta < 5.5)
        throw EmptyRegionError(
            "eos_init_region: empty (requires lambda1*eta >= 5.5; beta2 >= alpha "
            "and alpha*beta2 <= 0.2 force alpha^2 <= 0.2)");
    const double a_lo = std::sqrt(1.1 / (cfg.lambda1 * cfg.eta));
    const double a_hi = std::min({std::sqrt(1.5 / (cfg.lambda1 * cfg.eta)),
                                  std::sqrt(0.2),
                                  4.0 / std::sqrt(6.0 * cfg.lambda1 * cfg.eta)});
    return sample_triangular(
        cfg, seed, a_lo, a_hi,
        [&](double alpha) {
            return std::pair{beta2_floor_init(cfg, alpha), 0.2 / alpha};
        },
        50.0, [&](const Params& p) { return in_eos_init_region(cfg, p).member; },
        "eos_init_region");
}

Params sample_rate_free_region(double lambda1, double lambda2, std::uint64_t seed) {
    // beta1^2 windows are eta-free here, so reuse the triangular scheme with a
    // throwaway config carrying (lambda1, lambda2).
    const ModelConfig cfg = ModelConfig::make(lambda1, lambda2, 2.0 / lambda1, true);
    const double a_lo = 2.0 * std::sqrt(5.0) / std::sqrt(lambda1);
    const double a_hi = 1.0 - kShrink;
    return sample_triangular(
        cfg, seed, a_lo, a_hi,
        [&](double alpha) {
            return std::pair{std::max(alpha, std::sqrt(3.0) / (10.0 * alpha)),
                             (1.0 / alpha) * (1.0 - kShrink)};
        },
        1.0,
        [&](const Params& p) { return in_rate_free_region(lambda1, lambda2, p).member; },
        "rate_free_region");
}

Params sample_constrained_region(const ModelConfig& cfg, std::uint64_t seed,
                                 double product_bound) {
    Rng rng(seed);
    const double a_lo = 1.0 / std::sqrt(cfg.lambda1 * cfg.eta);
    const double a_hi = cfg.clip_alpha;
    for (long attempt = 0; attempt < kSampleBudget; ++attempt) {
        const double alpha = rng.uniform(a_lo, a_hi);
        const double prod = rng.uniform(product_bound * kShrink, product_bound);
        const Params p{alpha, 0.0, prod / alpha};
        if (in_constrained_region(cfg, p, product_bound).member) return p;
    }
    throw EmptyRegionError("constrained_region: sampling budget exhausted");
}

bool admits_rate_range(double lambda1, double lambda2, const Params& p,
                       std::span<const double> r_grid) {
    const RegionReport rep = in_rate_free_region(lambda1, lambda2, p);
    if (!rep.member)
        throw PreconditionError("admits_rate_range: point is not in the rate-free region");
    const double eta_star = 2.0 / (lambda1 * p.alpha * p.alpha);
    for (const double r : r_grid) {
        const ModelConfig cfg = ModelConfig::make(lambda1, lambda2, r * eta_star, true);
        const RegionReport at_r = in_init_region(cfg, p);
        if (at_r.member) continue;
        for (const ConstraintSlack& v : at_r.violated) {
            // At the grid ends the recomputed alpha / beta2 bounds coincide
            // with the membership bounds up to rounding; forgive only those.
            const bool boundary = v.name == "alpha_lower" || v.name == "alpha_upper" ||
                                  v.name == "beta2_lower";
            if (!(boundary && v.slack >= -1e-9)) return false;
        }
    }
    return true;
}

}  // namespace eosim
