#include "eosim/model.hpp"

#include <algorithm>
#include <cmath>

namespace eosim {

namespace {

double sq(double x) { return x * x; }

void require_finite(const Params& p, const char* where) {
    if (!p.finite()) throw DivergedStateError(std::string(where) + ": non-finite parameters", p);
}

double norm3(const Vec3& v) {
    return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
}

Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0]};
}

// Normalize, snapping exact axis vectors so that e.g. (0, x, 0) maps to
// (0, +-1, 0) bit-exactly rather than 1 +- one ulp.
Vec3 unit(const Vec3& v) {
    const bool z0 = v[0] == 0.0, z1 = v[1] == 0.0, z2 = v[2] == 0.0;
    if (z1 && z2) return {v[0] > 0 ? 1.0 : -1.0, 0.0, 0.0};
    if (z0 && z2) return {0.0, v[1] > 0 ? 1.0 : -1.0, 0.0};
    if (z0 && z1) return {0.0, 0.0, v[2] > 0 ? 1.0 : -1.0};
    const double n = norm3(v);
    return {v[0] / n, v[1] / n, v[2] / n};
}

Vec3 mat_vec(const Mat3& m, const Vec3& v) {
    return {m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
            m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
            m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2]};
}

double rayleigh(const Mat3& m, const Vec3& v) {
    const Vec3 mv = mat_vec(m, v);
    return v[0] * mv[0] + v[1] * mv[1] + v[2] * mv[2];
}

double residual(const Mat3& m, const Vec3& v, double lambda) {
    const Vec3 mv = mat_vec(m, v);
    return norm3({mv[0] - lambda * v[0], mv[1] - lambda * v[1], mv[2] - lambda * v[2]});
}

double max_abs_entry(const Mat3& m) {
    double s = 0.0;
    for (const auto& row : m)
        for (double x : row) s = std::max(s, std::abs(x));
    return s;
}

// Eigenvalues of a symmetric 3x3 matrix, descending, via the trigonometric
// solution of the characteristic cubic.
std::array<double, 3> sym3_eigenvalues(const Mat3& m) {
    const double p1 = sq(m[0][1]) + sq(m[0][2]) + sq(m[1][2]);
    if (p1 == 0.0) {
        std::array<double, 3> d{m[0][0], m[1][1], m[2][2]};
        std::sort(d.begin(), d.end(), std::greater<double>());
        return d;
    }
    const double q = (m[0][0] + m[1][1] + m[2][2]) / 3.0;
    const double d0 = m[0][0] - q, d1 = m[1][1] - q, d2 = m[2][2] - q;
    const double p2 = sq(d0) + sq(d1) + sq(d2) + 2.0 * p1;
    const double p = std::sqrt(p2 / 6.0);
    // B = (m - q*I)/p, r = det(B)/2, clamped against rounding
    const double b00 = d0 / p, b11 = d1 / p, b22 = d2 / p;
    const double b01 = m[0][1] / p, b02 = m[0][2] / p, b12 = m[1][2] / p;
    const double detb = b00 * (b11 * b22 - b12 * b12)
                      - b01 * (b01 * b22 - b12 * b02)
                      + b02 * (b01 * b12 - b11 * b02);
    const double r = std::clamp(detb / 2.0, -1.0, 1.0);
    constexpr double two_pi_3 = 2.0943951023931953;  // 2*pi/3
    const double phi = std::acos(r) / 3.0;
    const double e1 = q + 2.0 * p * std::cos(phi);
    const double e3 = q + 2.0 * p * std::cos(phi + two_pi_3);
    const double e2 = 3.0 * q - e1 - e3;
    return {e1, e2, e3};
}

// Eigenvector for an eigenvalue of a symmetric 3x3 matrix via the largest
// cross product of rows of (m - lambda*I). Falls back to row-orthogonal
// candidates when the shifted matrix has rank <= 1 (degenerate eigenvalue);
// the fallback prefers the direction with the largest beta1 component.
Vec3 sym3_eigenvector(const Mat3& m, double lambda, double scale) {
    const Vec3 r0{m[0][0] - lambda, m[0][1], m[0][2]};
    const Vec3 r1{m[1][0], m[1][1] - lambda, m[1][2]};
    const Vec3 r2{m[2][0], m[2][1], m[2][2] - lambda};
    const Vec3 c01 = cross(r0, r1), c02 = cross(r0, r2), c12 = cross(r1, r2);
    const double n01 = norm3(c01), n02 = norm3(c02), n12 = norm3(c12);
    const double best = std::max({n01, n02, n12});
    const double tiny = 1e-14 * scale * scale;
    if (best > tiny) {
        if (n01 == best) return unit(c01);
        if (n02 == best) return unit(c02);
        return unit(c12);
    }
    // rank <= 1: the eigenspace is (near) a plane orthogonal to the largest row
    const double m0 = norm3(r0), m1 = norm3(r1), m2 = norm3(r2);
    const double rbest = std::max({m0, m1, m2});
    if (rbest <= 1e-14 * scale) return {0.0, 1.0, 0.0};  // m ~ lambda*I
    Vec3 n = (m0 == rbest) ? r0 : (m1 == rbest) ? r1 : r2;
    n = unit(n);
    const Vec3 u{-n[0] * n[1], 1.0 - n[1] * n[1], -n[2] * n[1]};  // e2 projected onto the plane
    if (norm3(u) > 1e-6) return unit(u);
    const Vec3 w{1.0 - n[0] * n[0], -n[1] * n[0], -n[2] * n[0]};
    return unit(w);
}

}  // namespace

bool Params::finite() const {
    return std::isfinite(alpha) && std::isfinite(beta1) && std::isfinite(beta2);
}

ModelConfig ModelConfig::make(double lambda1, double lambda2, double eta,
                              bool allow_out_of_theory) {
    if (!(lambda1 > 0.0) || !(lambda2 > 0.0) || !(eta > 0.0))
        throw ConfigError("lambda1, lambda2 and eta must be positive");
    if (!allow_out_of_theory) {
        if (lambda1 < 100.0)
            throw ConfigError("lambda1 must be >= 100 (set allow_out_of_theory to override)");
        if (lambda1 * lambda2 > 1.0)
            throw ConfigError("lambda1*lambda2 must be <= 1 (set allow_out_of_theory to override)");
        if (eta < 2.0 / lambda1 || eta > 0.1)
            throw ConfigError("eta must lie in [2/lambda1, 0.1] (set allow_out_of_theory to override)");
    }
    ModelConfig cfg;
    cfg.lambda1 = lambda1;
    cfg.lambda2 = lambda2;
    cfg.eta = eta;
    cfg.clip_beta1 = std::sqrt(10.0) / (6.0 * std::sqrt(lambda1));
    cfg.clip_alpha = std::sqrt(2.0 / (eta * lambda1));
    return cfg;
}

double loss(const ModelConfig& cfg, const Params& p) {
    require_finite(p, "loss");
    return 0.5 * cfg.lambda1 * sq(p.alpha * p.beta1) +
           0.5 * cfg.lambda2 * sq(p.alpha * p.beta2 - 1.0);
}

LossParts loss_parts(const ModelConfig& cfg, const Params& p) {
    require_finite(p, "loss_parts");
    LossParts parts;
    parts.l1 = 0.5 * cfg.lambda1 * sq(p.alpha * p.beta1);
    parts.l2 = 0.5 * cfg.lambda2 * sq(p.alpha * p.beta2 - 1.0);
    parts.total = parts.l1 + parts.l2;
    parts.lhat = 0.5 * sq(1.0 - p.beta2 * std::sqrt(2.0 / (cfg.lambda1 * cfg.eta)));
    return parts;
}

Vec3 gradient(const ModelConfig& cfg, const Params& p) {
    require_finite(p, "gradient");
    const double miss = 1.0 - p.alpha * p.beta2;
    return {cfg.lambda1 * p.beta1 * p.beta1 * p.alpha - cfg.lambda2 * p.beta2 * miss,
            cfg.lambda1 * p.alpha * p.alpha * p.beta1,
            -cfg.lambda2 * p.alpha * miss};
}

Mat3 hessian(const ModelConfig& cfg, const Params& p) {
    require_finite(p, "hessian");
    const double h00 = cfg.lambda1 * sq(p.beta1) + cfg.lambda2 * sq(p.beta2);
    const double h01 = 2.0 * cfg.lambda1 * p.alpha * p.beta1;
    const double h02 = 2.0 * cfg.lambda2 * p.alpha * p.beta2 - cfg.lambda2;
    const double h11 = cfg.lambda1 * sq(p.alpha);
    const double h22 = cfg.lambda2 * sq(p.alpha);
    return {Vec3{h00, h01, h02}, Vec3{h01, h11, 0.0}, Vec3{h02, 0.0, h22}};
}

SharpnessInfo sharpness_info(const ModelConfig& cfg, const Params& p) {
    const Mat3 h = hessian(cfg, p);
    const auto eigs = sym3_eigenvalues(h);
    const double scale = std::max(max_abs_entry(h), std::abs(eigs[0]));

    SharpnessInfo info;
    if (scale == 0.0) {  // zero matrix
        info.value = 0.0;
        info.eigvec = {0.0, 1.0, 0.0};
        info.cos_beta1 = 1.0;
        info.degenerate = true;
        return info;
    }

    Vec3 v = sym3_eigenvector(h, eigs[0], scale);
    double lam = eigs[0];
    // one Rayleigh-quotient refinement
    const double lam_r = rayleigh(h, v);
    const Vec3 v_r = sym3_eigenvector(h, lam_r, scale);
    if (residual(h, v_r, lam_r) < residual(h, v, lam)) {
        v = v_r;
        lam = lam_r;
    }

    info.degenerate = (eigs[0] - eigs[1]) <= 1e-12 * std::abs(eigs[0]);
    if (info.degenerate) {
        const Vec3 v2 = sym3_eigenvector(h, eigs[1], scale);
        if (std::abs(v2[1]) > std::abs(v[1])) v = v2;
    }
    info.value = lam;
    info.eigvec = v;
    info.cos_beta1 = std::min(std::abs(v[1]), 1.0);
    return info;
}

}  // namespace eosim
