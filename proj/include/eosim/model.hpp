#pragma once

#include <array>
#include <stdexcept>
#include <string>

namespace eosim {

// Parameters of the two-layer linear model f(x) = alpha * (beta1*x1 + beta2*x2)
// trained with square loss on Gaussian input with covariance diag(lambda1, lambda2)
// against the target x2. In closed form the population loss is
//
//   L = 0.5*lambda1*(alpha*beta1)^2 + 0.5*lambda2*(alpha*beta2 - 1)^2
//
// so (alpha*beta1 -> 0, alpha*beta2 -> 1) is the global minimizer set.
struct Params {
    double alpha = 0.0;
    double beta1 = 0.0;
    double beta2 = 0.0;

    bool finite() const;
};

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// A parameter state became unusable (non-finite values or runaway alpha).
struct DivergedStateError : std::runtime_error {
    Params last;
    DivergedStateError(const std::string& msg, Params last_finite)
        : std::runtime_error(msg), last(last_finite) {}
};

struct EmptyRegionError : std::runtime_error {
    explicit EmptyRegionError(const std::string& msg) : std::runtime_error(msg) {}
};

struct PreconditionError : std::runtime_error {
    explicit PreconditionError(const std::string& msg) : std::runtime_error(msg) {}
};

// Problem setup. Valid setups have lambda1 >= 100, lambda1*lambda2 <= 1 and
// eta in [2/lambda1, 0.1]; make() enforces this unless allow_out_of_theory,
// which keeps only positivity so exploratory runs stay possible.
struct ModelConfig {
    double lambda1 = 0.0;
    double lambda2 = 0.0;
    double eta = 0.0;
    double clip_beta1 = 0.0;  // magnitude cap applied to beta1 updates
    double clip_alpha = 0.0;  // alpha cap used by the constrained dynamics

    static ModelConfig make(double lambda1, double lambda2, double eta,
                            bool allow_out_of_theory = false);
};

struct LossParts {
    double total = 0.0;
    double l1 = 0.0;    // oscillatory part 0.5*lambda1*(alpha*beta1)^2
    double l2 = 0.0;    // convergent part  0.5*lambda2*(alpha*beta2 - 1)^2
    double lhat = 0.0;  // surrogate 0.5*(1 - sqrt(2)*beta2/sqrt(lambda1*eta))^2
};

using Vec3 = std::array<double, 3>;
using Mat3 = std::array<Vec3, 3>;

// Largest Hessian eigenvalue (the sharpness) together with a unit eigenvector.
// cos_beta1 is |cos| of the angle between the eigenvector and the beta1 axis;
// degenerate flags a top eigenvalue whose gap to the second one is below
// 1e-12 relative, in which case the eigenvector reported is the candidate
// with the largest beta1 component.
struct SharpnessInfo {
    double value = 0.0;
    Vec3 eigvec{0.0, 0.0, 0.0};
    double cos_beta1 = 0.0;
    bool degenerate = false;
};

// All model operations throw DivergedStateError on non-finite input.
double loss(const ModelConfig& cfg, const Params& p);
LossParts loss_parts(const ModelConfig& cfg, const Params& p);

// Gradient and Hessian in the parameter order (alpha, beta1, beta2).
Vec3 gradient(const ModelConfig& cfg, const Params& p);
Mat3 hessian(const ModelConfig& cfg, const Params& p);

SharpnessInfo sharpness_info(const ModelConfig& cfg, const Params& p);

}  // namespace eosim
