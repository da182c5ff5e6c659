#pragma once

#include "gms/adan.hpp"
#include "gms/common.hpp"
#include "gms/moments.hpp"

namespace gms {

// Two-component transition kernel (1/3) N(mu1, var) + (2/3) N(mu2, var) with a
// shared per-dimension variance. Weights are fixed.
struct GmKernelParams {
    Vec mu1, mu2, var;

    static constexpr double kWeight1 = 1.0 / 3.0;
    static constexpr double kWeight2 = 2.0 / 3.0;
};

constexpr double kSigma2Min = 1e-12;

struct FitReport {
    GmKernelParams params;
    double objective_value = 0.0;
    int iterations = 0;
    double lr_used = 0.0;
    BoolMask degenerate_mask;  // collapsed to a single Gaussian
    BoolMask infeasible_mask;  // triple not exactly representable
};

enum class FitInit { closed_form, gaussian_perturbed };

struct OptimizerConfig {
    int steps = 25;
    double lr = 0.1;
    int warmup = 18;
    double min_lr = 0.0;
    LrSchedule schedule = LrSchedule::cosine;
    Eigen::Matrix3d weight = Eigen::Matrix3d::Identity();
};

// ---- scalar (per-dimension) kernels -----------------------------------------

template <typename S>
struct Moments3 {
    S m1, m2, m3;
};

template <typename S>
Moments3<S> gm_moments_1d(S mu1, S mu2, S var) {
    constexpr S w1 = S(1) / S(3), w2 = S(2) / S(3);
    return {w1 * mu1 + w2 * mu2,
            w1 * (mu1 * mu1 + var) + w2 * (mu2 * mu2 + var),
            w1 * (mu1 * mu1 * mu1 + S(3) * mu1 * var) + w2 * (mu2 * mu2 * mu2 + S(3) * mu2 * var)};
}

template <typename S>
struct GmFit1D {
    S mu1, mu2, var;
    bool degenerate = false;
    bool infeasible = false;
};

// Exact solution of the three moment equations. With offsets d1 = mu1 - M1,
// d2 = mu2 - M1 the constraints reduce to d1 = -2 d2, 2 d2^2 + var = c2 and
// -2 d2^3 = c3, where c2 and c3 are the central second and third moments.
template <typename S>
GmFit1D<S> fit_closed_form_1d(S M1, S M2, S M3) {
    const S c2 = M2 - M1 * M1;
    const S c3 = M3 - S(3) * M1 * M2 + S(2) * M1 * M1 * M1;
    if (c2 < S(0)) throw std::invalid_argument("fit_closed_form: negative central variance");

    GmFit1D<S> fit;
    if (std::abs(c3) < S(1e-10)) {
        fit.degenerate = true;
        fit.mu1 = fit.mu2 = M1;
        fit.var = std::max(c2, S(kSigma2Min));
        return fit;
    }
    S d2 = std::cbrt(-c3 / S(2));
    S var = c2 - S(2) * d2 * d2;
    if (var < S(kSigma2Min)) {
        // best-effort projection: keep the skew direction, shrink the offsets
        fit.infeasible = true;
        var = S(kSigma2Min);
        const S mag = std::sqrt(std::max(c2 - S(kSigma2Min), S(0)) / S(2));
        d2 = d2 < S(0) ? -mag : mag;
    }
    fit.mu1 = M1 - S(2) * d2;
    fit.mu2 = M1 + d2;
    fit.var = var;
    return fit;
}

// ---- vector interface --------------------------------------------------------

MomentTriple gm_moments(const GmKernelParams& params);

// Q = sum over dimensions of g^T W g with g = target - model moments.
double gmm_objective(const GmKernelParams& params, const MomentTriple& target,
                     const Eigen::Matrix3d& W);
double gmm_objective(const GmKernelParams& params, const MomentTriple& target);

FitReport fit_closed_form(const MomentTriple& target);

// Per-dimension Adan descent on (mu1, mu2, rho) with var = kSigma2Min +
// softplus(rho); returns the best-objective iterate.
FitReport fit_gradient(const MomentTriple& target, FitInit init, const OptimizerConfig& opt);

}  // namespace gms
