#include "gms/gmmfit.hpp"

#include <Eigen/Cholesky>

#include <cmath>

namespace gms {

namespace {

void check_sizes(const MomentTriple& t) {
    if (t.M1.size() == 0 || t.M1.size() != t.M2.size() || t.M1.size() != t.M3.size())
        throw std::invalid_argument("moment triple: M1/M2/M3 sizes differ");
}

void check_weight(const Eigen::Matrix3d& W) {
    if (!W.isApprox(W.transpose(), 1e-12))
        throw std::invalid_argument("gmm weight matrix must be symmetric");
    Eigen::LLT<Eigen::Matrix3d> llt(W);
    if (llt.info() != Eigen::Success)
        throw std::invalid_argument("gmm weight matrix must be positive-definite");
}

double softplus(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }

double softplus_inv(double y) { return y > 30.0 ? y : std::log(std::expm1(y)); }

}  // namespace

MomentTriple gm_moments(const GmKernelParams& params) {
    const Eigen::Index d = params.mu1.size();
    MomentTriple out{Vec(d), Vec(d), Vec(d)};
    for (Eigen::Index i = 0; i < d; ++i) {
        const auto m = gm_moments_1d(params.mu1[i], params.mu2[i], params.var[i]);
        out.M1[i] = m.m1;
        out.M2[i] = m.m2;
        out.M3[i] = m.m3;
    }
    return out;
}

double gmm_objective(const GmKernelParams& params, const MomentTriple& target,
                     const Eigen::Matrix3d& W) {
    check_sizes(target);
    check_weight(W);
    const MomentTriple model = gm_moments(params);
    double q = 0.0;
    for (Eigen::Index i = 0; i < target.M1.size(); ++i) {
        const Eigen::Vector3d g(target.M1[i] - model.M1[i], target.M2[i] - model.M2[i],
                                target.M3[i] - model.M3[i]);
        q += g.dot(W * g);
    }
    return q;
}

double gmm_objective(const GmKernelParams& params, const MomentTriple& target) {
    return gmm_objective(params, target, Eigen::Matrix3d::Identity());
}

FitReport fit_closed_form(const MomentTriple& target) {
    check_sizes(target);
    const Eigen::Index d = target.M1.size();
    FitReport report;
    report.params = {Vec(d), Vec(d), Vec(d)};
    report.degenerate_mask = BoolMask::Constant(d, false);
    report.infeasible_mask = BoolMask::Constant(d, false);
    for (Eigen::Index i = 0; i < d; ++i) {
        const auto fit = fit_closed_form_1d(target.M1[i], target.M2[i], target.M3[i]);
        report.params.mu1[i] = fit.mu1;
        report.params.mu2[i] = fit.mu2;
        report.params.var[i] = fit.var;
        report.degenerate_mask[i] = fit.degenerate;
        report.infeasible_mask[i] = fit.infeasible;
    }
    report.objective_value = gmm_objective(report.params, target);
    return report;
}

namespace {

// One dimension of the weighted moment objective. Free parameters are
// standardized offsets around the target mean, (mu - M1) / s with s^2 the
// central variance, plus a softplus-transformed variance ratio. Descent runs
// on the residuals of the *standardized* moments: that is the same argmin
// under an equivalent positive-definite reweighting (the weight-matrix
// freedom of the estimator) but conditions the problem independently of the
// target's location and scale. Iterates are still scored and selected by the
// caller's raw-residual objective.
struct ScalarFit {
    Eigen::Vector3d tgt;  // raw target moments
    Eigen::Matrix3d W;
    double shift = 0.0;  // target mean
    double scale = 1.0;  // sqrt(max(c2, floor))
    double scale2 = 1.0;
    Eigen::Matrix3d std_map;  // raw residual -> standardized residual

    void init_maps() {
        const double m = shift, s = scale, s2 = scale2;
        std_map << 1.0 / s, 0.0, 0.0,
                   -2.0 * m / s2, 1.0 / s2, 0.0,
                   3.0 * m * m / (s2 * s), -3.0 * m / (s2 * s), 1.0 / (s2 * s);
    }

    void raw_params(const Eigen::Vector3d& theta, double& mu1, double& mu2, double& var) const {
        mu1 = shift + scale * theta[0];
        mu2 = shift + scale * theta[1];
        var = kSigma2Min + scale2 * softplus(theta[2]);
    }

    Eigen::Vector3d to_theta(double mu1, double mu2, double var) const {
        return {(mu1 - shift) / scale, (mu2 - shift) / scale,
                softplus_inv(std::max((var - kSigma2Min) / scale2, 1e-15))};
    }

    // returns the raw-residual objective; fills the gradient of the
    // standardized-residual objective with respect to theta
    double objective_grad(const Eigen::Vector3d& theta, Eigen::Vector3d& grad) const {
        double mu1, mu2, var;
        raw_params(theta, mu1, mu2, var);
        const auto m = gm_moments_1d(mu1, mu2, var);
        const Eigen::Vector3d g(tgt[0] - m.m1, tgt[1] - m.m2, tgt[2] - m.m3);

        Eigen::Matrix3d jac;  // d(model)/d(mu1, mu2, var)
        jac << 1.0 / 3.0, 2.0 / 3.0, 0.0,
               2.0 / 3.0 * mu1, 4.0 / 3.0 * mu2, 1.0,
               mu1 * mu1 + var, 2.0 * (mu2 * mu2 + var), mu1 + 2.0 * mu2;
        const double sig = 1.0 / (1.0 + std::exp(-theta[2]));
        const Eigen::Vector3d param_scale(scale, scale, scale2 * sig);

        const Eigen::Vector3d g_std = std_map * g;
        const Eigen::Matrix3d jac_std = std_map * jac * param_scale.asDiagonal();
        grad = -2.0 * jac_std.transpose() * (W * g_std);
        return g.dot(W * g);
    }
};

}  // namespace

FitReport fit_gradient(const MomentTriple& target, FitInit init, const OptimizerConfig& opt) {
    check_sizes(target);
    check_weight(opt.weight);
    const Eigen::Index d = target.M1.size();
    const FitReport seed = fit_closed_form(target);

    FitReport report;
    report.params = {Vec(d), Vec(d), Vec(d)};
    report.degenerate_mask = seed.degenerate_mask;
    report.infeasible_mask = seed.infeasible_mask;
    report.iterations = opt.steps;
    report.lr_used = opt.lr;

    for (Eigen::Index i = 0; i < d; ++i) {
        const double c2 = target.M2[i] - target.M1[i] * target.M1[i];
        const double c3 =
            target.M3[i] - 3.0 * target.M1[i] * target.M2[i] + 2.0 * std::pow(target.M1[i], 3);

        ScalarFit fit;
        fit.tgt = Eigen::Vector3d(target.M1[i], target.M2[i], target.M3[i]);
        fit.W = opt.weight;
        fit.shift = target.M1[i];
        fit.scale2 = std::max(c2, 1e-12);
        fit.scale = std::sqrt(fit.scale2);
        fit.init_maps();

        Eigen::Vector3d theta;
        if (init == FitInit::closed_form) {
            theta = fit.to_theta(seed.params.mu1[i], seed.params.mu2[i], seed.params.var[i]);
        } else {
            // Gaussian start with zero-mean-shift offsets -+sqrt(c2)/2, +-sqrt(c2)/4,
            // oriented so the component split already has the target's skew sign
            const double sign = c3 >= 0.0 ? 1.0 : -1.0;
            const double spread = std::sqrt(std::max(c2, 0.0));
            const double var0 = std::max(c2 - 2.0 * (spread / 4.0) * (spread / 4.0), kSigma2Min);
            theta = fit.to_theta(target.M1[i] + sign * spread / 2.0,
                                 target.M1[i] - sign * spread / 4.0, var0);
        }

        Eigen::Vector3d best = theta;
        Eigen::Vector3d grad;
        double best_obj = fit.objective_grad(theta, grad);

        Adan adan(3);
        Vec flat = theta.array();
        for (int step = 0; step < opt.steps; ++step) {
            const Eigen::Vector3d th(flat[0], flat[1], flat[2]);
            const double obj = fit.objective_grad(th, grad);
            if (!std::isfinite(obj))
                throw NumericalError("fit_gradient: non-finite objective at dimension " +
                                     std::to_string(i));
            if (obj < best_obj) {
                best_obj = obj;
                best = th;
            }
            const Vec g = grad.array();
            adan.step(flat, g, lr_at(opt.lr, opt.min_lr, opt.warmup, opt.steps, opt.schedule, step));
        }
        const Eigen::Vector3d th(flat[0], flat[1], flat[2]);
        if (fit.objective_grad(th, grad) < best_obj) best = th;

        fit.raw_params(best, report.params.mu1[i], report.params.mu2[i], report.params.var[i]);
        report.degenerate_mask[i] =
            std::abs(report.params.mu1[i] - report.params.mu2[i]) < 1e-6;
    }
    report.objective_value = gmm_objective(report.params, target, opt.weight);
    return report;
}

}  // namespace gms
