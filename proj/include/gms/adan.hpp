#pragma once

#include "gms/common.hpp"

namespace gms {

// Adaptive Nesterov momentum optimizer. Tracks the gradient average, the
// gradient-difference average and a second-moment estimate of the combined
// update, with bias correction.
struct AdanConfig {
    double beta1 = 0.98;
    double beta2 = 0.92;
    double beta3 = 0.99;
    double eps = 1e-8;
    double weight_decay = 0.0;
};

class Adan {
public:
    Adan(Eigen::Index n, AdanConfig cfg = {})
        : cfg_(cfg),
          m_(Vec::Zero(n)),
          diff_avg_(Vec::Zero(n)),
          n2_(Vec::Zero(n)),
          prev_grad_(Vec::Zero(n)) {}

    void step(Vec& params, const Vec& grad, double lr) {
        ++k_;
        const Vec diff = k_ == 1 ? Vec(Vec::Zero(grad.size())) : Vec(grad - prev_grad_);
        m_ = cfg_.beta1 * m_ + (1.0 - cfg_.beta1) * grad;
        diff_avg_ = cfg_.beta2 * diff_avg_ + (1.0 - cfg_.beta2) * diff;
        const Vec update = grad + cfg_.beta2 * diff;
        n2_ = cfg_.beta3 * n2_ + (1.0 - cfg_.beta3) * update * update;
        prev_grad_ = grad;

        const double c1 = 1.0 - std::pow(cfg_.beta1, k_);
        const double c2 = 1.0 - std::pow(cfg_.beta2, k_);
        const double c3 = 1.0 - std::pow(cfg_.beta3, k_);
        const Vec denom = (n2_ / c3).sqrt() + cfg_.eps;
        params -= lr * (m_ / c1 + cfg_.beta2 * diff_avg_ / c2) / denom;
        if (cfg_.weight_decay != 0.0) params /= 1.0 + lr * cfg_.weight_decay;
    }

private:
    AdanConfig cfg_;
    Vec m_, diff_avg_, n2_, prev_grad_;
    long k_ = 0;
};

enum class LrSchedule { cosine, constant };

// Linear warm-up to `base`, then cosine decay to `min_lr` (or flat when
// constant). `step` is 0-based.
inline double lr_at(double base, double min_lr, int warmup, int total, LrSchedule schedule,
                    int step) {
    if (warmup > 0 && step < warmup) return base * static_cast<double>(step + 1) / warmup;
    if (schedule == LrSchedule::constant) return base;
    if (total <= warmup + 1) return std::max(base, min_lr);
    const double progress = static_cast<double>(step - warmup) / (total - 1 - warmup);
    return std::max(0.5 * (1.0 + std::cos(M_PI * progress)) * base, min_lr);
}

}  // namespace gms
