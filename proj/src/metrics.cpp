#include "gms/metrics.hpp"

#include <cmath>
#include <limits>

namespace gms {

double kde_bandwidth(double sigma, int L) {
    if (sigma <= 0.0) throw std::invalid_argument("kde: reference standard deviation is zero");
    if (L < 2) throw std::invalid_argument("kde: reference needs at least two points");
    return 1.05 * sigma * std::pow(static_cast<double>(L), -0.25);
}

Vec kde_bandwidth(const Mat& reference) {
    const int L = static_cast<int>(reference.rows());
    if (L < 2) throw std::invalid_argument("kde: reference needs at least two points");
    Vec h(reference.cols());
    for (Eigen::Index c = 0; c < reference.cols(); ++c) {
        const double mean = reference.col(c).mean();
        const double var =
            (reference.col(c).array() - mean).square().sum() / static_cast<double>(L - 1);
        h[c] = kde_bandwidth(std::sqrt(var), L);
    }
    return h;
}

double kde_loglik(const Mat& samples, const Mat& reference, const Vec& bandwidth) {
    if (samples.rows() < 1) throw std::invalid_argument("kde: samples must be nonempty");
    if (samples.cols() != reference.cols())
        throw std::invalid_argument("kde: samples/reference dimensions differ");
    if (bandwidth.size() != samples.cols() || (bandwidth <= 0.0).any())
        throw std::invalid_argument("kde: bandwidth must be positive per dimension");

    const Eigen::Index n = samples.rows();
    const Eigen::Index L = reference.rows();
    const double log_norm =
        -0.5 * samples.cols() * std::log(2.0 * M_PI) - bandwidth.log().sum() -
        std::log(static_cast<double>(L));

    Vec per_sample(n);
    parallel_for(n, [&](Eigen::Index i) {
        // log-sum-exp over reference kernels
        double best = -std::numeric_limits<double>::infinity();
        Vec expo(L);
        for (Eigen::Index l = 0; l < L; ++l) {
            const Vec diff =
                (samples.row(i) - reference.row(l)).transpose().array() / bandwidth;
            expo[l] = -0.5 * (diff * diff).sum();
            best = std::max(best, expo[l]);
        }
        per_sample[i] = best + std::log((expo - best).exp().sum()) + log_norm;
    });
    return per_sample.mean();
}

double kde_loglik(const Mat& samples, const Mat& reference) {
    return kde_loglik(samples, reference, kde_bandwidth(reference));
}

double l2_faithfulness(const Mat& outputs, const Mat& guides) {
    if (outputs.rows() != guides.rows() || outputs.cols() != guides.cols())
        throw std::invalid_argument("l2_faithfulness: shape mismatch");
    if (outputs.rows() < 1) throw std::invalid_argument("l2_faithfulness: empty batch");
    return (outputs - guides).array().square().rowwise().sum().mean();
}

}  // namespace gms
