#pragma once

#include "gms/common.hpp"

namespace gms {

struct EvalReport {
    double kde_loglik = 0.0;
    double l2 = 0.0;
    int n_samples = 0;
    int n_reference = 0;
    Vec bandwidth;
};

// Rule-of-thumb bandwidth 1.05 * sigma * L^(-1/4).
double kde_bandwidth(double sigma, int L);

// Per-dimension bandwidths from the reference sample standard deviations.
Vec kde_bandwidth(const Mat& reference);

// Mean over samples of the log density under a Gaussian product-kernel
// estimate built on the reference points.
double kde_loglik(const Mat& samples, const Mat& reference);
double kde_loglik(const Mat& samples, const Mat& reference, const Vec& bandwidth);

// Mean over the batch of the squared distance summed over dimensions.
double l2_faithfulness(const Mat& outputs, const Mat& guides);

}  // namespace gms
