#include "gms/provider.hpp"

namespace gms {

NoiseMoments MomentProvider::moments_one(const Vec& x_t, int t, int order) const {
    Mat m1, m2, m3;
    moments(Mat(x_t.matrix().transpose()), t, order, m1, m2, m3);
    NoiseMoments nm;
    nm.m1 = m1.row(0).transpose().array();
    if (order >= 2) nm.m2 = m2.row(0).transpose().array();
    if (order >= 3) nm.m3 = m3.row(0).transpose().array();
    return nm;
}

OracleMomentProvider::OracleMomentProvider(MixtureDistribution data, NoiseSchedule sched)
    : data_(std::move(data)), sched_(std::move(sched)) {
    data_.validate();
}

void OracleMomentProvider::moments(const Mat& x_t, int t, int order, Mat& m1, Mat& m2,
                                   Mat& m3) const {
    if (order < 1 || order > 3) throw std::invalid_argument("moments: order must be 1..3");
    const Eigen::Index n = x_t.rows();
    m1.resize(n, dim());
    if (order >= 2) m2.resize(n, dim());
    if (order >= 3) m3.resize(n, dim());
    parallel_for(n, [&](Eigen::Index r) {
        const NoiseMoments nm =
            oracle_noise_moments(data_, sched_, x_t.row(r).transpose().array(), t, order);
        m1.row(r) = nm.m1.matrix().transpose();
        if (order >= 2) m2.row(r) = nm.m2.matrix().transpose();
        if (order >= 3) m3.row(r) = nm.m3.matrix().transpose();
    });
}

NetMomentProvider::NetMomentProvider(NoiseHeads net) : net_(std::move(net)) {}

void NetMomentProvider::moments(const Mat& x_t, int t, int order, Mat& m1, Mat& m2,
                                Mat& m3) const {
    if (order < 1 || order > 3) throw std::invalid_argument("moments: order must be 1..3");
    const NoiseHeads::BatchMoments bm = net_.predict_batch(x_t, t, order);
    m1 = bm.m1;
    if (order >= 2) m2 = bm.m2;
    if (order >= 3) m3 = bm.m3;
}

}  // namespace gms
