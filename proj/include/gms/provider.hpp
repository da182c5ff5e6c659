#pragma once

#include "gms/common.hpp"
#include "gms/mixture.hpp"
#include "gms/noisenet.hpp"
#include "gms/schedule.hpp"

#include <memory>

namespace gms {

// Common surface over the analytic oracle and the trained noise network:
// conditional noise moments for a batch of x_t at one timestep. Rows of the
// outputs line up with rows of x_t; m2/m3 are left empty below `order`.
class MomentProvider {
public:
    virtual ~MomentProvider() = default;

    virtual int order() const = 0;
    virtual int dim() const = 0;
    virtual void moments(const Mat& x_t, int t, int order, Mat& m1, Mat& m2, Mat& m3) const = 0;

    NoiseMoments moments_one(const Vec& x_t, int t, int order) const;
};

class OracleMomentProvider final : public MomentProvider {
public:
    OracleMomentProvider(MixtureDistribution data, NoiseSchedule sched);

    int order() const override { return 3; }
    int dim() const override { return data_.dim(); }
    void moments(const Mat& x_t, int t, int order, Mat& m1, Mat& m2, Mat& m3) const override;

    const MixtureDistribution& data() const { return data_; }

private:
    MixtureDistribution data_;
    NoiseSchedule sched_;
};

class NetMomentProvider final : public MomentProvider {
public:
    explicit NetMomentProvider(NoiseHeads net);

    int order() const override { return net_.max_trained_order(); }
    int dim() const override { return net_.dim(); }
    void moments(const Mat& x_t, int t, int order, Mat& m1, Mat& m2, Mat& m3) const override;

    const NoiseHeads& net() const { return net_; }

private:
    NoiseHeads net_;
};

}  // namespace gms
