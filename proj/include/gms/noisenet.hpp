#pragma once

#include "gms/common.hpp"
#include "gms/mixture.hpp"
#include "gms/schedule.hpp"

#include <atomic>
#include <vector>

namespace gms {

struct TrainHyper {
    int width = 128;
    int depth = 3;  // hidden layers in the backbone
    int time_embed = 32;
    int iters = 4000;
    int batch = 256;
    double lr = 1e-4;
    std::uint64_t seed = 0;
    bool ema = false;
    double ema_rate = 0.999;
};

// Shared MLP backbone predicting eps, plus one small head per extra order
// predicting eps*eps and eps*eps*eps. Input is x_t concatenated with a
// sinusoidal embedding of t; hidden activations are Swish.
class NoiseHeads {
public:
    NoiseHeads(int dim, const TrainHyper& hyper);
    NoiseHeads(const NoiseHeads& other);
    NoiseHeads& operator=(const NoiseHeads& other);

    int dim() const { return dim_; }
    int width() const { return width_; }
    int depth() const { return depth_; }
    int time_embed() const { return time_embed_; }

    bool backbone_trained() const { return backbone_trained_; }
    bool head_trained(int order) const;
    int max_trained_order() const;

    NoiseMoments predict(const Vec& x_t, int t, int order) const;

    struct BatchMoments {
        Mat m1, m2, m3;  // rows = samples; m2/m3 empty below the requested order
    };
    BatchMoments predict_batch(const Mat& x_t, const std::vector<int>& ts, int order) const;
    BatchMoments predict_batch(const Mat& x_t, int t, int order) const;

    // flat parameter views (training, serialization, gradient checks)
    Vec backbone_params() const;
    void set_backbone_params(const Vec& flat);
    Vec head_params(int order) const;
    void set_head_params(int order, const Vec& flat);

    // mean-squared-error loss over the batch with optional gradient
    double backbone_loss_grad(const Mat& x_t, const std::vector<int>& ts, const Mat& target,
                              Vec* grad) const;
    double head_loss_grad(int order, const Mat& x_t, const std::vector<int>& ts,
                          const Mat& target, Vec* grad) const;

    void save(const std::string& path) const;
    static NoiseHeads load(const std::string& path);

    // number of inference calls where the order-2 clamp was active
    std::uint64_t clamp_events() const { return clamp_events_.load(); }

    Vec time_embedding(int t) const;

private:
    friend NoiseHeads train_stage1(const MixtureDistribution&, const NoiseSchedule&,
                                   const TrainHyper&);
    friend NoiseHeads& train_heads(NoiseHeads&, int, const MixtureDistribution&,
                                   const NoiseSchedule&, const TrainHyper&);

    struct Dense {
        Mat W;                // in x out
        Eigen::RowVectorXd b;
    };
    struct Head {
        Dense hidden, out;
    };
    struct Forward {  // cached activations for backprop
        Mat input;                 // N x (D + E)
        std::vector<Mat> z, h;     // per hidden layer, N x width
        Mat eps1;                  // N x D
        Mat head_in, head_z, head_h, eps_n;
    };

    void forward(const Mat& x_t, const std::vector<int>& ts, int order, Forward& cache) const;
    void head_forward(int order, Forward& cache) const;
    Eigen::Index backbone_param_count() const;
    Eigen::Index head_param_count() const;
    const Head& head(int order) const;
    Head& head(int order);

    int dim_, width_, depth_, time_embed_;
    std::vector<Dense> layers_;  // depth_ hidden layers
    Dense out_;                  // width -> dim, the eps head
    Head head2_, head3_;
    bool backbone_trained_ = false, head2_trained_ = false, head3_trained_ = false;
    mutable std::atomic<std::uint64_t> clamp_events_{0};
};

// One training minibatch: forward draws x_t = alpha_t x_0 + sigma_t eps with
// per-sample uniform timesteps; target is the elementwise eps power.
struct TrainingBatch {
    Mat x_t;
    std::vector<int> ts;
    Mat target;
};

TrainingBatch draw_training_batch(const MixtureDistribution& data, const NoiseSchedule& sched,
                                  int n, int order, Rng& rng);

// Stage one: fit the backbone to eps by denoising regression on forward draws.
NoiseHeads train_stage1(const MixtureDistribution& data, const NoiseSchedule& sched,
                        const TrainHyper& hyper);

// Stage two: fit head `order` to eps^order with the backbone frozen.
NoiseHeads& train_heads(NoiseHeads& net, int order, const MixtureDistribution& data,
                        const NoiseSchedule& sched, const TrainHyper& hyper);

}  // namespace gms
