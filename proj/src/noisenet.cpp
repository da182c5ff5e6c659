#include "gms/noisenet.hpp"

#include "gms/adan.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

namespace gms {

namespace {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Mat swish(const Mat& z) {
    return z.unaryExpr([](double x) { return x * sigmoid(x); });
}

Mat swish_grad(const Mat& z) {
    return z.unaryExpr([](double x) {
        const double s = sigmoid(x);
        return s * (1.0 + x * (1.0 - s));
    });
}

void append_flat(Vec& flat, Eigen::Index& pos, const Mat& W, const Eigen::RowVectorXd& b) {
    std::memcpy(flat.data() + pos, W.data(), sizeof(double) * W.size());
    pos += W.size();
    std::memcpy(flat.data() + pos, b.data(), sizeof(double) * b.size());
    pos += b.size();
}

void read_flat(const Vec& flat, Eigen::Index& pos, Mat& W, Eigen::RowVectorXd& b) {
    std::memcpy(W.data(), flat.data() + pos, sizeof(double) * W.size());
    pos += W.size();
    std::memcpy(b.data(), flat.data() + pos, sizeof(double) * b.size());
    pos += b.size();
}

}  // namespace

NoiseHeads::NoiseHeads(int dim, const TrainHyper& hyper)
    : dim_(dim), width_(hyper.width), depth_(hyper.depth), time_embed_(hyper.time_embed) {
    if (dim < 1 || width_ < 1 || depth_ < 1 || time_embed_ < 2 || time_embed_ % 2 != 0)
        throw std::invalid_argument("noise net: bad architecture parameters");

    Rng rng(mix_seed(hyper.seed, 0x1a17));
    auto init_dense = [&](int in, int out) {
        Dense d;
        d.W.resize(in, out);
        const double scale = std::sqrt(2.0 / in);
        for (Eigen::Index c = 0; c < d.W.cols(); ++c)
            for (Eigen::Index r = 0; r < d.W.rows(); ++r) d.W(r, c) = scale * rng.normal();
        d.b = Eigen::RowVectorXd::Zero(out);
        return d;
    };

    int in = dim_ + time_embed_;
    for (int l = 0; l < depth_; ++l) {
        layers_.push_back(init_dense(in, width_));
        in = width_;
    }
    out_ = init_dense(width_, dim_);
    for (Head* h : {&head2_, &head3_}) {
        h->hidden = init_dense(width_ + dim_, width_);
        h->out = init_dense(width_, dim_);
    }
}

NoiseHeads::NoiseHeads(const NoiseHeads& other)
    : dim_(other.dim_),
      width_(other.width_),
      depth_(other.depth_),
      time_embed_(other.time_embed_),
      layers_(other.layers_),
      out_(other.out_),
      head2_(other.head2_),
      head3_(other.head3_),
      backbone_trained_(other.backbone_trained_),
      head2_trained_(other.head2_trained_),
      head3_trained_(other.head3_trained_),
      clamp_events_(other.clamp_events_.load()) {}

NoiseHeads& NoiseHeads::operator=(const NoiseHeads& other) {
    if (this != &other) {
        dim_ = other.dim_;
        width_ = other.width_;
        depth_ = other.depth_;
        time_embed_ = other.time_embed_;
        layers_ = other.layers_;
        out_ = other.out_;
        head2_ = other.head2_;
        head3_ = other.head3_;
        backbone_trained_ = other.backbone_trained_;
        head2_trained_ = other.head2_trained_;
        head3_trained_ = other.head3_trained_;
        clamp_events_.store(other.clamp_events_.load());
    }
    return *this;
}

bool NoiseHeads::head_trained(int order) const {
    if (order == 2) return head2_trained_;
    if (order == 3) return head3_trained_;
    throw std::invalid_argument("head_trained: order must be 2 or 3");
}

int NoiseHeads::max_trained_order() const {
    if (!backbone_trained_) return 0;
    if (head2_trained_ && head3_trained_) return 3;
    if (head2_trained_) return 2;
    return 1;
}

const NoiseHeads::Head& NoiseHeads::head(int order) const {
    if (order == 2) return head2_;
    if (order == 3) return head3_;
    throw std::invalid_argument("head: order must be 2 or 3");
}

NoiseHeads::Head& NoiseHeads::head(int order) {
    return const_cast<Head&>(static_cast<const NoiseHeads*>(this)->head(order));
}

Vec NoiseHeads::time_embedding(int t) const {
    const int half = time_embed_ / 2;
    Vec emb(time_embed_);
    for (int i = 0; i < half; ++i) {
        const double freq = half > 1 ? std::exp(-std::log(10000.0) * i / (half - 1)) : 1.0;
        emb[i] = std::sin(t * freq);
        emb[half + i] = std::cos(t * freq);
    }
    return emb;
}

void NoiseHeads::forward(const Mat& x_t, const std::vector<int>& ts, int order,
                         Forward& cache) const {
    const Eigen::Index n = x_t.rows();
    if (x_t.cols() != dim_) throw std::invalid_argument("noise net: input dimension mismatch");
    if (static_cast<Eigen::Index>(ts.size()) != n)
        throw std::invalid_argument("noise net: one timestep per row required");

    cache.input.resize(n, dim_ + time_embed_);
    cache.input.leftCols(dim_) = x_t;
    for (Eigen::Index r = 0; r < n; ++r)
        cache.input.row(r).rightCols(time_embed_) = time_embedding(ts[r]).matrix().transpose();

    cache.z.resize(depth_);
    cache.h.resize(depth_);
    const Mat* prev = &cache.input;
    for (int l = 0; l < depth_; ++l) {
        cache.z[l] = (*prev * layers_[l].W).rowwise() + layers_[l].b;
        cache.h[l] = swish(cache.z[l]);
        prev = &cache.h[l];
    }
    cache.eps1 = (cache.h[depth_ - 1] * out_.W).rowwise() + out_.b;

    if (order >= 2) head_forward(order, cache);
}

void NoiseHeads::head_forward(int order, Forward& cache) const {
    const Head& hd = head(order);
    const Eigen::Index n = cache.eps1.rows();
    cache.head_in.resize(n, width_ + dim_);
    cache.head_in.leftCols(width_) = cache.h[depth_ - 1];
    cache.head_in.rightCols(dim_) = cache.eps1;
    cache.head_z = (cache.head_in * hd.hidden.W).rowwise() + hd.hidden.b;
    cache.head_h = swish(cache.head_z);
    cache.eps_n = (cache.head_h * hd.out.W).rowwise() + hd.out.b;
}

NoiseHeads::BatchMoments NoiseHeads::predict_batch(const Mat& x_t, const std::vector<int>& ts,
                                                   int order) const {
    if (order < 1 || order > 3) throw std::invalid_argument("predict: order must be 1..3");
    BatchMoments out;
    Forward cache;
    forward(x_t, ts, 1, cache);
    out.m1 = cache.eps1;
    if (order >= 2) {
        head_forward(2, cache);
        out.m2 = cache.eps_n;
        // conditional-variance floor: m2 >= m1*m1 + 1e-8
        std::uint64_t clamped = 0;
        for (Eigen::Index r = 0; r < out.m2.rows(); ++r)
            for (Eigen::Index c = 0; c < out.m2.cols(); ++c) {
                const double floor = out.m1(r, c) * out.m1(r, c) + 1e-8;
                if (out.m2(r, c) < floor) {
                    out.m2(r, c) = floor;
                    ++clamped;
                }
            }
        if (clamped > 0) clamp_events_.fetch_add(clamped);
    }
    if (order >= 3) {
        head_forward(3, cache);
        out.m3 = cache.eps_n;
    }
    return out;
}

NoiseHeads::BatchMoments NoiseHeads::predict_batch(const Mat& x_t, int t, int order) const {
    return predict_batch(x_t, std::vector<int>(x_t.rows(), t), order);
}

NoiseMoments NoiseHeads::predict(const Vec& x_t, int t, int order) const {
    const BatchMoments bm = predict_batch(Mat(x_t.matrix().transpose()), t, order);
    NoiseMoments nm;
    nm.m1 = bm.m1.row(0).transpose().array();
    if (order >= 2) nm.m2 = bm.m2.row(0).transpose().array();
    if (order >= 3) nm.m3 = bm.m3.row(0).transpose().array();
    return nm;
}

Eigen::Index NoiseHeads::backbone_param_count() const {
    Eigen::Index total = out_.W.size() + out_.b.size();
    for (const Dense& d : layers_) total += d.W.size() + d.b.size();
    return total;
}

Eigen::Index NoiseHeads::head_param_count() const {
    const Head& hd = head2_;
    return hd.hidden.W.size() + hd.hidden.b.size() + hd.out.W.size() + hd.out.b.size();
}

Vec NoiseHeads::backbone_params() const {
    Vec flat(backbone_param_count());
    Eigen::Index pos = 0;
    for (const Dense& d : layers_) append_flat(flat, pos, d.W, d.b);
    append_flat(flat, pos, out_.W, out_.b);
    return flat;
}

void NoiseHeads::set_backbone_params(const Vec& flat) {
    if (flat.size() != backbone_param_count())
        throw std::invalid_argument("set_backbone_params: size mismatch");
    Eigen::Index pos = 0;
    for (Dense& d : layers_) read_flat(flat, pos, d.W, d.b);
    read_flat(flat, pos, out_.W, out_.b);
}

Vec NoiseHeads::head_params(int order) const {
    const Head& hd = head(order);
    Vec flat(head_param_count());
    Eigen::Index pos = 0;
    append_flat(flat, pos, hd.hidden.W, hd.hidden.b);
    append_flat(flat, pos, hd.out.W, hd.out.b);
    return flat;
}

void NoiseHeads::set_head_params(int order, const Vec& flat) {
    if (flat.size() != head_param_count())
        throw std::invalid_argument("set_head_params: size mismatch");
    Head& hd = head(order);
    Eigen::Index pos = 0;
    read_flat(flat, pos, hd.hidden.W, hd.hidden.b);
    read_flat(flat, pos, hd.out.W, hd.out.b);
}

double NoiseHeads::backbone_loss_grad(const Mat& x_t, const std::vector<int>& ts,
                                      const Mat& target, Vec* grad) const {
    Forward cache;
    forward(x_t, ts, 1, cache);
    const Mat resid = cache.eps1 - target;
    const double scale = 1.0 / (resid.rows() * resid.cols());
    const double loss = resid.squaredNorm() * scale;
    if (!grad) return loss;

    const Mat d_eps1 = 2.0 * scale * resid;
    std::vector<Mat> dW(depth_);
    std::vector<Eigen::RowVectorXd> db(depth_);
    const Mat dW_out = cache.h[depth_ - 1].transpose() * d_eps1;
    const Eigen::RowVectorXd db_out = d_eps1.colwise().sum();

    Mat dh = d_eps1 * out_.W.transpose();
    for (int l = depth_ - 1; l >= 0; --l) {
        const Mat dz = dh.cwiseProduct(swish_grad(cache.z[l]));
        const Mat& below = l == 0 ? cache.input : cache.h[l - 1];
        dW[l] = below.transpose() * dz;
        db[l] = dz.colwise().sum();
        if (l > 0) dh = dz * layers_[l].W.transpose();
    }

    grad->resize(backbone_param_count());
    Eigen::Index pos = 0;
    for (int l = 0; l < depth_; ++l) append_flat(*grad, pos, dW[l], db[l]);
    append_flat(*grad, pos, dW_out, db_out);
    return loss;
}

double NoiseHeads::head_loss_grad(int order, const Mat& x_t, const std::vector<int>& ts,
                                  const Mat& target, Vec* grad) const {
    const Head& hd = head(order);
    Forward cache;
    forward(x_t, ts, order, cache);
    const Mat resid = cache.eps_n - target;
    const double scale = 1.0 / (resid.rows() * resid.cols());
    const double loss = resid.squaredNorm() * scale;
    if (!grad) return loss;

    const Mat d_epsn = 2.0 * scale * resid;
    const Mat dV2 = cache.head_h.transpose() * d_epsn;
    const Eigen::RowVectorXd dc2 = d_epsn.colwise().sum();
    const Mat dg = d_epsn * hd.out.W.transpose();
    const Mat dzg = dg.cwiseProduct(swish_grad(cache.head_z));
    const Mat dV1 = cache.head_in.transpose() * dzg;
    const Eigen::RowVectorXd dc1 = dzg.colwise().sum();

    grad->resize(head_param_count());
    Eigen::Index pos = 0;
    append_flat(*grad, pos, dV1, dc1);
    append_flat(*grad, pos, dV2, dc2);
    return loss;
}

// ---- training ----------------------------------------------------------------

TrainingBatch draw_training_batch(const MixtureDistribution& data, const NoiseSchedule& sched,
                                  int n, int order, Rng& rng) {
    if (order < 1 || order > 3)
        throw std::invalid_argument("draw_training_batch: order must be 1..3");
    const int d = data.dim();
    TrainingBatch out;
    out.x_t.resize(n, d);
    out.target.resize(n, d);
    out.ts.resize(n);
    for (int r = 0; r < n; ++r) {
        const Vec x0 = sample_mixture(data, rng);
        const int t = rng.uniform_int(1, sched.T);
        out.ts[r] = t;
        for (int c = 0; c < d; ++c) {
            const double eps = rng.normal();
            out.x_t(r, c) = sched.alpha[t] * x0[c] + sched.sigma[t] * eps;
            out.target(r, c) = order == 1 ? eps : (order == 2 ? eps * eps : eps * eps * eps);
        }
    }
    return out;
}

namespace {

Vec run_training(const MixtureDistribution& data, const NoiseSchedule& sched,
                 const TrainHyper& hyper, int order, Vec params,
                 const std::function<double(const Vec&, const TrainingBatch&, Vec*)>& loss_grad) {
    Rng rng(mix_seed(hyper.seed, 0x7 + order));
    Vec ema = params;
    Adan adan(params.size());
    Vec grad(params.size());
    for (int iter = 0; iter < hyper.iters; ++iter) {
        const TrainingBatch batch = draw_training_batch(data, sched, hyper.batch, order, rng);
        const double loss = loss_grad(params, batch, &grad);
        if (!std::isfinite(loss))
            throw NumericalError("training diverged at iteration " + std::to_string(iter));
        adan.step(params, grad, hyper.lr);
        if (hyper.ema) ema = hyper.ema_rate * ema + (1.0 - hyper.ema_rate) * params;
    }
    return hyper.ema ? ema : params;
}

}  // namespace

NoiseHeads train_stage1(const MixtureDistribution& data, const NoiseSchedule& sched,
                        const TrainHyper& hyper) {
    data.validate();
    NoiseHeads net(data.dim(), hyper);
    const Vec trained =
        run_training(data, sched, hyper, 1, net.backbone_params(),
                     [&](const Vec& p, const TrainingBatch& b, Vec* grad) {
                         net.set_backbone_params(p);
                         return net.backbone_loss_grad(b.x_t, b.ts, b.target, grad);
                     });
    net.set_backbone_params(trained);
    net.backbone_trained_ = true;
    return net;
}

NoiseHeads& train_heads(NoiseHeads& net, int order, const MixtureDistribution& data,
                        const NoiseSchedule& sched, const TrainHyper& hyper) {
    if (order != 2 && order != 3) throw std::invalid_argument("train_heads: order must be 2 or 3");
    if (net.dim() != data.dim()) throw std::invalid_argument("train_heads: dimension mismatch");
    const Vec trained =
        run_training(data, sched, hyper, order, net.head_params(order),
                     [&](const Vec& p, const TrainingBatch& b, Vec* grad) {
                         net.set_head_params(order, p);
                         return net.head_loss_grad(order, b.x_t, b.ts, b.target, grad);
                     });
    net.set_head_params(order, trained);
    (order == 2 ? net.head2_trained_ : net.head3_trained_) = true;
    return net;
}

// ---- serialization -----------------------------------------------------------
// Flat binary layout: 8-byte magic, u32 version/dim/width/depth/time-embed,
// u32 trained flags, then raw 64-bit floats (backbone, head 2, head 3) in
// parameter-declaration order. Multi-byte values are little-endian.

namespace {

constexpr char kMagic[8] = {'G', 'M', 'S', 'N', 'E', 'T', '0', '1'};

template <typename T>
void write_pod(std::ofstream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    return v;
}

}  // namespace

void NoiseHeads::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out.write(kMagic, sizeof(kMagic));
    write_pod<std::uint32_t>(out, 1);  // version
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(dim_));
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(width_));
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(depth_));
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(time_embed_));
    const std::uint32_t flags = (backbone_trained_ ? 1u : 0u) | (head2_trained_ ? 2u : 0u) |
                                (head3_trained_ ? 4u : 0u);
    write_pod<std::uint32_t>(out, flags);

    auto write_vec = [&](const Vec& v) {
        out.write(reinterpret_cast<const char*>(v.data()),
                  static_cast<std::streamsize>(sizeof(double) * v.size()));
    };
    write_vec(backbone_params());
    write_vec(head_params(2));
    write_vec(head_params(3));
    if (!out) throw IoError("failed writing '" + path + "'");
}

NoiseHeads NoiseHeads::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw IoError("'" + path + "' is not a noise-net parameter file");
    const auto version = read_pod<std::uint32_t>(in);
    if (version != 1) throw IoError("unsupported noise-net file version");
    TrainHyper hyper;
    const auto dim = read_pod<std::uint32_t>(in);
    hyper.width = static_cast<int>(read_pod<std::uint32_t>(in));
    hyper.depth = static_cast<int>(read_pod<std::uint32_t>(in));
    hyper.time_embed = static_cast<int>(read_pod<std::uint32_t>(in));
    const auto flags = read_pod<std::uint32_t>(in);

    NoiseHeads net(static_cast<int>(dim), hyper);
    auto read_sized = [&](Eigen::Index n) {
        Vec v(n);
        in.read(reinterpret_cast<char*>(v.data()),
                static_cast<std::streamsize>(sizeof(double) * n));
        return v;
    };
    net.set_backbone_params(read_sized(net.backbone_param_count()));
    net.set_head_params(2, read_sized(net.head_param_count()));
    net.set_head_params(3, read_sized(net.head_param_count()));
    if (!in) throw IoError("'" + path + "' is truncated");
    net.backbone_trained_ = flags & 1u;
    net.head2_trained_ = flags & 2u;
    net.head3_trained_ = flags & 4u;
    return net;
}

}  // namespace gms
