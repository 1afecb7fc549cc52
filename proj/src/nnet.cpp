#include "bridgegen/nnet.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

namespace bridgegen {

Vec LevelEmbedding::embed(double sigma) const {
    check(sigma > 0.0, "level_embed: sigma must be positive");
    Vec out(dim());
    double ls = std::log(sigma);
    for (int j = 0; j < n_freq; ++j) {
        double w = n_freq == 1 ? 1.0
                               : std::pow(base_scale, static_cast<double>(j) /
                                                          static_cast<double>(n_freq - 1));
        out[2 * j] = std::sin(w * ls);
        out[2 * j + 1] = std::cos(w * ls);
    }
    return out;
}

namespace {

inline double silu(double z) { return z / (1.0 + std::exp(-z)); }

inline double silu_deriv(double z) {
    double s = 1.0 / (1.0 + std::exp(-z));
    return s * (1.0 + z * (1.0 - s));
}

Mat apply_act(const Mat& Z, Act act) {
    if (act == Act::Linear) return Z;
    return Z.unaryExpr([](double z) { return silu(z); });
}

Mat act_deriv(const Mat& Z, Act act) {
    if (act == Act::Linear) return Mat::Ones(Z.rows(), Z.cols());
    return Z.unaryExpr([](double z) { return silu_deriv(z); });
}

}  // namespace

void Mlp::Grads::init_like(const Mlp& net) {
    dW.clear();
    db.clear();
    for (const auto& l : net.layers) {
        dW.push_back(Mat::Zero(l.W.rows(), l.W.cols()));
        db.push_back(Vec::Zero(l.b.size()));
    }
}

void Mlp::Grads::zero() {
    for (auto& m : dW) m.setZero();
    for (auto& v : db) v.setZero();
}

void Mlp::Grads::scale(double s) {
    for (auto& m : dW) m *= s;
    for (auto& v : db) v *= s;
}

std::size_t Mlp::n_params() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += static_cast<std::size_t>(l.W.size() + l.b.size());
    return n;
}

Mat Mlp::forward(const Mat& X, Cache* cache) const {
    check(!layers.empty(), "Mlp: no layers");
    check(X.rows() == layers.front().W.cols(), "Mlp: input dimension mismatch");
    if (cache) {
        cache->inputs.clear();
        cache->preacts.clear();
    }
    Mat h = X;
    for (const auto& l : layers) {
        if (cache) cache->inputs.push_back(h);
        Mat z = (l.W * h).colwise() + l.b;
        if (cache) cache->preacts.push_back(z);
        if (l.residual) {
            check(l.W.rows() == l.W.cols(), "Mlp: residual layer must be square");
            h = h + apply_act(z, l.act);
        } else {
            h = apply_act(z, l.act);
        }
    }
    return h;
}

Mat Mlp::backward(const Cache& cache, const Mat& dY, Grads& grads) const {
    check(cache.valid(), "Mlp: backward without a cached forward pass");
    check(cache.inputs.size() == layers.size(), "Mlp: cache does not match network");
    check(dY.rows() == out_dim(), "Mlp: upstream gradient dimension mismatch");
    if (grads.dW.empty()) grads.init_like(*this);
    Mat delta = dY;
    for (int li = static_cast<int>(layers.size()) - 1; li >= 0; --li) {
        const auto& l = layers[static_cast<size_t>(li)];
        Mat dz = delta.cwiseProduct(act_deriv(cache.preacts[static_cast<size_t>(li)], l.act));
        grads.dW[static_cast<size_t>(li)] += dz * cache.inputs[static_cast<size_t>(li)].transpose();
        grads.db[static_cast<size_t>(li)] += dz.rowwise().sum();
        if (l.residual) {
            delta = delta + l.W.transpose() * dz;
        } else {
            delta = l.W.transpose() * dz;
        }
    }
    return delta;
}

Mlp Mlp::make(const std::vector<int>& widths, Rng& rng, bool zero_final) {
    check(widths.size() >= 2, "Mlp: need at least input and output widths");
    Mlp net;
    for (size_t i = 0; i + 1 < widths.size(); ++i) {
        Layer l;
        int in = widths[i], out = widths[i + 1];
        bool last = (i + 2 == widths.size());
        l.act = last ? Act::Linear : Act::Silu;
        l.residual = !last && i > 0 && in == out;
        if (last && zero_final) {
            l.W = Mat::Zero(out, in);
        } else {
            // residual blocks start as gentle perturbations of the identity
            double scale = std::sqrt((l.residual ? 0.5 : 2.0) / static_cast<double>(in));
            l.W = Mat(out, in);
            for (int c = 0; c < in; ++c)
                for (int r = 0; r < out; ++r) l.W(r, c) = scale * rng.normal();
        }
        l.b = Vec::Zero(out);
        net.layers.push_back(std::move(l));
    }
    return net;
}

AdamState AdamState::make(const Mlp& net, double lr_) {
    AdamState s;
    s.lr = lr_;
    for (const auto& l : net.layers) {
        s.mW.push_back(Mat::Zero(l.W.rows(), l.W.cols()));
        s.vW.push_back(Mat::Zero(l.W.rows(), l.W.cols()));
        s.mb.push_back(Vec::Zero(l.b.size()));
        s.vb.push_back(Vec::Zero(l.b.size()));
    }
    return s;
}

void AdamState::step(Mlp& net, const Mlp::Grads& grads) {
    if (net.frozen) return;  // frozen contract: parameters stay bit-identical
    check(grads.dW.size() == net.layers.size() && mW.size() == net.layers.size(),
          "Adam: gradient shapes do not match parameters");
    ++step_count;
    double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step_count));
    double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step_count));
    for (size_t i = 0; i < net.layers.size(); ++i) {
        auto& l = net.layers[i];
        check(grads.dW[i].rows() == l.W.rows() && grads.dW[i].cols() == l.W.cols(),
              "Adam: gradient shapes do not match parameters");
        mW[i] = beta1 * mW[i] + (1.0 - beta1) * grads.dW[i];
        vW[i] = beta2 * vW[i] + (1.0 - beta2) * grads.dW[i].cwiseProduct(grads.dW[i]);
        mb[i] = beta1 * mb[i] + (1.0 - beta1) * grads.db[i];
        vb[i] = beta2 * vb[i] + (1.0 - beta2) * grads.db[i].cwiseProduct(grads.db[i]);
        l.W -= (lr / bc1) * mW[i].cwiseQuotient((vW[i] / bc2).cwiseSqrt().array().matrix() +
                                                Mat::Constant(l.W.rows(), l.W.cols(), eps));
        l.b -= (lr / bc1) * mb[i].cwiseQuotient((vb[i] / bc2).cwiseSqrt() +
                                                Vec::Constant(l.b.size(), eps));
    }
}

namespace {

// Input scaling keeps first-layer activations O(1) across noise scales.
inline double input_scale(HeadKind head, double level, double sigma_data) {
    if (head == HeadKind::DmDenoiser) return 1.0 / std::sqrt(level * level + sigma_data * sigma_data);
    return 1.0;
}

// Skip scale: residual weight sigma (denoiser) or 1-t (endpoint head).
inline double skip_scale(HeadKind head, double level) {
    return head == HeadKind::DmDenoiser ? level : 1.0 - level;
}

}  // namespace

Mat DenoiserNet::raw_batch(const Mat& X, const std::vector<double>& sigmas, const Mat* extra,
                           Cache* cache) const {
    check(X.rows() == data_dim, "denoise: dimension mismatch");
    check(static_cast<size_t>(X.cols()) == sigmas.size(), "denoise: levels/batch mismatch");
    if (extra) {
        check(extra->rows() == emb.dim() && extra->cols() == X.cols(),
              "denoise: extra embedding dimension mismatch");
    }
    Mat U(data_dim + emb.dim(), X.cols());
    for (Eigen::Index c = 0; c < X.cols(); ++c) {
        double lv = sigmas[static_cast<size_t>(c)];
        double cin = input_scale(head, lv, sigma_data);
        U.col(c).head(data_dim) = cin * X.col(c);
        Vec e = emb.embed(head == HeadKind::DmDenoiser ? lv : lv + 1e-12);
        if (extra) e += extra->col(c);
        U.col(c).tail(emb.dim()) = e;
    }
    if (cache) {
        cache->levels = sigmas;
        cache->x = X;
        return mlp.forward(U, &cache->mlp_cache);
    }
    return mlp.forward(U);
}

Mat DenoiserNet::denoise_batch(const Mat& X, const std::vector<double>& sigmas, const Mat* extra,
                               Cache* cache) const {
    Mat F = raw_batch(X, sigmas, extra, cache);
    Mat D = X;
    for (Eigen::Index c = 0; c < X.cols(); ++c)
        D.col(c) += skip_scale(head, sigmas[static_cast<size_t>(c)]) * F.col(c);
    return D;
}

Mat DenoiserNet::denoise_batch(const Mat& X, double sigma, const Mat* extra, Cache* cache) const {
    return denoise_batch(X, std::vector<double>(static_cast<size_t>(X.cols()), sigma), extra,
                         cache);
}

Vec DenoiserNet::denoise(const Vec& x, double sigma, const Vec* extra) const {
    Mat X = x;
    if (extra) {
        Mat E = *extra;
        return denoise_batch(X, sigma, &E).col(0);
    }
    return denoise_batch(X, sigma).col(0);
}

DenoiserNet::BackwardResult DenoiserNet::backward_batch(const Cache& cache, const Mat& dOut,
                                                        Mlp::Grads& grads) const {
    check(cache.mlp_cache.valid(), "denoise: backward without a cached forward pass");
    Mat dF = dOut;
    for (Eigen::Index c = 0; c < dF.cols(); ++c)
        dF.col(c) *= skip_scale(head, cache.levels[static_cast<size_t>(c)]);
    Mat dU = mlp.backward(cache.mlp_cache, dF, grads);
    BackwardResult res;
    res.dX = dOut;  // skip path
    res.dExtra = dU.bottomRows(emb.dim());
    for (Eigen::Index c = 0; c < dU.cols(); ++c) {
        double cin = input_scale(head, cache.levels[static_cast<size_t>(c)], sigma_data);
        res.dX.col(c) += cin * dU.col(c).head(data_dim);
    }
    return res;
}

DenoiserNet DenoiserNet::make(int data_dim, int hidden_width, int hidden_depth,
                              const LevelEmbedding& emb, HeadKind head, Rng& rng) {
    check(data_dim > 0 && hidden_width > 0 && hidden_depth > 0, "DenoiserNet: bad architecture");
    std::vector<int> widths;
    widths.push_back(data_dim + emb.dim());
    for (int i = 0; i < hidden_depth; ++i) widths.push_back(hidden_width);
    widths.push_back(data_dim);
    DenoiserNet net;
    net.mlp = Mlp::make(widths, rng);
    net.emb = emb;
    net.head = head;
    net.data_dim = data_dim;
    return net;
}

Vec BridgeNet::forward(const Vec& g) const {
    Mat G = g;
    return forward_batch(G).col(0);
}

Mat BridgeNet::forward_batch(const Mat& G, Mlp::Cache* cache) const {
    return mlp.forward(G, cache);
}

BridgeNet BridgeNet::make(int data_dim, int embed_dim, int hidden_width, int hidden_depth,
                          Rng& rng) {
    check(data_dim > 0 && embed_dim > 0, "BridgeNet: bad dims");
    std::vector<int> widths;
    widths.push_back(data_dim);
    for (int i = 0; i < hidden_depth; ++i) widths.push_back(hidden_width);
    widths.push_back(embed_dim);
    BridgeNet net;
    net.mlp = Mlp::make(widths, rng);  // zero final layer: initial output is 0
    return net;
}

// ---- checkpoint io ----------------------------------------------------

namespace {

constexpr char kMagic[6] = {'B', 'G', 'N', 'E', 'T', '1'};

template <typename T>
void write_pod(std::ostream& os, T v) {
    static_assert(std::is_trivially_copyable_v<T>);
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is) {
    T v;
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    check(static_cast<bool>(is), "checkpoint: truncated record");
    return v;
}

void write_string(std::ostream& os, const std::string& s) {
    write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(s.size()));
    os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& is) {
    auto n = read_pod<std::uint32_t>(is);
    std::string s(n, '\0');
    is.read(s.data(), n);
    check(static_cast<bool>(is), "checkpoint: truncated record");
    return s;
}

}  // namespace

void write_net_record(std::ostream& os, const NetRecord& rec) {
    os.write(kMagic, sizeof(kMagic));
    write_string(os, rec.role);
    write_pod<std::uint8_t>(os, rec.head == HeadKind::DmDenoiser ? 0 : 1);
    write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(rec.data_dim));
    write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(rec.emb.n_freq));
    write_pod<double>(os, rec.emb.base_scale);
    write_pod<double>(os, rec.sigma_data);
    write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(rec.net.layers.size()));
    for (const auto& l : rec.net.layers) {
        write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(l.W.rows()));
        write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(l.W.cols()));
        write_pod<std::uint8_t>(os, l.act == Act::Silu ? 0 : 1);
        write_pod<std::uint8_t>(os, l.residual ? 1 : 0);
    }
    for (const auto& l : rec.net.layers) {
        os.write(reinterpret_cast<const char*>(l.W.data()),
                 static_cast<std::streamsize>(sizeof(double) * static_cast<size_t>(l.W.size())));
        os.write(reinterpret_cast<const char*>(l.b.data()),
                 static_cast<std::streamsize>(sizeof(double) * static_cast<size_t>(l.b.size())));
    }
}

NetRecord read_net_record(std::istream& is) {
    char magic[6];
    is.read(magic, sizeof(magic));
    check(static_cast<bool>(is) && std::memcmp(magic, kMagic, sizeof(kMagic)) == 0,
          "checkpoint: bad magic");
    NetRecord rec;
    rec.role = read_string(is);
    rec.head = read_pod<std::uint8_t>(is) == 0 ? HeadKind::DmDenoiser : HeadKind::FmEndpoint;
    rec.data_dim = static_cast<int>(read_pod<std::uint32_t>(is));
    rec.emb.n_freq = static_cast<int>(read_pod<std::uint32_t>(is));
    rec.emb.base_scale = read_pod<double>(is);
    rec.sigma_data = read_pod<double>(is);
    auto n_layers = read_pod<std::uint32_t>(is);
    std::vector<std::pair<int, int>> shapes;
    for (std::uint32_t i = 0; i < n_layers; ++i) {
        int rows = static_cast<int>(read_pod<std::uint32_t>(is));
        int cols = static_cast<int>(read_pod<std::uint32_t>(is));
        Mlp::Layer l;
        l.act = read_pod<std::uint8_t>(is) == 0 ? Act::Silu : Act::Linear;
        l.residual = read_pod<std::uint8_t>(is) != 0;
        l.W = Mat(rows, cols);
        l.b = Vec(rows);
        rec.net.layers.push_back(std::move(l));
    }
    for (auto& l : rec.net.layers) {
        is.read(reinterpret_cast<char*>(l.W.data()),
                static_cast<std::streamsize>(sizeof(double) * static_cast<size_t>(l.W.size())));
        is.read(reinterpret_cast<char*>(l.b.data()),
                static_cast<std::streamsize>(sizeof(double) * static_cast<size_t>(l.b.size())));
        check(static_cast<bool>(is), "checkpoint: truncated record");
    }
    return rec;
}

void save_records(const std::string& path, const std::vector<NetRecord>& recs) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    check(static_cast<bool>(os), "checkpoint: cannot open for writing: " + path);
    for (const auto& r : recs) write_net_record(os, r);
    check(static_cast<bool>(os), "checkpoint: write failed: " + path);
}

std::vector<NetRecord> load_records(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    check(static_cast<bool>(is), "checkpoint: cannot open: " + path);
    std::vector<NetRecord> recs;
    while (is.peek() != std::char_traits<char>::eof()) recs.push_back(read_net_record(is));
    check(!recs.empty(), "checkpoint: empty file: " + path);
    return recs;
}

DenoiserNet denoiser_from_record(const NetRecord& rec) {
    DenoiserNet net;
    net.mlp = rec.net;
    net.emb = rec.emb;
    net.head = rec.head;
    net.data_dim = rec.data_dim;
    net.sigma_data = rec.sigma_data;
    return net;
}

NetRecord record_from_denoiser(const DenoiserNet& net, const std::string& role) {
    NetRecord rec;
    rec.role = role;
    rec.head = net.head;
    rec.data_dim = net.data_dim;
    rec.emb = net.emb;
    rec.sigma_data = net.sigma_data;
    rec.net = net.mlp;
    return rec;
}

}  // namespace bridgegen
