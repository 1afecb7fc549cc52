#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "bridgegen/common.hpp"
#include "bridgegen/rng.hpp"

namespace bridgegen {

enum class Act { Silu, Linear };

// Sinusoidal embedding of the noise level: [sin(w_j log s), cos(w_j log s)]
// with geometrically spaced w_j from 1 to base_scale. Output dim 2*n_freq.
struct LevelEmbedding {
    int n_freq = 16;
    double base_scale = 100.0;

    int dim() const { return 2 * n_freq; }
    Vec embed(double sigma) const;
};

// Plain fully connected net with explicit reverse-mode gradients. Batches are
// column-major: one sample per column. Forward caches live in an explicit
// Cache object, so a single instance stays safe to share read-only.
struct Mlp {
    struct Layer {
        Mat W;  // out x in
        Vec b;
        Act act = Act::Silu;
        bool residual = false;  // h + silu(W h + b); requires square W
    };

    std::vector<Layer> layers;
    bool frozen = false;

    struct Cache {
        std::vector<Mat> inputs;    // input to each layer
        std::vector<Mat> preacts;   // W*in + b per layer
        bool valid() const { return !inputs.empty(); }
    };

    struct Grads {
        std::vector<Mat> dW;
        std::vector<Vec> db;

        void init_like(const Mlp& net);
        void zero();
        void scale(double s);
    };

    int in_dim() const { return static_cast<int>(layers.front().W.cols()); }
    int out_dim() const { return static_cast<int>(layers.back().W.rows()); }
    std::size_t n_params() const;

    Mat forward(const Mat& X, Cache* cache = nullptr) const;

    // Backpropagates dL/dY; accumulates parameter gradients into `grads` and
    // returns dL/dX. Requires the cache from the matching forward pass.
    Mat backward(const Cache& cache, const Mat& dY, Grads& grads) const;

    // Hidden layers He-initialized from rng; square hidden layers become
    // residual blocks; final layer zeros so the net maps everything to zero
    // at initialization.
    static Mlp make(const std::vector<int>& widths, Rng& rng, bool zero_final = true);
};

// Bias-corrected Adam. Skips the update entirely for frozen nets.
struct AdamState {
    double lr = 3e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    long step_count = 0;
    std::vector<Mat> mW, vW;
    std::vector<Vec> mb, vb;

    static AdamState make(const Mlp& net, double lr);
    void step(Mlp& net, const Mlp::Grads& grads);
};

// What the skip connection and input scaling mean for a head:
//   DmDenoiser:  D(x,s)  = x + s * f([x / sqrt(s^2 + sd^2); emb(s) + extra])
//   FmEndpoint:  X1(x,t) = x + (1-t) * f([x; emb(t) + extra])  (f is the velocity)
enum class HeadKind { DmDenoiser, FmEndpoint };

// Denoiser with a noise-level embedding slot. The optional extra embedding is
// added to the level embedding before the first layer (the injection point
// for bridge signals); absent and all-zero extra are bit-identical.
struct DenoiserNet {
    Mlp mlp;
    LevelEmbedding emb;
    HeadKind head = HeadKind::DmDenoiser;
    int data_dim = 0;
    double sigma_data = 1.0;

    bool frozen() const { return mlp.frozen; }
    void set_frozen(bool f) { mlp.frozen = f; }
    int embed_dim() const { return emb.dim(); }

    struct Cache {
        Mlp::Cache mlp_cache;
        std::vector<double> levels;
        Mat x;  // cached input states
    };

    Vec denoise(const Vec& x, double sigma, const Vec* extra = nullptr) const;
    Mat denoise_batch(const Mat& X, const std::vector<double>& sigmas, const Mat* extra = nullptr,
                      Cache* cache = nullptr) const;
    Mat denoise_batch(const Mat& X, double sigma, const Mat* extra = nullptr,
                      Cache* cache = nullptr) const;

    // Raw network output (the residual / velocity), batched.
    Mat raw_batch(const Mat& X, const std::vector<double>& sigmas, const Mat* extra = nullptr,
                  Cache* cache = nullptr) const;

    struct BackwardResult {
        Mat dX;      // gradient w.r.t. the input states
        Mat dExtra;  // gradient w.r.t. the injected embedding
    };
    BackwardResult backward_batch(const Cache& cache, const Mat& dOut, Mlp::Grads& grads) const;

    static DenoiserNet make(int data_dim, int hidden_width, int hidden_depth,
                            const LevelEmbedding& emb, HeadKind head, Rng& rng);
};

// Trainable bridge embedding: maps a constraint gradient to an additive input
// embedding. Final layer is zero-initialized so the initial output is exactly
// zero for every input.
struct BridgeNet {
    Mlp mlp;

    Vec forward(const Vec& g) const;
    Mat forward_batch(const Mat& G, Mlp::Cache* cache = nullptr) const;

    static BridgeNet make(int data_dim, int embed_dim, int hidden_width, int hidden_depth,
                          Rng& rng);
};

// Checkpoint records: magic "BGNET1", little-endian dims header, then raw
// float64 parameter blocks in layer order. A file holds one or more records.
struct NetRecord {
    std::string role;  // "backbone", "bridge", "control", ...
    HeadKind head = HeadKind::DmDenoiser;
    int data_dim = 0;
    LevelEmbedding emb;
    double sigma_data = 1.0;
    Mlp net;
};

void write_net_record(std::ostream& os, const NetRecord& rec);
NetRecord read_net_record(std::istream& is);
void save_records(const std::string& path, const std::vector<NetRecord>& recs);
std::vector<NetRecord> load_records(const std::string& path);

DenoiserNet denoiser_from_record(const NetRecord& rec);
NetRecord record_from_denoiser(const DenoiserNet& net, const std::string& role);

}  // namespace bridgegen
