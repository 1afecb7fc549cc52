#pragma once

#include <functional>

#include "bridgegen/constraints.hpp"
#include "bridgegen/nnet.hpp"
#include "bridgegen/schedules.hpp"

namespace bridgegen {

enum class TrainMode { Pretrain, Mbm, MbmppDm, MbmppFm };

// Frozen backbone + trainable bridge embedding + constraint, composed per the
// denoised-state bridging recipe. In Mbm mode there is no bridge net and the
// whole backbone trains; in Mbmpp modes the backbone must be frozen.
struct BridgedModel {
    DenoiserNet* backbone = nullptr;
    BridgeNet* bridge = nullptr;
    const ConstraintSpec* constraint = nullptr;
    GammaSchedule gamma;
    TrainMode mode = TrainMode::Pretrain;

    void validate() const;

    // Gamma argument for a given conditioning level: sigma itself for the
    // diffusion head, 1 - t (with gamma.sigma_max = 1) for the endpoint head.
    double gamma_level(double level) const;
};

// Denoised-state bridged prediction:
//   1. plain backbone estimate, detached;
//   2. constraint gradient at that estimate;
//   3. backbone pass with the bridge embedding injected at the input;
//   4. output-side correction: subtract gamma * gradient.
Vec bridged_denoise(const BridgedModel& m, const Vec& x_t, double sigma);
Mat bridged_denoise_batch(const BridgedModel& m, const Mat& X, double sigma);

// Mode-independent score parameterization: s = (D - x) / sigma^2.
inline Vec score_from_denoised(const Vec& denoised, const Vec& x, double sigma) {
    return (denoised - x) / (sigma * sigma);
}

// Monte-Carlo DSM loss of an arbitrary denoiser on given noise draws; test
// hook and building block for the relative-ELBO surrogate.
using DenoiseFn = std::function<Mat(const Mat&, double)>;
double dsm_loss_value(const DenoiseFn& denoiser, const Mat& X0, const std::vector<double>& sigmas,
                      const Mat& eps);

// One optimizer-ready loss evaluation: draws levels and noise, runs the
// mode-appropriate forward/backward, and fills gradient buffers for whatever
// is trainable (backbone for Pretrain/Mbm, bridge for Mbmpp modes).
struct LossGrads {
    double loss = 0.0;
    Mlp::Grads backbone;
    Mlp::Grads bridge;
};

// Per-level weight of the denoiser-space regression. Unit matches
// loss_weight. With the x + sigma*raw head the parameter gradient scales as
// lambda*sigma^2, so EpsPrediction (lambda = 1/sigma^2, the noise-prediction
// weighting) gives every noise decade the same gradient voice; that is what
// makes the wide log-uniform range trainable at small step budgets.
enum class DsmWeighting { Unit, EpsPrediction };

LossGrads dsm_loss(BridgedModel& m, const TrainTimeDist& dist, const Mat& X0, Rng& rng,
                   DsmWeighting weighting = DsmWeighting::Unit);
LossGrads fm_loss(BridgedModel& m, const TrainTimeDist& dist, const Mat& X1, Rng& rng);

// Full training step: dsm/fm loss plus Adam updates on the trainable parts.
struct Trainer {
    BridgedModel model;
    TrainTimeDist dist;
    AdamState opt_backbone;
    AdamState opt_bridge;
    bool flow_matching = false;
    DsmWeighting weighting = DsmWeighting::Unit;

    double step(const Mat& batch, Rng& rng);
};

}  // namespace bridgegen
