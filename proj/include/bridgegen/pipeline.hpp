#pragma once

#include <optional>
#include <string>
#include <vector>

#include "bridgegen/adjoint.hpp"
#include "bridgegen/config.hpp"
#include "bridgegen/metrics.hpp"
#include "bridgegen/samplers.hpp"

namespace bridgegen {
namespace pipeline {

// Samples CSV: sample_id followed by the flattened coordinates.
void write_samples_csv(const std::string& path, const Mat& samples);
Mat read_samples_csv(const std::string& path);

// Plain coordinate CSV used for gmm2d datasets (header x0,x1,...).
void write_points_csv(const std::string& path, const Mat& points);
Mat read_points_csv(const std::string& path);

ConstraintSpec build_constraint(const RunConfig& cfg);
GammaSchedule build_gamma(const RunConfig& cfg, bool flow);
TrainTimeDist build_train_dist(const RunConfig& cfg, bool flow);

Mat load_training_matrix(const RunConfig& cfg);

// Everything needed to run or evaluate a method: loaded nets plus the
// effective denoiser / endpoint with the method's guidance folded in.
struct MethodContext {
    Method method = Method::DmBaseline;
    bool flow = false;
    int data_dim = 0;
    std::vector<NetRecord> records;
    DenoiserNet backbone;
    BridgeNet bridge;
    bool has_bridge = false;
    Mlp control;
    bool has_control = false;
    LevelEmbedding control_emb;
    ConstraintSpec constraint;
    GammaSchedule gamma;
    // Owned pieces wired into the bridged view below.
    BridgedModel bridged;

    EffectiveDenoiser effective;  // (X, sigma) for dm-*, (X, t) endpoint for fm-*
    adjoint::ControlContext control_ctx;
};

// Loads checkpoint records and assembles the per-method sampling context.
MethodContext build_method_context(const RunConfig& cfg);

void cmd_gen_data(const RunConfig& cfg);
void cmd_train(const RunConfig& cfg);
void cmd_finetune(const RunConfig& cfg);
void cmd_sample(const RunConfig& cfg);
metrics::MetricsReport cmd_eval(const RunConfig& cfg);
void cmd_plot(const RunConfig& cfg);

}  // namespace pipeline
}  // namespace bridgegen
