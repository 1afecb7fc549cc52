#pragma once

#include <map>
#include <string>
#include <vector>

#include "bridgegen/common.hpp"
#include "bridgegen/gmm.hpp"

namespace bridgegen {

// Thrown for malformed files, unknown keys and invalid values; the CLI maps
// it to exit code 2.
class ConfigError : public Error {
  public:
    explicit ConfigError(const std::string& what) : Error(what) {}
};

// Flat key=value text; '#' starts a comment, blank lines ignored.
std::map<std::string, std::string> parse_key_values(const std::string& text);
std::map<std::string, std::string> load_key_value_file(const std::string& path);

// Experiment description. Every key is validated against the schema; unknown
// keys are rejected.
struct RunConfig {
    // experiment
    std::string task = "balls";  // balls | gmm2d
    std::string method = "dm-baseline";
    std::uint64_t seed = 0;

    // schedules
    double sigma_min = 3e-5;
    double sigma_max = 80.0;
    int n_steps = 200;
    double gamma_kappa = 0.05;
    std::string train_time_dist = "log-uniform-sigma";  // or logit-normal-t
    // support of the training-time level distribution; 0 means "use the
    // sampler grid bound"
    double train_sigma_min = 0.0;
    double train_sigma_max = 0.0;
    double logitnormal_mu = -0.6;
    double logitnormal_sd = 1.6;

    // sampling
    int fm_steps = 50;
    double s_churn = 10.0;
    double guidance_rho = 1.0;
    int n_samples = 100;

    // training
    std::string mode = "pretrain";  // pretrain | mbm | mbmpp-dm | mbmpp-fm
    std::string loss_weighting = "unit";  // unit | eps
    int batch_size = 32;
    double lr = 3e-4;
    int steps = 1000;
    int log_every = 50;

    // networks
    int hidden_width = 256;
    int hidden_depth = 4;
    int n_freq = 16;
    double embed_base_scale = 100.0;
    int bridge_width = 128;
    int bridge_depth = 2;

    // adjoint matching
    double am_sigma = 0.2;
    int am_outer = 200;
    int am_batch = 16;
    double am_lr = 3e-4;

    // balls task
    int n_balls = 3;
    int n_timesteps = 20;
    double ball_radius = 0.08;
    double box_halfwidth = 1.0;
    int n_scenarios = 2000;
    double vel_max = 0.1;

    // constraint
    std::string constraint_kind = "composite";  // ball-collision | ball-boundary |
                                                // quadratic-to-point | halfplane | composite
    double constraint_radius = 0.08;
    double constraint_box_halfwidth = 1.0;
    std::vector<double> constraint_weights = {1.0, 1.0};
    std::vector<double> constraint_target;
    std::vector<double> constraint_normal;
    double constraint_offset = 0.0;

    // gmm task
    std::vector<double> gmm_weights = {0.5, 0.3, 0.2};
    std::vector<std::vector<double>> gmm_means = {{-1.2, 0.8}, {1.0, 1.5}, {0.5, -1.1}};
    std::vector<double> gmm_vars = {0.35, 0.2, 0.5};

    // evaluation
    double eval_tol = 1e-3;
    int relbo_k = 8;
    int relbo_rows = 128;

    // paths
    std::string data_path = "data.csv";
    std::string ckpt_path = "model.ckpt";
    std::string init_path;  // pretrained checkpoint for finetune
    std::string samples_path = "samples.csv";
    std::string reference_path;
    std::string metrics_path = "metrics.csv";
    std::string plot_path = "plot.svg";
    std::string loss_log_path;

    void apply(const std::map<std::string, std::string>& kv);
    void apply_override(const std::string& key, const std::string& value);
    void validate() const;

    GaussianMixture mixture() const;
};

RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides);

}  // namespace bridgegen
