#pragma once

#include <functional>
#include <string>

#include "bridgegen/constraints.hpp"
#include "bridgegen/objectives.hpp"
#include "bridgegen/schedules.hpp"

namespace bridgegen {

enum class Method {
    DmBaseline,
    DmMpgd,
    DmMbm,
    DmMbmpp,
    FmBaseline,
    FmTfGuided,
    FmMbmpp,
    Am,
};

Method method_from_string(const std::string& s);
std::string method_to_string(Method m);
bool method_is_flow(Method m);

struct SamplerSpec {
    Method method = Method::DmBaseline;
    int n_steps = 200;      // diffusion grid size
    int fm_steps = 50;      // flow-matching Euler steps
    double s_churn = 10.0;
    double guidance_rho = 1.0;  // scale of the training-free r(t)
    std::uint64_t seed = 0;
};

// Training-free guidance weight r(sigma) = rho * sigma^2 / (sigma^2 + 1).
double mpgd_weight(double rho, double sigma);
// Flow-matching analogue, decaying toward the data end: r(t) = rho * (1 - t).
double tf_weight_fm(double rho, double t);

// Effective denoiser (X, sigma) -> D_eff used by the stochastic sampler; the
// per-method hooks are folded into this function.
using EffectiveDenoiser = std::function<Mat(const Mat&, double)>;
// Effective endpoint (X, t) -> X1_hat for the flow sampler.
using EffectiveEndpoint = std::function<Mat(const Mat&, double)>;

// Build method hooks from an arbitrary base denoiser (exact oracles in tests,
// networks in the pipeline). For DmMbmpp the bridged model is used when given;
// otherwise base + output-side bridge (zero-initialized bridge semantics).
EffectiveDenoiser make_dm_effective(Method method, DenoiseFn base, const ConstraintSpec* constraint,
                                    const GammaSchedule* gamma, double rho,
                                    const BridgedModel* bridged = nullptr);
EffectiveEndpoint make_fm_effective(Method method, DenoiseFn base_endpoint,
                                    const ConstraintSpec* constraint, const GammaSchedule* gamma,
                                    double rho, const BridgedModel* bridged = nullptr);

// Stochastic sampler over the log-linear sigma grid with per-step churn.
// Chains are independent; chain i draws from a seed derived from (seed, i),
// so results do not depend on batching. Returns d x n samples.
Mat dm_sample(const SamplerSpec& spec, const EffectiveDenoiser& denoiser,
              const NoiseSchedule& sched, int data_dim, int n_samples);

// First-order Euler flow sampler on a uniform time grid; the velocity is
// evaluated at the step's end time clamped to 1 - dt to avoid the endpoint
// singularity of the (1-t) parameterization.
Mat fm_sample(const SamplerSpec& spec, const EffectiveEndpoint& endpoint, int data_dim,
              int n_samples);

}  // namespace bridgegen
