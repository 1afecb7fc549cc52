#include "bridgegen/samplers.hpp"

#include <cmath>

namespace bridgegen {

Method method_from_string(const std::string& s) {
    if (s == "dm-baseline") return Method::DmBaseline;
    if (s == "dm-mpgd") return Method::DmMpgd;
    if (s == "dm-mbm") return Method::DmMbm;
    if (s == "dm-mbmpp") return Method::DmMbmpp;
    if (s == "fm-baseline") return Method::FmBaseline;
    if (s == "fm-tfguided") return Method::FmTfGuided;
    if (s == "fm-mbmpp") return Method::FmMbmpp;
    if (s == "am") return Method::Am;
    throw Error("unknown method: " + s);
}

std::string method_to_string(Method m) {
    switch (m) {
        case Method::DmBaseline: return "dm-baseline";
        case Method::DmMpgd: return "dm-mpgd";
        case Method::DmMbm: return "dm-mbm";
        case Method::DmMbmpp: return "dm-mbmpp";
        case Method::FmBaseline: return "fm-baseline";
        case Method::FmTfGuided: return "fm-tfguided";
        case Method::FmMbmpp: return "fm-mbmpp";
        case Method::Am: return "am";
    }
    throw Error("unknown method enum");
}

bool method_is_flow(Method m) {
    return m == Method::FmBaseline || m == Method::FmTfGuided || m == Method::FmMbmpp ||
           m == Method::Am;
}

double mpgd_weight(double rho, double sigma) {
    return rho * sigma * sigma / (sigma * sigma + 1.0);
}

double tf_weight_fm(double rho, double t) { return rho * (1.0 - t); }

namespace {

Mat constraint_grads(const ConstraintSpec& c, const Mat& X) {
    Mat G(X.rows(), X.cols());
    for (Eigen::Index i = 0; i < X.cols(); ++i) G.col(i) = loss_grad(c, X.col(i));
    return G;
}

// Gamma with the continuous zero extension above sigma_max (churned levels).
double gamma_clamped(const GammaSchedule& g, double sigma) {
    if (sigma >= g.sigma_max) return 0.0;
    return gamma_value(g, sigma);
}

}  // namespace

EffectiveDenoiser make_dm_effective(Method method, DenoiseFn base, const ConstraintSpec* constraint,
                                    const GammaSchedule* gamma, double rho,
                                    const BridgedModel* bridged) {
    switch (method) {
        case Method::DmBaseline:
            return base;
        case Method::DmMpgd:
            check(constraint != nullptr, "dm-mpgd needs a constraint");
            return [=](const Mat& X, double sigma) {
                Mat d = base(X, sigma);
                double r = mpgd_weight(rho, sigma);
                if (r != 0.0) d -= r * constraint_grads(*constraint, d);
                return d;
            };
        case Method::DmMbm:
            check(constraint != nullptr && gamma != nullptr, "dm-mbm needs constraint and gamma");
            return [=](const Mat& X, double sigma) {
                // Noisy-state bridge in denoiser space: D - sigma^2 * br(x).
                Mat d = base(X, sigma);
                double gam = gamma_clamped(*gamma, sigma);
                if (gam != 0.0) d -= sigma * sigma * gam * constraint_grads(*constraint, X);
                return d;
            };
        case Method::DmMbmpp:
            if (bridged) {
                check(bridged->mode == TrainMode::MbmppDm, "dm-mbmpp needs an mbmpp-dm model");
                return [=](const Mat& X, double sigma) {
                    return bridged_denoise_batch(*bridged, X, sigma);
                };
            }
            check(constraint != nullptr && gamma != nullptr, "dm-mbmpp needs constraint and gamma");
            return [=](const Mat& X, double sigma) {
                // Zero-initialized bridge semantics: input path untouched,
                // output-side correction at the detached estimate.
                Mat d = base(X, sigma);
                double gam = gamma_clamped(*gamma, sigma);
                if (gam != 0.0) d -= gam * constraint_grads(*constraint, d);
                return d;
            };
        default:
            throw Error("make_dm_effective: not a diffusion method");
    }
}

EffectiveEndpoint make_fm_effective(Method method, DenoiseFn base_endpoint,
                                    const ConstraintSpec* constraint, const GammaSchedule* gamma,
                                    double rho, const BridgedModel* bridged) {
    switch (method) {
        case Method::FmBaseline:
            return base_endpoint;
        case Method::FmTfGuided:
            check(constraint != nullptr, "fm-tfguided needs a constraint");
            return [=](const Mat& X, double t) {
                Mat e = base_endpoint(X, t);
                double r = tf_weight_fm(rho, t);
                if (r != 0.0) e -= r * constraint_grads(*constraint, e);
                return e;
            };
        case Method::FmMbmpp:
            if (bridged) {
                check(bridged->mode == TrainMode::MbmppFm, "fm-mbmpp needs an mbmpp-fm model");
                return [=](const Mat& X, double t) {
                    return bridged_denoise_batch(*bridged, X, t);
                };
            }
            check(constraint != nullptr && gamma != nullptr,
                  "fm-mbmpp needs constraint and gamma");
            return [=](const Mat& X, double t) {
                Mat e = base_endpoint(X, t);
                double gam = gamma_clamped(*gamma, 1.0 - t);
                if (gam != 0.0) e -= gam * constraint_grads(*constraint, e);
                return e;
            };
        default:
            throw Error("make_fm_effective: not a flow method");
    }
}

Mat dm_sample(const SamplerSpec& spec, const EffectiveDenoiser& denoiser,
              const NoiseSchedule& sched, int data_dim, int n_samples) {
    check(n_samples > 0, "dm_sample: need at least one sample");
    check(sched.n_steps >= 2, "dm_sample: grid too small");
    std::vector<double> levels = sigma_grid_all(sched);
    levels.push_back(0.0);
    const int n_steps = sched.n_steps;

    // Per-chain streams: chain i is reproducible independent of batching.
    std::vector<Rng> chains;
    chains.reserve(static_cast<size_t>(n_samples));
    for (int i = 0; i < n_samples; ++i)
        chains.emplace_back(derive_seed(spec.seed, "dm-chain", static_cast<std::uint64_t>(i)));

    Mat x(data_dim, n_samples);
    for (int i = 0; i < n_samples; ++i)
        x.col(i) = sched.sigma_max * chains[static_cast<size_t>(i)].normal_vec(data_dim);

    double churn = std::min(spec.s_churn / static_cast<double>(n_steps), std::sqrt(2.0) - 1.0);
    for (int step = 0; step < n_steps; ++step) {
        double sigma = levels[static_cast<size_t>(step)];
        double sigma_next = levels[static_cast<size_t>(step) + 1];
        double sigma_hat = sigma * (1.0 + churn);
        if (churn > 0.0) {
            double noise_scale = std::sqrt(sigma_hat * sigma_hat - sigma * sigma);
            for (int i = 0; i < n_samples; ++i)
                x.col(i) += noise_scale * chains[static_cast<size_t>(i)].normal_vec(data_dim);
        }
        Mat d_eff = denoiser(x, sigma_hat);
        x += (sigma_next - sigma_hat) / sigma_hat * (x - d_eff);
        if (!x.allFinite())
            throw DivergenceError("sampler diverged at step " + std::to_string(step));
    }
    return x;
}

Mat fm_sample(const SamplerSpec& spec, const EffectiveEndpoint& endpoint, int data_dim,
              int n_samples) {
    check(n_samples > 0, "fm_sample: need at least one sample");
    check(spec.fm_steps >= 2, "fm_sample: need at least two steps");
    const int n = spec.fm_steps;
    const double dt = 1.0 / static_cast<double>(n);

    Mat x(data_dim, n_samples);
    for (int i = 0; i < n_samples; ++i) {
        Rng rng(derive_seed(spec.seed, "fm-chain", static_cast<std::uint64_t>(i)));
        x.col(i) = rng.normal_vec(data_dim);
    }

    for (int step = 0; step < n; ++step) {
        // Velocity at the end of the step, clamped away from t = 1.
        double t_eval = std::min(static_cast<double>(step + 1) * dt, 1.0 - dt);
        Mat x1_hat = endpoint(x, t_eval);
        x += dt / (1.0 - t_eval) * (x1_hat - x);
        if (!x.allFinite())
            throw DivergenceError("sampler diverged at step " + std::to_string(step));
    }
    return x;
}

}  // namespace bridgegen
