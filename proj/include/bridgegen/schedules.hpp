#pragma once

#include <string>
#include <vector>

#include "bridgegen/common.hpp"
#include "bridgegen/rng.hpp"

namespace bridgegen {

// Log-linear noise level grid, decreasing from sigma_max to sigma_min.
struct NoiseSchedule {
    double sigma_min = 3e-5;
    double sigma_max = 80.0;
    int n_steps = 200;

    NoiseSchedule() = default;
    NoiseSchedule(double smin, double smax, int n) : sigma_min(smin), sigma_max(smax), n_steps(n) {
        check(sigma_min > 0.0, "NoiseSchedule: sigma_min must be positive");
        check(sigma_min < sigma_max, "NoiseSchedule: sigma_min must be below sigma_max");
        check(n_steps >= 2, "NoiseSchedule: n_steps must be at least 2");
    }
};

double sigma_grid(const NoiseSchedule& sched, int i);
std::vector<double> sigma_grid_all(const NoiseSchedule& sched);

// Bridge strength gamma(sigma) = kappa * (sigma^-2 - sigma_max^-2).
// Zero at sigma_max, diverges as sigma -> 0, strictly decreasing, C1.
struct GammaSchedule {
    double kappa = 0.05;
    double sigma_max = 80.0;

    GammaSchedule() = default;
    GammaSchedule(double k, double smax) : kappa(k), sigma_max(smax) {
        check(kappa > 0.0, "GammaSchedule: kappa must be positive");
        check(sigma_max > 0.0, "GammaSchedule: sigma_max must be positive");
    }
};

double gamma_value(const GammaSchedule& g, double sigma);

// Distribution of the noise level / interpolation time used at training time.
struct TrainTimeDist {
    enum class Kind { LogUniformSigma, LogitNormalT };

    Kind kind = Kind::LogUniformSigma;
    double mu = -0.6;
    double sd = 1.6;
    // Support of the log-uniform branch.
    double sigma_min = 3e-5;
    double sigma_max = 80.0;

    static TrainTimeDist log_uniform(double smin, double smax) {
        check(smin > 0.0 && smin < smax, "TrainTimeDist: invalid sigma range");
        TrainTimeDist d;
        d.kind = Kind::LogUniformSigma;
        d.sigma_min = smin;
        d.sigma_max = smax;
        return d;
    }

    static TrainTimeDist logit_normal(double mu, double sd) {
        check(sd > 0.0, "TrainTimeDist: sd must be positive");
        TrainTimeDist d;
        d.kind = Kind::LogitNormalT;
        d.mu = mu;
        d.sd = sd;
        return d;
    }
};

double sample_train_level(const TrainTimeDist& d, Rng& rng);

// DSM loss weight in denoiser space; constant by construction.
inline double loss_weight(double sigma) {
    check(sigma > 0.0, "loss_weight: sigma must be positive");
    return 1.0;
}

}  // namespace bridgegen
