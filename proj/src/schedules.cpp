#include "bridgegen/schedules.hpp"

#include <cmath>

namespace bridgegen {

double sigma_grid(const NoiseSchedule& sched, int i) {
    check(i >= 0 && i < sched.n_steps, "index out of grid");
    // Exact at the endpoints; log-linear in between.
    if (i == 0) return sched.sigma_max;
    if (i == sched.n_steps - 1) return sched.sigma_min;
    double frac = static_cast<double>(i) / static_cast<double>(sched.n_steps - 1);
    return std::exp(std::log(sched.sigma_max) +
                    frac * (std::log(sched.sigma_min) - std::log(sched.sigma_max)));
}

std::vector<double> sigma_grid_all(const NoiseSchedule& sched) {
    std::vector<double> grid(static_cast<size_t>(sched.n_steps));
    for (int i = 0; i < sched.n_steps; ++i) grid[static_cast<size_t>(i)] = sigma_grid(sched, i);
    return grid;
}

double gamma_value(const GammaSchedule& g, double sigma) {
    check(sigma > 0.0, "gamma undefined at non-positive sigma");
    check(sigma <= g.sigma_max, "gamma undefined above sigma_max");
    return g.kappa * (1.0 / (sigma * sigma) - 1.0 / (g.sigma_max * g.sigma_max));
}

double sample_train_level(const TrainTimeDist& d, Rng& rng) {
    switch (d.kind) {
        case TrainTimeDist::Kind::LogitNormalT: {
            double z = d.mu + d.sd * rng.normal();
            return 1.0 / (1.0 + std::exp(-z));
        }
        case TrainTimeDist::Kind::LogUniformSigma: {
            double u = rng.uniform(std::log(d.sigma_min), std::log(d.sigma_max));
            return std::exp(u);
        }
    }
    throw Error("sample_train_level: unknown kind");
}

}  // namespace bridgegen
