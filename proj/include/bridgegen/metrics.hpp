#pragma once

#include <string>
#include <vector>

#include "bridgegen/ballsim.hpp"
#include "bridgegen/common.hpp"
#include "bridgegen/objectives.hpp"

namespace bridgegen {
namespace metrics {

struct MetricsReport {
    std::string method;
    double collision_rate = 0.0;
    double boundary_rate = 0.0;
    double hdh = 0.0;
    double relbo = std::numeric_limits<double>::quiet_NaN();
    int n_samples = 0;
    std::uint64_t seed = 0;
};

// Fraction of (scenario, timestep) units with any pair overlap / any wall
// penetration exceeding tol.
struct InfractionRates {
    double collision = 0.0;
    double boundary = 0.0;
};
InfractionRates infraction_rates(const std::vector<ballsim::Scenario>& samples, double r, double L,
                                 double tol);

// max over generated points of the distance to the nearest reference point.
// Exact; grid-accelerated internally, identical to the brute force result.
double directed_hausdorff(const std::vector<Eigen::Vector2d>& generated,
                          const std::vector<Eigen::Vector2d>& reference);

// Positions of every (scenario, timestep, ball), pooled as 2D points.
std::vector<Eigen::Vector2d> position_cloud(const std::vector<ballsim::Scenario>& scenarios);

// Relative-ELBO surrogate: negative per-dimension MC denoising loss on a
// noise stream fixed by `seed`. Valid only for ranking different effective
// denoisers on identical streams.
double relbo(const DenoiseFn& denoiser, const Vec& x0, int K, std::uint64_t seed,
             double sigma_min, double sigma_max);
// Same stream semantics across a dataset: row i uses (seed, i).
double relbo_mean(const DenoiseFn& denoiser, const Mat& X0, int K, std::uint64_t seed,
                  double sigma_min, double sigma_max);

// Flow-matching analogue on a (t, eps) stream with t ~ logit-normal.
double relbo_fm_mean(const DenoiseFn& endpoint, const Mat& X1, int K, std::uint64_t seed,
                     double logit_mu, double logit_sd);

void write_metrics_csv(const std::string& path, const std::vector<MetricsReport>& reports);
std::vector<MetricsReport> read_metrics_csv(const std::string& path);

}  // namespace metrics
}  // namespace bridgegen
