#pragma once

#include <string>
#include <vector>

#include "bridgegen/common.hpp"
#include "bridgegen/constraints.hpp"
#include "bridgegen/rng.hpp"

namespace bridgegen {
namespace ballsim {

struct BallState {
    double px = 0.0, py = 0.0, vx = 0.0, vy = 0.0;
};

// One B-ball, T-step trajectory in the box [-L, L]^2 with equal radii.
struct Scenario {
    int n_balls = 0;
    int n_steps = 0;
    double radius = 0.08;
    double box_halfwidth = 1.0;
    std::vector<BallState> states;  // t-major: states[t * B + b]

    const BallState& at(int t, int b) const { return states[static_cast<size_t>(t * n_balls + b)]; }
    BallState& at(int t, int b) { return states[static_cast<size_t>(t * n_balls + b)]; }

    Vec flatten() const;
    static Scenario unflatten(const Vec& x, int B, int T, double r, double L);
};

struct StepInfo {
    int wall_events = 0;
    int pair_events = 0;
    int passes = 0;
};

// Advance one frame: free flight, then iterative contact resolution (elastic
// velocity exchange for equal masses, wall reflection, positional clamping to
// contact) up to k_max passes.
std::vector<BallState> simulate_step(const std::vector<BallState>& state, double r, double L,
                                     StepInfo* info = nullptr, int k_max = 8);

// Feasibility predicate shared with the dataset invariants.
bool feasible(const std::vector<BallState>& state, double r, double L, double eps = 1e-6);

struct GenParams {
    int n_scenarios = 5000;
    int n_balls = 3;
    int n_steps = 20;
    double radius = 0.08;
    double box_halfwidth = 1.0;
    double vel_max = 0.1;
};

// Rejection-sampled feasible initial layout; throws after 1e4 rejections.
std::vector<BallState> random_init(int B, double r, double L, double vel_max, Rng& rng);

Scenario simulate_scenario(const std::vector<BallState>& init, int T, double r, double L);

// Scenario k uses a seed derived from (seed, k), so generation is
// order-independent and reproducible.
std::vector<Scenario> generate_dataset(const GenParams& p, std::uint64_t seed);

// CSV: scenario_id,timestep,ball_id,px,py,vx,vy with 17-significant-digit
// floats; header row required.
void write_dataset_csv(const std::string& path, const std::vector<Scenario>& scenarios);
std::vector<Scenario> read_dataset_csv(const std::string& path, double r, double L);

// Columns of flattened scenarios, the training matrix.
Mat dataset_matrix(const std::vector<Scenario>& scenarios);

}  // namespace ballsim
}  // namespace bridgegen
