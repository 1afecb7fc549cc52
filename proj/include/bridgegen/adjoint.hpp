#pragma once

#include <functional>
#include <vector>

#include "bridgegen/constraints.hpp"
#include "bridgegen/nnet.hpp"

namespace bridgegen {
namespace adjoint {

// Batched drift b(X, t) and its vector-Jacobian product (J_b^T A per column).
using DriftFn = std::function<Mat(const Mat&, double)>;
using DriftVjpFn = std::function<Mat(const Mat&, double, const Mat&)>;
using SigmaFn = std::function<double(double)>;
using CostGradFn = std::function<Mat(const Mat&, double)>;

// Controlled SDE on t in [0, 1]:  dx = (b + sigma(t) u) dt + sigma(t) dw.
// The control head is a zero-final-init MLP on [x; emb(1 - t)], so at
// initialization u == 0 and the rollout matches the uncontrolled process
// bit for bit.
struct ControlContext {
    int data_dim = 0;
    int m_steps = 50;
    DriftFn drift;            // null => b == 0
    DriftVjpFn drift_vjp;     // null => zero Jacobian
    SigmaFn sigma;            // diffusion coefficient
    Mlp* control = nullptr;   // trainable u head; null => u == 0
    LevelEmbedding control_emb;
    const ConstraintSpec* terminal_cost = nullptr;  // g = constraint loss
    // Optional running cost gradient; the lean adjoint omits it by default.
    CostGradFn running_cost_grad;
    bool use_running_cost = false;

    Mat control_eval(const Mat& X, double t, Mlp::Cache* cache = nullptr) const;
};

struct Trajectory {
    std::vector<Mat> states;   // m_steps + 1 entries of d x n
    std::vector<double> times; // matching time stamps
    int n_chains() const { return states.empty() ? 0 : static_cast<int>(states[0].cols()); }
};

// Euler-Maruyama rollout; chain i draws from a seed derived from (seed, i).
// Initial states are N(0, I) unless x0 is given.
Trajectory rollout(const ControlContext& ctx, int n_chains, std::uint64_t seed,
                   bool deterministic = false, const Mat* x0 = nullptr);

// Lean adjoint solved backward along the stored states:
//   a_M = grad g(x_M);   a_i = a_{i+1} + dt * (J_b(x_i, t_i)^T a_{i+1} [+ grad f]).
std::vector<Mat> solve_lean_adjoint(const ControlContext& ctx, const Trajectory& traj);

// sum_i ||u(x_i, t_i) + sigma(t_i) a_i||^2, averaged over chains; adjoints are
// constants, gradients flow to the control head only.
double am_loss(const ControlContext& ctx, const Trajectory& traj, const std::vector<Mat>& adjoints,
               Mlp::Grads* grads = nullptr);

struct FinetuneReport {
    std::vector<double> losses;
};

// Outer loop: rollout -> backward adjoint -> matching regression -> Adam.
FinetuneReport am_finetune(ControlContext& ctx, AdamState& opt, int n_outer, int traj_batch,
                           std::uint64_t seed);

// Terminal states of the controlled process; the `am` sampling method.
Mat am_sample(const ControlContext& ctx, int n_samples, std::uint64_t seed);

}  // namespace adjoint
}  // namespace bridgegen
