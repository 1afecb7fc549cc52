#include "bridgegen/adjoint.hpp"

#include <cmath>

namespace bridgegen {
namespace adjoint {

Mat ControlContext::control_eval(const Mat& X, double t, Mlp::Cache* cache) const {
    if (!control) return Mat::Zero(X.rows(), X.cols());
    Mat U(data_dim + control_emb.dim(), X.cols());
    U.topRows(data_dim) = X;
    Vec e = control_emb.embed(1.0 - t + 1e-12);
    for (Eigen::Index c = 0; c < X.cols(); ++c) U.col(c).tail(control_emb.dim()) = e;
    return control->forward(U, cache);
}

Trajectory rollout(const ControlContext& ctx, int n_chains, std::uint64_t seed,
                   bool deterministic, const Mat* x0) {
    check(ctx.m_steps >= 2, "rollout: need at least two steps");
    check(n_chains > 0, "rollout: need at least one chain");
    const int M = ctx.m_steps;
    const double dt = 1.0 / static_cast<double>(M);

    std::vector<Rng> chains;
    chains.reserve(static_cast<size_t>(n_chains));
    for (int i = 0; i < n_chains; ++i)
        chains.emplace_back(derive_seed(seed, "am-chain", static_cast<std::uint64_t>(i)));

    Trajectory traj;
    traj.states.reserve(static_cast<size_t>(M) + 1);
    traj.times.reserve(static_cast<size_t>(M) + 1);

    Mat x(ctx.data_dim, n_chains);
    if (x0) {
        check(x0->rows() == ctx.data_dim && x0->cols() == n_chains, "rollout: bad initial states");
        x = *x0;
    } else {
        for (int i = 0; i < n_chains; ++i)
            x.col(i) = chains[static_cast<size_t>(i)].normal_vec(ctx.data_dim);
    }
    traj.states.push_back(x);
    traj.times.push_back(0.0);

    for (int step = 0; step < M; ++step) {
        double t = static_cast<double>(step) * dt;
        double s = ctx.sigma ? ctx.sigma(t) : 0.0;
        Mat incr = Mat::Zero(ctx.data_dim, n_chains);
        if (ctx.drift) incr += ctx.drift(x, t);
        if (ctx.control) incr += s * ctx.control_eval(x, t);
        x += dt * incr;
        if (!deterministic && s != 0.0) {
            double scale = s * std::sqrt(dt);
            for (int i = 0; i < n_chains; ++i)
                x.col(i) += scale * chains[static_cast<size_t>(i)].normal_vec(ctx.data_dim);
        }
        if (!x.allFinite()) throw DivergenceError("sampler diverged at step " + std::to_string(step));
        traj.states.push_back(x);
        traj.times.push_back(static_cast<double>(step + 1) * dt);
    }
    return traj;
}

std::vector<Mat> solve_lean_adjoint(const ControlContext& ctx, const Trajectory& traj) {
    check(!traj.states.empty(), "solve_lean_adjoint: missing trajectory");
    check(ctx.terminal_cost != nullptr, "solve_lean_adjoint: missing terminal cost");
    const int M = static_cast<int>(traj.states.size()) - 1;
    const double dt = 1.0 / static_cast<double>(ctx.m_steps);

    std::vector<Mat> a(static_cast<size_t>(M) + 1);
    const Mat& xM = traj.states[static_cast<size_t>(M)];
    Mat aM(xM.rows(), xM.cols());
    for (Eigen::Index i = 0; i < xM.cols(); ++i) aM.col(i) = loss_grad(*ctx.terminal_cost, xM.col(i));
    a[static_cast<size_t>(M)] = aM;

    for (int i = M - 1; i >= 0; --i) {
        const Mat& xi = traj.states[static_cast<size_t>(i)];
        double t = traj.times[static_cast<size_t>(i)];
        Mat ai = a[static_cast<size_t>(i) + 1];
        if (ctx.drift_vjp) ai += dt * ctx.drift_vjp(xi, t, a[static_cast<size_t>(i) + 1]);
        if (ctx.use_running_cost && ctx.running_cost_grad)
            ai += dt * ctx.running_cost_grad(xi, t);
        a[static_cast<size_t>(i)] = std::move(ai);
    }
    return a;
}

double am_loss(const ControlContext& ctx, const Trajectory& traj, const std::vector<Mat>& adjoints,
               Mlp::Grads* grads) {
    const int M = static_cast<int>(traj.states.size()) - 1;
    check(static_cast<int>(adjoints.size()) == M + 1, "am_loss: trajectory/adjoint length mismatch");
    const int n = traj.n_chains();
    double total = 0.0;
    for (int i = 0; i < M; ++i) {
        double t = traj.times[static_cast<size_t>(i)];
        double s = ctx.sigma ? ctx.sigma(t) : 0.0;
        Mlp::Cache cache;
        Mat u = ctx.control_eval(traj.states[static_cast<size_t>(i)], t,
                                 grads && ctx.control ? &cache : nullptr);
        Mat resid = u + s * adjoints[static_cast<size_t>(i)];
        total += resid.squaredNorm();
        if (grads && ctx.control) {
            Mat dU = (2.0 / static_cast<double>(n)) * resid;
            ctx.control->backward(cache, dU, *grads);
        }
    }
    return total / static_cast<double>(n);
}

FinetuneReport am_finetune(ControlContext& ctx, AdamState& opt, int n_outer, int traj_batch,
                           std::uint64_t seed) {
    check(ctx.control != nullptr, "am_finetune: missing control head");
    FinetuneReport report;
    for (int it = 0; it < n_outer; ++it) {
        Trajectory traj = rollout(ctx, traj_batch, derive_seed(seed, "am-outer",
                                                               static_cast<std::uint64_t>(it)));
        std::vector<Mat> adj = solve_lean_adjoint(ctx, traj);
        Mlp::Grads grads;
        grads.init_like(*ctx.control);
        double loss = am_loss(ctx, traj, adj, &grads);
        if (!std::isfinite(loss))
            throw DivergenceError("training diverged: non-finite loss at step " + std::to_string(it));
        opt.step(*ctx.control, grads);
        report.losses.push_back(loss);
    }
    return report;
}

Mat am_sample(const ControlContext& ctx, int n_samples, std::uint64_t seed) {
    Trajectory traj = rollout(ctx, n_samples, seed);
    return traj.states.back();
}

}  // namespace adjoint
}  // namespace bridgegen
