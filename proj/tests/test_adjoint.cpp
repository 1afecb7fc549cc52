#include <doctest.h>

#include <cmath>

#include "bridgegen/adjoint.hpp"
#include "test_oracles.hpp"

using namespace bridgegen;
using namespace bridgegen::adjoint;

namespace {

ControlContext brownian_ctx(int d, int M, double sigma) {
    ControlContext ctx;
    ctx.data_dim = d;
    ctx.m_steps = M;
    ctx.sigma = [sigma](double) { return sigma; };
    return ctx;
}

Mlp make_control(int d, int width, Rng& rng, const LevelEmbedding& emb) {
    return Mlp::make({d + emb.dim(), width, width, d}, rng);
}

}  // namespace

TEST_SUITE("adjoint") {

TEST_CASE("zero control reproduces the uncontrolled rollout bit for bit") {
    Rng rng(1);
    LevelEmbedding emb{4, 50.0};
    Mlp control = make_control(2, 8, rng, emb);  // zero-init head: u == 0

    ControlContext plain = brownian_ctx(2, 25, 0.7);
    plain.drift = [](const Mat& X, double) { return Mat(-0.5 * X); };

    ControlContext controlled = plain;
    controlled.control = &control;
    controlled.control_emb = emb;

    Trajectory a = rollout(plain, 8, 42);
    Trajectory b = rollout(controlled, 8, 42);
    REQUIRE(a.states.size() == b.states.size());
    for (size_t i = 0; i < a.states.size(); ++i) CHECK(a.states[i] == b.states[i]);
}

TEST_CASE("brownian variance accumulates as M * dt") {
    ControlContext ctx = brownian_ctx(1, 20, 1.0);
    Trajectory traj = rollout(ctx, 10000, 3);
    Mat diff = traj.states.back() - traj.states.front();
    double var = diff.row(0).array().square().mean();
    CHECK(var == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("deterministic linear drift decays exponentially") {
    ControlContext ctx = brownian_ctx(1, 100, 1.0);
    ctx.drift = [](const Mat& X, double) { return Mat(-X); };
    Mat x0 = Mat::Ones(1, 1);
    Trajectory traj = rollout(ctx, 1, 5, /*deterministic=*/true, &x0);
    CHECK(std::abs(traj.states.back()(0, 0) - std::exp(-1.0)) < 0.01);
}

TEST_CASE("lean adjoint: zero drift gives a constant adjoint") {
    auto quad = ConstraintSpec::composite({2.0}, {ConstraintSpec::quadratic(Vec::Zero(2))});
    ControlContext ctx = brownian_ctx(2, 10, 1.0);
    ctx.terminal_cost = &quad;

    Trajectory traj;
    traj.times = {0.0};
    Rng rng(6);
    for (int i = 0; i <= 10; ++i) {
        traj.states.push_back(rng.normal_mat(2, 1));
        if (i) traj.times.push_back(i / 10.0);
    }
    traj.states.back()(0, 0) = 1.0;
    traj.states.back()(1, 0) = -1.0;

    auto adj = solve_lean_adjoint(ctx, traj);
    REQUIRE(adj.size() == 11);
    for (const auto& a : adj) {
        CHECK(a(0, 0) == 2.0);
        CHECK(a(1, 0) == -2.0);
    }
}

TEST_CASE("lean adjoint: linear drift matches the exponential closed form") {
    auto quad = ConstraintSpec::composite({2.0}, {ConstraintSpec::quadratic(Vec::Zero(1))});
    ControlContext ctx = brownian_ctx(1, 1000, 1.0);
    ctx.drift = [](const Mat& X, double) { return Mat(-X); };
    ctx.drift_vjp = [](const Mat&, double, const Mat& A) { return Mat(-A); };
    ctx.terminal_cost = &quad;
    Mat x0 = Mat::Ones(1, 1);
    Trajectory traj = rollout(ctx, 1, 7, /*deterministic=*/true, &x0);
    auto adj = solve_lean_adjoint(ctx, traj);
    double aT = adj.back()(0, 0);
    for (int i = 0; i <= 1000; i += 100) {
        double t = traj.times[static_cast<size_t>(i)];
        double expect = aT * std::exp(t - 1.0);
        CHECK(oracles::rel_err(adj[static_cast<size_t>(i)](0, 0), expect) < 0.01);
    }
}

TEST_CASE("feasible terminal state gives zero adjoints") {
    auto half = ConstraintSpec::halfplane(Vec::Ones(2).normalized(), 1e9);
    ControlContext ctx = brownian_ctx(2, 10, 1.0);
    ctx.terminal_cost = &half;
    Trajectory traj = rollout(ctx, 4, 8);
    auto adj = solve_lean_adjoint(ctx, traj);
    for (const auto& a : adj) CHECK(a.norm() == 0.0);
}

TEST_CASE("running cost is omitted by default and changes adjoints when enabled") {
    auto quad = ConstraintSpec::composite({2.0}, {ConstraintSpec::quadratic(Vec::Zero(2))});
    ControlContext ctx = brownian_ctx(2, 10, 1.0);
    ctx.terminal_cost = &quad;
    ctx.running_cost_grad = [](const Mat& X, double) { return Mat(X); };  // f = 0.5||x||^2
    Trajectory traj = rollout(ctx, 4, 9);

    auto lean = solve_lean_adjoint(ctx, traj);
    ctx.use_running_cost = true;
    auto with_f = solve_lean_adjoint(ctx, traj);
    CHECK(lean.back() == with_f.back());  // terminal condition shared
    double diff = 0.0;
    for (size_t i = 0; i + 1 < lean.size(); ++i) diff += (lean[i] - with_f[i]).norm();
    CHECK(diff > 0.0);
}

TEST_CASE("adjoint matching loss hand values") {
    auto quad = ConstraintSpec::composite({2.0}, {ConstraintSpec::quadratic(Vec::Zero(2))});
    ControlContext ctx = brownian_ctx(2, 10, 1.0);
    ctx.terminal_cost = &quad;

    Trajectory traj;
    for (int i = 0; i <= 10; ++i) {
        traj.states.push_back(Mat::Zero(2, 1));
        traj.times.push_back(i / 10.0);
    }
    std::vector<Mat> adj(11, (Mat(2, 1) << 2.0, -2.0).finished());

    // u == 0 (no control head): loss = sum of 10 * ||sigma * a||^2 = 80
    CHECK(am_loss(ctx, traj, adj) == doctest::Approx(80.0).epsilon(1e-12));

    // length mismatch rejected
    std::vector<Mat> short_adj(5, Mat::Zero(2, 1));
    CHECK_THROWS_AS(am_loss(ctx, traj, short_adj), Error);

    // feasible terminal with zero drift: adjoints vanish, loss is zero at u == 0
    auto half = ConstraintSpec::halfplane(Vec::Ones(2).normalized(), 1e9);
    ControlContext ctx2 = brownian_ctx(2, 10, 1.0);
    ctx2.terminal_cost = &half;
    Trajectory t2 = rollout(ctx2, 3, 10);
    CHECK(am_loss(ctx2, t2, solve_lean_adjoint(ctx2, t2)) == 0.0);
}

TEST_CASE("hardwired optimal control zeroes the matching loss") {
    // u = -sigma * a with constant adjoint a = grad g(x_M) is an exact match
    auto quad = ConstraintSpec::composite({2.0}, {ConstraintSpec::quadratic(Vec::Zero(2))});
    ControlContext ctx = brownian_ctx(2, 10, 1.0);
    ctx.terminal_cost = &quad;
    Trajectory traj = rollout(ctx, 3, 11);
    auto adj = solve_lean_adjoint(ctx, traj);
    double total = 0.0;
    for (int i = 0; i < 10; ++i) {
        Mat u = -1.0 * adj[static_cast<size_t>(i)];
        total += (u + 1.0 * adj[static_cast<size_t>(i)]).squaredNorm();
    }
    CHECK(total == 0.0);
}

TEST_CASE("LQ fine-tuning approaches the dynamic-programming optimum") {
    const int d = 2, M = 50;
    const double c_cost = 2.0, sigma = 1.0;
    auto oracle = oracles::lq_oracle(M, c_cost, sigma, d);

    auto quad = ConstraintSpec::composite({c_cost}, {ConstraintSpec::quadratic(Vec::Zero(d))});
    Rng rng(12);
    LevelEmbedding emb{4, 50.0};
    Mlp control = make_control(d, 48, rng, emb);

    ControlContext ctx = brownian_ctx(d, M, sigma);
    ctx.control = &control;
    ctx.control_emb = emb;
    ctx.terminal_cost = &quad;

    AdamState opt = AdamState::make(control, 3e-3);
    am_finetune(ctx, opt, 400, 32, 13);

    // paired terminal costs over matched seeds
    ControlContext base = brownian_ctx(d, M, sigma);
    int wins = 0;
    double trained_sq = 0.0, base_sq = 0.0;
    const int n_pairs = 500;
    for (int i = 0; i < n_pairs; ++i) {
        std::uint64_t s = derive_seed(99, "lq-pair", static_cast<std::uint64_t>(i));
        Mat xb = rollout(base, 1, s).states.back();
        Mat xt = rollout(ctx, 1, s).states.back();
        base_sq += xb.squaredNorm();
        trained_sq += xt.squaredNorm();
        if (xt.squaredNorm() < xb.squaredNorm()) ++wins;
    }
    base_sq /= n_pairs;
    trained_sq /= n_pairs;
    CAPTURE(base_sq);
    CAPTURE(trained_sq);
    CAPTURE(oracle.optimal_terminal_sq);
    CHECK(trained_sq < base_sq);
    CHECK(wins > n_pairs / 2);
    // matches the discrete-grid DP oracle within 20%
    CHECK(std::abs(trained_sq - oracle.optimal_terminal_sq) < 0.2 * oracle.optimal_terminal_sq);
    // and the baseline matches its closed form
    CHECK(oracles::rel_err(base_sq, oracle.baseline_terminal_sq) < 0.1);

    // n_outer = 0 leaves the sampler identical to the baseline
    Rng rng2(14);
    Mlp fresh = make_control(d, 48, rng2, emb);
    ControlContext ctx0 = brownian_ctx(d, M, sigma);
    ctx0.control = &fresh;
    ctx0.control_emb = emb;
    ctx0.terminal_cost = &quad;
    AdamState opt0 = AdamState::make(fresh, 3e-3);
    am_finetune(ctx0, opt0, 0, 8, 15);
    Mat a = am_sample(ctx0, 6, 21);
    Mat b = am_sample(base, 6, 21);
    CHECK(a == b);
}

}  // TEST_SUITE
