#include <doctest.h>

#include <cmath>
#include <cstdio>

#include "bridgegen/metrics.hpp"
#include "test_oracles.hpp"

using namespace bridgegen;
using namespace bridgegen::metrics;

namespace {

ballsim::Scenario one_step_scenario(const std::vector<std::array<double, 2>>& positions, double r,
                                    double L) {
    ballsim::Scenario sc;
    sc.n_balls = static_cast<int>(positions.size());
    sc.n_steps = 1;
    sc.radius = r;
    sc.box_halfwidth = L;
    for (const auto& p : positions) sc.states.push_back({p[0], p[1], 0.0, 0.0});
    return sc;
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("infraction rates hand cases") {
    // two balls r=0.1 at distance 0.15: overlap 0.05 > tol
    auto bad = one_step_scenario({{0.0, 0.0}, {0.15, 0.0}}, 0.1, 1.0);
    auto rates = infraction_rates({bad}, 0.1, 1.0, 0.01);
    CHECK(rates.collision == 1.0);
    CHECK(rates.boundary == 0.0);

    auto centered = one_step_scenario({{0.0, 0.0}}, 0.1, 1.0);
    rates = infraction_rates({centered}, 0.1, 1.0, 1e-3);
    CHECK(rates.boundary == 0.0);

    auto outside = one_step_scenario({{0.95, 0.0}}, 0.1, 1.0);
    rates = infraction_rates({outside}, 0.1, 1.0, 1e-3);
    CHECK(rates.boundary == 1.0);
}

TEST_CASE("rates are monotone in the tolerance") {
    Rng rng(3);
    std::vector<ballsim::Scenario> set;
    for (int k = 0; k < 60; ++k) {
        std::vector<std::array<double, 2>> pos;
        for (int b = 0; b < 3; ++b)
            pos.push_back({rng.uniform(-1.05, 1.05), rng.uniform(-1.05, 1.05)});
        set.push_back(one_step_scenario(pos, 0.1, 1.0));
    }
    double prev_c = 1.0, prev_b = 1.0;
    for (double tol : {1e-6, 1e-3, 1e-2, 0.05, 0.2}) {
        auto r = infraction_rates(set, 0.1, 1.0, tol);
        CHECK(r.collision <= prev_c);
        CHECK(r.boundary <= prev_b);
        prev_c = r.collision;
        prev_b = r.boundary;
    }
}

TEST_CASE("directed hausdorff hand values and directedness") {
    std::vector<Eigen::Vector2d> a = {{2.0, 0.0}};
    std::vector<Eigen::Vector2d> b = {{0.0, 0.0}, {1.0, 0.0}};
    CHECK(directed_hausdorff(a, b) == doctest::Approx(1.0).epsilon(1e-12));
    // swapped direction takes the max over b of the distance to (2, 0)
    CHECK(directed_hausdorff(b, a) == doctest::Approx(2.0).epsilon(1e-12));
    // subset gives exactly zero
    CHECK(directed_hausdorff(b, b) == 0.0);
    CHECK_THROWS_AS(directed_hausdorff({}, b), Error);
}

TEST_CASE("grid-accelerated hausdorff equals brute force") {
    Rng rng(9);
    for (int rep = 0; rep < 5; ++rep) {
        std::vector<Eigen::Vector2d> gen, ref;
        for (int i = 0; i < 300; ++i)
            gen.emplace_back(rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5));
        for (int i = 0; i < 800; ++i)
            ref.emplace_back(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
        double fast = directed_hausdorff(gen, ref);
        double brute = oracles::brute_hausdorff(gen, ref);
        CHECK(fast == brute);
    }
}

TEST_CASE("hausdorff triangle-style bound on random triples") {
    Rng rng(10);
    for (int rep = 0; rep < 100; ++rep) {
        std::vector<Eigen::Vector2d> a, b, c;
        for (int i = 0; i < 20; ++i) {
            a.emplace_back(rng.normal(), rng.normal());
            b.emplace_back(rng.normal(), rng.normal());
            c.emplace_back(rng.normal(), rng.normal());
        }
        double ac = directed_hausdorff(a, c);
        double ab = directed_hausdorff(a, b);
        double bc = directed_hausdorff(b, c);
        CHECK(ac <= ab + bc + 1e-12);
    }
}

TEST_CASE("relbo: oracle beats imperfect denoisers on the shared stream") {
    DenoiseFn oracle = [](const Mat& X, double s) { return Mat(X / (1.0 + s * s)); };
    DenoiseFn shifted = [](const Mat& X, double s) {
        return Mat((X / (1.0 + s * s)).array() + 0.5);
    };
    DenoiseFn cheat_target;
    Rng rng(11);
    Mat X0 = rng.normal_mat(3, 24);
    double r_oracle = relbo_mean(oracle, X0, 16, 42, 0.05, 5.0);
    double r_shifted = relbo_mean(shifted, X0, 16, 42, 0.05, 5.0);
    CHECK(r_oracle > r_shifted);
    CHECK(r_oracle < 0.0);
}

TEST_CASE("relbo: cheating denoiser scores exactly zero, the maximum") {
    Rng rng(12);
    Vec x0 = rng.normal_vec(4);
    DenoiseFn cheat = [&](const Mat&, double) { return Mat(x0); };
    CHECK(relbo(cheat, x0, 32, 7, 0.05, 5.0) == 0.0);
}

TEST_CASE("relbo matches the posterior-variance closed form at fixed sigma") {
    // single Gaussian, oracle denoiser, sigma pinned at 1: expectation is
    // -sigma^2/(1+sigma^2) = -0.5 per dimension
    DenoiseFn oracle = [](const Mat& X, double s) { return Mat(X / (1.0 + s * s)); };
    Rng rng(13);
    double acc = 0.0;
    const int outer = 100, inner = 100;  // 1e4 total draws over x0 ~ N(0,1)
    for (int i = 0; i < outer; ++i) {
        Vec x = rng.normal_vec(1);
        for (int k = 0; k < inner; ++k) {
            Vec xt = x + rng.normal_vec(1);
            acc += (oracle(xt, 1.0).col(0) - x).squaredNorm();
        }
    }
    CHECK(-acc / (outer * inner) == doctest::Approx(-0.5).epsilon(0.05));
}

TEST_CASE("metrics csv round trip") {
    std::vector<MetricsReport> reps(2);
    reps[0].method = "dm-baseline";
    reps[0].collision_rate = 0.25;
    reps[0].boundary_rate = 0.0625;
    reps[0].hdh = 0.125;
    reps[0].relbo = -1.5;
    reps[0].n_samples = 100;
    reps[0].seed = 7;
    reps[1].method = "dm-mbmpp";
    reps[1].relbo = std::numeric_limits<double>::quiet_NaN();
    write_metrics_csv("test_metrics.csv", reps);
    auto back = read_metrics_csv("test_metrics.csv");
    REQUIRE(back.size() == 2);
    CHECK(back[0].method == "dm-baseline");
    CHECK(back[0].collision_rate == 0.25);
    CHECK(back[0].hdh == 0.125);
    CHECK(back[0].n_samples == 100);
    CHECK(std::isnan(back[1].relbo));
    std::remove("test_metrics.csv");
}

}  // TEST_SUITE
