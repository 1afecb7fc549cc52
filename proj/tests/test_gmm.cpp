#include <doctest.h>

#include <cmath>

#include "bridgegen/gmm.hpp"
#include "test_oracles.hpp"

using namespace bridgegen;

namespace {

Vec v2(double a, double b) {
    Vec v(2);
    v << a, b;
    return v;
}

Vec v1(double a) {
    Vec v(1);
    v << a;
    return v;
}

GaussianMixture mix3() {
    return GaussianMixture::isotropic({0.5, 0.3, 0.2}, {v2(-1.2, 0.8), v2(1.0, 1.5), v2(0.5, -1.1)},
                                      {0.35, 0.2, 0.5});
}

}  // namespace

TEST_SUITE("gmm") {

TEST_CASE("construction guards") {
    CHECK_THROWS_AS(GaussianMixture::isotropic({0.5, 0.6}, {v1(0), v1(1)}, {1.0, 1.0}), Error);
    CHECK_THROWS_AS(GaussianMixture::isotropic({1.0}, {v1(0)}, {-1.0}), Error);
    Mat bad(2, 2);
    bad << 1.0, 2.0, 2.0, 1.0;  // symmetric, not PD
    CHECK_THROWS_AS(GaussianMixture({1.0}, {v2(0, 0)}, std::vector<Mat>{bad}), Error);
}

TEST_CASE("marginal density hand values") {
    GaussianMixture g({1.0}, {v1(0.0)}, std::vector<Vec>{v1(1.0)});
    CHECK(g.marginal_density(v1(0.0), 0.0) ==
          doctest::Approx(1.0 / std::sqrt(2.0 * M_PI)).epsilon(1e-12));
    CHECK(g.marginal_density(v1(0.0), 1.0) ==
          doctest::Approx(1.0 / std::sqrt(4.0 * M_PI)).epsilon(1e-12));

    GaussianMixture two = GaussianMixture::isotropic({0.5, 0.5}, {v1(1.0), v1(-1.0)}, {1.0, 1.0});
    // by symmetry both components contribute N(0; 1, 1)
    double expect = std::exp(-0.5) / std::sqrt(2.0 * M_PI);
    CHECK(two.marginal_density(v1(0.0), 0.0) == doctest::Approx(expect).epsilon(1e-12));
    CHECK(expect == doctest::Approx(0.241971).epsilon(1e-5));
}

TEST_CASE("posterior mean: shrinkage, concentration, symmetry") {
    GaussianMixture g({1.0}, {v1(0.0)}, std::vector<Vec>{v1(1.0)});
    CHECK(g.posterior_mean(v1(2.0), 1.0)[0] == doctest::Approx(1.0).epsilon(1e-12));

    GaussianMixture m = mix3();
    Rng rng(5);
    Vec x0 = m.sample(rng);
    Vec pm = m.posterior_mean(x0, 1e-8);
    CHECK((pm - x0).norm() < 1e-6);

    GaussianMixture two = GaussianMixture::isotropic({0.5, 0.5}, {v1(1.0), v1(-1.0)}, {1.0, 1.0});
    CHECK(two.posterior_mean(v1(0.0), 0.7)[0] == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("score hand values and mode") {
    GaussianMixture g({1.0}, {v1(0.0)}, std::vector<Vec>{v1(1.0)});
    CHECK(g.score(v1(2.0), 1.0)[0] == doctest::Approx(-1.0).epsilon(1e-12));
    // at the mean of a single component the score vanishes for any sigma
    for (double s : {0.1, 1.0, 7.0}) CHECK(std::abs(g.score(v1(0.0), s)[0]) < 1e-14);
}

TEST_CASE("score equals finite-difference gradient of log density") {
    GaussianMixture two = GaussianMixture::isotropic({0.5, 0.5}, {v1(1.0), v1(-1.0)}, {1.0, 1.0});
    double s = 0.5;
    Vec x = v1(0.3);
    Vec fd = oracles::fd_grad([&](const Vec& p) { return two.log_marginal_density(p, s); }, x);
    CHECK(std::abs(two.score(x, s)[0] - fd[0]) < 1e-5);

    // posterior-mean identity over a 3-component 2D mixture
    GaussianMixture m = mix3();
    Rng rng(17);
    for (int i = 0; i < 200; ++i) {
        double sigma = std::exp(rng.uniform(std::log(0.05), std::log(3.0)));
        Vec xt = m.sample(rng) + sigma * rng.normal_vec(2);
        Vec fdg = oracles::fd_grad(
            [&](const Vec& p) { return m.log_marginal_density(p, sigma); }, xt);
        CHECK(oracles::rel_err(m.score(xt, sigma), fdg, 1e-6) < 1e-4);
    }
}

TEST_CASE("full covariance agrees with diagonal representation") {
    Mat cov(2, 2);
    cov << 0.5, 0.0, 0.0, 1.5;
    GaussianMixture full({1.0}, {v2(0.3, -0.2)}, std::vector<Mat>{cov});
    Vec dv(2);
    dv << 0.5, 1.5;
    GaussianMixture diag({1.0}, {v2(0.3, -0.2)}, std::vector<Vec>{dv});
    Vec x = v2(0.9, 0.4);
    for (double s : {0.0, 0.3, 2.0}) {
        CHECK(full.marginal_density(x, s) ==
              doctest::Approx(diag.marginal_density(x, s)).epsilon(1e-12));
    }
    CHECK((full.posterior_mean(x, 0.7) - diag.posterior_mean(x, 0.7)).norm() < 1e-12);

    // correlated full covariance: score still matches the FD oracle
    Mat corr(2, 2);
    corr << 0.8, 0.3, 0.3, 0.6;
    GaussianMixture gc({1.0}, {v2(0.0, 0.0)}, std::vector<Mat>{corr});
    Vec fd = oracles::fd_grad([&](const Vec& p) { return gc.log_marginal_density(p, 0.4); }, x);
    CHECK(oracles::rel_err(gc.score(x, 0.4), fd, 1e-6) < 1e-4);
}

TEST_CASE("denoising consistency decays monotonically in sigma") {
    GaussianMixture m = mix3();
    Rng rng(99);
    double prev = std::numeric_limits<double>::infinity();
    for (double sigma : {1.0, 0.3, 0.1, 0.03, 0.01}) {
        double acc = 0.0;
        const int n = 2000;
        for (int i = 0; i < n; ++i) {
            Vec xt = m.sample(rng) + sigma * rng.normal_vec(2);
            acc += (m.posterior_mean(xt, sigma) - xt).norm();
        }
        acc /= n;
        CHECK(acc < prev);
        prev = acc;
    }
}

TEST_CASE("constraint-gradient substitution error vanishes at small noise") {
    // quadratic loss, L = 1: the gradient gap is exactly ||x_t - D(x_t)||
    GaussianMixture m = mix3();
    Rng rng(123);
    auto gap = [&](double sigma) {
        double acc = 0.0;
        const int n = 10000;
        for (int i = 0; i < n; ++i) {
            Vec xt = m.sample(rng) + sigma * rng.normal_vec(2);
            acc += (xt - m.posterior_mean(xt, sigma)).norm();
        }
        return acc / n;
    };
    double at_1 = gap(1.0);
    double at_001 = gap(0.01);
    CHECK(at_001 < 0.05 * at_1);
}

TEST_CASE("sampling matches component moments") {
    GaussianMixture m = mix3();
    Rng rng(7);
    Mat xs = m.sample_n(40000, rng);
    Vec mean = xs.rowwise().mean();
    Vec expect = 0.5 * v2(-1.2, 0.8) + 0.3 * v2(1.0, 1.5) + 0.2 * v2(0.5, -1.1);
    CHECK((mean - expect).norm() < 0.03);
}

}  // TEST_SUITE
