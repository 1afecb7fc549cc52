#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "bridgegen/nnet.hpp"
#include "bridgegen/objectives.hpp"
#include "test_oracles.hpp"

using namespace bridgegen;

namespace {

bool mlp_equal(const Mlp& a, const Mlp& b) {
    if (a.layers.size() != b.layers.size()) return false;
    for (size_t i = 0; i < a.layers.size(); ++i) {
        if (a.layers[i].W != b.layers[i].W) return false;
        if (a.layers[i].b != b.layers[i].b) return false;
    }
    return true;
}

// Scalar loss 0.5*||f(X) - Y||^2 as a function of one parameter entry; used
// for central finite differences against the analytic backward pass.
double mlp_loss(const Mlp& net, const Mat& X, const Mat& Y) {
    return 0.5 * (net.forward(X) - Y).squaredNorm();
}

}  // namespace

TEST_SUITE("nnet") {

TEST_CASE("level embedding hand values and norm") {
    LevelEmbedding e1{1, 100.0};
    Vec a = e1.embed(1.0);
    CHECK(a[0] == 0.0);
    CHECK(a[1] == 1.0);
    Vec b = e1.embed(std::exp(1.0));
    CHECK(b[0] == doctest::Approx(0.8414709848).epsilon(1e-9));
    CHECK(b[1] == doctest::Approx(0.5403023059).epsilon(1e-9));

    LevelEmbedding e8{8, 50.0};
    for (double s : {1e-4, 0.3, 12.0}) {
        CHECK(e8.embed(s).squaredNorm() == doctest::Approx(8.0).epsilon(1e-12));
    }
    CHECK_THROWS_AS(e8.embed(0.0), Error);
}

TEST_CASE("gradient check: every layer vs central finite differences") {
    for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
        Rng rng(seed);
        Mlp net = Mlp::make({4, 8, 6, 3}, rng, /*zero_final=*/false);
        Mat X = rng.normal_mat(4, 5);
        Mat Y = rng.normal_mat(3, 5);

        Mlp::Cache cache;
        Mat out = net.forward(X, &cache);
        Mlp::Grads grads;
        Mat dX = net.backward(cache, out - Y, grads);

        for (size_t li = 0; li < net.layers.size(); ++li) {
            Mat fdW(net.layers[li].W.rows(), net.layers[li].W.cols());
            const double h = 1e-5;
            for (Eigen::Index r = 0; r < fdW.rows(); ++r) {
                for (Eigen::Index c = 0; c < fdW.cols(); ++c) {
                    Mlp pert = net;
                    pert.layers[li].W(r, c) += h;
                    double up = mlp_loss(pert, X, Y);
                    pert.layers[li].W(r, c) -= 2 * h;
                    double dn = mlp_loss(pert, X, Y);
                    fdW(r, c) = (up - dn) / (2 * h);
                }
            }
            double err = (grads.dW[li] - fdW).norm() / std::max(fdW.norm(), 1e-8);
            CHECK(err < 1e-4);

            Vec fdb(net.layers[li].b.size());
            for (Eigen::Index r = 0; r < fdb.size(); ++r) {
                Mlp pert = net;
                pert.layers[li].b[r] += h;
                double up = mlp_loss(pert, X, Y);
                pert.layers[li].b[r] -= 2 * h;
                double dn = mlp_loss(pert, X, Y);
                fdb[r] = (up - dn) / (2 * h);
            }
            CHECK((grads.db[li] - fdb).norm() / std::max(fdb.norm(), 1e-8) < 1e-4);
        }

        // input gradient too
        Mat fdX(X.rows(), X.cols());
        const double h = 1e-5;
        for (Eigen::Index r = 0; r < X.rows(); ++r) {
            for (Eigen::Index c = 0; c < X.cols(); ++c) {
                Mat Xp = X, Xm = X;
                Xp(r, c) += h;
                Xm(r, c) -= h;
                fdX(r, c) = (mlp_loss(net, Xp, Y) - mlp_loss(net, Xm, Y)) / (2 * h);
            }
        }
        CHECK((dX - fdX).norm() / fdX.norm() < 1e-4);
    }
}

TEST_CASE("backward requires a cached forward; zero upstream gives zero grads") {
    Rng rng(4);
    Mlp net = Mlp::make({3, 5, 2}, rng, false);
    Mlp::Cache empty;
    Mlp::Grads grads;
    CHECK_THROWS_AS(net.backward(empty, Mat::Zero(2, 1), grads), Error);

    Mlp::Cache cache;
    net.forward(rng.normal_mat(3, 4), &cache);
    Mat dX = net.backward(cache, Mat::Zero(2, 4), grads);
    CHECK(dX.norm() == 0.0);
    for (const auto& g : grads.dW) CHECK(g.norm() == 0.0);
}

TEST_CASE("adam: zero grads are a no-op; first step is -lr; deterministic") {
    Rng rng(5);
    Mlp net = Mlp::make({2, 3, 2}, rng, false);
    Mlp snapshot = net;
    AdamState opt = AdamState::make(net, 0.1);
    Mlp::Grads zeros;
    zeros.init_like(net);
    opt.step(net, zeros);
    CHECK(mlp_equal(net, snapshot));

    // single scalar parameter p=0, g=1, lr=0.1: first update is -lr within eps
    Mlp scalar;
    scalar.layers.push_back({Mat::Zero(1, 1), Vec::Zero(1), Act::Linear});
    AdamState sopt = AdamState::make(scalar, 0.1);
    Mlp::Grads g1;
    g1.init_like(scalar);
    g1.dW[0](0, 0) = 1.0;
    sopt.step(scalar, g1);
    CHECK(scalar.layers[0].W(0, 0) == doctest::Approx(-0.1).epsilon(1e-7));

    // two identical runs agree bit for bit after 100 steps
    auto run = [](std::uint64_t seed) {
        Rng r(seed);
        Mlp n = Mlp::make({3, 8, 3}, r, false);
        AdamState o = AdamState::make(n, 1e-3);
        for (int i = 0; i < 100; ++i) {
            Mat X = r.normal_mat(3, 4);
            Mlp::Cache cache;
            Mat out = n.forward(X, &cache);
            Mlp::Grads g;
            n.backward(cache, out, g);
            o.step(n, g);
        }
        return n;
    };
    CHECK(mlp_equal(run(77), run(77)));
}

TEST_CASE("frozen nets never change under the optimizer") {
    Rng rng(6);
    Mlp net = Mlp::make({3, 6, 3}, rng, false);
    net.frozen = true;
    Mlp snapshot = net;
    AdamState opt = AdamState::make(net, 0.5);
    for (int i = 0; i < 5; ++i) {
        Mat X = rng.normal_mat(3, 2);
        Mlp::Cache cache;
        Mat out = net.forward(X, &cache);
        Mlp::Grads g;
        net.backward(cache, out, g);
        CHECK(g.dW[0].norm() > 0.0);  // gradients are still produced
        opt.step(net, g);
    }
    CHECK(mlp_equal(net, snapshot));
}

TEST_CASE("untrained denoiser is the identity; zero extra is bit-exact") {
    Rng rng(7);
    LevelEmbedding emb{4, 100.0};
    DenoiserNet net = DenoiserNet::make(3, 16, 2, emb, HeadKind::DmDenoiser, rng);
    Vec x(3);
    x << 0.4, -2.0, 11.0;
    for (double s : {3e-5, 1.0, 80.0}) {
        Vec d = net.denoise(x, s);
        CHECK(d == x);
    }
    // all-zero extra embedding is bit-identical to absent
    Rng rng2(8);
    DenoiserNet trained = DenoiserNet::make(3, 16, 2, emb, HeadKind::DmDenoiser, rng2);
    trained.mlp.layers.back().W = 0.01 * rng2.normal_mat(3, 16);
    Vec zero_extra = Vec::Zero(emb.dim());
    Vec with = trained.denoise(x, 0.7, &zero_extra);
    Vec without = trained.denoise(x, 0.7);
    CHECK(with == without);

    CHECK_THROWS_AS(net.denoise(Vec::Zero(2), 1.0), Error);
}

TEST_CASE("bridge net outputs exactly zero at initialization") {
    Rng rng(9);
    BridgeNet bridge = BridgeNet::make(6, 8, 16, 2, rng);
    Mat G = rng.normal_mat(6, 5);
    CHECK(bridge.forward_batch(G).norm() == 0.0);
}

TEST_CASE("denoiser trains to the posterior mean on N(0,1)") {
    Rng rng(10);
    LevelEmbedding emb{8, 100.0};
    DenoiserNet net = DenoiserNet::make(1, 64, 2, emb, HeadKind::DmDenoiser, rng);
    BridgedModel model;
    model.backbone = &net;
    model.mode = TrainMode::Pretrain;
    TrainTimeDist dist = TrainTimeDist::log_uniform(0.05, 5.0);
    AdamState opt = AdamState::make(net.mlp, 3e-3);
    for (int step = 0; step < 3000; ++step) {
        Mat x0 = rng.normal_mat(1, 64);
        LossGrads g = dsm_loss(model, dist, x0, rng);
        opt.step(net.mlp, g.backbone);
    }
    // posterior mean of N(0,1) at x=2, sigma=1 is 1.0
    CHECK(net.denoise(Vec::Constant(1, 2.0), 1.0)[0] == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("denoiser backward matches finite differences through the head") {
    Rng rng(11);
    LevelEmbedding emb{3, 10.0};
    for (HeadKind head : {HeadKind::DmDenoiser, HeadKind::FmEndpoint}) {
        DenoiserNet net = DenoiserNet::make(2, 8, 2, emb, head, rng);
        net.mlp.layers.back().W = 0.05 * rng.normal_mat(2, 8);
        std::vector<double> levels = {0.3, 0.7};
        Mat X = rng.normal_mat(2, 2);
        Mat extra = rng.normal_mat(emb.dim(), 2);
        Mat target = rng.normal_mat(2, 2);

        DenoiserNet::Cache cache;
        Mat out = net.denoise_batch(X, levels, &extra, &cache);
        Mlp::Grads grads;
        auto back = net.backward_batch(cache, out - target, grads);

        auto loss_of = [&](const DenoiserNet& n, const Mat& Xv, const Mat& Ev) {
            return 0.5 * (n.denoise_batch(Xv, levels, &Ev) - target).squaredNorm();
        };
        const double h = 1e-6;
        for (Eigen::Index r = 0; r < X.rows(); ++r)
            for (Eigen::Index c = 0; c < X.cols(); ++c) {
                Mat Xp = X, Xm = X;
                Xp(r, c) += h;
                Xm(r, c) -= h;
                double fd = (loss_of(net, Xp, extra) - loss_of(net, Xm, extra)) / (2 * h);
                CHECK(std::abs(back.dX(r, c) - fd) < 1e-4 * std::max(1.0, std::abs(fd)));
            }
        for (Eigen::Index r = 0; r < extra.rows(); ++r)
            for (Eigen::Index c = 0; c < extra.cols(); ++c) {
                Mat Ep = extra, Em = extra;
                Ep(r, c) += h;
                Em(r, c) -= h;
                double fd = (loss_of(net, X, Ep) - loss_of(net, X, Em)) / (2 * h);
                CHECK(std::abs(back.dExtra(r, c) - fd) < 1e-4 * std::max(1.0, std::abs(fd)));
            }
        // parameter gradient of the first layer
        Mat fdW(net.mlp.layers[0].W.rows(), net.mlp.layers[0].W.cols());
        for (Eigen::Index r = 0; r < fdW.rows(); ++r)
            for (Eigen::Index c = 0; c < fdW.cols(); ++c) {
                DenoiserNet pert = net;
                pert.mlp.layers[0].W(r, c) += h;
                double up = loss_of(pert, X, extra);
                pert.mlp.layers[0].W(r, c) -= 2 * h;
                double dn = loss_of(pert, X, extra);
                fdW(r, c) = (up - dn) / (2 * h);
            }
        CHECK((grads.dW[0] - fdW).norm() / std::max(fdW.norm(), 1e-8) < 1e-4);
    }
}

TEST_CASE("checkpoint records round-trip bit-exactly") {
    Rng rng(12);
    LevelEmbedding emb{5, 42.0};
    DenoiserNet net = DenoiserNet::make(3, 8, 2, emb, HeadKind::FmEndpoint, rng);
    net.mlp.layers.back().W = rng.normal_mat(3, 8);

    std::string path = "test_ckpt.bin";
    save_records(path, {record_from_denoiser(net, "backbone")});
    auto recs = load_records(path);
    REQUIRE(recs.size() == 1);
    CHECK(recs[0].role == "backbone");
    DenoiserNet loaded = denoiser_from_record(recs[0]);
    CHECK(loaded.head == HeadKind::FmEndpoint);
    CHECK(loaded.emb.n_freq == 5);
    CHECK(mlp_equal(loaded.mlp, net.mlp));

    // file starts with the magic
    std::ifstream is(path, std::ios::binary);
    char magic[6];
    is.read(magic, 6);
    CHECK(std::string(magic, 6) == "BGNET1");
    is.close();
    std::remove(path.c_str());
}

}  // TEST_SUITE
