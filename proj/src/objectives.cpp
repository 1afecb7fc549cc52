#include "bridgegen/objectives.hpp"

#include <cmath>

namespace bridgegen {

void BridgedModel::validate() const {
    check(backbone != nullptr, "BridgedModel: missing backbone");
    switch (mode) {
        case TrainMode::Pretrain:
            break;
        case TrainMode::Mbm:
            check(bridge == nullptr, "BridgedModel: mbm mode carries no bridge net");
            check(!backbone->frozen(), "BridgedModel: mbm mode trains the full backbone");
            check(constraint != nullptr, "BridgedModel: mbm mode needs a constraint");
            break;
        case TrainMode::MbmppDm:
        case TrainMode::MbmppFm:
            check(bridge != nullptr, "BridgedModel: mbmpp mode needs a bridge net");
            check(backbone->frozen(), "BridgedModel: mbmpp mode requires a frozen backbone");
            check(constraint != nullptr, "BridgedModel: mbmpp mode needs a constraint");
            check(bridge->mlp.out_dim() == backbone->embed_dim(),
                  "BridgedModel: bridge output must match the backbone embedding width");
            break;
    }
}

double BridgedModel::gamma_level(double level) const {
    double arg = (mode == TrainMode::MbmppFm) ? 1.0 - level : level;
    // Churned sampler levels may exceed sigma_max; the bridge vanishes there.
    if (arg >= gamma.sigma_max) return 0.0;
    return gamma_value(gamma, arg);
}

namespace {

Mat constraint_grads(const ConstraintSpec& c, const Mat& X) {
    Mat G(X.rows(), X.cols());
    for (Eigen::Index i = 0; i < X.cols(); ++i) G.col(i) = loss_grad(c, X.col(i));
    return G;
}

}  // namespace

Mat bridged_denoise_batch(const BridgedModel& m, const Mat& X, double sigma) {
    check(m.mode == TrainMode::MbmppDm || m.mode == TrainMode::MbmppFm,
          "bridged_denoise: model is not in an mbmpp mode");
    m.validate();
    // Detached plain estimate; no gradient flows back through it.
    Mat d_hat = m.backbone->denoise_batch(X, sigma);
    Mat g = constraint_grads(*m.constraint, d_hat);
    Mat extra = m.bridge->forward_batch(g);
    Mat out = m.backbone->denoise_batch(X, sigma, &extra);
    double gam = m.gamma_level(sigma);
    if (gam != 0.0) out -= gam * g;
    return out;
}

Vec bridged_denoise(const BridgedModel& m, const Vec& x_t, double sigma) {
    Mat X = x_t;
    return bridged_denoise_batch(m, X, sigma).col(0);
}

double dsm_loss_value(const DenoiseFn& denoiser, const Mat& X0, const std::vector<double>& sigmas,
                      const Mat& eps) {
    check(X0.cols() > 0, "dsm_loss: empty batch");
    check(static_cast<size_t>(X0.cols()) == sigmas.size() && eps.cols() == X0.cols(),
          "dsm_loss: batch size mismatch");
    double total = 0.0;
    for (Eigen::Index i = 0; i < X0.cols(); ++i) {
        double s = sigmas[static_cast<size_t>(i)];
        Mat xt = X0.col(i) + s * eps.col(i);
        Mat d = denoiser(xt, s);
        total += loss_weight(s) * (d.col(0) - X0.col(i)).squaredNorm();
    }
    return total / static_cast<double>(X0.cols());
}

namespace {

struct DrawnBatch {
    std::vector<double> levels;
    Mat xt;
};

DrawnBatch draw_dm_batch(const TrainTimeDist& dist, const Mat& X0, Rng& rng) {
    DrawnBatch b;
    b.levels.resize(static_cast<size_t>(X0.cols()));
    b.xt = X0;
    for (Eigen::Index i = 0; i < X0.cols(); ++i) {
        double s = sample_train_level(dist, rng);
        b.levels[static_cast<size_t>(i)] = s;
        b.xt.col(i) += s * rng.normal_vec(X0.rows());
    }
    return b;
}

}  // namespace

namespace {
double dsm_weight(DsmWeighting w, double sigma, double) {
    if (w == DsmWeighting::Unit) return loss_weight(sigma);
    return 1.0 / (sigma * sigma);
}
}  // namespace

LossGrads dsm_loss(BridgedModel& m, const TrainTimeDist& dist, const Mat& X0, Rng& rng,
                   DsmWeighting weighting) {
    check(X0.cols() > 0, "dsm_loss: empty batch");
    m.validate();
    const double n = static_cast<double>(X0.cols());
    DrawnBatch b = draw_dm_batch(dist, X0, rng);

    LossGrads out;
    DenoiserNet::Cache cache;
    switch (m.mode) {
        case TrainMode::Pretrain:
        case TrainMode::Mbm: {
            Mat d = m.backbone->denoise_batch(b.xt, b.levels, nullptr, &cache);
            if (m.mode == TrainMode::Mbm) {
                // Noisy-state bridge, expressed in denoiser space: the score
                // correction gamma*grad becomes sigma^2*gamma*grad on D.
                Mat g = constraint_grads(*m.constraint, b.xt);
                for (Eigen::Index i = 0; i < d.cols(); ++i) {
                    double s = b.levels[static_cast<size_t>(i)];
                    d.col(i) -= s * s * m.gamma_level(s) * g.col(i);
                }
            }
            Mat resid = d - X0;
            out.loss = 0.0;
            Mat dOut = resid;
            for (Eigen::Index i = 0; i < resid.cols(); ++i) {
                double w = dsm_weight(weighting, b.levels[static_cast<size_t>(i)],
                                      m.backbone->sigma_data);
                out.loss += w * resid.col(i).squaredNorm() / n;
                dOut.col(i) *= 2.0 * w / n;
            }
            m.backbone->backward_batch(cache, dOut, out.backbone);
            return out;
        }
        case TrainMode::MbmppDm: {
            // Stop-gradient composition: the plain estimate and the constraint
            // gradient are constants for the backward pass.
            Mat d_hat = m.backbone->denoise_batch(b.xt, b.levels);
            Mat g = constraint_grads(*m.constraint, d_hat);
            Mlp::Cache bridge_cache;
            Mat extra = m.bridge->forward_batch(g, &bridge_cache);
            Mat d = m.backbone->denoise_batch(b.xt, b.levels, &extra, &cache);
            for (Eigen::Index i = 0; i < d.cols(); ++i)
                d.col(i) -= m.gamma_level(b.levels[static_cast<size_t>(i)]) * g.col(i);
            Mat resid = d - X0;
            out.loss = 0.0;
            Mat dOut = resid;
            for (Eigen::Index i = 0; i < resid.cols(); ++i) {
                double w = dsm_weight(weighting, b.levels[static_cast<size_t>(i)],
                                      m.backbone->sigma_data);
                out.loss += w * resid.col(i).squaredNorm() / n;
                dOut.col(i) *= 2.0 * w / n;
            }
            Mlp::Grads discard;  // backbone is frozen; only dExtra is used
            auto back = m.backbone->backward_batch(cache, dOut, discard);
            m.bridge->mlp.backward(bridge_cache, back.dExtra, out.bridge);
            return out;
        }
        case TrainMode::MbmppFm:
            throw Error("dsm_loss: mbmpp-fm trains with fm_loss");
    }
    throw Error("dsm_loss: unknown mode");
}

LossGrads fm_loss(BridgedModel& m, const TrainTimeDist& dist, const Mat& X1, Rng& rng) {
    check(X1.cols() > 0, "fm_loss: empty batch");
    m.validate();
    check(m.backbone->head == HeadKind::FmEndpoint, "fm_loss: backbone must be an endpoint head");
    const double n = static_cast<double>(X1.cols());
    const Eigen::Index d = X1.rows();

    std::vector<double> ts(static_cast<size_t>(X1.cols()));
    Mat xt(d, X1.cols());
    Mat target(d, X1.cols());
    for (Eigen::Index i = 0; i < X1.cols(); ++i) {
        double t = sample_train_level(dist, rng);
        while (t >= 1.0 - 1e-6) t = sample_train_level(dist, rng);  // endpoint singularity
        ts[static_cast<size_t>(i)] = t;
        Vec x0 = rng.normal_vec(d);
        xt.col(i) = t * X1.col(i) + (1.0 - t) * x0;
        target.col(i) = X1.col(i) - x0;
    }

    LossGrads out;
    DenoiserNet::Cache cache;
    // The endpoint head's raw output is the velocity: X1_hat = x + (1-t)*v.
    switch (m.mode) {
        case TrainMode::Pretrain: {
            Mat v = m.backbone->raw_batch(xt, ts, nullptr, &cache);
            Mat resid = v - target;
            out.loss = resid.squaredNorm() / n;
            Mat dV = (2.0 / n) * resid;
            m.backbone->mlp.backward(cache.mlp_cache, dV, out.backbone);
            return out;
        }
        case TrainMode::MbmppFm: {
            Mat x1_hat = m.backbone->denoise_batch(xt, ts);
            Mat g = constraint_grads(*m.constraint, x1_hat);
            Mlp::Cache bridge_cache;
            Mat extra = m.bridge->forward_batch(g, &bridge_cache);
            Mat v = m.backbone->raw_batch(xt, ts, &extra, &cache);
            // Output-side endpoint correction, expressed in velocity space.
            for (Eigen::Index i = 0; i < v.cols(); ++i) {
                double t = ts[static_cast<size_t>(i)];
                v.col(i) -= m.gamma_level(t) / (1.0 - t) * g.col(i);
            }
            Mat resid = v - target;
            out.loss = resid.squaredNorm() / n;
            Mat dV = (2.0 / n) * resid;
            Mlp::Grads discard;
            Mat dU = m.backbone->mlp.backward(cache.mlp_cache, dV, discard);
            m.bridge->mlp.backward(bridge_cache, dU.bottomRows(m.backbone->embed_dim()),
                                   out.bridge);
            return out;
        }
        case TrainMode::Mbm:
        case TrainMode::MbmppDm:
            throw Error("fm_loss: mode trains with dsm_loss");
    }
    throw Error("fm_loss: unknown mode");
}

double Trainer::step(const Mat& batch, Rng& rng) {
    LossGrads g = flow_matching ? fm_loss(model, dist, batch, rng)
                                : dsm_loss(model, dist, batch, rng, weighting);
    if (!std::isfinite(g.loss)) throw DivergenceError("training diverged: non-finite loss");
    if (!g.backbone.dW.empty()) opt_backbone.step(model.backbone->mlp, g.backbone);
    if (!g.bridge.dW.empty() && model.bridge) opt_bridge.step(model.bridge->mlp, g.bridge);
    return g.loss;
}

}  // namespace bridgegen
