#include "bridgegen/gmm.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <limits>

namespace bridgegen {

namespace {
constexpr double kLog2Pi = 1.8378770664093454836;

void check_weights(const std::vector<double>& w) {
    check(!w.empty(), "GaussianMixture: no components");
    double sum = 0.0;
    for (double wi : w) {
        check(wi > 0.0, "GaussianMixture: weights must be positive");
        sum += wi;
    }
    check(std::abs(sum - 1.0) < 1e-12, "GaussianMixture: weights must sum to 1");
}
}  // namespace

GaussianMixture::GaussianMixture(std::vector<double> weights, std::vector<Vec> means,
                                 std::vector<Vec> diag_vars) {
    check_weights(weights);
    check(weights.size() == means.size() && weights.size() == diag_vars.size(),
          "GaussianMixture: component list sizes differ");
    dim_ = static_cast<int>(means[0].size());
    for (size_t k = 0; k < weights.size(); ++k) {
        check(means[k].size() == dim_ && diag_vars[k].size() == dim_,
              "GaussianMixture: dimension mismatch");
        check(diag_vars[k].minCoeff() > 0.0, "GaussianMixture: variances must be positive");
        comps_.push_back({weights[k], means[k], diag_vars[k], Mat(), false});
    }
}

GaussianMixture::GaussianMixture(std::vector<double> weights, std::vector<Vec> means,
                                 std::vector<Mat> covariances) {
    check_weights(weights);
    check(weights.size() == means.size() && weights.size() == covariances.size(),
          "GaussianMixture: component list sizes differ");
    dim_ = static_cast<int>(means[0].size());
    for (size_t k = 0; k < weights.size(); ++k) {
        const Mat& c = covariances[k];
        check(means[k].size() == dim_ && c.rows() == dim_ && c.cols() == dim_,
              "GaussianMixture: dimension mismatch");
        check((c - c.transpose()).cwiseAbs().maxCoeff() < 1e-12,
              "GaussianMixture: covariance not symmetric");
        Eigen::LLT<Mat> llt(c);
        check(llt.info() == Eigen::Success, "GaussianMixture: covariance not positive definite");
        comps_.push_back({weights[k], means[k], Vec(), c, true});
    }
}

GaussianMixture GaussianMixture::isotropic(std::vector<double> weights, std::vector<Vec> means,
                                           std::vector<double> vars) {
    check(!means.empty(), "GaussianMixture: no components");
    std::vector<Vec> diag;
    diag.reserve(vars.size());
    for (size_t k = 0; k < vars.size(); ++k)
        diag.push_back(Vec::Constant(means[k].size(), vars[k]));
    return GaussianMixture(std::move(weights), std::move(means), std::move(diag));
}

double GaussianMixture::comp_log_density(int k, const Vec& x, double sigma) const {
    const Component& c = comps_[static_cast<size_t>(k)];
    Vec d = x - c.mean;
    double s2 = sigma * sigma;
    if (!c.full) {
        double quad = 0.0, logdet = 0.0;
        for (int i = 0; i < dim_; ++i) {
            double v = c.diag_var[i] + s2;
            quad += d[i] * d[i] / v;
            logdet += std::log(v);
        }
        return -0.5 * (dim_ * kLog2Pi + logdet + quad);
    }
    Mat cov = c.cov + s2 * Mat::Identity(dim_, dim_);
    Eigen::LLT<Mat> llt(cov);
    check(llt.info() == Eigen::Success, "GaussianMixture: perturbed covariance not PD");
    Vec sol = llt.solve(d);
    double logdet = 0.0;
    for (int i = 0; i < dim_; ++i) logdet += 2.0 * std::log(llt.matrixL()(i, i));
    return -0.5 * (dim_ * kLog2Pi + logdet + d.dot(sol));
}

Vec GaussianMixture::comp_posterior_mean(int k, const Vec& x, double sigma) const {
    const Component& c = comps_[static_cast<size_t>(k)];
    Vec d = x - c.mean;
    double s2 = sigma * sigma;
    if (!c.full) {
        Vec out(dim_);
        for (int i = 0; i < dim_; ++i)
            out[i] = c.mean[i] + c.diag_var[i] / (c.diag_var[i] + s2) * d[i];
        return out;
    }
    Mat cov = c.cov + s2 * Mat::Identity(dim_, dim_);
    return c.mean + c.cov * Eigen::LLT<Mat>(cov).solve(d);
}

double GaussianMixture::log_marginal_density(const Vec& x, double sigma) const {
    check(x.size() == dim_, "GaussianMixture: dimension mismatch");
    check(sigma >= 0.0, "GaussianMixture: sigma must be non-negative");
    // log-sum-exp over components; sigma spans many orders of magnitude.
    double max_term = -std::numeric_limits<double>::infinity();
    std::vector<double> terms(comps_.size());
    for (size_t k = 0; k < comps_.size(); ++k) {
        terms[k] = std::log(comps_[k].weight) + comp_log_density(static_cast<int>(k), x, sigma);
        max_term = std::max(max_term, terms[k]);
    }
    double acc = 0.0;
    for (double t : terms) acc += std::exp(t - max_term);
    return max_term + std::log(acc);
}

double GaussianMixture::marginal_density(const Vec& x, double sigma) const {
    return std::exp(log_marginal_density(x, sigma));
}

Vec GaussianMixture::posterior_mean(const Vec& x_t, double sigma) const {
    check(x_t.size() == dim_, "GaussianMixture: dimension mismatch");
    check(sigma > 0.0, "GaussianMixture: sigma must be positive");
    std::vector<double> logr(comps_.size());
    double max_term = -std::numeric_limits<double>::infinity();
    for (size_t k = 0; k < comps_.size(); ++k) {
        logr[k] = std::log(comps_[k].weight) + comp_log_density(static_cast<int>(k), x_t, sigma);
        max_term = std::max(max_term, logr[k]);
    }
    check(std::isfinite(max_term), "posterior underflow");
    double norm = 0.0;
    for (double t : logr) norm += std::exp(t - max_term);
    Vec out = Vec::Zero(dim_);
    for (size_t k = 0; k < comps_.size(); ++k) {
        double w = std::exp(logr[k] - max_term) / norm;
        if (w == 0.0) continue;
        out += w * comp_posterior_mean(static_cast<int>(k), x_t, sigma);
    }
    return out;
}

Vec GaussianMixture::score(const Vec& x_t, double sigma) const {
    return (posterior_mean(x_t, sigma) - x_t) / (sigma * sigma);
}

Vec GaussianMixture::sample(Rng& rng) const {
    double u = rng.uniform();
    size_t k = 0;
    double acc = 0.0;
    for (; k < comps_.size(); ++k) {
        acc += comps_[k].weight;
        if (u < acc) break;
    }
    if (k == comps_.size()) k = comps_.size() - 1;
    const Component& c = comps_[k];
    Vec z = rng.normal_vec(dim_);
    if (!c.full) return c.mean + c.diag_var.cwiseSqrt().cwiseProduct(z);
    Eigen::LLT<Mat> llt(c.cov);
    return c.mean + llt.matrixL() * z;
}

Mat GaussianMixture::sample_n(int n, Rng& rng) const {
    Mat out(dim_, n);
    for (int i = 0; i < n; ++i) out.col(i) = sample(rng);
    return out;
}

}  // namespace bridgegen
