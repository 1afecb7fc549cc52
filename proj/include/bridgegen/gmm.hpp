#pragma once

#include <vector>

#include "bridgegen/common.hpp"
#include "bridgegen/rng.hpp"

namespace bridgegen {

// Closed-form Gaussian mixture: exact densities, scores and posterior means.
// Serves as the analytically known data distribution in tests and toy runs.
class GaussianMixture {
  public:
    struct Component {
        double weight;
        Vec mean;
        // Diagonal covariance entries; isotropic components store a constant
        // diagonal. Full PD covariances are supported via the second ctor.
        Vec diag_var;
        // Optional full covariance (empty when diagonal).
        Mat cov;
        bool full = false;
    };

    GaussianMixture(std::vector<double> weights, std::vector<Vec> means,
                    std::vector<Vec> diag_vars);
    GaussianMixture(std::vector<double> weights, std::vector<Vec> means,
                    std::vector<Mat> covariances);

    static GaussianMixture isotropic(std::vector<double> weights, std::vector<Vec> means,
                                     std::vector<double> vars);

    int dim() const { return dim_; }
    int n_components() const { return static_cast<int>(comps_.size()); }
    const Component& component(int k) const { return comps_[static_cast<size_t>(k)]; }

    // Density of x0 * N(0, sigma^2 I) at x; sigma = 0 gives the data density.
    double marginal_density(const Vec& x, double sigma) const;
    double log_marginal_density(const Vec& x, double sigma) const;

    // E[x0 | x_t] under the Gaussian perturbation kernel.
    Vec posterior_mean(const Vec& x_t, double sigma) const;

    // (posterior_mean - x_t) / sigma^2; equals grad log marginal density.
    Vec score(const Vec& x_t, double sigma) const;

    Vec sample(Rng& rng) const;
    Mat sample_n(int n, Rng& rng) const;

  private:
    // Per-component log N(x; mu_k, Sigma_k + sigma^2 I) and the posterior
    // component mean mu_k + Sigma_k (Sigma_k + sigma^2 I)^-1 (x - mu_k).
    double comp_log_density(int k, const Vec& x, double sigma) const;
    Vec comp_posterior_mean(int k, const Vec& x, double sigma) const;

    std::vector<Component> comps_;
    int dim_;
};

}  // namespace bridgegen
