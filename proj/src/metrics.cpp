#include "bridgegen/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "bridgegen/schedules.hpp"

namespace bridgegen {
namespace metrics {

InfractionRates infraction_rates(const std::vector<ballsim::Scenario>& samples, double r, double L,
                                 double tol) {
    check(!samples.empty(), "infraction_rates: empty sample set");
    long units = 0, collision_units = 0, boundary_units = 0;
    double lim = L - r;
    double contact = 2.0 * r;
    for (const auto& sc : samples) {
        check(static_cast<int>(sc.states.size()) == sc.n_balls * sc.n_steps,
              "infraction_rates: malformed scenario layout");
        for (int t = 0; t < sc.n_steps; ++t) {
            ++units;
            bool coll = false, bound = false;
            for (int i = 0; i < sc.n_balls && !(coll && bound); ++i) {
                const auto& a = sc.at(t, i);
                if (std::abs(a.px) - lim > tol || std::abs(a.py) - lim > tol) bound = true;
                for (int j = i + 1; j < sc.n_balls && !coll; ++j) {
                    const auto& b = sc.at(t, j);
                    double dx = a.px - b.px, dy = a.py - b.py;
                    if (contact - std::sqrt(dx * dx + dy * dy) > tol) coll = true;
                }
            }
            if (coll) ++collision_units;
            if (bound) ++boundary_units;
        }
    }
    InfractionRates rates;
    rates.collision = static_cast<double>(collision_units) / static_cast<double>(units);
    rates.boundary = static_cast<double>(boundary_units) / static_cast<double>(units);
    return rates;
}

std::vector<Eigen::Vector2d> position_cloud(const std::vector<ballsim::Scenario>& scenarios) {
    std::vector<Eigen::Vector2d> pts;
    for (const auto& sc : scenarios)
        for (const auto& s : sc.states) pts.emplace_back(s.px, s.py);
    return pts;
}

namespace {

// Uniform grid over the reference bounding box; exact nearest neighbour by
// expanding cell rings with a conservative stopping bound.
class GridNn {
  public:
    explicit GridNn(const std::vector<Eigen::Vector2d>& pts) : pts_(pts) {
        lo_ = pts[0];
        hi_ = pts[0];
        for (const auto& p : pts) {
            lo_ = lo_.cwiseMin(p);
            hi_ = hi_.cwiseMax(p);
        }
        double span = std::max({hi_.x() - lo_.x(), hi_.y() - lo_.y(), 1e-12});
        n_cells_ = std::max(1, static_cast<int>(std::sqrt(static_cast<double>(pts.size()) / 2.0)));
        n_cells_ = std::min(n_cells_, 512);
        h_ = span / n_cells_ * (1.0 + 1e-12);
        cells_.resize(static_cast<size_t>(n_cells_ * n_cells_));
        for (size_t i = 0; i < pts.size(); ++i)
            cells_[static_cast<size_t>(cell_index(pts[i]))].push_back(static_cast<int>(i));
    }

    double nearest_dist2(const Eigen::Vector2d& q) const {
        int cx = clampi(static_cast<int>(std::floor((q.x() - lo_.x()) / h_)));
        int cy = clampi(static_cast<int>(std::floor((q.y() - lo_.y()) / h_)));
        // Distance from q to the grid bounding box; per-axis gaps to any
        // reference point decompose as (outside excess) + (in-grid gap), so
        // d_out^2 + ((k-1)h)^2 lower-bounds every cell in ring k.
        double gx_out = std::max({lo_.x() - q.x(), q.x() - hi_.x(), 0.0});
        double gy_out = std::max({lo_.y() - q.y(), q.y() - hi_.y(), 0.0});
        double d_out2 = gx_out * gx_out + gy_out * gy_out;
        double best = std::numeric_limits<double>::infinity();
        for (int ring = 0;; ++ring) {
            double ring_lb = std::max(0, ring - 1) * h_;
            if (best <= d_out2 + ring_lb * ring_lb && ring > 0) break;
            bool any_cell = false;
            for (int dx = -ring; dx <= ring; ++dx) {
                for (int dy = -ring; dy <= ring; ++dy) {
                    if (std::max(std::abs(dx), std::abs(dy)) != ring) continue;
                    int gx = cx + dx, gy = cy + dy;
                    if (gx < 0 || gy < 0 || gx >= n_cells_ || gy >= n_cells_) continue;
                    any_cell = true;
                    for (int idx : cells_[static_cast<size_t>(gy * n_cells_ + gx)]) {
                        double d2 = (pts_[static_cast<size_t>(idx)] - q).squaredNorm();
                        best = std::min(best, d2);
                    }
                }
            }
            if (!any_cell && ring > 0) break;  // ring is entirely off the grid
        }
        return best;
    }

  private:
    int cell_index(const Eigen::Vector2d& p) const {
        int cx = clampi(static_cast<int>(std::floor((p.x() - lo_.x()) / h_)));
        int cy = clampi(static_cast<int>(std::floor((p.y() - lo_.y()) / h_)));
        return cy * n_cells_ + cx;
    }
    int clampi(int v) const { return std::max(0, std::min(v, n_cells_ - 1)); }

    const std::vector<Eigen::Vector2d>& pts_;
    Eigen::Vector2d lo_, hi_;
    double h_ = 1.0;
    int n_cells_ = 1;
    std::vector<std::vector<int>> cells_;
};

}  // namespace

double directed_hausdorff(const std::vector<Eigen::Vector2d>& generated,
                          const std::vector<Eigen::Vector2d>& reference) {
    check(!generated.empty() && !reference.empty(), "directed_hausdorff: empty point set");
    GridNn nn(reference);
    double worst = 0.0;
    for (const auto& g : generated) worst = std::max(worst, nn.nearest_dist2(g));
    return std::sqrt(worst);
}

double relbo(const DenoiseFn& denoiser, const Vec& x0, int K, std::uint64_t seed,
             double sigma_min, double sigma_max) {
    check(K >= 1, "relbo: K must be at least 1");
    Rng rng(seed);
    TrainTimeDist dist = TrainTimeDist::log_uniform(sigma_min, sigma_max);
    double total = 0.0;
    for (int k = 0; k < K; ++k) {
        double s = sample_train_level(dist, rng);
        Mat xt = x0 + s * rng.normal_vec(x0.size());
        Mat d = denoiser(xt, s);
        total += (d.col(0) - x0).squaredNorm();
    }
    return -total / (static_cast<double>(K) * static_cast<double>(x0.size()));
}

double relbo_mean(const DenoiseFn& denoiser, const Mat& X0, int K, std::uint64_t seed,
                  double sigma_min, double sigma_max) {
    check(X0.cols() > 0, "relbo_mean: empty dataset");
    double total = 0.0;
    for (Eigen::Index i = 0; i < X0.cols(); ++i)
        total += relbo(denoiser, X0.col(i), K, derive_seed(seed, "relbo", static_cast<std::uint64_t>(i)),
                       sigma_min, sigma_max);
    return total / static_cast<double>(X0.cols());
}

double relbo_fm_mean(const DenoiseFn& endpoint, const Mat& X1, int K, std::uint64_t seed,
                     double logit_mu, double logit_sd) {
    check(X1.cols() > 0 && K >= 1, "relbo_fm_mean: bad arguments");
    TrainTimeDist dist = TrainTimeDist::logit_normal(logit_mu, logit_sd);
    double total = 0.0;
    for (Eigen::Index i = 0; i < X1.cols(); ++i) {
        Rng rng(derive_seed(seed, "relbo-fm", static_cast<std::uint64_t>(i)));
        double acc = 0.0;
        for (int k = 0; k < K; ++k) {
            double t = sample_train_level(dist, rng);
            while (t >= 1.0 - 1e-6) t = sample_train_level(dist, rng);
            Mat xt = t * X1.col(i) + (1.0 - t) * rng.normal_vec(X1.rows());
            Mat e = endpoint(xt, t);
            acc += (e.col(0) - X1.col(i)).squaredNorm();
        }
        total += -acc / (static_cast<double>(K) * static_cast<double>(X1.rows()));
    }
    return total / static_cast<double>(X1.cols());
}

void write_metrics_csv(const std::string& path, const std::vector<MetricsReport>& reports) {
    std::ofstream os(path, std::ios::trunc);
    check(static_cast<bool>(os), "cannot open for writing: " + path);
    os << "method,collision_rate,boundary_rate,hdh,relbo,n_samples,seed\n";
    for (const auto& r : reports) {
        os << r.method << ',' << format_double(r.collision_rate) << ','
           << format_double(r.boundary_rate) << ',' << format_double(r.hdh) << ','
           << format_double(r.relbo) << ',' << r.n_samples << ',' << r.seed << '\n';
    }
    check(static_cast<bool>(os), "write failed: " + path);
}

std::vector<MetricsReport> read_metrics_csv(const std::string& path) {
    std::ifstream is(path);
    check(static_cast<bool>(is), "cannot open: " + path);
    std::string line;
    check(static_cast<bool>(std::getline(is, line)), "metrics csv: missing header");
    std::vector<MetricsReport> out;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        MetricsReport r;
        std::string field;
        std::getline(ss, r.method, ',');
        std::getline(ss, field, ',');
        r.collision_rate = std::strtod(field.c_str(), nullptr);
        std::getline(ss, field, ',');
        r.boundary_rate = std::strtod(field.c_str(), nullptr);
        std::getline(ss, field, ',');
        r.hdh = std::strtod(field.c_str(), nullptr);
        std::getline(ss, field, ',');
        r.relbo = std::strtod(field.c_str(), nullptr);
        std::getline(ss, field, ',');
        r.n_samples = std::stoi(field);
        std::getline(ss, field, ',');
        r.seed = std::stoull(field);
        out.push_back(r);
    }
    return out;
}

}  // namespace metrics
}  // namespace bridgegen
