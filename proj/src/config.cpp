#include "bridgegen/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

namespace bridgegen {

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

double parse_double(const std::string& key, const std::string& v) {
    char* end = nullptr;
    double x = std::strtod(v.c_str(), &end);
    if (end == v.c_str() || *end != '\0')
        throw ConfigError("config: invalid number for " + key + ": " + v);
    return x;
}

long parse_int(const std::string& key, const std::string& v) {
    char* end = nullptr;
    long x = std::strtol(v.c_str(), &end, 10);
    if (end == v.c_str() || *end != '\0')
        throw ConfigError("config: invalid integer for " + key + ": " + v);
    return x;
}

std::vector<double> parse_list(const std::string& key, const std::string& v) {
    std::vector<double> out;
    std::istringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_double(key, trim(item)));
    if (out.empty()) throw ConfigError("config: empty list for " + key);
    return out;
}

std::vector<std::vector<double>> parse_vec_list(const std::string& key, const std::string& v) {
    std::vector<std::vector<double>> out;
    std::istringstream ss(v);
    std::string group;
    while (std::getline(ss, group, ';')) out.push_back(parse_list(key, trim(group)));
    if (out.empty()) throw ConfigError("config: empty list for " + key);
    return out;
}

}  // namespace

std::map<std::string, std::string> parse_key_values(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::istringstream ss(text);
    std::string line;
    int lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config: line " + std::to_string(lineno) + " is not key=value");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError("config: empty key on line " + std::to_string(lineno));
        kv[key] = value;
    }
    return kv;
}

std::map<std::string, std::string> load_key_value_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("config: cannot open " + path);
    std::stringstream buf;
    buf << is.rdbuf();
    return parse_key_values(buf.str());
}

void RunConfig::apply_override(const std::string& key, const std::string& value) {
    using Setter = std::function<void(RunConfig&, const std::string&, const std::string&)>;
    static const std::map<std::string, Setter> schema = {
        {"task", [](RunConfig& c, const std::string&, const std::string& v) { c.task = v; }},
        {"method", [](RunConfig& c, const std::string&, const std::string& v) { c.method = v; }},
        {"seed", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.seed = static_cast<std::uint64_t>(parse_int(k, v)); }},
        {"sigma_min", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.sigma_min = parse_double(k, v); }},
        {"sigma_max", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.sigma_max = parse_double(k, v); }},
        {"n_steps", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.n_steps = static_cast<int>(parse_int(k, v)); }},
        {"gamma_kappa", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.gamma_kappa = parse_double(k, v); }},
        {"train_time_dist", [](RunConfig& c, const std::string&, const std::string& v) {
             c.train_time_dist = v; }},
        {"train_sigma_min", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.train_sigma_min = parse_double(k, v); }},
        {"train_sigma_max", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.train_sigma_max = parse_double(k, v); }},
        {"logitnormal_mu", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.logitnormal_mu = parse_double(k, v); }},
        {"logitnormal_sd", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.logitnormal_sd = parse_double(k, v); }},
        {"fm_steps", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.fm_steps = static_cast<int>(parse_int(k, v)); }},
        {"s_churn", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.s_churn = parse_double(k, v); }},
        {"guidance_rho", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.guidance_rho = parse_double(k, v); }},
        {"n_samples", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.n_samples = static_cast<int>(parse_int(k, v)); }},
        {"mode", [](RunConfig& c, const std::string&, const std::string& v) { c.mode = v; }},
        {"loss_weighting", [](RunConfig& c, const std::string&, const std::string& v) {
             c.loss_weighting = v; }},
        {"batch_size", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.batch_size = static_cast<int>(parse_int(k, v)); }},
        {"lr", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.lr = parse_double(k, v); }},
        {"steps", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.steps = static_cast<int>(parse_int(k, v)); }},
        {"log_every", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.log_every = static_cast<int>(parse_int(k, v)); }},
        {"hidden_width", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.hidden_width = static_cast<int>(parse_int(k, v)); }},
        {"hidden_depth", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.hidden_depth = static_cast<int>(parse_int(k, v)); }},
        {"n_freq", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.n_freq = static_cast<int>(parse_int(k, v)); }},
        {"embed_base_scale", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.embed_base_scale = parse_double(k, v); }},
        {"bridge_width", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.bridge_width = static_cast<int>(parse_int(k, v)); }},
        {"bridge_depth", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.bridge_depth = static_cast<int>(parse_int(k, v)); }},
        {"am_sigma", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.am_sigma = parse_double(k, v); }},
        {"am_outer", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.am_outer = static_cast<int>(parse_int(k, v)); }},
        {"am_batch", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.am_batch = static_cast<int>(parse_int(k, v)); }},
        {"am_lr", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.am_lr = parse_double(k, v); }},
        {"n_balls", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.n_balls = static_cast<int>(parse_int(k, v)); }},
        {"n_timesteps", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.n_timesteps = static_cast<int>(parse_int(k, v)); }},
        {"ball_radius", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.ball_radius = parse_double(k, v); }},
        {"box_halfwidth", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.box_halfwidth = parse_double(k, v); }},
        {"n_scenarios", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.n_scenarios = static_cast<int>(parse_int(k, v)); }},
        {"vel_max", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.vel_max = parse_double(k, v); }},
        {"constraint.kind", [](RunConfig& c, const std::string&, const std::string& v) {
             c.constraint_kind = v; }},
        {"constraint.radius", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.constraint_radius = parse_double(k, v); }},
        {"constraint.box_halfwidth", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.constraint_box_halfwidth = parse_double(k, v); }},
        {"constraint.weights", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.constraint_weights = parse_list(k, v); }},
        {"constraint.target", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.constraint_target = parse_list(k, v); }},
        {"constraint.normal", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.constraint_normal = parse_list(k, v); }},
        {"constraint.offset", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.constraint_offset = parse_double(k, v); }},
        {"gmm.weights", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.gmm_weights = parse_list(k, v); }},
        {"gmm.means", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.gmm_means = parse_vec_list(k, v); }},
        {"gmm.vars", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.gmm_vars = parse_list(k, v); }},
        {"eval_tol", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.eval_tol = parse_double(k, v); }},
        {"relbo_k", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.relbo_k = static_cast<int>(parse_int(k, v)); }},
        {"relbo_rows", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.relbo_rows = static_cast<int>(parse_int(k, v)); }},
        {"data_path", [](RunConfig& c, const std::string&, const std::string& v) {
             c.data_path = v; }},
        {"ckpt_path", [](RunConfig& c, const std::string&, const std::string& v) {
             c.ckpt_path = v; }},
        {"init_path", [](RunConfig& c, const std::string&, const std::string& v) {
             c.init_path = v; }},
        {"samples_path", [](RunConfig& c, const std::string&, const std::string& v) {
             c.samples_path = v; }},
        {"reference_path", [](RunConfig& c, const std::string&, const std::string& v) {
             c.reference_path = v; }},
        {"metrics_path", [](RunConfig& c, const std::string&, const std::string& v) {
             c.metrics_path = v; }},
        {"plot_path", [](RunConfig& c, const std::string&, const std::string& v) {
             c.plot_path = v; }},
        {"loss_log_path", [](RunConfig& c, const std::string&, const std::string& v) {
             c.loss_log_path = v; }},
    };
    auto it = schema.find(key);
    if (it == schema.end()) throw ConfigError("config: unknown key: " + key);
    it->second(*this, key, value);
}

void RunConfig::apply(const std::map<std::string, std::string>& kv) {
    for (const auto& [k, v] : kv) apply_override(k, v);
}

void RunConfig::validate() const {
    if (task != "balls" && task != "gmm2d") throw ConfigError("config: unknown task: " + task);
    if (sigma_min <= 0.0 || sigma_min >= sigma_max)
        throw ConfigError("config: need 0 < sigma_min < sigma_max");
    if (n_steps < 2) throw ConfigError("config: n_steps must be at least 2");
    if (gamma_kappa <= 0.0) throw ConfigError("config: gamma_kappa must be positive");
    if (train_time_dist != "log-uniform-sigma" && train_time_dist != "logit-normal-t")
        throw ConfigError("config: unknown train_time_dist: " + train_time_dist);
    if (loss_weighting != "unit" && loss_weighting != "eps")
        throw ConfigError("config: unknown loss_weighting: " + loss_weighting);
    if (batch_size < 1 || steps < 0) throw ConfigError("config: bad training sizes");
    if (n_balls < 1 || n_timesteps < 1) throw ConfigError("config: bad scenario sizes");
    if (ball_radius <= 0.0 || ball_radius >= box_halfwidth)
        throw ConfigError("config: need 0 < ball_radius < box_halfwidth");
    if (gmm_weights.size() != gmm_means.size() || gmm_weights.size() != gmm_vars.size())
        throw ConfigError("config: gmm lists must have equal lengths");
    // Output paths must not collide.
    std::vector<std::string> outs = {ckpt_path, samples_path, metrics_path, plot_path,
                                     loss_log_path, data_path};
    std::set<std::string> seen;
    for (const auto& p : outs) {
        if (p.empty()) continue;
        if (!seen.insert(p).second) throw ConfigError("config: output paths must be distinct: " + p);
    }
}

GaussianMixture RunConfig::mixture() const {
    std::vector<Vec> means;
    for (const auto& m : gmm_means) {
        Vec v(static_cast<Eigen::Index>(m.size()));
        for (size_t i = 0; i < m.size(); ++i) v[static_cast<Eigen::Index>(i)] = m[i];
        means.push_back(v);
    }
    return GaussianMixture::isotropic(gmm_weights, means, gmm_vars);
}

RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
    RunConfig cfg;
    if (!path.empty()) cfg.apply(load_key_value_file(path));
    for (const auto& ov : overrides) {
        auto eq = ov.find('=');
        if (eq == std::string::npos) throw ConfigError("--set expects key=value, got: " + ov);
        cfg.apply_override(ov.substr(0, eq), ov.substr(eq + 1));
    }
    cfg.validate();
    return cfg;
}

}  // namespace bridgegen
