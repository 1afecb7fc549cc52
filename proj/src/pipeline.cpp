#include "bridgegen/pipeline.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace bridgegen {
namespace pipeline {

void write_samples_csv(const std::string& path, const Mat& samples) {
    std::ofstream os(path, std::ios::trunc);
    check(static_cast<bool>(os), "cannot open for writing: " + path);
    os << "sample_id";
    for (Eigen::Index r = 0; r < samples.rows(); ++r) os << ",x" << r;
    os << '\n';
    for (Eigen::Index c = 0; c < samples.cols(); ++c) {
        os << c;
        for (Eigen::Index r = 0; r < samples.rows(); ++r)
            os << ',' << format_double(samples(r, c));
        os << '\n';
    }
    check(static_cast<bool>(os), "write failed: " + path);
}

namespace {

Mat read_csv_matrix(const std::string& path, bool skip_id) {
    std::ifstream is(path);
    check(static_cast<bool>(is), "cannot open: " + path);
    std::string line;
    check(static_cast<bool>(std::getline(is, line)), "csv: missing header: " + path);
    std::vector<std::vector<double>> rows;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::istringstream ss(line);
        std::string field;
        bool first = true;
        while (std::getline(ss, field, ',')) {
            if (first && skip_id) {
                first = false;
                continue;
            }
            first = false;
            row.push_back(std::strtod(field.c_str(), nullptr));
        }
        rows.push_back(std::move(row));
    }
    check(!rows.empty(), "csv: no data rows: " + path);
    Mat out(static_cast<Eigen::Index>(rows[0].size()), static_cast<Eigen::Index>(rows.size()));
    for (size_t c = 0; c < rows.size(); ++c) {
        check(rows[c].size() == rows[0].size(), "csv: ragged rows: " + path);
        for (size_t r = 0; r < rows[c].size(); ++r)
            out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[c][r];
    }
    return out;
}

}  // namespace

Mat read_samples_csv(const std::string& path) { return read_csv_matrix(path, true); }

void write_points_csv(const std::string& path, const Mat& points) {
    std::ofstream os(path, std::ios::trunc);
    check(static_cast<bool>(os), "cannot open for writing: " + path);
    for (Eigen::Index r = 0; r < points.rows(); ++r) os << (r ? ",x" : "x") << r;
    os << '\n';
    for (Eigen::Index c = 0; c < points.cols(); ++c) {
        for (Eigen::Index r = 0; r < points.rows(); ++r)
            os << (r ? "," : "") << format_double(points(r, c));
        os << '\n';
    }
    check(static_cast<bool>(os), "write failed: " + path);
}

Mat read_points_csv(const std::string& path) { return read_csv_matrix(path, false); }

ConstraintSpec build_constraint(const RunConfig& cfg) {
    BallLayout layout{cfg.n_balls, cfg.n_timesteps};
    if (cfg.constraint_kind == "ball-collision")
        return ConstraintSpec::ball_collision(layout, cfg.constraint_radius);
    if (cfg.constraint_kind == "ball-boundary")
        return ConstraintSpec::ball_boundary(layout, cfg.constraint_radius,
                                             cfg.constraint_box_halfwidth);
    if (cfg.constraint_kind == "composite") {
        std::vector<ConstraintSpec> members;
        members.push_back(ConstraintSpec::ball_collision(layout, cfg.constraint_radius));
        members.push_back(ConstraintSpec::ball_boundary(layout, cfg.constraint_radius,
                                                        cfg.constraint_box_halfwidth));
        check(cfg.constraint_weights.size() == 2,
              "config: composite ball constraint expects 2 weights");
        return ConstraintSpec::composite(cfg.constraint_weights, std::move(members));
    }
    if (cfg.constraint_kind == "quadratic-to-point") {
        check(!cfg.constraint_target.empty(), "config: quadratic constraint needs constraint.target");
        Vec c(static_cast<Eigen::Index>(cfg.constraint_target.size()));
        for (size_t i = 0; i < cfg.constraint_target.size(); ++i)
            c[static_cast<Eigen::Index>(i)] = cfg.constraint_target[i];
        return ConstraintSpec::quadratic(std::move(c));
    }
    if (cfg.constraint_kind == "halfplane") {
        check(!cfg.constraint_normal.empty(), "config: halfplane constraint needs constraint.normal");
        Vec n(static_cast<Eigen::Index>(cfg.constraint_normal.size()));
        for (size_t i = 0; i < cfg.constraint_normal.size(); ++i)
            n[static_cast<Eigen::Index>(i)] = cfg.constraint_normal[i];
        return ConstraintSpec::halfplane(std::move(n), cfg.constraint_offset);
    }
    throw ConfigError("config: unknown constraint.kind: " + cfg.constraint_kind);
}

GammaSchedule build_gamma(const RunConfig& cfg, bool flow) {
    // Flow-matching bridges live on the residual noise scale 1 - t in (0, 1].
    return GammaSchedule(cfg.gamma_kappa, flow ? 1.0 : cfg.sigma_max);
}

TrainTimeDist build_train_dist(const RunConfig& cfg, bool flow) {
    if (flow || cfg.train_time_dist == "logit-normal-t")
        return TrainTimeDist::logit_normal(cfg.logitnormal_mu, cfg.logitnormal_sd);
    double lo = cfg.train_sigma_min > 0.0 ? cfg.train_sigma_min : cfg.sigma_min;
    double hi = cfg.train_sigma_max > 0.0 ? cfg.train_sigma_max : cfg.sigma_max;
    return TrainTimeDist::log_uniform(lo, hi);
}

Mat load_training_matrix(const RunConfig& cfg) {
    if (cfg.task == "balls") {
        auto scen = ballsim::read_dataset_csv(cfg.data_path, cfg.ball_radius, cfg.box_halfwidth);
        return ballsim::dataset_matrix(scen);
    }
    return read_points_csv(cfg.data_path);
}

void cmd_gen_data(const RunConfig& cfg) {
    if (cfg.task == "balls") {
        ballsim::GenParams p;
        p.n_scenarios = cfg.n_scenarios;
        p.n_balls = cfg.n_balls;
        p.n_steps = cfg.n_timesteps;
        p.radius = cfg.ball_radius;
        p.box_halfwidth = cfg.box_halfwidth;
        p.vel_max = cfg.vel_max;
        auto scen = ballsim::generate_dataset(p, derive_seed(cfg.seed, "gen-data"));
        ballsim::write_dataset_csv(cfg.data_path, scen);
        return;
    }
    Rng rng = derive_rng(cfg.seed, "gen-data");
    Mat pts = cfg.mixture().sample_n(cfg.n_scenarios, rng);
    write_points_csv(cfg.data_path, pts);
}

namespace {

bool method_flow(const RunConfig& cfg) { return method_is_flow(method_from_string(cfg.method)); }

Mat pick_batch(const Mat& data, int batch, Rng& rng) {
    Mat out(data.rows(), batch);
    for (int i = 0; i < batch; ++i)
        out.col(i) = data.col(static_cast<Eigen::Index>(rng.uniform_int(
            static_cast<std::uint64_t>(data.cols()))));
    return out;
}

void run_training(Trainer& trainer, const Mat& data, int steps, int batch_size, int log_every,
                  const std::string& log_path, Rng& rng) {
    std::ofstream log;
    if (!log_path.empty()) {
        log.open(log_path, std::ios::trunc);
        check(static_cast<bool>(log), "cannot open for writing: " + log_path);
        log << "step,loss\n";
    }
    for (int step = 0; step < steps; ++step) {
        Mat batch = pick_batch(data, batch_size, rng);
        double loss;
        try {
            loss = trainer.step(batch, rng);
        } catch (const DivergenceError& e) {
            throw DivergenceError(std::string(e.what()) + " at step " + std::to_string(step));
        }
        if (log.is_open() && (step % log_every == 0 || step == steps - 1))
            log << step << ',' << format_double(loss) << '\n';
    }
}

}  // namespace

void cmd_train(const RunConfig& cfg) {
    bool flow = method_flow(cfg);
    Mat data = load_training_matrix(cfg);
    int d = static_cast<int>(data.rows());

    Rng init_rng = derive_rng(cfg.seed, "init");
    LevelEmbedding emb{cfg.n_freq, cfg.embed_base_scale};
    DenoiserNet net = DenoiserNet::make(d, cfg.hidden_width, cfg.hidden_depth, emb,
                                        flow ? HeadKind::FmEndpoint : HeadKind::DmDenoiser,
                                        init_rng);

    Trainer trainer;
    trainer.model.backbone = &net;
    trainer.model.mode = TrainMode::Pretrain;
    trainer.dist = build_train_dist(cfg, flow);
    trainer.opt_backbone = AdamState::make(net.mlp, cfg.lr);
    trainer.flow_matching = flow;
    trainer.weighting = cfg.loss_weighting == "eps" ? DsmWeighting::EpsPrediction
                                                    : DsmWeighting::Unit;

    Rng train_rng = derive_rng(cfg.seed, "train");
    run_training(trainer, data, cfg.steps, cfg.batch_size, cfg.log_every, cfg.loss_log_path,
                 train_rng);
    save_records(cfg.ckpt_path, {record_from_denoiser(net, "backbone")});
}

void cmd_finetune(const RunConfig& cfg) {
    check(!cfg.init_path.empty(), "finetune: init_path (pretrained checkpoint) required");
    Mat data = load_training_matrix(cfg);
    int d = static_cast<int>(data.rows());
    auto records = load_records(cfg.init_path);
    check(records[0].role == "backbone", "finetune: first record must be the backbone");
    DenoiserNet net = denoiser_from_record(records[0]);
    check(net.data_dim == d, "finetune: checkpoint dimension does not match dataset");

    ConstraintSpec constraint = build_constraint(cfg);
    Rng train_rng = derive_rng(cfg.seed, "finetune");

    if (cfg.mode == "am") {
        check(net.head == HeadKind::FmEndpoint, "finetune: am expects a flow backbone");
        Rng init_rng = derive_rng(cfg.seed, "init");
        LevelEmbedding cemb{8, 100.0};
        std::vector<int> widths = {d + cemb.dim(), cfg.bridge_width, cfg.bridge_width, d};
        Mlp control = Mlp::make(widths, init_rng);

        adjoint::ControlContext ctx;
        ctx.data_dim = d;
        ctx.m_steps = cfg.fm_steps;
        ctx.drift = [&net](const Mat& X, double t) {
            return net.raw_batch(X, std::vector<double>(static_cast<size_t>(X.cols()), t));
        };
        ctx.drift_vjp = [&net](const Mat& X, double t, const Mat& A) {
            DenoiserNet::Cache cache;
            net.raw_batch(X, std::vector<double>(static_cast<size_t>(X.cols()), t), nullptr,
                          &cache);
            Mlp::Grads discard;
            Mat dU = net.mlp.backward(cache.mlp_cache, A, discard);
            return Mat(dU.topRows(X.rows()));
        };
        double am_sigma = cfg.am_sigma;
        ctx.sigma = [am_sigma](double t) { return am_sigma * (1.0 - t); };
        ctx.control = &control;
        ctx.control_emb = cemb;
        ctx.terminal_cost = &constraint;

        AdamState opt = AdamState::make(control, cfg.am_lr);
        adjoint::FinetuneReport rep =
            adjoint::am_finetune(ctx, opt, cfg.am_outer, cfg.am_batch, derive_seed(cfg.seed, "finetune"));
        if (!cfg.loss_log_path.empty()) {
            std::ofstream log(cfg.loss_log_path, std::ios::trunc);
            log << "step,loss\n";
            for (size_t i = 0; i < rep.losses.size(); ++i)
                if (i % static_cast<size_t>(cfg.log_every) == 0 || i + 1 == rep.losses.size())
                    log << i << ',' << format_double(rep.losses[i]) << '\n';
        }
        NetRecord crec;
        crec.role = "control";
        crec.head = HeadKind::FmEndpoint;
        crec.data_dim = d;
        crec.emb = cemb;
        crec.net = control;
        save_records(cfg.ckpt_path, {record_from_denoiser(net, "backbone"), crec});
        return;
    }

    bool flow = cfg.mode == "mbmpp-fm";
    Trainer trainer;
    trainer.model.backbone = &net;
    trainer.model.constraint = &constraint;
    trainer.model.gamma = build_gamma(cfg, flow);
    trainer.dist = build_train_dist(cfg, flow);
    trainer.flow_matching = flow;
    trainer.weighting = cfg.loss_weighting == "eps" ? DsmWeighting::EpsPrediction
                                                    : DsmWeighting::Unit;

    if (cfg.mode == "mbm") {
        check(net.head == HeadKind::DmDenoiser, "finetune: mbm expects a diffusion backbone");
        trainer.model.mode = TrainMode::Mbm;
        net.set_frozen(false);
        trainer.opt_backbone = AdamState::make(net.mlp, cfg.lr);
        run_training(trainer, data, cfg.steps, cfg.batch_size, cfg.log_every, cfg.loss_log_path,
                     train_rng);
        save_records(cfg.ckpt_path, {record_from_denoiser(net, "backbone")});
        return;
    }

    if (cfg.mode == "mbmpp-dm" || cfg.mode == "mbmpp-fm") {
        check((cfg.mode == "mbmpp-dm") == (net.head == HeadKind::DmDenoiser),
              "finetune: mode does not match checkpoint head");
        net.set_frozen(true);
        Rng init_rng = derive_rng(cfg.seed, "init");
        BridgeNet bridge = BridgeNet::make(d, net.embed_dim(), cfg.bridge_width, cfg.bridge_depth,
                                           init_rng);
        trainer.model.bridge = &bridge;
        trainer.model.mode = flow ? TrainMode::MbmppFm : TrainMode::MbmppDm;
        trainer.opt_bridge = AdamState::make(bridge.mlp, cfg.lr);
        run_training(trainer, data, cfg.steps, cfg.batch_size, cfg.log_every, cfg.loss_log_path,
                     train_rng);
        NetRecord brec;
        brec.role = "bridge";
        brec.head = net.head;
        brec.data_dim = d;
        brec.net = bridge.mlp;
        save_records(cfg.ckpt_path, {record_from_denoiser(net, "backbone"), brec});
        return;
    }
    throw ConfigError("finetune: unknown mode: " + cfg.mode);
}

MethodContext build_method_context(const RunConfig& cfg) {
    MethodContext mc;
    mc.method = method_from_string(cfg.method);
    mc.flow = method_is_flow(mc.method);
    mc.records = load_records(cfg.ckpt_path);
    check(mc.records[0].role == "backbone", "checkpoint: first record must be the backbone");
    mc.backbone = denoiser_from_record(mc.records[0]);
    mc.data_dim = mc.backbone.data_dim;
    mc.constraint = build_constraint(cfg);
    mc.gamma = build_gamma(cfg, mc.flow);
    return mc;
}

namespace {

// Wires the effective denoiser/endpoint; `mc` must already rest at its final
// address (lambdas capture pointers into it).
void wire_method(MethodContext& mc, const RunConfig& cfg) {
    DenoiserNet* net = &mc.backbone;
    DenoiseFn base = [net](const Mat& X, double level) { return net->denoise_batch(X, level); };

    switch (mc.method) {
        case Method::DmBaseline:
        case Method::FmBaseline:
            mc.effective = base;
            return;
        case Method::DmMpgd:
            mc.effective = make_dm_effective(mc.method, base, &mc.constraint, nullptr,
                                             cfg.guidance_rho);
            return;
        case Method::FmTfGuided:
            mc.effective = make_fm_effective(mc.method, base, &mc.constraint, nullptr,
                                             cfg.guidance_rho);
            return;
        case Method::DmMbm:
            mc.effective = make_dm_effective(mc.method, base, &mc.constraint, &mc.gamma, 0.0);
            return;
        case Method::DmMbmpp:
        case Method::FmMbmpp: {
            check(mc.records.size() >= 2 && mc.records[1].role == "bridge",
                  "checkpoint: mbmpp method needs a bridge record");
            mc.bridge.mlp = mc.records[1].net;
            mc.has_bridge = true;
            mc.backbone.set_frozen(true);
            mc.bridged.backbone = &mc.backbone;
            mc.bridged.bridge = &mc.bridge;
            mc.bridged.constraint = &mc.constraint;
            mc.bridged.gamma = mc.gamma;
            mc.bridged.mode = mc.flow ? TrainMode::MbmppFm : TrainMode::MbmppDm;
            const BridgedModel* bm = &mc.bridged;
            mc.effective = [bm](const Mat& X, double level) {
                return bridged_denoise_batch(*bm, X, level);
            };
            return;
        }
        case Method::Am: {
            check(mc.records.size() >= 2 && mc.records[1].role == "control",
                  "checkpoint: am method needs a control record");
            mc.control = mc.records[1].net;
            mc.has_control = true;
            mc.control_emb = mc.records[1].emb;
            mc.control_ctx.data_dim = mc.data_dim;
            mc.control_ctx.m_steps = cfg.fm_steps;
            mc.control_ctx.drift = [net](const Mat& X, double t) {
                return net->raw_batch(X, std::vector<double>(static_cast<size_t>(X.cols()), t));
            };
            double am_sigma = cfg.am_sigma;
            mc.control_ctx.sigma = [am_sigma](double t) { return am_sigma * (1.0 - t); };
            mc.control_ctx.control = &mc.control;
            mc.control_ctx.control_emb = mc.control_emb;
            mc.control_ctx.terminal_cost = &mc.constraint;
            return;
        }
    }
}

}  // namespace

void cmd_sample(const RunConfig& cfg) {
    auto mc = std::make_unique<MethodContext>(build_method_context(cfg));
    wire_method(*mc, cfg);

    SamplerSpec spec;
    spec.method = mc->method;
    spec.n_steps = cfg.n_steps;
    spec.fm_steps = cfg.fm_steps;
    spec.s_churn = cfg.s_churn;
    spec.guidance_rho = cfg.guidance_rho;
    spec.seed = derive_seed(cfg.seed, "sample");

    Mat samples;
    if (mc->method == Method::Am) {
        samples = adjoint::am_sample(mc->control_ctx, cfg.n_samples, spec.seed);
    } else if (mc->flow) {
        samples = fm_sample(spec, mc->effective, mc->data_dim, cfg.n_samples);
    } else {
        NoiseSchedule sched(cfg.sigma_min, cfg.sigma_max, cfg.n_steps);
        samples = dm_sample(spec, mc->effective, sched, mc->data_dim, cfg.n_samples);
    }
    write_samples_csv(cfg.samples_path, samples);
}

metrics::MetricsReport cmd_eval(const RunConfig& cfg) {
    check(cfg.task == "balls", "eval supports task=balls");
    check(!cfg.reference_path.empty(), "eval: reference_path required");
    Mat samples = read_samples_csv(cfg.samples_path);
    BallLayout layout{cfg.n_balls, cfg.n_timesteps};
    check(samples.rows() == layout.dim(), "eval: samples do not match scenario layout");

    std::vector<ballsim::Scenario> gen;
    for (Eigen::Index c = 0; c < samples.cols(); ++c)
        gen.push_back(ballsim::Scenario::unflatten(samples.col(c), cfg.n_balls, cfg.n_timesteps,
                                                   cfg.ball_radius, cfg.box_halfwidth));
    auto ref = ballsim::read_dataset_csv(cfg.reference_path, cfg.ball_radius, cfg.box_halfwidth);

    metrics::MetricsReport rep;
    rep.method = cfg.method;
    rep.n_samples = static_cast<int>(samples.cols());
    rep.seed = cfg.seed;
    auto rates = metrics::infraction_rates(gen, cfg.ball_radius, cfg.box_halfwidth,
                                           cfg.eval_tol * cfg.box_halfwidth);
    rep.collision_rate = rates.collision;
    rep.boundary_rate = rates.boundary;
    rep.hdh = metrics::directed_hausdorff(metrics::position_cloud(gen),
                                          metrics::position_cloud(ref));

    // Model-bound surrogate likelihood on a fixed noise stream; skipped when
    // no checkpoint is available or for the control-based method.
    std::ifstream ck(cfg.ckpt_path, std::ios::binary);
    if (ck && method_from_string(cfg.method) != Method::Am) {
        ck.close();
        auto mc = std::make_unique<MethodContext>(build_method_context(cfg));
        wire_method(*mc, cfg);
        Mat ref_mat = ballsim::dataset_matrix(ref);
        int rows = std::min<int>(cfg.relbo_rows, static_cast<int>(ref_mat.cols()));
        Mat x0 = ref_mat.leftCols(rows);
        std::uint64_t stream_seed = derive_seed(cfg.seed, "relbo-stream");
        if (mc->flow) {
            rep.relbo = metrics::relbo_fm_mean(mc->effective, x0, cfg.relbo_k, stream_seed,
                                               cfg.logitnormal_mu, cfg.logitnormal_sd);
        } else {
            rep.relbo = metrics::relbo_mean(mc->effective, x0, cfg.relbo_k, stream_seed,
                                            cfg.sigma_min, cfg.sigma_max);
        }
    }

    // Append when the metrics file already exists so multi-method tables
    // accumulate; the row for an existing method is replaced.
    std::vector<metrics::MetricsReport> all;
    {
        std::ifstream existing(cfg.metrics_path);
        if (existing) {
            existing.close();
            all = metrics::read_metrics_csv(cfg.metrics_path);
        }
    }
    bool replaced = false;
    for (auto& r : all) {
        if (r.method == rep.method) {
            r = rep;
            replaced = true;
        }
    }
    if (!replaced) all.push_back(rep);
    metrics::write_metrics_csv(cfg.metrics_path, all);
    return rep;
}

namespace {

struct SvgWriter {
    std::ostringstream out;
    void open(double w, double h) {
        out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
            << "\" viewBox=\"0 0 " << w << ' ' << h << "\">\n";
        out << "<rect width=\"" << w << "\" height=\"" << h << "\" fill=\"white\"/>\n";
    }
    void close() { out << "</svg>\n"; }
    void line(double x1, double y1, double x2, double y2, const std::string& color,
              double width = 1.0) {
        out << "<line x1=\"" << x1 << "\" y1=\"" << y1 << "\" x2=\"" << x2 << "\" y2=\"" << y2
            << "\" stroke=\"" << color << "\" stroke-width=\"" << width << "\"/>\n";
    }
    void circle(double x, double y, double r, const std::string& color,
                const std::string& cls = "") {
        out << "<circle";
        if (!cls.empty()) out << " class=\"" << cls << "\"";
        out << " cx=\"" << x << "\" cy=\"" << y << "\" r=\"" << r << "\" fill=\"" << color
            << "\"/>\n";
    }
    void text(double x, double y, const std::string& s, int size = 11) {
        out << "<text x=\"" << x << "\" y=\"" << y << "\" font-size=\"" << size
            << "\" font-family=\"sans-serif\">" << s << "</text>\n";
    }
    void polyline(const std::vector<std::pair<double, double>>& pts, const std::string& color) {
        out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1\" points=\"";
        for (const auto& [x, y] : pts) out << x << ',' << y << ' ';
        out << "\"/>\n";
    }
    void rect(double x, double y, double w, double h, const std::string& stroke) {
        out << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << w << "\" height=\"" << h
            << "\" fill=\"none\" stroke=\"" << stroke << "\"/>\n";
    }
};

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

}  // namespace

void cmd_plot(const RunConfig& cfg) {
    auto reports = metrics::read_metrics_csv(cfg.metrics_path);
    check(!reports.empty(), "plot: metrics file has no rows");

    SvgWriter svg;
    const double W = 900, H = 460;
    svg.open(W, H);

    // Scatter: infraction rate (%) vs relbo, one labelled marker per method.
    const double px0 = 60, px1 = 430, py0 = 40, py1 = 400;
    double xmax = 1e-9, ymin = 0.0, ymax = -1e30;
    for (const auto& r : reports) {
        xmax = std::max(xmax, r.collision_rate * 100.0);
        if (std::isfinite(r.relbo)) {
            ymin = std::min(ymin, r.relbo);
            ymax = std::max(ymax, r.relbo);
        }
    }
    if (ymax <= ymin) ymax = ymin + 1.0;
    xmax *= 1.15;
    double yspan = ymax - ymin;
    ymin -= 0.1 * yspan;
    ymax += 0.1 * yspan;
    auto sx = [&](double v) { return px0 + (v / xmax) * (px1 - px0); };
    auto sy = [&](double v) { return py1 - (v - ymin) / (ymax - ymin) * (py1 - py0); };
    svg.line(px0, py1, px1, py1, "black");
    svg.line(px0, py0, px0, py1, "black");
    svg.text(px0 + 90, py1 + 30, "collision infraction rate (%)");
    svg.text(10, py0 - 14, "relative ELBO surrogate");
    int ci = 0;
    for (const auto& r : reports) {
        double y = std::isfinite(r.relbo) ? r.relbo : ymin;
        svg.circle(sx(r.collision_rate * 100.0), sy(y), 5,
                   kPalette[ci % 8], "method-marker");
        svg.text(sx(r.collision_rate * 100.0) + 7, sy(y) + 4, r.method);
        ++ci;
    }

    // Trajectory panels from the samples file, when present and ball-shaped.
    std::ifstream sf(cfg.samples_path);
    if (sf) {
        sf.close();
        Mat samples = read_samples_csv(cfg.samples_path);
        BallLayout layout{cfg.n_balls, cfg.n_timesteps};
        if (samples.rows() == layout.dim()) {
            int n_panels = std::min<int>(2, static_cast<int>(samples.cols()));
            for (int p = 0; p < n_panels; ++p) {
                double bx = 480 + p * 210, by = 60, bs = 180;
                svg.rect(bx, by, bs, bs, "black");
                svg.text(bx, by - 8, "sample scenario " + std::to_string(p));
                auto sc = ballsim::Scenario::unflatten(samples.col(p), cfg.n_balls,
                                                       cfg.n_timesteps, cfg.ball_radius,
                                                       cfg.box_halfwidth);
                double L = cfg.box_halfwidth;
                auto mx = [&](double v) { return bx + (v + L) / (2 * L) * bs; };
                auto my = [&](double v) { return by + (L - v) / (2 * L) * bs; };
                for (int b = 0; b < sc.n_balls; ++b) {
                    std::vector<std::pair<double, double>> pts;
                    for (int t = 0; t < sc.n_steps; ++t)
                        pts.emplace_back(mx(sc.at(t, b).px), my(sc.at(t, b).py));
                    svg.polyline(pts, kPalette[b % 8]);
                    svg.circle(pts.back().first, pts.back().second,
                               cfg.ball_radius / (2 * L) * bs, kPalette[b % 8]);
                }
            }
        }
    }

    svg.close();
    std::ofstream os(cfg.plot_path, std::ios::trunc);
    check(static_cast<bool>(os), "cannot open for writing: " + cfg.plot_path);
    os << svg.out.str();
    check(static_cast<bool>(os), "write failed: " + cfg.plot_path);
}

}  // namespace pipeline
}  // namespace bridgegen
