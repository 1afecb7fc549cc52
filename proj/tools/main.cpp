#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include "bridgegen/pipeline.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "key=value config file");
    cmd->add_option("--set", args.overrides, "override config keys (key=value)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"constrained generative modeling toolkit"};
    app.require_subcommand(1);

    CommonArgs gen_args, train_args, finetune_args, sample_args, eval_args, plot_args;

    auto* gen = app.add_subcommand("gen-data", "generate a training dataset");
    add_common(gen, gen_args);

    auto* train = app.add_subcommand("train", "pretrain a base model");
    add_common(train, train_args);

    auto* finetune = app.add_subcommand("finetune", "constraint-aware fine-tuning");
    add_common(finetune, finetune_args);
    std::string ft_method;
    finetune->add_option("--method", ft_method, "method (dm-mbm, dm-mbmpp, fm-mbmpp, am)");

    auto* sample = app.add_subcommand("sample", "draw samples from a checkpoint");
    add_common(sample, sample_args);
    std::string s_method, s_out;
    int s_n = -1;
    long long s_seed = -1;
    sample->add_option("--method", s_method, "sampling method");
    sample->add_option("--n", s_n, "number of samples");
    sample->add_option("--seed", s_seed, "master seed");
    sample->add_option("--out", s_out, "samples csv path");

    auto* eval = app.add_subcommand("eval", "evaluate samples against a reference dataset");
    add_common(eval, eval_args);
    std::string e_samples, e_reference, e_out;
    eval->add_option("--samples", e_samples, "samples csv");
    eval->add_option("--reference", e_reference, "reference dataset csv");
    eval->add_option("--out", e_out, "metrics csv path");

    auto* plot = app.add_subcommand("plot", "render the metrics scatter and sample panels");
    add_common(plot, plot_args);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    using namespace bridgegen;
    try {
        if (gen->parsed()) {
            pipeline::cmd_gen_data(load_config(gen_args.config_path, gen_args.overrides));
        } else if (train->parsed()) {
            pipeline::cmd_train(load_config(train_args.config_path, train_args.overrides));
        } else if (finetune->parsed()) {
            auto ov = finetune_args.overrides;
            if (!ft_method.empty()) {
                ov.push_back("method=" + ft_method);
                if (ft_method == "dm-mbm") ov.push_back("mode=mbm");
                else if (ft_method == "dm-mbmpp") ov.push_back("mode=mbmpp-dm");
                else if (ft_method == "fm-mbmpp") ov.push_back("mode=mbmpp-fm");
                else if (ft_method == "am") ov.push_back("mode=am");
                else throw ConfigError("finetune: unknown method: " + ft_method);
            }
            pipeline::cmd_finetune(load_config(finetune_args.config_path, ov));
        } else if (sample->parsed()) {
            auto ov = sample_args.overrides;
            if (!s_method.empty()) ov.push_back("method=" + s_method);
            if (s_n >= 0) ov.push_back("n_samples=" + std::to_string(s_n));
            if (s_seed >= 0) ov.push_back("seed=" + std::to_string(s_seed));
            if (!s_out.empty()) ov.push_back("samples_path=" + s_out);
            pipeline::cmd_sample(load_config(sample_args.config_path, ov));
        } else if (eval->parsed()) {
            auto ov = eval_args.overrides;
            if (!e_samples.empty()) ov.push_back("samples_path=" + e_samples);
            if (!e_reference.empty()) ov.push_back("reference_path=" + e_reference);
            if (!e_out.empty()) ov.push_back("metrics_path=" + e_out);
            auto rep = pipeline::cmd_eval(load_config(eval_args.config_path, ov));
            std::printf("%s: collision=%.4f boundary=%.4f hdh=%.4f relbo=%.4f n=%d\n",
                        rep.method.c_str(), rep.collision_rate, rep.boundary_rate, rep.hdh,
                        rep.relbo, rep.n_samples);
        } else if (plot->parsed()) {
            pipeline::cmd_plot(load_config(plot_args.config_path, plot_args.overrides));
        }
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const DivergenceError& e) {
        std::fprintf(stderr, "numeric divergence: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
