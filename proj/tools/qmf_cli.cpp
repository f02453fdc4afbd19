// Command line front end over the C API.
#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "qmf/qmf.h"

namespace {

int fail(qmf_status s) {
    std::fprintf(stderr, "qmf: %s error: %s\n", qmf_status_name(s), qmf_last_error());
    return qmf_exit_code(s);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"qmf - many-body mean-field numerics"};
    app.require_subcommand(1);
    app.set_version_flag("--version", qmf_version());

    std::string config, out = ".";
    uint64_t seed = 0;
    int threads = 1;
    bool print_config = false;

    for (size_t i = 0; i < qmf_experiment_count(); ++i) {
        std::string name = qmf_experiment_name(i);
        auto* sub = app.add_subcommand(name, "run the '" + name + "' experiment");
        sub->add_option("--config", config, "JSON configuration (defaults when omitted)");
        sub->add_option("--out", out, "output directory")->capture_default_str();
        sub->add_option("--seed", seed, "RNG seed for randomized batteries")->capture_default_str();
        sub->add_option("--threads", threads, "worker threads for sweeps")->check(CLI::PositiveNumber);
        sub->add_flag("--print-config", print_config, "print the resolved config and exit");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    const std::string name = app.get_subcommands().front()->get_name();
    qmf_config* cfg = nullptr;
    qmf_status s = config.empty() ? qmf_config_default(name.c_str(), &cfg) : qmf_config_load(name.c_str(), config.c_str(), &cfg);
    if (s != QMF_OK) return fail(s);
    if (print_config) {
        std::printf("%s\n", qmf_config_json(cfg));
        qmf_config_free(cfg);
        return 0;
    }
    qmf_result* res = nullptr;
    s = qmf_run(cfg, out.c_str(), seed, threads, &res);
    qmf_config_free(cfg);
    if (s != QMF_OK) return fail(s);
    std::printf("%s\n", qmf_result_json(res));
    qmf_result_free(res);
    return 0;
}
