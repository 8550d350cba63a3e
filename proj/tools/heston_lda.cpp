// Command-line front end: one subcommand per experiment.
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "hlda/cli_runner.hpp"
#include "hlda/errors.hpp"

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read config " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::uint64_t parse_seed(const std::string& text, const char* origin) {
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
        v = std::stoull(text, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != text.size() || text.front() == '-')
        throw hlda::ValidationError({std::string(origin) + ": not a non-negative integer: " + text});
    return v;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Heston large-deviation toolkit"};
    app.set_version_flag("--version", hlda::version_string());
    app.require_subcommand(1);

    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    std::optional<unsigned> threads;

    for (const char* name : {"rate-fn", "mgf-check", "classify", "ldp-verify", "ergodic-check", "martingale-check",
                             "stopping-time"}) {
        auto* sub = app.add_subcommand(name, std::string("run the ") + name + " experiment");
        sub->add_option("--config", config_path, "configuration file")->required()->check(CLI::ExistingFile);
        sub->add_option("--seed", seed, "overrides the config seed (HESTON_LDA_SEED overrides both)");
        sub->add_option("--out", out_dir, "output directory");
        sub->add_option("--threads", threads, "worker threads, 0 = all cores");
    }

    CLI11_PARSE(app, argc, argv);
    const std::string command = app.get_subcommands().front()->get_name();

    try {
        hlda::ExperimentConfig cfg = hlda::parse_config(read_file(config_path));
        if (hlda::to_string(cfg.experiment) != command)
            throw hlda::ValidationError({std::string("config describes '") + hlda::to_string(cfg.experiment) +
                                         "' but the subcommand is '" + command + "'"});
        // Precedence: environment > --seed > config.
        if (seed) cfg.seed = *seed;
        if (const char* env = std::getenv("HESTON_LDA_SEED")) cfg.seed = parse_seed(env, "HESTON_LDA_SEED");
        if (out_dir) cfg.output_dir = *out_dir;
        if (threads) cfg.threads = *threads;

        const hlda::RunResult res = hlda::run_experiment(cfg);
        for (const auto& f : res.files) std::cout << f.string() << "\n";
        return 0;
    } catch (const hlda::ValidationError& e) {
        std::cerr << "error: invalid configuration\n";
        for (const auto& p : e.problems()) std::cerr << "  " << p << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
