#include "lplab/cli_runner.hpp"

#include <CLI11.hpp>

#include <cstdio>

int main(int argc, char** argv) {
    CLI::App app{"Layer potential laboratory for periodic elliptic operators"};
    app.fallthrough();
    std::string config_path, out_dir = ".";
    std::uint64_t seed = 0;
    int jobs = 0;
    bool strict = false;
    app.add_option("--config", config_path, "experiment config (# lplab-config v1)")->required()->check(CLI::ExistingFile);
    app.add_option("--out-dir", out_dir, "directory for CSV and summary files");
    auto* seed_opt = app.add_option("--seed", seed, "override the config seed");
    app.add_option("--jobs", jobs, "worker threads for sweeps")->check(CLI::PositiveNumber);
    app.add_flag("--strict", strict, "treat solver warnings as errors");
    const char* subs[] = {"cell",         "kernel-rates", "solve", "rellich-sweep", "continuation",
                          "q-identities", "green",        "const-kernel", "traces"};
    for (const char* s : subs) app.add_subcommand(s, std::string("run ") + s);
    app.require_subcommand(0, 1);
    CLI11_PARSE(app, argc, argv);

    try {
        lplab::Config cfg = lplab::Config::load(config_path);
        const auto chosen = app.get_subcommands();
        if (!chosen.empty() && chosen.front()->get_name() != cfg.subcommand())
            throw lplab::ConfigError("/subcommand", "config is for '" + cfg.subcommand() + "', not '" +
                                                        chosen.front()->get_name() + "'");
        lplab::RunOptions opt;
        opt.out_dir = out_dir;
        if (*seed_opt) opt.seed = seed;
        opt.jobs = jobs;
        opt.strict = strict;
        return lplab::run(std::move(cfg), opt).exit_code;
    } catch (const lplab::ConfigError& e) {
        std::fprintf(stderr, "usage error: %s\n", e.what());
        return 2;
    } catch (const lplab::InvalidArgument& e) {
        std::fprintf(stderr, "usage error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
}
