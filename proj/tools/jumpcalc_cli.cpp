#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "jumpcalc/cli.hpp"

namespace {

struct Overrides
{
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> paths;
    std::optional<std::size_t> inner;
    std::optional<unsigned> workers;
    std::optional<std::string> out;
    std::optional<double> tolerance;
};

void add_flags(CLI::App* cmd, Overrides& o, bool config_required)
{
    auto* c = cmd->add_option("--config", o.config, "run config file (INI)");
    if (config_required)
        c->required();
    cmd->add_option("--seed", o.seed, "master seed");
    cmd->add_option("--paths", o.paths, "outer paths N");
    cmd->add_option("--inner", o.inner, "inner samples M");
    cmd->add_option("--workers", o.workers, "worker threads");
    cmd->add_option("--out", o.out, "output directory");
    cmd->add_option("--tolerance", o.tolerance, "tolerance multiplier in standard errors");
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Malliavin calculus on marked Poisson processes: Clark-Ocone representation and quadratic hedging"};
    app.require_subcommand(1);
    Overrides o;
    std::string chosen;
    for (auto [name, help, needs_config] :
         {std::tuple{"simulate", "sample paths and dump them as CSV", true},
          std::tuple{"clark-ocone", "Clark-Ocone decomposition of a claim", true},
          std::tuple{"hedge", "minimal-variance hedge of a claim", true},
          std::tuple{"verify", "run the identity suite", false}}) {
        auto* cmd = app.add_subcommand(name, help);
        add_flags(cmd, o, needs_config);
        cmd->callback([&chosen, n = std::string(name)] { chosen = n; });
    }
    try {
        app.parse(argc, argv);
    } catch (CLI::ParseError const& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : jumpcalc::exit_usage;
    }

    try {
        jumpcalc::RunConfig cfg;
        if (!o.config.empty())
            cfg = jumpcalc::load_run_config(o.config);
        else
            cfg.out = "out/verify";
        cfg.subcommand = chosen;
        if (o.seed)
            cfg.seed = *o.seed;
        if (o.paths)
            cfg.paths = *o.paths;
        if (o.inner)
            cfg.inner = *o.inner;
        if (o.workers)
            cfg.workers = *o.workers;
        if (o.out)
            cfg.out = *o.out;
        if (o.tolerance)
            cfg.tolerance = *o.tolerance;
        if (chosen == "verify" && o.config.empty()) {
            if (!o.paths)
                cfg.paths = jumpcalc::VerifySettings{}.paths;
            if (!o.inner)
                cfg.inner = jumpcalc::VerifySettings{}.inner;
        }
        int rc = jumpcalc::run_subcommand(cfg);
        if (rc == jumpcalc::exit_identity_failure)
            std::cerr << "identity failures; see " << (cfg.out / "verdict.json").string() << '\n';
        return rc;
    } catch (jumpcalc::ConfigError const& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return jumpcalc::exit_usage;
    } catch (std::exception const& e) {
        std::cerr << "error: " << e.what() << '\n';
        return jumpcalc::exit_identity_failure;
    }
}
