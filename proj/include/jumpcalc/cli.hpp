#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "config.hpp"
#include "hedging.hpp"
#include "library.hpp"
#include "report.hpp"
#include "representation.hpp"
#include "verify.hpp"

namespace jumpcalc {

enum ExitCode : int
{
    exit_pass = 0,
    exit_identity_failure = 1,
    exit_usage = 2,
};

namespace detail {

inline Json provenance(RunConfig const& cfg)
{
    Json j;
    j["subcommand"] = cfg.subcommand;
    j["seed"] = cfg.seed;
    j["config_hash"] = hex64(cfg.config_hash);
    j["paths"] = cfg.paths;
    j["inner"] = cfg.inner;
    return j;
}

inline ModelSpec require_model(RunConfig const& cfg)
{
    if (cfg.model_path.empty())
        throw ConfigError("config '" + cfg.config_path.string() + "' names no model file");
    return load_model(cfg.model_path);
}

inline Functional require_claim(RunConfig const& cfg, ModelSpec const& model)
{
    try {
        return functional_library(cfg.claim, cfg.claim_params, model.intensity, &model.market);
    } catch (std::invalid_argument const& e) {
        throw ConfigError(e.what());
    }
}

inline void prepare_out(RunConfig const& cfg)
{
    std::error_code ec;
    std::filesystem::create_directories(cfg.out, ec);
    if (ec)
        throw ConfigError("cannot create output directory '" + cfg.out.string() + "': " + ec.message());
}

} // namespace detail

/// Dumps N sampled paths to paths.csv.
inline int run_simulate(RunConfig const& cfg)
{
    validate(cfg);
    auto model = detail::require_model(cfg);
    detail::prepare_out(cfg);
    SeedStream stream{cfg.seed, 0};
    std::vector<PointConfiguration> paths(cfg.paths);
    parallel_for(cfg.paths, cfg.workers,
                 [&](std::size_t i) { paths[i] = sample_path(model.intensity, stream.child(std::uint64_t{i})); });
    CsvWriter w(cfg.out / "paths.csv", "path_id,time,asset,jump");
    std::size_t atoms = 0;
    for (std::size_t i = 0; i < paths.size(); ++i) {
        for (auto const& a : paths[i].atoms())
            w.row(i, a.time, a.asset, a.jump);
        atoms += paths[i].size();
    }
    auto j = detail::provenance(cfg);
    j["atoms"] = atoms;
    j["mean_count"] = json_number(static_cast<double>(atoms) / static_cast<double>(cfg.paths));
    j["expected_count"] = json_number(model.intensity.total_mass());
    Json lost = Json::array();
    for (double d : model.discarded_second_moment)
        lost.push_back(json_number(d));
    j["discarded_second_moment"] = std::move(lost);
    write_json(cfg.out / "summary.json", j);
    return exit_pass;
}

/// Clark-Ocone decomposition of the configured claim; with a t_grid also
/// the martingale check.
inline int run_clark_ocone(RunConfig const& cfg)
{
    validate(cfg);
    auto model = detail::require_model(cfg);
    auto f = detail::require_claim(cfg, model);
    if (cfg.paths < 2)
        throw ConfigError("clark-ocone needs at least two paths");
    detail::prepare_out(cfg);
    SeedStream stream{cfg.seed, 0};
    auto rep = clark_ocone_decompose(f, model.intensity, cfg.paths, cfg.inner, stream, {cfg.workers, {}});
    write_decomposition_csv(cfg.out / "decomposition.csv", rep);
    auto j = detail::provenance(cfg);
    j.update(decomposition_json(rep));
    if (!cfg.t_grid.empty()) {
        auto grid = cfg.t_grid;
        std::sort(grid.begin(), grid.end());
        auto m = martingale_representation_check(f, model.intensity, grid, cfg.paths, cfg.inner,
                                                 stream.child(stream_tags::conditional), {cfg.workers});
        write_martingale_csv(cfg.out / "martingale.csv", m);
        j["martingale_integrand_from_oracle"] = m.integrand_from_oracle;
    }
    write_json(cfg.out / "summary.json", j);
    return exit_pass;
}

/// Minimal-variance hedge of the configured claim in the configured market.
inline int run_hedge(RunConfig const& cfg)
{
    validate(cfg);
    auto model = detail::require_model(cfg);
    auto f = detail::require_claim(cfg, model);
    if (cfg.paths < 2)
        throw ConfigError("hedge needs at least two paths");
    detail::prepare_out(cfg);
    SeedStream stream{cfg.seed, 0};
    HedgeOptions ho;
    ho.workers = cfg.workers;
    ho.panel = cfg.panel;
    if (cfg.strategy == "exact") {
        bool square = cfg.claim == "terminal_payoff"
                   && (!cfg.claim_params.count("payoff") || cfg.claim_params.at("payoff") == "square")
                   && !cfg.claim_params.count("asset");
        if (!square || !model.market.deterministic())
            throw ConfigError("strategy 'exact' is available for terminal_payoff square in constant-kappa markets");
        ho.strategy = terminal_square_hedge(model.market);
    }
    auto rep = hedge_error(f, model.market, cfg.paths, cfg.inner, stream, ho);
    write_hedge_csv(cfg.out / "hedge.csv", rep);

    std::vector<double> grid = cfg.t_grid;
    double const T = model.intensity.horizon();
    if (grid.empty())
        grid = {0.25 * T, 0.5 * T, 0.75 * T};
    std::sort(grid.begin(), grid.end());
    std::size_t const check_paths = std::min<std::size_t>(cfg.paths, 100);
    auto ph = perfect_hedge_check(f, model.market, grid, check_paths, cfg.inner,
                                  stream.child(stream_tags::proportionality), {cfg.workers, cfg.tolerance, 0.95});

    auto j = detail::provenance(cfg);
    j["strategy"] = cfg.strategy;
    j.update(hedge_json(rep));
    j["perfect_hedge"] = {{"verdict", ph.perfect ? "PASS" : "FAIL"},
                          {"fraction_passing", json_number(ph.fraction_passing)},
                          {"points", ph.points},
                          {"violations", ph.violations},
                          {"threshold", ph.threshold},
                          {"paths", check_paths}};
    write_json(cfg.out / "summary.json", j);
    return exit_pass;
}

/// Runs the identity suite; exit 0 iff every check passes.
inline int run_verify(RunConfig const& cfg)
{
    validate(cfg);
    if (cfg.paths < 8)
        throw ConfigError("verify needs at least 8 paths");
    detail::prepare_out(cfg);
    VerifySettings st{cfg.paths, cfg.inner, cfg.seed, cfg.workers, cfg.tolerance};
    auto checks = run_verify_suite(st);
    CsvWriter w(cfg.out / "identities.csv", kIdentityHeader);
    Json list = Json::array();
    std::size_t failed = 0;
    for (auto const& c : checks) {
        write_identity_row(w, c.row);
        Json e{{"identity", c.row.identity}, {"kind", c.exact ? "exact" : "statistical"}, {"pass", c.pass}};
        if (c.exact) {
            e["max_error"] = json_number(c.max_error);
            e["bound"] = json_number(c.bound);
        } else {
            e["std_gap"] = json_number(c.row.std_gap);
        }
        if (!c.detail.empty())
            e["detail"] = c.detail;
        list.push_back(std::move(e));
        if (!c.pass)
            ++failed;
    }
    auto j = detail::provenance(cfg);
    j["tolerance"] = cfg.tolerance;
    j["checks"] = std::move(list);
    j["failed"] = failed;
    j["pass"] = failed == 0;
    write_json(cfg.out / "verdict.json", j);
    return failed == 0 ? exit_pass : exit_identity_failure;
}

inline int run_subcommand(RunConfig const& cfg)
{
    if (cfg.subcommand == "simulate")
        return run_simulate(cfg);
    if (cfg.subcommand == "clark-ocone")
        return run_clark_ocone(cfg);
    if (cfg.subcommand == "hedge")
        return run_hedge(cfg);
    if (cfg.subcommand == "verify")
        return run_verify(cfg);
    throw ConfigError("unknown subcommand '" + cfg.subcommand + "'");
}

} // namespace jumpcalc
