// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/core.h>

#include "jumpcalc/jumpcalc.hpp"

using namespace jumpcalc;
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kSeed = 20261016;

struct Outcome
{
    bool pass = false;
    std::string detail;
};

IntensityModel unit_model() { return IntensityModel::homogeneous(1.0, 1.0, JumpLaw({{1.0, 1.0}})); }
IntensityModel pm1_model() { return IntensityModel::homogeneous(1.0, 1.0, JumpLaw({{1.0, 0.5}, {-1.0, 0.5}})); }

CountWindow whole() { return {{0.0, 1.0}, kAllAssets}; }

SeedStream stream_for(int criterion) { return {kSeed, static_cast<std::uint64_t>(criterion)}; }

std::string slurp(fs::path const& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Outcome c1()
{
    auto m = unit_model();
    auto f = count_polynomial(m, whole(), {0.0, 0.0, 1.0});
    auto h = oracle_clark_integrand(f);
    auto st = stream_for(1);
    double worst = 0.0;
    for (std::size_t i = 0; i < 10000; ++i) {
        auto mu = sample_path(m, st.child(std::uint64_t{i}));
        worst = std::max(worst, std::abs(f(mu) - 2.0 - skorohod_pathwise(h, mu, m)));
    }
    return {worst < 1e-10, fmt::format("max |f - 2 - delta(h)| = {:.3g} over 1e4 paths (bound 1e-10)", worst)};
}

Outcome c2()
{
    auto m = unit_model();
    TimeWindow B{0.2, 0.7};
    auto h = indicator_integrand(B);
    auto st = stream_for(2);
    double worst = 0.0;
    for (std::size_t i = 0; i < 10000; ++i) {
        auto mu = sample_path(m, st.child(std::uint64_t{i}));
        double exact = static_cast<double>(count(mu, B)) - m.measure(B);
        worst = std::max(worst, std::abs(skorohod_pathwise(h, mu, m) - exact));
    }
    return {worst < 1e-12, fmt::format("max |delta(1_B) - (mu(B) - lambda(B))| = {:.3g} over 1e4 paths (bound 1e-12)", worst)};
}

Outcome c3()
{
    auto m = unit_model();
    auto quad = oracle_clark_integrand(count_polynomial(m, whole(), {0.0, 0.0, 1.0}));
    PredictableIntegrand capped{"capped_count",
                                [](PointConfiguration const& past, double s, int, double) {
                                    return std::min(static_cast<double>(past.count_before(s)), 5.0);
                                },
                                {}};
    auto ind = indicator_integrand({0.0, 1.0});
    std::vector<PredictableIntegrand const*> corpus{&ind, &capped, &quad};
    Outcome o{true, ""};
    auto st = stream_for(3);
    for (std::size_t k = 0; k < corpus.size(); ++k) {
        auto r = estimate_isometry(*corpus[k], m, 100000, st.child(std::uint64_t{k}));
        o.pass = o.pass && std::abs(r.std_gap) < 3.0;
        o.detail += fmt::format("{}{}: lhs {:.5f} rhs {:.5f} gap {:+.2f}", k ? "; " : "", corpus[k]->label, r.lhs,
                                r.rhs, r.std_gap);
    }
    return o;
}

Outcome c4()
{
    auto m = unit_model();
    auto g = exponential_functional(m, whole(), 1.0);
    auto r = estimate_duality(g, indicator_integrand({0.0, 1.0}), m, 100000, stream_for(4));
    return {std::abs(r.std_gap) < 3.0,
            fmt::format("lhs {:.5f} rhs {:.5f} std gap {:+.2f} at N = 1e5", r.lhs, r.rhs, r.std_gap)};
}

Outcome c5()
{
    auto m = unit_model();
    auto f = exponential_functional(m, whole(), 1.0);
    PointConfiguration mu(1.0, {{0.15, 0, 1.0}, {0.4, 0, 1.0}, {0.8, 0, 1.0}});
    std::vector<double> Ms{1e2, 1e3, 1e4};
    auto st = stream_for(5);
    bool within = true, slopes = true;
    double worst_gap = 0.0, lo_slope = 0.0, hi_slope = -1.0;
    for (int g = 1; g <= 9; ++g) {
        double s = 0.1 * g;
        double oracle = f.oracles.clark_integrand(restrict_before(mu, s), {s, 0, 1.0});
        std::vector<double> se;
        for (std::size_t k = 0; k < Ms.size(); ++k) {
            auto e = clark_integrand_mc(f, mu, s, 0, 1.0, m, static_cast<std::size_t>(Ms[k]),
                                        st.child(std::uint64_t(g)).child(std::uint64_t{k}));
            se.push_back(e.standard_error);
            if (k + 1 == Ms.size()) {
                double gap = std::abs(e.value - oracle) / e.standard_error;
                worst_gap = std::max(worst_gap, gap);
                within = within && gap < 3.0;
            }
        }
        double slope = loglog_slope(Ms, se);
        lo_slope = g == 1 ? slope : std::min(lo_slope, slope);
        hi_slope = g == 1 ? slope : std::max(hi_slope, slope);
        slopes = slopes && std::abs(slope + 0.5) <= 0.1;
    }
    return {within && slopes,
            fmt::format("max |h - oracle|/SE = {:.2f} at M = 1e4 over 9 points; SE slopes in [{:.3f}, {:.3f}]",
                        worst_gap, lo_slope, hi_slope)};
}

HedgeReport exact_hedge_run()
{
    auto market = MarketModel::unit(pm1_model());
    HedgeOptions o;
    o.strategy = terminal_square_hedge(market);
    return hedge_error(terminal_payoff(market, "square"), market, 100000, 0, stream_for(6), o);
}

Outcome c6(HedgeReport const& exact)
{
    auto market = MarketModel::unit(pm1_model());
    HedgeOptions o;
    o.panel = false;
    auto mc = hedge_error(terminal_payoff(market, "square"), market, 10000, 1000, stream_for(6).child(std::uint64_t{1}), o);
    bool a = std::abs(exact.hedge_error_var - 1.0) <= 3.0 * exact.hedge_error_se;
    bool b = mc.hedge_error_var >= 1.0 - 3.0 * mc.hedge_error_se
          && mc.hedge_error_var <= 1.0 + mc.mean_inner_noise + 3.0 * mc.hedge_error_se;
    return {a && b, fmt::format("exact h: {:.5f} +- {:.5f} (N = 1e5); MC h at M = 1e3: {:.5f} +- {:.5f}, "
                                "inner noise {:.5f} (N = 1e4)",
                                exact.hedge_error_var, exact.hedge_error_se, mc.hedge_error_var, mc.hedge_error_se,
                                mc.mean_inner_noise)};
}

Outcome c7(HedgeReport const& exact)
{
    double const bound = 3.0 / std::sqrt(static_cast<double>(exact.n_paths));
    bool literal = exact.panel.size() == 8, calibrated = true;
    std::string detail;
    for (auto const& p : exact.panel) {
        literal = literal && std::abs(p.correlation) < bound;
        calibrated = calibrated && std::abs(p.correlation) < 3.0 * p.correlation_se;
        detail += fmt::format("{} {:+.5f} ({:+.2f} SE); ", p.label, p.correlation, p.correlation / p.correlation_se);
    }
    detail += fmt::format("bound 3/sqrt(N) = {:.5f}; calibrated |corr| < 3 SE: {}", bound, calibrated ? "yes" : "no");
    return {literal, detail};
}

Outcome c8()
{
    std::vector<double> grid{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
    auto single = MarketModel::unit(unit_model());
    auto f1 = terminal_payoff(single, "square");
    auto st = stream_for(8);
    auto ph1 = perfect_hedge_check(f1, single, grid, 200, 1000, st.child(std::uint64_t{0}));
    HedgeOptions o;
    o.panel = false;
    auto he = hedge_error(f1, single, 2000, 1000, st.child(std::uint64_t{1}), o);
    auto pm1 = MarketModel::unit(pm1_model());
    auto ph2 = perfect_hedge_check(terminal_payoff(pm1, "square"), pm1, grid, 200, 1000, st.child(std::uint64_t{2}));
    double violated = static_cast<double>(ph2.violations) / static_cast<double>(ph2.points);
    bool pass = ph1.perfect && he.hedge_error_var < 1e-2 * he.var_f && !ph2.perfect && violated > 0.5;
    return {pass, fmt::format("single jump: {} ({:.3f} passing), error {:.3g} vs Var f {:.3f}; +-1: {} ({:.3f} violated)",
                              ph1.perfect ? "PASS" : "FAIL", ph1.fraction_passing, he.hedge_error_var, he.var_f,
                              ph2.perfect ? "PASS" : "FAIL", violated)};
}

Outcome c9()
{
    auto m = unit_model();
    auto f = count_polynomial(m, whole(), {0.0, 0.0, 1.0});
    std::vector<double> grid{0.0, 0.25, 0.5, 0.75, 1.0};
    auto rep = martingale_representation_check(f, m, grid, 10000, 1000, stream_for(9));
    bool pass = true;
    std::string detail;
    for (auto const& p : rep.points) {
        pass = pass && std::abs(p.mean_std_gap) < 3.0 && std::abs(p.representation_std_gap) < 3.0;
        detail += fmt::format("t={:g}: E M {:.4f} ({:+.2f}), gap {:+.2f}; ", p.t, p.mean_m, p.mean_std_gap,
                              p.representation_std_gap);
    }
    return {pass, detail + fmt::format("E f = {:g}", rep.mean_f)};
}

Outcome c10()
{
    auto m = unit_model();
    TimeWindow B{0.0, 0.6};
    auto g1 = indicator_kernel(1, B);
    auto g2 = indicator_kernel(2, B);
    auto st = stream_for(10);
    std::size_t const n = 100000;
    std::vector<double> i1i2(n), i2sq(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto mu = sample_path(m, st.child(std::uint64_t{i}));
        double a = multiple_wiener_ito(g1, mu, m);
        double b = multiple_wiener_ito(g2, mu, m);
        i1i2[i] = a * b;
        i2sq[i] = b * b;
    }
    auto x = summarize(i1i2);
    auto y = summarize(i2sq);
    double target = 2.0 * m.measure(B) * m.measure(B);
    bool pass = std::abs(x.mean) < 3.0 * x.se() && std::abs(y.mean - target) < 3.0 * y.se();
    return {pass, fmt::format("E I1 I2 = {:+.5f} ({:+.2f} SE); E I2^2 = {:.5f} vs {:.2f} ({:+.2f} SE)", x.mean,
                              x.mean / x.se(), y.mean, target, (y.mean - target) / y.se())};
}

Outcome c11()
{
    fs::path const work = JUMPCALC_WORK_DIR;
    std::vector<std::pair<std::string, unsigned>> runs{{"run_a", 1}, {"run_b", 1}, {"run_c", 8}};
    std::vector<std::string> reports;
    for (auto const& [name, workers] : runs) {
        RunConfig cfg;
        cfg.subcommand = "verify";
        cfg.paths = VerifySettings{}.paths;
        cfg.inner = VerifySettings{}.inner;
        cfg.seed = kSeed;
        cfg.workers = workers;
        cfg.out = work / name;
        fs::remove_all(cfg.out);
        int rc = run_subcommand(cfg);
        reports.push_back(std::to_string(rc) + slurp(cfg.out / "identities.csv") + slurp(cfg.out / "verdict.json"));
    }
    bool same = reports[0] == reports[1] && reports[0] == reports[2];
    return {same, fmt::format("identities.csv and verdict.json byte-identical for workers 1, 1, 8: {}", same ? "yes" : "no")};
}

} // namespace

int main()
{
    int failed = 0;
    auto report = [&](int id, double budget, std::function<Outcome()> const& run) {
        auto t0 = std::chrono::steady_clock::now();
        Outcome o = run();
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        bool ok = o.pass && (budget <= 0.0 || secs < budget);
        if (!ok)
            ++failed;
        std::string limit = budget > 0.0 ? fmt::format(" (limit {:g} s)", budget) : "";
        fmt::print("{} criterion {:2}: {} [{:.1f} s{}]\n", ok ? "PASS" : "FAIL", id, o.detail, secs, limit);
        std::fflush(stdout);
    };

    report(1, 10, c1);
    report(2, 5, c2);
    report(3, 60, c3);
    report(4, 60, c4);
    report(5, 120, c5);
    HedgeReport exact;
    report(6, 180, [&] {
        exact = exact_hedge_run();
        return c6(exact);
    });
    report(7, 0, [&] { return c7(exact); });
    report(8, 120, c8);
    report(9, 180, c9);
    report(10, 60, c10);
    report(11, 0, c11);
    fmt::print("{} of 11 criteria failed\n", failed);
    return failed == 0 ? 0 : 1;
}
