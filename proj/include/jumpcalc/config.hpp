#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "intensity.hpp"
#include "library.hpp"
#include "market.hpp"

namespace jumpcalc {

/// Bad or missing configuration; the CLI maps it to exit code 2.
class ConfigError : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string read_file(std::filesystem::path const& path, char const* what)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ConfigError(std::string("cannot open ") + what + " '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline boost::property_tree::ptree parse_ini(std::string const& text, std::string const& name)
{
    boost::property_tree::ptree tree;
    std::istringstream in(text);
    try {
        boost::property_tree::read_ini(in, tree);
    } catch (boost::property_tree::ini_parser_error const& e) {
        throw ConfigError(name + ":" + std::to_string(e.line()) + ": " + e.message());
    }
    return tree;
}

template <class T>
T get_value(boost::property_tree::ptree const& tree, std::string const& key, std::string const& where)
{
    auto v = tree.get_optional<std::string>(key);
    if (!v)
        throw ConfigError(where + ": missing key '" + key + "'");
    if constexpr (std::is_same_v<T, std::string>)
        return *v;
    std::istringstream in(*v);
    T out{};
    in >> out;
    if (in.fail() || !(in >> std::ws).eof())
        throw ConfigError(where + ": bad value for '" + key + "': '" + *v + "'");
    return out;
}

template <class T>
T get_value(boost::property_tree::ptree const& tree, std::string const& key, std::string const& where, T fallback)
{
    if (!tree.get_optional<std::string>(key))
        return fallback;
    return get_value<T>(tree, key, where);
}

inline std::vector<std::string> split(std::string const& s, char sep)
{
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) {
        auto b = item.find_first_not_of(" \t");
        auto e = item.find_last_not_of(" \t");
        if (b != std::string::npos)
            out.push_back(item.substr(b, e - b + 1));
    }
    return out;
}

inline double to_double(std::string const& s, std::string const& where)
{
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (std::exception const&) {
        used = 0;
    }
    if (used == 0 || used != s.size())
        throw ConfigError(where + ": not a number: '" + s + "'");
    return v;
}

inline std::vector<double> to_list(std::string const& s, std::string const& where)
{
    std::vector<double> out;
    for (auto const& item : split(s, ','))
        out.push_back(to_double(item, where));
    return out;
}

} // namespace detail

/// 64-bit FNV-1a.
[[nodiscard]] constexpr std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL) noexcept
{
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

struct ModelSpec
{
    IntensityModel intensity;
    MarketModel market;
    /// Per asset: second moment removed by small-jump truncation.
    std::vector<double> discarded_second_moment;
};

/// Parses a model file:
///
///   [model]
///   horizon = 1
///   assets = 1
///   [asset0]
///   rate_breaks = 0, 0.5      (optional, default 0)
///   rate_values = 1, 2
///   jumps = 1:0.5, -1:0.5     (size:weight pairs)
///   vg = C, G, M              (instead of jumps; needs truncate)
///   truncate = 0.01           (optional)
///   kappa = 1                 (optional constant factor)
///   kappa_slope = 0.5         (optional: kappa (1 + slope min(n, cap)))
///   kappa_cap = 5
inline ModelSpec parse_model(std::string const& text, std::string const& name = "model")
{
    auto tree = detail::parse_ini(text, name);
    auto top_node = tree.get_child_optional("model");
    if (!top_node)
        throw ConfigError(name + ": missing [model] section");
    auto const& top = *top_node;
    double horizon = detail::get_value<double>(top, "horizon", name + " [model]");
    int assets = detail::get_value<int>(top, "assets", name + " [model]", 1);
    if (assets < 1)
        throw ConfigError(name + " [model]: assets must be at least 1");
    for (auto const& [section, body] : tree)
        if (section != "model" && section.rfind("asset", 0) != 0)
            throw ConfigError(name + ": unknown section [" + section + "]");

    std::vector<AssetIntensity> per_asset;
    std::vector<KappaFactor> factors;
    std::vector<double> discarded;
    for (int j = 0; j < assets; ++j) {
        std::string sec = "asset" + std::to_string(j);
        std::string where = name + " [" + sec + "]";
        auto node = tree.get_child_optional(sec);
        if (!node)
            throw ConfigError(name + ": missing section [" + sec + "]");
        for (auto const& [key, v] : *node)
            if (key != "rate_breaks" && key != "rate_values" && key != "jumps" && key != "vg" && key != "truncate"
                && key != "kappa" && key != "kappa_slope" && key != "kappa_cap")
                throw ConfigError(where + ": unknown key '" + key + "'");
        try {
            auto values = detail::to_list(detail::get_value<std::string>(*node, "rate_values", where), where);
            auto breaks = detail::to_list(detail::get_value<std::string>(*node, "rate_breaks", where, "0"), where);
            RateFunction rate(breaks, values);

            double eps = detail::get_value<double>(*node, "truncate", where, 0.0);
            JumpLaw law;
            double lost = 0.0;
            if (auto vg = node->get_optional<std::string>("vg")) {
                auto p = detail::to_list(*vg, where);
                if (p.size() != 3)
                    throw ConfigError(where + ": vg needs C, G, M");
                if (!(eps > 0.0))
                    throw ConfigError(where + ": vg needs a positive truncate epsilon");
                auto t = truncate_small_jumps(variance_gamma_levy(p[0], p[1], p[2]), eps);
                law = std::move(t.law);
                lost = t.discarded_second_moment;
            } else {
                std::vector<JumpAtom> atoms;
                for (auto const& pair : detail::split(detail::get_value<std::string>(*node, "jumps", where), ',')) {
                    auto parts = detail::split(pair, ':');
                    if (parts.size() != 2)
                        throw ConfigError(where + ": jump atoms are size:weight pairs, got '" + pair + "'");
                    atoms.push_back({detail::to_double(parts[0], where), detail::to_double(parts[1], where)});
                }
                law = JumpLaw(std::move(atoms));
                if (eps > 0.0) {
                    auto t = truncate_small_jumps(law, eps);
                    law = std::move(t.law);
                    lost = t.discarded_second_moment;
                }
            }
            per_asset.push_back({std::move(rate), std::move(law)});
            discarded.push_back(lost);

            double kappa = detail::get_value<double>(*node, "kappa", where, 1.0);
            double slope = detail::get_value<double>(*node, "kappa_slope", where, 0.0);
            int cap = detail::get_value<int>(*node, "kappa_cap", where, 5);
            factors.push_back(slope == 0.0 ? KappaFactor::constant_factor(kappa)
                                           : KappaFactor::count_dependent(kappa, slope, j, cap));
        } catch (std::invalid_argument const& e) {
            throw ConfigError(where + ": " + e.what());
        }
    }
    try {
        IntensityModel intensity(horizon, std::move(per_asset));
        auto market = MarketModel::separable(intensity, std::move(factors));
        return {std::move(intensity), std::move(market), std::move(discarded)};
    } catch (std::invalid_argument const& e) {
        throw ConfigError(name + ": " + e.what());
    }
}

inline ModelSpec load_model(std::filesystem::path const& path)
{
    return parse_model(detail::read_file(path, "model file"), path.string());
}

struct RunConfig
{
    std::string subcommand;
    std::filesystem::path config_path;
    /// Resolved relative to the config file's directory.
    std::filesystem::path model_path;
    std::string claim = "count_polynomial";
    ClaimParams claim_params;
    std::size_t paths = 1000;
    std::size_t inner = 100;
    std::uint64_t seed = 1;
    unsigned workers = 1;
    std::filesystem::path out = "out";
    double tolerance = 3.0;
    std::vector<double> t_grid;
    bool panel = true;
    /// hedge: "mc" estimates h_f, "exact" uses the closed-form hedge.
    std::string strategy = "mc";
    /// FNV-1a of the config file and model file bytes.
    std::uint64_t config_hash = 0;
};

/// Parses a run config:
///
///   [run]
///   model = pm1.ini
///   claim = terminal_payoff
///   paths = 1000
///   inner = 100
///   seed = 42
///   workers = 1
///   out = out/hedge
///   tolerance = 3
///   t_grid = 0, 0.5, 1
///   panel = 1
///   strategy = mc
///   [claim]
///   payoff = square
inline RunConfig parse_run_config(std::string const& text, std::filesystem::path const& path = "config")
{
    std::string name = path.string();
    auto tree = detail::parse_ini(text, name);
    for (auto const& [section, body] : tree)
        if (section != "run" && section != "claim")
            throw ConfigError(name + ": unknown section [" + section + "]");
    boost::property_tree::ptree const empty;
    auto run_node = tree.get_child_optional("run");
    auto const& run = run_node ? *run_node : empty;
    std::string where = name + " [run]";
    for (auto const& [key, v] : run)
        if (key != "model" && key != "claim" && key != "paths" && key != "inner" && key != "seed" && key != "workers"
            && key != "out" && key != "tolerance" && key != "t_grid" && key != "panel" && key != "strategy")
            throw ConfigError(where + ": unknown key '" + key + "'");
    RunConfig cfg;
    cfg.config_path = path;
    auto base = path.parent_path();
    if (auto m = run.get_optional<std::string>("model"))
        cfg.model_path = base / *m;
    cfg.claim = detail::get_value<std::string>(run, "claim", where, cfg.claim);
    cfg.paths = detail::get_value<std::size_t>(run, "paths", where, cfg.paths);
    cfg.inner = detail::get_value<std::size_t>(run, "inner", where, cfg.inner);
    cfg.seed = detail::get_value<std::uint64_t>(run, "seed", where, cfg.seed);
    cfg.workers = detail::get_value<unsigned>(run, "workers", where, cfg.workers);
    if (auto o = run.get_optional<std::string>("out"))
        cfg.out = base / *o;
    cfg.tolerance = detail::get_value<double>(run, "tolerance", where, cfg.tolerance);
    if (auto g = run.get_optional<std::string>("t_grid"))
        cfg.t_grid = detail::to_list(*g, where);
    cfg.panel = detail::get_value<int>(run, "panel", where, 1) != 0;
    cfg.strategy = detail::get_value<std::string>(run, "strategy", where, cfg.strategy);
    if (cfg.strategy != "mc" && cfg.strategy != "exact")
        throw ConfigError(where + ": strategy must be 'mc' or 'exact'");
    if (auto c = tree.get_child_optional("claim"))
        for (auto const& [key, v] : *c)
            cfg.claim_params[key] = v.data();
    cfg.config_hash = fnv1a(text);
    return cfg;
}

/// Reads the config file and folds the model file bytes into the hash.
inline RunConfig load_run_config(std::filesystem::path const& path)
{
    auto cfg = parse_run_config(detail::read_file(path, "config file"), path);
    if (!cfg.model_path.empty() && std::filesystem::exists(cfg.model_path))
        cfg.config_hash = fnv1a(detail::read_file(cfg.model_path, "model file"), cfg.config_hash);
    return cfg;
}

inline void validate(RunConfig const& cfg)
{
    if (cfg.paths < 1)
        throw ConfigError("paths must be at least 1");
    if (cfg.inner < 1)
        throw ConfigError("inner must be at least 1");
    if (cfg.workers < 1)
        throw ConfigError("workers must be at least 1");
    if (!(cfg.tolerance > 0.0))
        throw ConfigError("tolerance must be positive");
}

} // namespace jumpcalc
