#pragma once

#include <algorithm>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "functionals.hpp"
#include "intensity.hpp"
#include "malliavin.hpp"
#include "market.hpp"

namespace jumpcalc {

using ClaimParams = std::map<std::string, std::string>;

namespace detail {

inline double param_double(ClaimParams const& p, std::string const& key, double fallback)
{
    auto it = p.find(key);
    if (it == p.end())
        return fallback;
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(it->second, &used);
    } catch (std::exception const&) {
        used = 0;
    }
    if (used == 0 || it->second.find_first_not_of(" \t", used) != std::string::npos)
        throw std::invalid_argument("claim parameter '" + key + "': not a number: '" + it->second + "'");
    return v;
}

inline std::vector<double> param_list(ClaimParams const& p, std::string const& key, std::vector<double> fallback)
{
    auto it = p.find(key);
    if (it == p.end())
        return fallback;
    std::vector<double> out;
    std::stringstream ss(it->second);
    std::string item;
    while (std::getline(ss, item, ',')) {
        ClaimParams one{{key, item}};
        out.push_back(param_double(one, key, 0.0));
    }
    return out;
}

inline void reject_unknown(ClaimParams const& p, std::string const& claim, std::vector<std::string> const& known)
{
    for (auto const& [k, v] : p)
        if (std::find(known.begin(), known.end(), k) == known.end())
            throw std::invalid_argument("claim '" + claim + "': unknown parameter '" + k + "'");
}

inline CountWindow param_window(ClaimParams const& p, IntensityModel const& model)
{
    CountWindow w;
    w.time = {param_double(p, "lo", 0.0), param_double(p, "hi", model.horizon())};
    w.asset = static_cast<int>(param_double(p, "asset", kAllAssets));
    if (w.asset != kAllAssets && (w.asset < 0 || w.asset >= model.asset_count()))
        throw std::invalid_argument("claim window: asset index out of range");
    if (!(w.time.lo <= w.time.hi))
        throw std::invalid_argument("claim window: lo must not exceed hi");
    return w;
}

} // namespace detail

/// Claim by name with its closed forms attached. Names: linear,
/// count_polynomial, exponential, terminal_payoff (needs a market).
///
/// Parameters: lo, hi, asset for the window B (defaults [0, horizon], all
/// assets); linear: coef, jump_weighted (0/1); count_polynomial:
/// coefficients c_0,c_1,... of sum c_k mu(B)^k; exponential: c;
/// terminal_payoff: payoff (identity|square|call|put), strike, asset.
inline Functional functional_library(std::string const& name, ClaimParams const& params, IntensityModel const& model,
                                     MarketModel const* market = nullptr)
{
    if (name == "linear") {
        detail::reject_unknown(params, name, {"lo", "hi", "asset", "coef", "jump_weighted"});
        return linear_functional(model, detail::param_window(params, model), detail::param_double(params, "coef", 1.0),
                                 detail::param_double(params, "jump_weighted", 0.0) != 0.0);
    }
    if (name == "count_polynomial") {
        detail::reject_unknown(params, name, {"lo", "hi", "asset", "coefficients"});
        return count_polynomial(model, detail::param_window(params, model),
                                detail::param_list(params, "coefficients", {0.0, 0.0, 1.0}));
    }
    if (name == "exponential") {
        detail::reject_unknown(params, name, {"lo", "hi", "asset", "c"});
        return exponential_functional(model, detail::param_window(params, model), detail::param_double(params, "c", 1.0));
    }
    if (name == "terminal_payoff") {
        detail::reject_unknown(params, name, {"payoff", "strike", "asset"});
        if (!market)
            throw std::invalid_argument("claim 'terminal_payoff' needs a market model");
        auto it = params.find("payoff");
        std::string payoff = it == params.end() ? "square" : it->second;
        return terminal_payoff(*market, payoff, detail::param_double(params, "strike", 0.0),
                               static_cast<int>(detail::param_double(params, "asset", kAllAssets)));
    }
    throw std::invalid_argument("unknown claim '" + name + "'");
}

} // namespace jumpcalc
