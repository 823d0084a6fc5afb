#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "json.hpp"

#include "hedging.hpp"
#include "integrals.hpp"
#include "point_measure.hpp"
#include "representation.hpp"

namespace jumpcalc {

using Json = nlohmann::ordered_json;

/// Round-trip exact decimal form.
[[nodiscard]] inline std::string num(double x) { return fmt::format("{:.17g}", x); }

[[nodiscard]] inline std::string hex64(std::uint64_t x) { return fmt::format("{:016x}", x); }

/// JSON number, or null when not finite.
[[nodiscard]] inline Json json_number(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

class CsvWriter
{
  public:
    CsvWriter(std::filesystem::path const& path, std::string const& header)
        : path_(path), out_(path, std::ios::binary | std::ios::trunc)
    {
        if (!out_)
            throw std::runtime_error("cannot write '" + path.string() + "'");
        out_ << header << '\n';
    }

    std::ostream& stream() { return out_; }

    template <class... Fields>
    void row(Fields const&... fields)
    {
        std::string line;
        bool first = true;
        auto put = [&](auto const& f) {
            if (!first)
                line += ',';
            first = false;
            if constexpr (std::is_floating_point_v<std::decay_t<decltype(f)>>)
                line += num(f);
            else
                line += fmt::format("{}", f);
        };
        (put(fields), ...);
        out_ << line << '\n';
    }

  private:
    std::filesystem::path path_;
    std::ofstream out_;
};

inline void write_json(std::filesystem::path const& path, Json const& j)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw std::runtime_error("cannot write '" + path.string() + "'");
    out << j.dump(2) << '\n';
}

inline constexpr char const* kIdentityHeader = "identity,lhs,rhs,se_lhs,se_rhs,std_gap,n_paths,seed";

inline void write_identity_row(CsvWriter& w, IdentityReport const& r)
{
    w.row(r.identity, r.lhs, r.rhs, r.se_lhs, r.se_rhs, r.std_gap, r.n_paths, r.seed);
}

inline void write_decomposition_csv(std::filesystem::path const& path, DecompositionReport const& rep)
{
    CsvWriter w(path, "path_id,f,delta,residual,oracle_residual");
    for (std::size_t i = 0; i < rep.f.size(); ++i) {
        if (rep.oracle_residual.empty())
            w.row(i, rep.f[i], rep.delta[i], rep.residual[i], "");
        else
            w.row(i, rep.f[i], rep.delta[i], rep.residual[i], rep.oracle_residual[i]);
    }
}

inline void write_martingale_csv(std::filesystem::path const& path, MartingaleReport const& rep)
{
    CsvWriter w(path, "t,mean_m,se_m,mean_std_gap,representation_gap,representation_se,representation_std_gap");
    for (auto const& p : rep.points)
        w.row(p.t, p.mean_m, p.se_m, p.mean_std_gap, p.representation_gap, p.representation_se,
              p.representation_std_gap);
}

inline void write_hedge_csv(std::filesystem::path const& path, HedgeReport const& rep)
{
    CsvWriter w(path, "path_id,f,hedge_integral,residual");
    for (std::size_t i = 0; i < rep.f.size(); ++i)
        w.row(i, rep.f[i], rep.hedge_integral[i], rep.residual[i]);
}

inline Json decomposition_json(DecompositionReport const& rep)
{
    Json j;
    j["claim"] = rep.label;
    j["mean_f"] = json_number(rep.mean_f);
    j["mean_f_se"] = json_number(rep.mean_f_se);
    j["mean_from_oracle"] = rep.mean_from_oracle;
    j["var_f"] = json_number(rep.var_f);
    j["residual_var"] = json_number(rep.var_residual);
    j["ratio"] = json_number(rep.ratio);
    j["has_oracle_residual"] = !rep.oracle_residual.empty();
    j["max_abs_oracle_residual"] = json_number(rep.max_abs_oracle_residual);
    j["non_finite_points"] = rep.non_finite_points;
    j["n_paths"] = rep.n_paths;
    j["inner_samples"] = rep.inner_samples;
    return j;
}

inline Json hedge_json(HedgeReport const& rep)
{
    Json j;
    j["claim"] = rep.label;
    j["mean_f"] = json_number(rep.mean_f);
    j["mean_f_se"] = json_number(rep.mean_f_se);
    j["mean_from_oracle"] = rep.mean_from_oracle;
    j["var_f"] = json_number(rep.var_f);
    j["hedge_error_var"] = json_number(rep.hedge_error_var);
    j["hedge_error_se"] = json_number(rep.hedge_error_se);
    j["hedge_integral_var"] = json_number(rep.hedge_integral_var);
    j["mean_inner_noise"] = json_number(rep.mean_inner_noise);
    j["pythagoras_std_gap"] = json_number(rep.pythagoras_std_gap);
    j["optimal_intercept"] = json_number(rep.optimal_intercept);
    j["untradeable_points"] = rep.untradeable_points;
    j["n_paths"] = rep.n_paths;
    j["inner_samples"] = rep.inner_samples;
    Json panel = Json::array();
    for (auto const& p : rep.panel)
        panel.push_back({{"label", p.label},
                         {"correlation", json_number(p.correlation)},
                         {"correlation_se", json_number(p.correlation_se)},
                         {"competitor_error_var", json_number(p.competitor_error)},
                         {"competitor_error_se", json_number(p.competitor_se)}});
    j["panel"] = std::move(panel);
    return j;
}

} // namespace jumpcalc
