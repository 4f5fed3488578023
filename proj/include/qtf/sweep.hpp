// SPDX-License-Identifier: Apache-2.0
//
// Parameter sweeps: JSON configuration, per-grid-point evaluation of every
// analytic quantity alongside a Monte Carlo campaign, and CSV/JSON output.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <type_traits>
#include <variant>
#include <vector>

#include <json.hpp>

#include "qtf/analytic.hpp"
#include "qtf/engine.hpp"
#include "qtf/model.hpp"

namespace qtf {

class ConfigError : public Error {
  public:
    using Error::Error;
};

enum class EnergyAxis { Transmissions, Photons };

inline const char* to_string(EnergyAxis axis)
{
    return axis == EnergyAxis::Transmissions ? "transmissions" : "photons";
}

struct SweepConfig {
    ChannelParams base;  // base.m is unused; the m grid supplies it
    std::vector<DecisionRule> rule_grid;
    std::vector<ModeCount> m_grid{ModeCount::infinite()};
    std::vector<std::uint64_t> r_grid{1};
    EnergyAxis energy_axis = EnergyAxis::Photons;
    std::uint64_t trials = 100'000;
    std::uint64_t seed = 0;
    double tol = 1e-12;
    double z = 1.96;
    std::optional<double> p_fp;  // overrides 1/m for finite m
    std::optional<unsigned> workers;
    std::string output_path;
    std::string json_output_path;
};

inline unsigned default_workers()
{
    return std::max(1u, std::thread::hardware_concurrency());
}

/// Worker count precedence: command line, then the QTF_WORKERS environment
/// value, then the config file, then the hardware.
inline unsigned resolve_workers(std::optional<unsigned> cli, const char* env,
                                const SweepConfig& cfg)
{
    if (cli) {
        if (*cli < 1) throw ConfigError("--workers: must be >= 1");
        return *cli;
    }
    if (env && *env) {
        char* end = nullptr;
        unsigned long v = std::strtoul(env, &end, 10);
        if (*end != '\0' || v < 1 || v > 4096)
            throw ConfigError(std::string("QTF_WORKERS: expected an integer in [1, 4096], got \"")
                              + env + "\"");
        return static_cast<unsigned>(v);
    }
    if (cfg.workers) return *cfg.workers;
    return default_workers();
}

namespace detail {

using nlohmann::json;

inline std::uint64_t get_count(const json& v, const std::string& path, std::uint64_t min)
{
    if (!v.is_number_integer() || !v.is_number_unsigned())
        throw ConfigError(path + ": expected a non-negative integer");
    auto n = v.get<std::uint64_t>();
    if (n < min) throw ConfigError(path + ": must be >= " + std::to_string(min));
    return n;
}

inline double get_real(const json& v, const std::string& path)
{
    if (!v.is_number()) throw ConfigError(path + ": expected a number");
    return v.get<double>();
}

// Accepts a single integer or a non-empty array of integers.
inline std::vector<std::uint64_t> get_counts(const json& v, const std::string& path)
{
    std::vector<std::uint64_t> out;
    if (v.is_array()) {
        if (v.empty()) throw ConfigError(path + ": must not be empty");
        for (std::size_t i = 0; i < v.size(); ++i)
            out.push_back(get_count(v[i], path + "[" + std::to_string(i) + "]", 1));
    } else {
        out.push_back(get_count(v, path, 1));
    }
    return out;
}

inline ModeCount get_modes(const json& v, const std::string& path)
{
    if (v.is_string()) {
        auto s = v.get<std::string>();
        if (s == "inf" || s == "infinite" || s == "Infinite") return ModeCount::infinite();
        throw ConfigError(path + ": expected an integer >= 1 or \"inf\", got \"" + s + "\"");
    }
    return ModeCount::finite(get_count(v, path, 1));
}

inline void reject_unknown(const json& obj, const std::set<std::string>& allowed,
                           const std::string& path)
{
    for (const auto& [key, _] : obj.items())
        if (!allowed.count(key))
            throw ConfigError((path.empty() ? key : path + "." + key) + ": unknown key");
}

}  // namespace detail

/// Parses and validates a sweep configuration document. See
/// docs/config.md for the schema.
inline SweepConfig parse_config(const std::string& text)
{
    using detail::json;
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("malformed JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ConfigError("top level: expected an object");

    detail::reject_unknown(doc,
                           {"eta", "n_b", "d", "m_grid", "rules", "r_grid", "energy_axis",
                            "trials", "seed", "tol", "z", "p_fp", "workers", "output",
                            "json_output"},
                           "");
    for (const char* key : {"eta", "n_b", "d", "rules"})
        if (!doc.contains(key)) throw ConfigError(std::string(key) + ": required key missing");

    SweepConfig cfg;
    cfg.base.eta = detail::get_real(doc["eta"], "eta");
    cfg.base.n_b = detail::get_real(doc["n_b"], "n_b");
    {
        auto d = detail::get_count(doc["d"], "d", 2);
        if (d > 0xFFFFFFFFull) throw ConfigError("d: too large");
        cfg.base.d = static_cast<std::uint32_t>(d);
    }
    try {
        validate(cfg.base);
    } catch (const InvalidParameter& e) {
        throw ConfigError(e.what());
    }

    if (doc.contains("m_grid")) {
        const auto& grid = doc["m_grid"];
        if (!grid.is_array() || grid.empty()) throw ConfigError("m_grid: expected a non-empty array");
        cfg.m_grid.clear();
        for (std::size_t i = 0; i < grid.size(); ++i) {
            auto path = "m_grid[" + std::to_string(i) + "]";
            try {
                cfg.m_grid.push_back(detail::get_modes(grid[i], path));
            } catch (const InvalidParameter& e) {
                throw ConfigError(path + ": " + e.what());
            }
        }
    }
    if (doc.contains("r_grid")) {
        if (!doc["r_grid"].is_array()) throw ConfigError("r_grid: expected an array");
        cfg.r_grid = detail::get_counts(doc["r_grid"], "r_grid");
    }

    const auto& rules = doc["rules"];
    if (!rules.is_array() || rules.empty()) throw ConfigError("rules: expected a non-empty array");
    for (std::size_t i = 0; i < rules.size(); ++i) {
        const auto path = "rules[" + std::to_string(i) + "]";
        const auto& rule = rules[i];
        if (!rule.is_object() || !rule.contains("type") || !rule["type"].is_string())
            throw ConfigError(path + ": expected an object with a string \"type\"");
        const auto type = rule["type"].get<std::string>();
        if (type == "first_click") {
            detail::reject_unknown(rule, {"type"}, path);
            cfg.rule_grid.emplace_back(FirstClick{});
        } else if (type == "r_clicks") {
            detail::reject_unknown(rule, {"type", "r"}, path);
            auto rs = rule.contains("r") ? detail::get_counts(rule["r"], path + ".r") : cfg.r_grid;
            for (auto r : rs) cfg.rule_grid.emplace_back(RClicks{r});
        } else if (type == "fixed_shots") {
            detail::reject_unknown(rule, {"type", "n_s"}, path);
            if (!rule.contains("n_s")) throw ConfigError(path + ".n_s: required key missing");
            for (auto n : detail::get_counts(rule["n_s"], path + ".n_s"))
                cfg.rule_grid.emplace_back(FixedShots{n});
        } else if (type == "truncated_first_click") {
            detail::reject_unknown(rule, {"type", "n_max"}, path);
            if (!rule.contains("n_max")) throw ConfigError(path + ".n_max: required key missing");
            for (auto n : detail::get_counts(rule["n_max"], path + ".n_max"))
                cfg.rule_grid.emplace_back(TruncatedFirstClick{n});
        } else {
            throw ConfigError(path + ".type: unknown rule \"" + type + "\"");
        }
    }

    if (doc.contains("energy_axis")) {
        const auto& v = doc["energy_axis"];
        if (v == "transmissions") cfg.energy_axis = EnergyAxis::Transmissions;
        else if (v == "photons") cfg.energy_axis = EnergyAxis::Photons;
        else throw ConfigError("energy_axis: expected \"transmissions\" or \"photons\"");
    }
    if (doc.contains("trials")) cfg.trials = detail::get_count(doc["trials"], "trials", 1);
    if (doc.contains("seed")) cfg.seed = detail::get_count(doc["seed"], "seed", 0);
    if (doc.contains("tol")) {
        cfg.tol = detail::get_real(doc["tol"], "tol");
        if (!(cfg.tol > 0.0)) throw ConfigError("tol: must be > 0");
    }
    if (doc.contains("z")) {
        cfg.z = detail::get_real(doc["z"], "z");
        if (!(cfg.z > 0.0)) throw ConfigError("z: must be > 0");
    }
    if (doc.contains("p_fp")) {
        double p = detail::get_real(doc["p_fp"], "p_fp");
        if (!(p >= 0.0 && p < 1.0)) throw ConfigError("p_fp: must lie in [0, 1)");
        cfg.p_fp = p;
    }
    if (doc.contains("workers")) {
        auto w = detail::get_count(doc["workers"], "workers", 1);
        cfg.workers = static_cast<unsigned>(std::min<std::uint64_t>(w, 4096));
    }
    if (doc.contains("output")) {
        if (!doc["output"].is_string()) throw ConfigError("output: expected a string");
        cfg.output_path = doc["output"].get<std::string>();
    }
    if (doc.contains("json_output")) {
        if (!doc["json_output"].is_string()) throw ConfigError("json_output: expected a string");
        cfg.json_output_path = doc["json_output"].get<std::string>();
    }
    return cfg;
}

inline SweepConfig load_config(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

//---------------------------------------------------------------------------//
// Sweep evaluation
//---------------------------------------------------------------------------//

struct SweepRow {
    ChannelParams params;
    DecisionRule rule;
    std::optional<ClickModel> model;
    EnergyAxis energy_axis = EnergyAxis::Photons;

    std::optional<double> energy_per_position;  // photons sent to each position
    std::optional<double> energy;               // on the configured axis
    std::optional<double> classical_lb;
    std::optional<double> tmsv_ub;
    std::optional<double> fixed_shot_error;
    std::optional<double> truncated_energy;
    std::optional<double> truncated_error;
    std::optional<double> expected_transmissions;
    std::optional<double> first_click_bound;
    std::optional<double> series;
    std::optional<double> series_tail;
    std::optional<double> chernoff_c;
    std::optional<double> r_click_bound;
    std::optional<double> error_estimate;  // the rule's headline analytic error

    std::optional<CampaignSummary> mc;
    std::uint64_t seed = 0;
    std::string error;
};

struct ResultTable {
    std::vector<SweepRow> rows;
};

struct SweepOptions {
    bool monte_carlo = true;
    unsigned workers = 1;
};

namespace detail {

inline void note_error(SweepRow& row, const std::string& msg)
{
    if (row.error.find(msg) != std::string::npos) return;
    if (!row.error.empty()) row.error += "; ";
    row.error += msg;
}

inline void record(SweepRow& row, std::optional<double>& slot, const std::function<double()>& f)
{
    try {
        slot = f();
    } catch (const std::exception& e) {
        note_error(row, e.what());
    }
}

inline SweepRow evaluate_point(const SweepConfig& cfg, ModeCount m, const DecisionRule& rule,
                               const SweepOptions& opts)
{
    SweepRow row;
    row.params = cfg.base;
    row.params.m = m;
    row.rule = rule;
    row.energy_axis = cfg.energy_axis;
    row.seed = cfg.seed;

    ClickModel model;
    try {
        model = derive_click_model(row.params, cfg.p_fp);
        row.model = model;
    } catch (const std::exception& e) {
        row.error = e.what();
        return row;
    }

    const auto& params = row.params;
    const std::uint64_t count = rule_count(rule);
    const double d = params.d;

    // Per-position photon budget implied by each rule.
    std::visit(
        [&](const auto& r) {
            using T = std::decay_t<decltype(r)>;
            if constexpr (std::is_same_v<T, FixedShots>) {
                row.energy_per_position = static_cast<double>(r.n_s);
                record(row, row.fixed_shot_error, [&] { return dv_fixed_shot_error(model, r.n_s); });
                row.error_estimate = row.fixed_shot_error;
            } else if constexpr (std::is_same_v<T, TruncatedFirstClick>) {
                record(row, row.truncated_energy,
                       [&] { return truncated_energy(params, model, r.n_max); });
                if (row.truncated_energy) row.energy_per_position = *row.truncated_energy / d;
                record(row, row.truncated_error, [&] { return truncated_error(model, r.n_max); });
                row.error_estimate = row.truncated_error;
            } else {
                record(row, row.expected_transmissions,
                       [&] { return expected_transmissions(model, count); });
                row.energy_per_position = row.expected_transmissions;
                if constexpr (std::is_same_v<T, FirstClick>) {
                    record(row, row.first_click_bound,
                           [&] { return first_click_error_bound(params, model); });
                }
                std::optional<double> tail;
                record(row, row.series, [&] {
                    auto s = per_position_error_series(model, count, cfg.tol);
                    tail = s.truncation_bound;
                    return s.value;
                });
                row.series_tail = tail;
                record(row, row.chernoff_c, [&] { return chernoff_constant(model, count); });
                record(row, row.r_click_bound,
                       [&] { return r_click_error_bound(params, model, count); });
                row.error_estimate =
                    std::is_same_v<T, FirstClick> ? row.first_click_bound : row.r_click_bound;
            }
        },
        rule);

    if (row.energy_per_position) {
        const double n_s = *row.energy_per_position;
        row.energy = cfg.energy_axis == EnergyAxis::Photons ? n_s * d : n_s;
        record(row, row.classical_lb, [&] { return classical_lower_bound(params, n_s); });
        record(row, row.tmsv_ub, [&] { return tmsv_upper_bound(params, n_s); });
    }

    if (opts.monte_carlo) {
        try {
            validate_rule(rule, model);
            CampaignOptions co;
            co.trials = cfg.trials;
            co.seed = cfg.seed;
            co.workers = opts.workers;
            co.z = cfg.z;
            row.mc = run_campaign(model, params.d, rule, co);
        } catch (const std::exception& e) {
            note_error(row, e.what());
        }
    }
    return row;
}

}  // namespace detail

/// Evaluates every (m, rule) grid point, m-major, in configuration order.
/// Failures are recorded in the row's error field.
inline ResultTable run_sweep(const SweepConfig& cfg, const SweepOptions& opts = {})
{
    ResultTable table;
    for (const auto& m : cfg.m_grid)
        for (const auto& rule : cfg.rule_grid)
            table.rows.push_back(detail::evaluate_point(cfg, m, rule, opts));
    return table;
}

//---------------------------------------------------------------------------//
// Output
//---------------------------------------------------------------------------//

inline const std::vector<std::string>& csv_header()
{
    static const std::vector<std::string> header = {
        "eta", "n_b", "d", "m", "rule", "r_or_n", "p_tp", "p_fp",
        "energy_axis", "analytic_energy", "analytic_energy_per_position",
        "analytic_classical_lb", "analytic_tmsv_ub", "analytic_fixed_shot_error",
        "analytic_truncated_energy", "analytic_truncated_error",
        "analytic_expected_transmissions", "analytic_first_click_bound", "analytic_series",
        "analytic_series_tail", "analytic_chernoff_c", "analytic_r_click_bound",
        "analytic_error", "analytic_error_clamped",
        "mc_trials", "mc_errors", "mc_error", "mc_ci_low", "mc_ci_high",
        "mc_mean_transmissions", "mc_mean_transmissions_ci_low",
        "mc_mean_transmissions_ci_high", "mc_mean_photons", "seed", "error"};
    return header;
}

/// Shortest round-trip text is not required; 17 significant digits always
/// round-trips a double and is stable across runs.
inline std::string format_real(double v)
{
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace detail {

inline std::string opt_real(const std::optional<double>& v) { return v ? format_real(*v) : ""; }

inline std::string csv_escape(const std::string& field)
{
    if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

inline std::vector<std::string> row_fields(const SweepRow& row)
{
    const auto& mc = row.mc;
    std::optional<double> clamped;
    if (row.error_estimate) clamped = clamp_probability(*row.error_estimate);
    return {
        format_real(row.params.eta),
        format_real(row.params.n_b),
        std::to_string(row.params.d),
        row.params.m.to_string(),
        rule_name(row.rule),
        std::to_string(rule_count(row.rule)),
        row.model ? format_real(row.model->p_tp) : "",
        row.model ? format_real(row.model->p_fp) : "",
        to_string(row.energy_axis),
        opt_real(row.energy),
        opt_real(row.energy_per_position),
        opt_real(row.classical_lb),
        opt_real(row.tmsv_ub),
        opt_real(row.fixed_shot_error),
        opt_real(row.truncated_energy),
        opt_real(row.truncated_error),
        opt_real(row.expected_transmissions),
        opt_real(row.first_click_bound),
        opt_real(row.series),
        opt_real(row.series_tail),
        opt_real(row.chernoff_c),
        opt_real(row.r_click_bound),
        opt_real(row.error_estimate),
        opt_real(clamped),
        mc ? std::to_string(mc->trials) : "",
        mc ? std::to_string(mc->errors) : "",
        mc ? format_real(mc->error_rate) : "",
        mc ? format_real(mc->ci_low) : "",
        mc ? format_real(mc->ci_high) : "",
        mc ? format_real(mc->mean_transmissions) : "",
        mc ? format_real(mc->transmissions_ci_low) : "",
        mc ? format_real(mc->transmissions_ci_high) : "",
        mc ? format_real(mc->mean_photons) : "",
        std::to_string(row.seed),
        row.error,
    };
}

}  // namespace detail

inline void write_csv(const ResultTable& table, std::ostream& out)
{
    auto write_line = [&](const std::vector<std::string>& fields) {
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i) out << ',';
            out << detail::csv_escape(fields[i]);
        }
        out << '\n';
    };
    write_line(csv_header());
    for (const auto& row : table.rows) write_line(detail::row_fields(row));
}

inline void write_csv(const ResultTable& table, const std::string& path)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + path + " for writing");
    write_csv(table, out);
    out.flush();
    if (!out) throw Error("write to " + path + " failed");
}

/// The CSV table as a JSON array of objects; empty cells become null and
/// numeric cells are emitted as numbers.
inline nlohmann::json to_json(const ResultTable& table)
{
    static const std::set<std::string> text_columns = {"m", "rule", "energy_axis", "error"};
    nlohmann::json out = nlohmann::json::array();
    const auto& header = csv_header();
    for (const auto& row : table.rows) {
        auto fields = detail::row_fields(row);
        nlohmann::json obj = nlohmann::json::object();
        for (std::size_t i = 0; i < header.size(); ++i) {
            const auto& f = fields[i];
            if (text_columns.count(header[i])) obj[header[i]] = f;
            else if (f.empty()) obj[header[i]] = nullptr;
            else if (f == "inf" || f == "-inf" || f == "nan") obj[header[i]] = f;
            else if (header[i] == "d" || header[i] == "r_or_n" || header[i] == "seed"
                     || header[i] == "mc_trials" || header[i] == "mc_errors")
                obj[header[i]] = std::stoull(f);
            else obj[header[i]] = std::strtod(f.c_str(), nullptr);
        }
        out.push_back(std::move(obj));
    }
    return out;
}

inline void write_json(const ResultTable& table, const std::string& path)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + path + " for writing");
    out << to_json(table).dump(2) << '\n';
    if (!out) throw Error("write to " + path + " failed");
}

}  // namespace qtf
