/*
 * Copyright 2026 The qospapc Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

     http://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.

*/

// Text formats: JSON documents (with // and /* */ comments allowed) for
// configs, and locale-independent number formatting shared by the CSV
// and JSON writers.
//
// Power-valued fields are strings with an explicit unit:
//   "10 dBm"   P[W] = 10^(P_dBm / 10) / 1000
//   "2.5 mW"
//   "0.01 W"
// A bare number is rejected for these fields. Serialization always
// writes watts with the shortest round-tripping decimal, so
// parse(serialize(c)) == c bit for bit.

#pragma once

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <json.hpp>

#include <qospapc/channel.hpp>
#include <qospapc/model.hpp>

namespace qospapc {

using Json = nlohmann::ordered_json;

/// Shortest decimal that reads back to the same double; "nan", "inf",
/// "-inf" for non-finite values. Never depends on the global locale.
inline std::string format_double(double x)
{
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), x);
    if (res.ec != std::errc()) throw std::runtime_error("format_double: to_chars failed");
    return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s)
{
    while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
    while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        throw std::invalid_argument("not a number: '" + std::string(s) + "'");
    }
    return v;
}

/// "<number> <unit>" with unit dBm, mW or W (case-sensitive), to watts.
inline double parse_power(std::string_view text)
{
    const auto space = text.find_last_of(' ');
    if (space == std::string_view::npos) {
        throw std::invalid_argument("power '" + std::string(text) + "' needs a unit suffix (dBm, mW or W)");
    }
    const double value = parse_double(text.substr(0, space));
    const std::string_view unit = text.substr(space + 1);
    if (unit == "dBm") return dbm_to_watts(value);
    if (unit == "mW") return value / 1000.0;
    if (unit == "W") return value;
    throw std::invalid_argument("unknown power unit '" + std::string(unit) + "' (expected dBm, mW or W)");
}

inline std::string format_power(double watts) { return format_double(watts) + " W"; }

/// Reads a JSON document, comments allowed.
inline Json read_json_file(const std::filesystem::path& path)
{
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open " + path.string());
    std::stringstream ss;
    ss << is.rdbuf();
    try {
        return Json::parse(ss.str(), nullptr, true, true);
    } catch (const Json::parse_error& e) {
        throw ConfigError({path.string() + ": " + e.what()});
    }
}

/// Writes text to path via a sibling temporary file and a rename, so
/// readers never see a partial file.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& text)
{
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
        os << text;
        os.flush();
        if (!os) throw std::runtime_error("write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

namespace detail {

/// Collects problems while walking a document instead of stopping at
/// the first one.
class FieldReader {
public:
    FieldReader(const Json& j, std::string section, std::vector<std::string>& issues)
        : j_(j), section_(std::move(section)), issues_(issues)
    {
        if (!j_.is_object()) issues_.push_back(section_ + " must be an object");
    }

    bool has(const char* key) const { return j_.is_object() && j_.contains(key); }

    template <class T>
    void get(const char* key, T& out)
    {
        if (!has(key)) return;
        try {
            out = j_.at(key).get<T>();
        } catch (const std::exception&) {
            issues_.push_back(where(key) + " has the wrong type");
        }
    }

    void power(const char* key, double& out)
    {
        if (!has(key)) return;
        const Json& v = j_.at(key);
        if (!v.is_string()) {
            issues_.push_back(where(key) + " must be a string with a unit, e.g. \"10 dBm\"");
            return;
        }
        try {
            out = parse_power(v.get<std::string>());
        } catch (const std::exception& e) {
            issues_.push_back(where(key) + ": " + e.what());
        }
    }

    void powers(const char* key, std::vector<double>& out)
    {
        if (!has(key)) return;
        const Json& v = j_.at(key);
        if (!v.is_array()) {
            issues_.push_back(where(key) + " must be an array of power strings");
            return;
        }
        out.clear();
        for (std::size_t i = 0; i < v.size(); ++i) {
            try {
                if (!v[i].is_string()) throw std::invalid_argument("must be a string with a unit");
                out.push_back(parse_power(v[i].get<std::string>()));
            } catch (const std::exception& e) {
                issues_.push_back(where(key) + "[" + std::to_string(i) + "]: " + e.what());
            }
        }
    }

    void reject_unknown(std::initializer_list<const char*> known)
    {
        if (!j_.is_object()) return;
        for (const auto& item : j_.items()) {
            bool ok = false;
            for (const char* k : known) ok = ok || item.key() == k;
            if (!ok) issues_.push_back(where(item.key().c_str()) + " is not a recognized key");
        }
    }

    std::string where(const char* key) const { return section_ + "." + key; }

private:
    const Json& j_;
    std::string section_;
    std::vector<std::string>& issues_;
};

} // namespace detail

inline Json to_json(const SystemConfig& c)
{
    Json j;
    j["num_tx_antennas"] = c.num_tx_antennas;
    j["num_rx_antennas"] = c.num_rx_antennas;
    j["num_users"] = c.num_users;
    j["num_streams"] = c.num_streams;
    j["noise_power"] = format_power(c.noise_power);
    Json budgets = Json::array();
    for (double p : c.antenna_power_budgets) budgets.push_back(format_power(p));
    j["antenna_power_budgets"] = budgets;
    j["user_weights"] = c.user_weights;
    j["qos_targets_bits"] = c.qos_targets_bits;
    j["admm_penalty"] = c.admm_penalty;
    j["outer_max_iters"] = c.outer_max_iters;
    j["inner_max_iters"] = c.inner_max_iters;
    j["outer_tol"] = c.outer_tol;
    j["inner_tol"] = c.inner_tol;
    j["bisection_tol"] = c.bisection_tol;
    j["v_max_sweeps"] = c.v_max_sweeps;
    j["v_sweep_tol"] = c.v_sweep_tol;
    return j;
}

/// Missing keys keep their defaults. "total_power" is a shorthand for
/// uniform budgets total / N_t and conflicts with "antenna_power_budgets";
/// weights default to 1 and targets to 0 when absent. Throws ConfigError
/// listing every problem found, including the invariant checks of
/// check_config.
inline SystemConfig system_config_from_json(const Json& j, const std::string& section = "system")
{
    std::vector<std::string> issues;
    detail::FieldReader r(j, section, issues);
    r.reject_unknown({"num_tx_antennas", "num_rx_antennas", "num_users", "num_streams", "noise_power", "total_power",
                      "antenna_power_budgets", "user_weights", "qos_targets_bits", "admm_penalty", "outer_max_iters",
                      "inner_max_iters", "outer_tol", "inner_tol", "bisection_tol", "v_max_sweeps", "v_sweep_tol"});

    SystemConfig c;
    r.get("num_tx_antennas", c.num_tx_antennas);
    r.get("num_rx_antennas", c.num_rx_antennas);
    r.get("num_users", c.num_users);
    r.get("num_streams", c.num_streams);
    r.power("noise_power", c.noise_power);
    r.powers("antenna_power_budgets", c.antenna_power_budgets);
    if (r.has("total_power")) {
        if (r.has("antenna_power_budgets")) {
            issues.push_back(section + ": give either total_power or antenna_power_budgets, not both");
        }
        double total = 0.0;
        r.power("total_power", total);
        if (c.num_tx_antennas > 0) {
            c.antenna_power_budgets.assign(static_cast<std::size_t>(c.num_tx_antennas), total / c.num_tx_antennas);
        }
    }
    r.get("user_weights", c.user_weights);
    r.get("qos_targets_bits", c.qos_targets_bits);
    if (c.num_users > 0) {
        if (!r.has("user_weights")) c.user_weights.assign(static_cast<std::size_t>(c.num_users), 1.0);
        if (!r.has("qos_targets_bits")) c.qos_targets_bits.assign(static_cast<std::size_t>(c.num_users), 0.0);
    }
    r.get("admm_penalty", c.admm_penalty);
    r.get("outer_max_iters", c.outer_max_iters);
    r.get("inner_max_iters", c.inner_max_iters);
    r.get("outer_tol", c.outer_tol);
    r.get("inner_tol", c.inner_tol);
    r.get("bisection_tol", c.bisection_tol);
    r.get("v_max_sweeps", c.v_max_sweeps);
    r.get("v_sweep_tol", c.v_sweep_tol);

    if (issues.empty()) {
        for (auto& s : check_config(c)) issues.push_back(section + ": " + s);
    }
    if (!issues.empty()) throw ConfigError(std::move(issues));
    return c;
}

inline Json to_json(const ChannelModelParams& p)
{
    Json j;
    j["pathloss_intercept_db"] = p.pathloss_intercept_db;
    j["pathloss_slope"] = p.pathloss_slope;
    j["distance_min_km"] = p.distance_min_km;
    j["distance_max_km"] = p.distance_max_km;
    j["rng_seed"] = p.rng_seed;
    return j;
}

inline ChannelModelParams channel_params_from_json(const Json& j, std::vector<std::string>& issues,
                                                   const std::string& section = "channel")
{
    detail::FieldReader r(j, section, issues);
    ChannelModelParams p;
    r.get("pathloss_intercept_db", p.pathloss_intercept_db);
    r.get("pathloss_slope", p.pathloss_slope);
    r.get("distance_min_km", p.distance_min_km);
    r.get("distance_max_km", p.distance_max_km);
    r.get("rng_seed", p.rng_seed);
    if (!(p.distance_min_km > 0.0) || !(p.distance_max_km >= p.distance_min_km)) {
        issues.push_back(section + ": distance range must be positive and ordered");
    }
    return p;
}

inline Json to_json(const SolveReport& rep)
{
    Json j;
    j["status"] = to_string(rep.status);
    j["iterations_used"] = rep.iterations_used;
    j["wall_time_seconds"] = rep.wall_time_seconds;
    j["per_user_rates_bits"] = rep.per_user_rates_bits;
    j["qos_satisfied"] = rep.qos_satisfied;
    j["papc_satisfied"] = rep.papc_satisfied;
    j["infeasible_users"] = rep.infeasible_users;
    j["objective_trace"] = rep.objective_trace;
    j["wsr_trace_bits"] = rep.wsr_trace;
    j["primal_residual_trace"] = rep.primal_residual_trace;
    j["dual_residual_trace"] = rep.dual_residual_trace;
    j["inner_iterations_trace"] = rep.inner_iterations_trace;
    j["unreachable_trace"] = rep.unreachable_trace;
    return j;
}

} // namespace qospapc
