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

// Experiment harness behind the command-line tool: experiment spec files,
// seeded trial fan-out and CSV emission.
//
// Every trial is a pure function of (spec, seed), and results are
// collected by trial index before anything is written, so the output
// bytes do not depend on --jobs or on thread scheduling.

#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <qospapc/baselines.hpp>
#include <qospapc/channel.hpp>
#include <qospapc/config_io.hpp>
#include <qospapc/model.hpp>
#include <qospapc/solver.hpp>
#include <qospapc/wmmse.hpp>

namespace qospapc {

inline constexpr int kCsvSchemaVersion = 1;

enum class ExperimentKind { convergence, qos_sweep, ensemble_wsr, solve_one };

inline const char* to_string(ExperimentKind k)
{
    switch (k) {
    case ExperimentKind::convergence: return "convergence";
    case ExperimentKind::qos_sweep: return "qos_sweep";
    case ExperimentKind::ensemble_wsr: return "ensemble_wsr";
    case ExperimentKind::solve_one: return "solve_one";
    }
    return "unknown";
}

/// Target of one user swept over from, from + step, ..., up to `to`.
/// The user index is 1-based in files and 0-based here.
struct SweepAxis {
    int user = 0;
    double from = 1.0;
    double to = 7.0;
    double step = 1.0;

    std::vector<double> values() const
    {
        std::vector<double> out;
        const int n = static_cast<int>(std::floor((to - from) / step + 1e-9)) + 1;
        for (int i = 0; i < n; ++i) out.push_back(from + step * i);
        return out;
    }
};

struct ExperimentSpec {
    std::optional<ExperimentKind> kind;
    SystemConfig system;
    ChannelModelParams channel;
    std::optional<std::vector<double>> fixed_distances_km; // same positions for every seed
    std::optional<std::string> channel_file;               // solve-one only
    SweepAxis sweep;
    int trials = 1;
    std::vector<std::uint64_t> seeds; // empty: channel.rng_seed, +1, ... (trials of them)
    InitStrategy init = InitStrategy::matched_filter;
    std::string output_dir = "out";
};

inline std::vector<std::uint64_t> resolved_seeds(const ExperimentSpec& spec)
{
    if (!spec.seeds.empty()) return spec.seeds;
    std::vector<std::uint64_t> out;
    for (int i = 0; i < spec.trials; ++i) out.push_back(spec.channel.rng_seed + static_cast<std::uint64_t>(i));
    return out;
}

/// Replaces the seed list by `trials` consecutive seeds starting at base.
inline void override_seed(ExperimentSpec& spec, std::uint64_t base)
{
    spec.channel.rng_seed = base;
    spec.seeds.clear();
}

inline ExperimentKind parse_experiment_kind(const std::string& s)
{
    if (s == "convergence") return ExperimentKind::convergence;
    if (s == "qos_sweep" || s == "qos-sweep") return ExperimentKind::qos_sweep;
    if (s == "ensemble_wsr" || s == "ensemble") return ExperimentKind::ensemble_wsr;
    if (s == "solve_one" || s == "solve-one") return ExperimentKind::solve_one;
    throw ConfigError({"unknown experiment kind '" + s + "'"});
}

inline ExperimentSpec experiment_spec_from_json(const Json& j)
{
    std::vector<std::string> issues;
    detail::FieldReader r(j, "spec", issues);
    r.reject_unknown({"experiment", "system", "channel", "sweep", "trials", "seeds", "init", "output"});

    ExperimentSpec spec;
    if (r.has("experiment")) {
        std::string kind;
        r.get("experiment", kind);
        try {
            spec.kind = parse_experiment_kind(kind);
        } catch (const ConfigError& e) {
            issues.insert(issues.end(), e.issues().begin(), e.issues().end());
        }
    }

    if (j.is_object() && j.contains("system")) {
        try {
            spec.system = system_config_from_json(j.at("system"));
        } catch (const ConfigError& e) {
            issues.insert(issues.end(), e.issues().begin(), e.issues().end());
        }
    } else {
        issues.push_back("spec.system is required");
    }

    if (j.is_object() && j.contains("channel")) {
        const Json& c = j.at("channel");
        detail::FieldReader cr(c, "channel", issues);
        cr.reject_unknown({"pathloss_intercept_db", "pathloss_slope", "distance_min_km", "distance_max_km",
                           "rng_seed", "fixed_distances_km", "file"});
        spec.channel = channel_params_from_json(c, issues);
        if (cr.has("fixed_distances_km")) {
            std::vector<double> d;
            cr.get("fixed_distances_km", d);
            for (double x : d) {
                if (!(x > 0.0)) issues.push_back("channel.fixed_distances_km entries must be positive");
            }
            if (d.size() != static_cast<std::size_t>(spec.system.num_users)) {
                issues.push_back("channel.fixed_distances_km must have num_users entries");
            }
            spec.fixed_distances_km = d;
        }
        if (cr.has("file")) {
            std::string f;
            cr.get("file", f);
            spec.channel_file = f;
        }
    }

    if (j.is_object() && j.contains("sweep")) {
        const Json& s = j.at("sweep");
        detail::FieldReader sr(s, "sweep", issues);
        sr.reject_unknown({"user", "from", "to", "step"});
        int user = 1;
        sr.get("user", user);
        sr.get("from", spec.sweep.from);
        sr.get("to", spec.sweep.to);
        sr.get("step", spec.sweep.step);
        spec.sweep.user = user - 1;
        if (user < 1 || user > spec.system.num_users) issues.push_back("sweep.user must be in 1..num_users");
        if (!(spec.sweep.step > 0.0)) issues.push_back("sweep.step must be positive");
        if (!(spec.sweep.from <= spec.sweep.to)) issues.push_back("sweep bounds must satisfy from <= to");
        if (!(spec.sweep.from >= 0.0)) issues.push_back("sweep.from must be non-negative");
    }

    r.get("trials", spec.trials);
    r.get("seeds", spec.seeds);
    if (spec.trials < 1) issues.push_back("trials must be at least 1");
    if (r.has("seeds") && r.has("trials") && spec.seeds.size() != static_cast<std::size_t>(spec.trials)) {
        issues.push_back("seeds has " + std::to_string(spec.seeds.size()) + " entries but trials is "
                         + std::to_string(spec.trials));
    }
    if (r.has("seeds") && !r.has("trials")) spec.trials = static_cast<int>(spec.seeds.size());
    if (r.has("seeds") && spec.seeds.empty()) issues.push_back("seeds must not be empty");

    if (r.has("init")) {
        std::string init;
        r.get("init", init);
        if (init == "matched_filter") {
            spec.init = InitStrategy::matched_filter;
        } else if (init == "random") {
            spec.init = InitStrategy::random;
        } else {
            issues.push_back("init must be matched_filter or random");
        }
    }
    r.get("output", spec.output_dir);

    if (!issues.empty()) throw ConfigError(std::move(issues));
    return spec;
}

inline ExperimentSpec read_experiment_spec(const std::filesystem::path& path)
{
    return experiment_spec_from_json(read_json_file(path));
}

// ---------------------------------------------------------------------------

/// In-memory CSV table: a "# schema_version" comment, optional further
/// comment lines, one header row, then rows. Numbers are formatted with
/// format_double.
class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

    void comment(std::string line) { comments_.push_back(std::move(line)); }

    class Row {
    public:
        Row& operator<<(double x) { return cell(format_double(x)); }
        Row& operator<<(int x) { return cell(std::to_string(x)); }
        Row& operator<<(std::uint64_t x) { return cell(std::to_string(x)); }
        Row& operator<<(const std::string& s) { return cell(s); }
        Row& operator<<(const char* s) { return cell(s); }

    private:
        friend class CsvTable;
        explicit Row(std::vector<std::string>& cells) : cells_(cells) {}
        Row& cell(std::string s)
        {
            cells_.push_back(std::move(s));
            return *this;
        }
        std::vector<std::string>& cells_;
    };

    Row row()
    {
        rows_.emplace_back();
        return Row(rows_.back());
    }

    std::string text() const
    {
        std::string out = "# schema_version=" + std::to_string(kCsvSchemaVersion) + "\n";
        for (const auto& c : comments_) out += "# " + c + "\n";
        append(out, header_);
        for (const auto& r : rows_) {
            if (r.size() != header_.size()) throw std::logic_error("CsvTable: row width differs from header");
            append(out, r);
        }
        return out;
    }

    void write(const std::filesystem::path& path) const { write_file_atomic(path, text()); }

    std::size_t rows() const noexcept { return rows_.size(); }

private:
    static void append(std::string& out, const std::vector<std::string>& cells)
    {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out += ',';
            out += cells[i];
        }
        out += '\n';
    }

    std::vector<std::string> header_;
    std::vector<std::string> comments_;
    std::vector<std::vector<std::string>> rows_;
};

/// Runs fn(i) for i in [0, n) on up to `jobs` threads. The exception of
/// the lowest failing index is rethrown after all workers finish.
template <class Fn>
void parallel_for(int n, int jobs, Fn&& fn)
{
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(std::max(n, 0)));
    std::atomic<int> next{0};
    auto worker = [&] {
        for (int i = next++; i < n; i = next++) {
            try {
                fn(i);
            } catch (...) {
                errors[static_cast<std::size_t>(i)] = std::current_exception();
            }
        }
    };
    const int threads = std::clamp(jobs, 1, std::max(n, 1));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

// ---------------------------------------------------------------------------

/// What one experiment run produced, for summaries and exit codes.
struct ExperimentOutcome {
    std::vector<std::filesystem::path> files;
    int solves = 0;
    int infeasible = 0; // solves that ended with status infeasible_qos
    std::vector<std::string> summary;

    bool infeasible_only() const { return solves > 0 && infeasible == solves; }
};

inline ChannelDraw experiment_channels(const ExperimentSpec& spec, const ValidConfig& cfg, std::uint64_t seed)
{
    ChannelModelParams p = spec.channel;
    p.rng_seed = seed;
    if (spec.fixed_distances_km) return generate_channels_at(cfg, p, *spec.fixed_distances_km);
    return generate_channels(cfg, p);
}

inline bool all_targets_zero(const ValidConfig& cfg)
{
    for (double r : cfg.raw().qos_targets_bits) {
        if (r != 0.0) return false;
    }
    return true;
}

/// WSR (bits) of a baseline, NaN when zero-forcing is impossible.
inline double zf_wsr_bits(const ChannelSet& ch, const ValidConfig& cfg)
{
    try {
        return weighted_sum_rate(ch, zf_normalized(ch, cfg), cfg).weighted_sum_bits();
    } catch (const RankDeficientChannel&) {
        return std::nan("");
    }
}

inline double wmmse_normalized_wsr_bits(const ChannelSet& ch, const ValidConfig& cfg)
{
    return weighted_sum_rate(ch, wmmse_spc_normalized(ch, cfg), cfg).weighted_sum_bits();
}

inline CsvTable trace_table(const SolveReport& rep)
{
    CsvTable t({"iteration", "objective", "wsr_bits", "primal_res", "dual_res"});
    for (std::size_t i = 0; i < rep.wsr_trace.size(); ++i) {
        t.row() << static_cast<int>(i + 1) << rep.objective_trace[i] << rep.wsr_trace[i]
                << rep.primal_residual_trace[i] << rep.dual_residual_trace[i];
    }
    return t;
}

namespace detail {

inline double padded(const std::vector<double>& trace, std::size_t i)
{
    if (trace.empty()) return std::nan("");
    return i < trace.size() ? trace[i] : trace.back();
}

inline SolveOptions options_for(const ExperimentSpec& spec, std::uint64_t seed)
{
    SolveOptions o;
    o.init = spec.init;
    o.seed = seed;
    return o;
}

} // namespace detail

/// WSR versus outer iteration for the proposed solver and papc_only, with
/// the two normalized baselines as constant lines. Traces shorter than
/// the longest are padded with their final value.
inline ExperimentOutcome run_convergence(const ExperimentSpec& spec, int jobs = 1)
{
    const ValidConfig cfg = validate_config(spec.system);
    const ValidConfig no_qos = with_targets(cfg, std::vector<double>(static_cast<std::size_t>(cfg.users()), 0.0));
    const auto seeds = resolved_seeds(spec);
    const int n = static_cast<int>(seeds.size());

    struct Trial {
        SolveReport proposed, papc;
        double wmmse = 0.0, zf = 0.0;
    };
    std::vector<Trial> trials(static_cast<std::size_t>(n));
    parallel_for(n, jobs, [&](int i) {
        const auto seed = seeds[static_cast<std::size_t>(i)];
        const ChannelDraw draw = experiment_channels(spec, cfg, seed);
        Trial& t = trials[static_cast<std::size_t>(i)];
        t.proposed = solve(draw.channels, cfg, detail::options_for(spec, seed)).report;
        t.papc = all_targets_zero(cfg) ? t.proposed
                                       : solve(draw.channels, no_qos, detail::options_for(spec, seed)).report;
        t.wmmse = wmmse_normalized_wsr_bits(draw.channels, cfg);
        t.zf = zf_wsr_bits(draw.channels, cfg);
    });

    ExperimentOutcome out;
    const std::filesystem::path dir = spec.output_dir;
    const std::vector<std::string> header{"iteration", "wsr_proposed", "wsr_papc_only", "wsr_wmmse_normalized",
                                          "wsr_zf_normalized"};
    std::size_t longest = 0;
    for (const auto& t : trials) {
        longest = std::max({longest, t.proposed.wsr_trace.size(), t.papc.wsr_trace.size()});
    }
    for (int i = 0; i < n; ++i) {
        const Trial& t = trials[static_cast<std::size_t>(i)];
        const std::string tag = "seed" + std::to_string(seeds[static_cast<std::size_t>(i)]);
        CsvTable table(header);
        table.comment("experiment=convergence " + tag);
        const std::size_t len = std::max(t.proposed.wsr_trace.size(), t.papc.wsr_trace.size());
        for (std::size_t it = 0; it < len; ++it) {
            table.row() << static_cast<int>(it + 1) << detail::padded(t.proposed.wsr_trace, it)
                        << detail::padded(t.papc.wsr_trace, it) << t.wmmse << t.zf;
        }
        out.files.push_back(dir / ("convergence_" + tag + ".csv"));
        table.write(out.files.back());

        CsvTable trace = trace_table(t.proposed);
        trace.comment("experiment=convergence proposed solver trace " + tag);
        out.files.push_back(dir / ("trace_" + tag + ".csv"));
        trace.write(out.files.back());

        out.solves += 1;
        if (t.proposed.status == SolveStatus::infeasible_qos) out.infeasible += 1;
    }

    CsvTable mean(header);
    mean.comment("experiment=convergence mean over " + std::to_string(n) + " seeds");
    for (std::size_t it = 0; it < longest; ++it) {
        double a = 0.0, b = 0.0, c = 0.0, d = 0.0;
        for (const auto& t : trials) {
            a += detail::padded(t.proposed.wsr_trace, it);
            b += detail::padded(t.papc.wsr_trace, it);
            c += t.wmmse;
            d += t.zf;
        }
        mean.row() << static_cast<int>(it + 1) << a / n << b / n << c / n << d / n;
    }
    out.files.push_back(dir / "convergence_mean.csv");
    mean.write(out.files.back());
    out.summary.push_back("convergence: " + std::to_string(n) + " seeds, longest trace " + std::to_string(longest)
                          + " outer iterations");
    return out;
}

/// Sweeps one user's QoS target on fixed channels per seed. The sweep is
/// a continuation: each point starts from the previous point's precoders.
inline ExperimentOutcome run_qos_sweep(const ExperimentSpec& spec, int jobs = 1)
{
    const ValidConfig cfg = validate_config(spec.system);
    if (cfg.users() < 2) throw ConfigError({"qos_sweep needs at least two users"});
    const auto seeds = resolved_seeds(spec);
    const auto values = spec.sweep.values();
    const int n = static_cast<int>(seeds.size());
    const int k_users = cfg.users();

    struct Point {
        double target = 0.0;
        SolveReport report;
        double wsr = 0.0;
    };
    struct Trial {
        std::vector<Point> points;
        SolveReport papc;
        double papc_wsr = 0.0;
    };
    std::vector<Trial> trials(static_cast<std::size_t>(n));
    parallel_for(n, jobs, [&](int i) {
        const auto seed = seeds[static_cast<std::size_t>(i)];
        const ChannelDraw draw = experiment_channels(spec, cfg, seed);
        Trial& t = trials[static_cast<std::size_t>(i)];
        const SolveResult papc = papc_only(draw.channels, cfg, detail::options_for(spec, seed));
        t.papc = papc.report;
        t.papc_wsr = weighted_sum_rate(draw.channels, papc.precoders, cfg).weighted_sum_bits();

        std::optional<PrecoderSet> previous;
        for (double v : values) {
            std::vector<double> targets = cfg.raw().qos_targets_bits;
            targets[static_cast<std::size_t>(spec.sweep.user)] = v;
            const ValidConfig point_cfg = with_targets(cfg, targets);
            SolveOptions o = detail::options_for(spec, seed);
            o.warm_start = previous;
            SolveResult r = solve(draw.channels, point_cfg, o);
            const double wsr = weighted_sum_rate(draw.channels, r.precoders, cfg).weighted_sum_bits();
            t.points.push_back({v, r.report, wsr});
            previous = std::move(r.precoders);
        }
    });

    std::vector<std::string> header{"seed", "r_target", "status", "feasible", "wsr_proposed"};
    for (int k = 0; k < k_users; ++k) header.push_back("rate_proposed_user" + std::to_string(k + 1));
    header.push_back("wsr_papc_only");
    for (int k = 0; k < k_users; ++k) header.push_back("rate_papc_only_user" + std::to_string(k + 1));

    CsvTable table(header);
    table.comment("experiment=qos_sweep swept_user=" + std::to_string(spec.sweep.user + 1)
                  + " feasible=1 when every achieved rate meets its target within "
                  + format_double(kQosToleranceBits) + " bit");
    ExperimentOutcome out;
    for (int i = 0; i < n; ++i) {
        const Trial& t = trials[static_cast<std::size_t>(i)];
        for (const auto& p : t.points) {
            auto row = table.row();
            row << seeds[static_cast<std::size_t>(i)] << p.target << to_string(p.report.status)
                << (p.report.all_qos_satisfied() ? 1 : 0) << p.wsr;
            for (double r : p.report.per_user_rates_bits) row << r;
            row << t.papc_wsr;
            for (double r : t.papc.per_user_rates_bits) row << r;
            out.solves += 1;
            if (p.report.status == SolveStatus::infeasible_qos) out.infeasible += 1;
        }
    }
    out.files.push_back(std::filesystem::path(spec.output_dir) / "qos_sweep.csv");
    table.write(out.files.back());
    out.summary.push_back("qos_sweep: " + std::to_string(n) + " channel draws x " + std::to_string(values.size())
                          + " targets, " + std::to_string(out.infeasible) + " infeasible_qos");
    return out;
}

/// Final WSR of every method over the seeds, plus mean, spread and
/// pairwise win counts (a wins over b when WSR_a >= WSR_b).
inline ExperimentOutcome run_ensemble_wsr(const ExperimentSpec& spec, int jobs = 1)
{
    const ValidConfig cfg = validate_config(spec.system);
    const ValidConfig no_qos = with_targets(cfg, std::vector<double>(static_cast<std::size_t>(cfg.users()), 0.0));
    const auto seeds = resolved_seeds(spec);
    const int n = static_cast<int>(seeds.size());

    static constexpr int kMethods = 4;
    const std::array<const char*, kMethods> names{"proposed", "papc_only", "wmmse_normalized", "zf_normalized"};
    struct Trial {
        SolveReport report;
        std::array<double, kMethods> wsr{};
    };
    std::vector<Trial> trials(static_cast<std::size_t>(n));
    parallel_for(n, jobs, [&](int i) {
        const auto seed = seeds[static_cast<std::size_t>(i)];
        const ChannelDraw draw = experiment_channels(spec, cfg, seed);
        Trial& t = trials[static_cast<std::size_t>(i)];
        const SolveResult proposed = solve(draw.channels, cfg, detail::options_for(spec, seed));
        t.report = proposed.report;
        t.wsr[0] = weighted_sum_rate(draw.channels, proposed.precoders, cfg).weighted_sum_bits();
        if (all_targets_zero(cfg)) {
            t.wsr[1] = t.wsr[0];
        } else {
            const SolveResult papc = solve(draw.channels, no_qos, detail::options_for(spec, seed));
            t.wsr[1] = weighted_sum_rate(draw.channels, papc.precoders, cfg).weighted_sum_bits();
        }
        t.wsr[2] = wmmse_normalized_wsr_bits(draw.channels, cfg);
        t.wsr[3] = zf_wsr_bits(draw.channels, cfg);
    });

    ExperimentOutcome out;
    const std::filesystem::path dir = spec.output_dir;

    CsvTable per_trial({"seed", "status", "iterations", "wsr_proposed", "wsr_papc_only", "wsr_wmmse_normalized",
                        "wsr_zf_normalized"});
    per_trial.comment("experiment=ensemble_wsr");
    for (int i = 0; i < n; ++i) {
        const Trial& t = trials[static_cast<std::size_t>(i)];
        per_trial.row() << seeds[static_cast<std::size_t>(i)] << to_string(t.report.status)
                        << t.report.iterations_used << t.wsr[0] << t.wsr[1] << t.wsr[2] << t.wsr[3];
        out.solves += 1;
        if (t.report.status == SolveStatus::infeasible_qos) out.infeasible += 1;
    }
    out.files.push_back(dir / "ensemble_trials.csv");
    per_trial.write(out.files.back());

    std::vector<std::string> header{"method", "trials", "mean_wsr_bits", "std_wsr_bits"};
    for (const char* b : names) header.push_back(std::string("wins_over_") + b);
    CsvTable summary(header);
    summary.comment("experiment=ensemble_wsr std is the sample standard deviation; NaN entries never win");
    for (int a = 0; a < kMethods; ++a) {
        double mean = 0.0;
        for (const auto& t : trials) mean += t.wsr[static_cast<std::size_t>(a)];
        mean /= n;
        double var = 0.0;
        for (const auto& t : trials) {
            const double e = t.wsr[static_cast<std::size_t>(a)] - mean;
            var += e * e;
        }
        const double sd = n > 1 ? std::sqrt(var / (n - 1)) : 0.0;
        auto row = summary.row();
        row << names[static_cast<std::size_t>(a)] << n << mean << sd;
        for (int b = 0; b < kMethods; ++b) {
            int wins = 0;
            for (const auto& t : trials) {
                wins += t.wsr[static_cast<std::size_t>(a)] >= t.wsr[static_cast<std::size_t>(b)] ? 1 : 0;
            }
            row << wins;
        }
        out.summary.push_back(std::string(names[static_cast<std::size_t>(a)]) + ": mean WSR " + format_double(mean)
                              + " bit/s/Hz over " + std::to_string(n) + " trials");
    }
    out.files.push_back(dir / "ensemble_summary.csv");
    summary.write(out.files.back());
    return out;
}

/// One solve on the first seed (or on channel.file when given): report
/// JSON with constraint diagnostics, the trace CSV, and the channels used.
inline ExperimentOutcome run_solve_one(const ExperimentSpec& spec, KktReport* kkt = nullptr)
{
    const ValidConfig cfg = validate_config(spec.system);
    const auto seed = resolved_seeds(spec).front();
    ChannelDraw draw;
    if (spec.channel_file) {
        draw = read_channel_file(*spec.channel_file);
        check_dimensions(draw.channels, cfg);
    } else {
        draw = experiment_channels(spec, cfg, seed);
    }
    const SolveResult r = solve(draw.channels, cfg, detail::options_for(spec, seed));
    const KktReport diag = kkt_report(r.precoders, draw.channels, cfg);
    if (kkt) *kkt = diag;

    ExperimentOutcome out;
    const std::filesystem::path dir = spec.output_dir;
    Json doc;
    doc["schema_version"] = kCsvSchemaVersion;
    doc["seed"] = draw.seed;
    doc["distances_km"] = draw.distances_km;
    doc["system"] = to_json(cfg.raw());
    doc["report"] = to_json(r.report);
    Json k;
    k["wsr_bits"] = diag.wsr_bits;
    k["antenna_power_ratio"] = diag.antenna_power_ratio;
    k["rate_minus_target_bits"] = diag.rate_minus_target_bits;
    k["papc_ok"] = diag.papc_ok;
    k["qos_ok"] = diag.qos_ok;
    doc["kkt"] = k;
    out.files.push_back(dir / "report.json");
    write_file_atomic(out.files.back(), doc.dump(2) + "\n");

    CsvTable trace = trace_table(r.report);
    trace.comment("experiment=solve_one seed" + std::to_string(draw.seed));
    out.files.push_back(dir / "trace.csv");
    trace.write(out.files.back());

    if (!spec.channel_file) {
        out.files.push_back(dir / "channels.qpch");
        write_channel_file(out.files.back(), draw);
    }
    out.solves = 1;
    out.infeasible = r.report.status == SolveStatus::infeasible_qos ? 1 : 0;
    out.summary.push_back("status " + std::string(to_string(r.report.status)) + " after "
                          + std::to_string(r.report.iterations_used) + " outer iterations, WSR "
                          + format_double(diag.wsr_bits) + " bit/s/Hz, max antenna load "
                          + format_double(diag.max_ratio()));
    for (int u = 0; u < cfg.users(); ++u) {
        const auto ku = static_cast<std::size_t>(u);
        out.summary.push_back("user " + std::to_string(u + 1) + ": rate " + format_double(diag.rates_bits[ku])
                              + " bit/s/Hz, target " + format_double(cfg.raw().qos_targets_bits[ku])
                              + (diag.qos_ok[ku] ? " (met)" : " (NOT met)"));
    }
    return out;
}

inline ExperimentOutcome run_experiment(ExperimentKind kind, const ExperimentSpec& spec, int jobs = 1)
{
    switch (kind) {
    case ExperimentKind::convergence: return run_convergence(spec, jobs);
    case ExperimentKind::qos_sweep: return run_qos_sweep(spec, jobs);
    case ExperimentKind::ensemble_wsr: return run_ensemble_wsr(spec, jobs);
    case ExperimentKind::solve_one: return run_solve_one(spec);
    }
    throw std::logic_error("run_experiment: unknown kind");
}

} // namespace qospapc
