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

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include <gtest/gtest.h>

#include <qospapc/qospapc.hpp>

using namespace qospapc;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p)
{
    std::ifstream is(p, std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

/// Parsed CSV: comment lines, header, and rows of cells.
struct Csv {
    std::vector<std::string> comments;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t col(const std::string& name) const
    {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (header[i] == name) return i;
        }
        throw std::out_of_range("no column " + name);
    }
    double num(std::size_t r, const std::string& name) const { return parse_double(rows[r][col(name)]); }
};

std::vector<std::string> split(const std::string& line)
{
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    return out;
}

Csv read_csv(const fs::path& p)
{
    Csv csv;
    std::istringstream is(slurp(p));
    std::string line;
    while (std::getline(is, line)) {
        if (line.rfind("#", 0) == 0) {
            csv.comments.push_back(line);
        } else if (csv.header.empty()) {
            csv.header = split(line);
        } else {
            csv.rows.push_back(split(line));
        }
    }
    return csv;
}

fs::path fresh_dir(const std::string& name)
{
    const fs::path d = fs::temp_directory_path() / ("qospapc_exp_" + name);
    fs::remove_all(d);
    return d;
}

/// A desk-sized spec: 8 antennas, 3 single-stream users.
ExperimentSpec small_spec(const fs::path& out)
{
    ExperimentSpec s;
    s.system = make_uniform_config(8, 2, 3, 1, dbm_to_watts(10.0));
    s.system.outer_max_iters = 30;
    s.trials = 3;
    s.channel.rng_seed = 11;
    s.output_dir = out.string();
    return s;
}

int run_cli(const std::string& args)
{
    const std::string cmd = std::string(QOSPAPC_CLI) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path write_spec(const std::string& name, const std::string& text)
{
    const fs::path p = fs::temp_directory_path() / ("qospapc_spec_" + name + ".json");
    std::ofstream(p) << text;
    return p;
}

} // namespace

TEST(CsvTable, LayoutAndWidthCheck)
{
    CsvTable t({"a", "b"});
    t.comment("note");
    t.row() << 1 << 0.25;
    t.row() << std::string("x") << std::nan("");
    EXPECT_EQ(t.text(), "# schema_version=1\n# note\na,b\n1,0.25\nx,nan\n");
    t.row() << 1;
    EXPECT_THROW(t.text(), std::logic_error);
}

TEST(ParallelFor, CoversEveryIndexAndRethrowsLowest)
{
    std::vector<int> hits(50, 0);
    parallel_for(50, 4, [&](int i) { hits[static_cast<std::size_t>(i)] += 1; });
    for (int h : hits) EXPECT_EQ(h, 1);
    try {
        parallel_for(10, 3, [](int i) {
            if (i == 7 || i == 4) throw std::runtime_error(std::to_string(i));
        });
        FAIL();
    } catch (const std::runtime_error& e) {
        EXPECT_STREQ(e.what(), "4");
    }
}

TEST(SweepAxis, InclusiveValues)
{
    SweepAxis a;
    a.from = 0.5;
    a.to = 2.0;
    a.step = 0.5;
    EXPECT_EQ(a.values(), (std::vector<double>{0.5, 1.0, 1.5, 2.0}));
    a.to = 0.5;
    EXPECT_EQ(a.values(), (std::vector<double>{0.5}));
}

TEST(Convergence, FilesColumnsAndConstantBaselines)
{
    const fs::path dir = fresh_dir("conv");
    const ExperimentOutcome o = run_convergence(small_spec(dir));
    EXPECT_EQ(o.solves, 3);
    EXPECT_EQ(o.files.size(), 7u);
    for (const auto& f : o.files) {
        EXPECT_TRUE(fs::exists(f));
        EXPECT_FALSE(fs::exists(f.string() + ".tmp"));
    }
    const Csv c = read_csv(dir / "convergence_seed11.csv");
    ASSERT_FALSE(c.comments.empty());
    EXPECT_EQ(c.comments[0], "# schema_version=1");
    EXPECT_EQ(c.header, (std::vector<std::string>{"iteration", "wsr_proposed", "wsr_papc_only",
                                                  "wsr_wmmse_normalized", "wsr_zf_normalized"}));
    ASSERT_GT(c.rows.size(), 1u);
    for (std::size_t r = 0; r < c.rows.size(); ++r) {
        EXPECT_EQ(c.num(r, "wsr_wmmse_normalized"), c.num(0, "wsr_wmmse_normalized"));
        EXPECT_EQ(c.num(r, "wsr_zf_normalized"), c.num(0, "wsr_zf_normalized"));
        // zero targets: proposed and papc_only are the same run
        EXPECT_EQ(c.num(r, "wsr_proposed"), c.num(r, "wsr_papc_only"));
    }

    const Csv mean = read_csv(dir / "convergence_mean.csv");
    for (std::size_t r = 2; r < mean.rows.size(); ++r) {
        EXPECT_GE(mean.num(r, "wsr_proposed"), mean.num(r - 1, "wsr_proposed") - 1e-4);
    }

    const Csv trace = read_csv(dir / "trace_seed11.csv");
    EXPECT_EQ(trace.header, (std::vector<std::string>{"iteration", "objective", "wsr_bits", "primal_res", "dual_res"}));
}

TEST(Convergence, QosRunEndsNearPapcOnly)
{
    // Low targets leave the solution almost unchanged.
    const fs::path dir = fresh_dir("conv_qos");
    ExperimentSpec s = small_spec(dir);
    s.trials = 1;
    s.system.qos_targets_bits = {0.1, 0.1, 0.1};
    run_convergence(s);
    const Csv c = read_csv(dir / "convergence_seed11.csv");
    const std::size_t last = c.rows.size() - 1;
    EXPECT_NEAR(c.num(last, "wsr_proposed"), c.num(last, "wsr_papc_only"), 0.01 * c.num(last, "wsr_papc_only"));
}

TEST(QosSweep, PapcOnlyConstantAndTargetsMet)
{
    const fs::path dir = fresh_dir("sweep");
    ExperimentSpec s = small_spec(dir);
    s.trials = 2;
    s.system.qos_targets_bits = {1.0, 2.0, 2.0};
    s.sweep.user = 0;
    s.sweep.from = 1;
    s.sweep.to = 4;
    s.fixed_distances_km = std::vector<double>{0.1, 0.1, 0.1};
    const ExperimentOutcome o = run_qos_sweep(s);
    EXPECT_EQ(o.solves, 8);
    const Csv c = read_csv(dir / "qos_sweep.csv");
    ASSERT_EQ(c.rows.size(), 8u);
    EXPECT_EQ(c.header[0], "seed");
    EXPECT_EQ(c.header[1], "r_target");
    for (std::size_t r = 0; r < c.rows.size(); ++r) {
        const std::size_t first = r - r % 4;
        for (int k = 1; k <= 3; ++k) {
            const std::string col = "rate_papc_only_user" + std::to_string(k);
            EXPECT_EQ(c.num(r, col), c.num(first, col));
        }
        const bool met = c.rows[r][c.col("feasible")] == "1";
        if (c.rows[r][c.col("status")] == "converged") {
            EXPECT_TRUE(met);
            EXPECT_GE(c.num(r, "rate_proposed_user1"), c.num(r, "r_target") - kQosToleranceBits);
        }
        if (met) {
            for (int k = 2; k <= 3; ++k) EXPECT_GE(c.num(r, "rate_proposed_user" + std::to_string(k)), 2.0 - 1e-3);
        }
    }
}

TEST(QosSweep, NeedsTwoUsers)
{
    ExperimentSpec s = small_spec(fresh_dir("sweep1"));
    s.system = make_uniform_config(4, 1, 1, 1, 1.0);
    EXPECT_THROW(run_qos_sweep(s), ConfigError);
}

TEST(Ensemble, SummaryMatchesTrials)
{
    const fs::path dir = fresh_dir("ens");
    ExperimentSpec s = small_spec(dir);
    s.trials = 4;
    run_ensemble_wsr(s);
    const Csv trials = read_csv(dir / "ensemble_trials.csv");
    const Csv summary = read_csv(dir / "ensemble_summary.csv");
    ASSERT_EQ(trials.rows.size(), 4u);
    ASSERT_EQ(summary.rows.size(), 4u);
    const std::vector<std::string> methods{"proposed", "papc_only", "wmmse_normalized", "zf_normalized"};
    for (std::size_t m = 0; m < methods.size(); ++m) {
        EXPECT_EQ(summary.rows[m][0], methods[m]);
        double mean = 0.0;
        for (std::size_t r = 0; r < 4; ++r) mean += trials.num(r, "wsr_" + methods[m]);
        EXPECT_NEAR(summary.num(m, "mean_wsr_bits"), mean / 4, 1e-12 * std::abs(mean));
        // a method always ties with itself
        EXPECT_EQ(summary.num(m, "wins_over_" + methods[m]), 4.0);
    }
}

TEST(Ensemble, SingleTrialHasZeroSpread)
{
    const fs::path dir = fresh_dir("ens1");
    ExperimentSpec s = small_spec(dir);
    s.trials = 1;
    run_ensemble_wsr(s);
    const Csv summary = read_csv(dir / "ensemble_summary.csv");
    EXPECT_EQ(summary.num(0, "std_wsr_bits"), 0.0);
}

TEST(Determinism, RerunsAndJobCountGiveIdenticalBytes)
{
    const fs::path a = fresh_dir("det_a");
    const fs::path b = fresh_dir("det_b");
    ExperimentSpec s = small_spec(a);
    run_ensemble_wsr(s, 1);
    run_convergence(s, 1);
    s.output_dir = b.string();
    run_ensemble_wsr(s, 3);
    run_convergence(s, 3);
    std::size_t compared = 0;
    for (const auto& e : fs::directory_iterator(a)) {
        EXPECT_EQ(slurp(e.path()), slurp(b / e.path().filename())) << e.path();
        ++compared;
    }
    EXPECT_EQ(compared, 9u);
}

TEST(SolveOne, ReportTraceAndChannelReplay)
{
    const fs::path dir = fresh_dir("one");
    ExperimentSpec s = small_spec(dir);
    s.system.qos_targets_bits = {0.5, 0.5, 0.5};
    KktReport kkt;
    const ExperimentOutcome o = run_solve_one(s, &kkt);
    EXPECT_EQ(o.solves, 1);
    const Json report = read_json_file(dir / "report.json");
    EXPECT_EQ(report["schema_version"], 1);
    EXPECT_EQ(report["seed"], 11);
    EXPECT_EQ(report["kkt"]["wsr_bits"].get<double>(), kkt.wsr_bits);
    EXPECT_EQ(system_config_from_json(report["system"]), s.system);
    ASSERT_TRUE(fs::exists(dir / "channels.qpch"));

    // Solving again on the stored channels reproduces the report.
    const fs::path dir2 = fresh_dir("one_replay");
    ExperimentSpec replay = s;
    replay.output_dir = dir2.string();
    replay.channel_file = (dir / "channels.qpch").string();
    KktReport kkt2;
    run_solve_one(replay, &kkt2);
    EXPECT_EQ(kkt2.rates_bits, kkt.rates_bits);
    EXPECT_EQ(slurp(dir / "trace.csv"), slurp(dir2 / "trace.csv"));
    EXPECT_FALSE(fs::exists(dir2 / "channels.qpch"));
}

TEST(SampleSpecs, AllParse)
{
    for (const char* name : {"convergence.json", "qos_sweep.json", "ensemble.json", "solve_one.json"}) {
        const ExperimentSpec s = read_experiment_spec(fs::path(QOSPAPC_SAMPLES_DIR) / name);
        EXPECT_TRUE(s.kind.has_value()) << name;
        EXPECT_NO_THROW(validate_config(s.system)) << name;
    }
}

TEST(Cli, ExitCodes)
{
    const fs::path out = fresh_dir("cli");
    const std::string small = R"({
        "experiment": "solve_one",
        "system": {"num_tx_antennas": 4, "num_rx_antennas": 1, "num_users": 2, "num_streams": 1,
                   "total_power": "10 dBm", "qos_targets_bits": [%T, 0]},
        "channel": {"rng_seed": 3}
    })";
    auto with_target = [&](const std::string& t) {
        std::string s = small;
        s.replace(s.find("%T"), 2, t);
        return s;
    };
    const fs::path ok = write_spec("ok", with_target("1"));
    EXPECT_EQ(run_cli("solve-one --config " + ok.string() + " --out " + out.string()), 0);
    EXPECT_TRUE(fs::exists(out / "report.json"));

    const fs::path impossible = write_spec("impossible", with_target("60"));
    EXPECT_EQ(run_cli("solve-one --config " + impossible.string() + " --out " + out.string()), 3);

    const fs::path broken = write_spec("broken", R"({"experiment": "solve_one", "system": {"num_users": 0}})");
    EXPECT_EQ(run_cli("solve-one --config " + broken.string()), 2);
    const fs::path not_json = write_spec("notjson", "{ nope");
    EXPECT_EQ(run_cli("solve-one --config " + not_json.string()), 2);
    // kind in the file disagrees with the subcommand
    EXPECT_EQ(run_cli("ensemble --config " + ok.string() + " --out " + out.string()), 2);
    EXPECT_EQ(run_cli("solve-one"), 2);
    EXPECT_EQ(run_cli("solve-one --config /nonexistent.json"), 2);
    EXPECT_EQ(run_cli("solve-one --config " + ok.string() + " --jobs 0"), 2);
    EXPECT_EQ(run_cli("--help"), 0);

    // --seed overrides the seed list
    EXPECT_EQ(run_cli("solve-one --config " + ok.string() + " --out " + out.string() + " --seed 99"), 0);
    EXPECT_EQ(read_json_file(out / "report.json")["seed"], 99);
}

TEST(Cli, NumericalFailureCode)
{
    // A lone user at an absurd SNR: 1 - U^H H V rounds to exactly zero and
    // the weight update has no inverse.
    ChannelDraw d;
    d.seed = 1;
    d.distances_km = {0.1};
    d.channels.h = {CMatrix::Constant(1, 4, cplx(1e6, 0.0))};
    const fs::path chan = fs::temp_directory_path() / "qospapc_hot.qpch";
    write_channel_file(chan, d);
    const fs::path spec = write_spec("hot", R"({
        "experiment": "solve_one",
        "system": {"num_tx_antennas": 4, "num_rx_antennas": 1, "num_users": 1, "num_streams": 1,
                   "total_power": "10 dBm"},
        "channel": {"file": ")" + chan.string() + R"("}
    })");
    EXPECT_EQ(run_cli("solve-one --config " + spec.string() + " --out " + fresh_dir("cli_hot").string()), 4);
}
