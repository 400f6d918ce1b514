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

// Command-line driver for the experiments.
//
// Exit codes:
//   0  success
//   1  I/O or other runtime error
//   2  configuration or usage error
//   3  every solve ended with infeasible QoS targets
//   4  numerical failure

#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include <qospapc/qospapc.hpp>

namespace {

enum ExitCode : int { kOk = 0, kRuntimeError = 1, kConfigError = 2, kInfeasibleOnly = 3, kNumericalFailure = 4 };

struct CommonArgs {
    std::string config;
    std::optional<std::string> out;
    std::optional<std::uint64_t> seed;
    int jobs = 1;
};

void add_common(CLI::App* sub, CommonArgs& args)
{
    sub->add_option("--config", args.config, "experiment spec file (JSON, comments allowed)")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--out", args.out, "output directory (overrides the spec's \"output\")");
    sub->add_option("--seed", args.seed, "base seed; trials use seed, seed+1, ... (overrides the spec's seeds)");
    sub->add_option("--jobs", args.jobs, "number of worker threads")->check(CLI::PositiveNumber);
}

int run(qospapc::ExperimentKind kind, const CommonArgs& args)
{
    using namespace qospapc;
    ExperimentSpec spec = read_experiment_spec(args.config);
    if (spec.kind && *spec.kind != kind) {
        throw ConfigError({"spec file declares experiment '" + std::string(to_string(*spec.kind))
                           + "' but the subcommand runs '" + to_string(kind) + "'"});
    }
    if (args.out) spec.output_dir = *args.out;
    if (args.seed) override_seed(spec, *args.seed);

    const ExperimentOutcome outcome = run_experiment(kind, spec, args.jobs);
    for (const auto& line : outcome.summary) std::cout << line << '\n';
    for (const auto& f : outcome.files) std::cout << "wrote " << f.string() << '\n';
    if (outcome.infeasible_only()) {
        std::cerr << "every solve ended with infeasible QoS targets\n";
        return kInfeasibleOnly;
    }
    return kOk;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Weighted sum-rate precoding under per-user QoS and per-antenna power constraints"};
    app.require_subcommand(1);

    CommonArgs args;
    struct Sub {
        const char* name;
        const char* help;
        qospapc::ExperimentKind kind;
    };
    const Sub subs[] = {
        {"convergence", "WSR versus outer iteration, with baselines", qospapc::ExperimentKind::convergence},
        {"qos-sweep", "sweep one user's rate target on fixed channels", qospapc::ExperimentKind::qos_sweep},
        {"ensemble", "final WSR of every method over many seeds", qospapc::ExperimentKind::ensemble_wsr},
        {"solve-one", "single instance with constraint diagnostics", qospapc::ExperimentKind::solve_one},
    };
    for (const auto& s : subs) add_common(app.add_subcommand(s.name, s.help), args);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kConfigError;
    }

    std::optional<qospapc::ExperimentKind> kind;
    for (const auto& s : subs) {
        if (app.got_subcommand(s.name)) kind = s.kind;
    }

    try {
        return run(*kind, args);
    } catch (const qospapc::ConfigError& e) {
        std::cerr << e.what() << '\n';
        return kConfigError;
    } catch (const qospapc::NumericalFailure& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kNumericalFailure;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid input: " << e.what() << '\n';
        return kConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kRuntimeError;
    }
}
