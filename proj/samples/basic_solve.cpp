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

// Minimal library use: draw one channel realization, solve with QoS
// targets, and compare against the PAPC-only solution.

#include <cstdio>

#include <qospapc/qospapc.hpp>

int main()
{
    using namespace qospapc;

    SystemConfig c = make_uniform_config(16, 2, 4, 2, dbm_to_watts(10.0));
    c.qos_targets_bits = {3.0, 3.0, 3.0, 3.0};
    const ValidConfig cfg = validate_config(c);

    ChannelModelParams params;
    params.rng_seed = 1;
    const ChannelDraw draw = generate_channels(cfg, params);

    const SolveResult qos = solve(draw.channels, cfg);
    const SolveResult plain = papc_only(draw.channels, cfg);

    std::printf("status %s after %d iterations\n", to_string(qos.report.status), qos.report.iterations_used);
    for (int k = 0; k < cfg.users(); ++k) {
        std::printf("user %d: %.4f bit/s/Hz with QoS, %.4f without\n", k + 1,
                    qos.report.per_user_rates_bits[static_cast<std::size_t>(k)],
                    plain.report.per_user_rates_bits[static_cast<std::size_t>(k)]);
    }
    std::printf("weighted sum rate: %.4f with QoS, %.4f without\n", qos.report.wsr_trace.back(),
                plain.report.wsr_trace.back());
    std::printf("max antenna load ratio: %.12f\n", max_antenna_ratio(qos.precoders, cfg));
    return 0;
}
