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

// Rayleigh-fading channel ensembles with distance-dependent pathloss.
//
// Randomness: every draw comes from std::mt19937_64 seeded through
// std::seed_seq{seed_lo, seed_hi, stream, index}. Both are fully specified
// by the standard, so draws are identical across platforms. Gaussians use
// Box-Muller on 53-bit uniforms (std::normal_distribution is not portable).
// Streams:
//   stream 1, index 0   -> user distances
//   stream 2, index k   -> small-scale fading of user k
//   stream 3, index 0   -> random precoder initialization
// so the channel of user k does not depend on how many users were drawn
// before it.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <qospapc/model.hpp>

namespace qospapc {

struct ChannelModelParams {
    double pathloss_intercept_db = 128.1;
    double pathloss_slope = 37.6;
    double distance_min_km = 0.1;
    double distance_max_km = 0.2;
    std::uint64_t rng_seed = 1;

    bool operator==(const ChannelModelParams&) const = default;
};

inline void check_params(const ChannelModelParams& p)
{
    if (!(p.distance_min_km > 0.0) || !(p.distance_max_km >= p.distance_min_km)) {
        throw std::invalid_argument("distance range must be positive and ordered");
    }
}

namespace rng {

enum Stream : std::uint32_t { distances = 1, fading = 2, init = 3 };

inline std::mt19937_64 make_stream(std::uint64_t seed, std::uint32_t stream, std::uint32_t index)
{
    std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu), static_cast<std::uint32_t>(seed >> 32),
                      stream, index};
    return std::mt19937_64(seq);
}

/// Uniform on [0, 1) with 53 random bits.
inline double uniform01(std::mt19937_64& g)
{
    return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

/// Standard normal via Box-Muller; consumes two uniforms per call.
inline double standard_normal(std::mt19937_64& g)
{
    const double u1 = 1.0 - uniform01(g); // (0, 1]
    const double u2 = uniform01(g);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

/// CN(0, 1): real and imaginary parts each N(0, 1/2).
inline cplx complex_normal(std::mt19937_64& g)
{
    const double re = standard_normal(g);
    const double im = standard_normal(g);
    const double scale = 1.0 / std::numbers::sqrt2;
    return {re * scale, im * scale};
}

inline CMatrix complex_normal_matrix(std::mt19937_64& g, Eigen::Index rows, Eigen::Index cols)
{
    CMatrix m(rows, cols);
    // row-major fill order, so the layout of draws matches the channel file
    for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) {
            m(r, c) = complex_normal(g);
        }
    }
    return m;
}

} // namespace rng

/// Linear power gain 10^(-(A + B log10 d)/10) for a distance in km.
inline double pathloss_linear(double distance_km, const ChannelModelParams& p)
{
    if (!(distance_km > 0.0)) {
        throw std::invalid_argument("pathloss_linear: distance must be positive");
    }
    const double loss_db = p.pathloss_intercept_db + p.pathloss_slope * std::log10(distance_km);
    return std::pow(10.0, -loss_db / 10.0);
}

struct ChannelDraw {
    ChannelSet channels;
    std::vector<double> distances_km;
    std::uint64_t seed = 0;
};

/// K distances uniform on the configured range (stream 1 of the seed).
inline std::vector<double> draw_distances(int users, const ChannelModelParams& p)
{
    check_params(p);
    auto g = rng::make_stream(p.rng_seed, rng::distances, 0);
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(users));
    for (int k = 0; k < users; ++k) {
        out.push_back(p.distance_min_km + (p.distance_max_km - p.distance_min_km) * rng::uniform01(g));
    }
    return out;
}

/// H_k = sqrt(theta_k) H_k^s at the given user distances.
inline ChannelDraw generate_channels_at(const ValidConfig& cfg, const ChannelModelParams& p,
                                        std::vector<double> distances_km)
{
    check_params(p);
    if (distances_km.size() != static_cast<std::size_t>(cfg.users())) {
        throw std::invalid_argument("generate_channels_at: need one distance per user");
    }
    ChannelDraw out;
    out.seed = p.rng_seed;
    out.channels.h.reserve(distances_km.size());
    for (int k = 0; k < cfg.users(); ++k) {
        const double theta = pathloss_linear(distances_km[static_cast<std::size_t>(k)], p);
        auto g = rng::make_stream(p.rng_seed, rng::fading, static_cast<std::uint32_t>(k));
        out.channels.h.push_back(std::sqrt(theta) * rng::complex_normal_matrix(g, cfg.nr(), cfg.nt()));
    }
    out.distances_km = std::move(distances_km);
    return out;
}

inline ChannelDraw generate_channels(const ValidConfig& cfg, const ChannelModelParams& p)
{
    return generate_channels_at(cfg, p, draw_distances(cfg.users(), p));
}

// ---------------------------------------------------------------------------
// Channel file, little-endian binary:
//
//   offset  size        field
//   0       4           magic "QPCH"
//   4       4  uint32   format version (1)
//   8       4  uint32   K
//   12      4  uint32   N_r
//   16      4  uint32   N_t
//   20      4           zero padding
//   24      8  uint64   seed
//   32      8K float64  distances (km), user order
//   32+8K   16*K*N_r*N_t float64 pairs (real, imag); users in order, each
//           matrix row-major (row = receive antenna)
//
// Written to a temporary file and renamed into place.

namespace detail {

inline bool host_is_little_endian()
{
    const std::uint16_t probe = 1;
    unsigned char b = 0;
    std::memcpy(&b, &probe, 1);
    return b == 1;
}

template <class T>
void put_le(std::ostream& os, T value)
{
    std::array<unsigned char, sizeof(T)> buf{};
    std::memcpy(buf.data(), &value, sizeof(T));
    if (!host_is_little_endian()) std::reverse(buf.begin(), buf.end());
    os.write(reinterpret_cast<const char*>(buf.data()), sizeof(T));
}

template <class T>
T get_le(std::istream& is)
{
    std::array<unsigned char, sizeof(T)> buf{};
    is.read(reinterpret_cast<char*>(buf.data()), sizeof(T));
    if (!is) throw std::runtime_error("channel file truncated");
    if (!host_is_little_endian()) std::reverse(buf.begin(), buf.end());
    T value;
    std::memcpy(&value, buf.data(), sizeof(T));
    return value;
}

} // namespace detail

inline constexpr std::uint32_t kChannelFileVersion = 1;

inline void write_channel_file(const std::filesystem::path& path, const ChannelDraw& draw)
{
    const auto k = static_cast<std::uint32_t>(draw.channels.users());
    if (k == 0 || draw.distances_km.size() != k) {
        throw std::invalid_argument("write_channel_file: inconsistent channel draw");
    }
    const auto nr = static_cast<std::uint32_t>(draw.channels[0].rows());
    const auto nt = static_cast<std::uint32_t>(draw.channels[0].cols());

    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
        os.write("QPCH", 4);
        detail::put_le<std::uint32_t>(os, kChannelFileVersion);
        detail::put_le<std::uint32_t>(os, k);
        detail::put_le<std::uint32_t>(os, nr);
        detail::put_le<std::uint32_t>(os, nt);
        detail::put_le<std::uint32_t>(os, 0);
        detail::put_le<std::uint64_t>(os, draw.seed);
        for (double dist : draw.distances_km) detail::put_le<double>(os, dist);
        for (const auto& h : draw.channels.h) {
            if (h.rows() != nr || h.cols() != nt) {
                throw std::invalid_argument("write_channel_file: ragged channel set");
            }
            for (Eigen::Index r = 0; r < h.rows(); ++r) {
                for (Eigen::Index c = 0; c < h.cols(); ++c) {
                    detail::put_le<double>(os, h(r, c).real());
                    detail::put_le<double>(os, h(r, c).imag());
                }
            }
        }
        if (!os) throw std::runtime_error("write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

inline ChannelDraw read_channel_file(const std::filesystem::path& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open " + path.string());
    char magic[4] = {};
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "QPCH", 4) != 0) {
        throw std::runtime_error(path.string() + " is not a channel file");
    }
    const auto version = detail::get_le<std::uint32_t>(is);
    if (version != kChannelFileVersion) {
        throw std::runtime_error("unsupported channel file version " + std::to_string(version));
    }
    const auto k = detail::get_le<std::uint32_t>(is);
    const auto nr = detail::get_le<std::uint32_t>(is);
    const auto nt = detail::get_le<std::uint32_t>(is);
    (void)detail::get_le<std::uint32_t>(is);
    ChannelDraw out;
    out.seed = detail::get_le<std::uint64_t>(is);
    for (std::uint32_t i = 0; i < k; ++i) out.distances_km.push_back(detail::get_le<double>(is));
    for (std::uint32_t i = 0; i < k; ++i) {
        CMatrix h(nr, nt);
        for (Eigen::Index r = 0; r < h.rows(); ++r) {
            for (Eigen::Index c = 0; c < h.cols(); ++c) {
                const double re = detail::get_le<double>(is);
                const double im = detail::get_le<double>(is);
                h(r, c) = {re, im};
            }
        }
        out.channels.h.push_back(std::move(h));
    }
    return out;
}

} // namespace qospapc
