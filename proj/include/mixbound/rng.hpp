#pragma once

#include <cstdint>
#include <random>

namespace mixbound {

using Engine = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t x) noexcept;

//! Seed of substream `stream` under master seed `seed`.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept;

Engine make_engine(std::uint64_t seed, std::uint64_t stream = 0);

//! Uniform on [0, 1) and standard normal draws that are identical across
//! standard libraries (std distributions are implementation-defined).
double uniform01(Engine& engine);
double standard_normal(Engine& engine);

//! MIXBOUND_SEED from the environment when set and numeric, else `fallback`.
std::uint64_t default_seed(std::uint64_t fallback = 20240601);

} // namespace mixbound
