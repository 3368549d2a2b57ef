#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace tac {

/// Counter-based generator: draw i of a stream is a pure function of
/// (seed, stream, i), so results never depend on platform or thread layout.
struct RngState {
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;
    std::uint64_t counter = 0;
};

/// Stream ids reserved per subsystem.
namespace streams {
inline constexpr std::uint64_t kmeans_init = 1;
inline constexpr std::uint64_t batch_shuffle = 2;
inline constexpr std::uint64_t neighbor_sample = 3;
inline constexpr std::uint64_t weight_init = 4;
inline constexpr std::uint64_t fixture = 5;
}  // namespace streams

inline RngState make_rng(std::uint64_t seed, std::uint64_t stream) { return {seed, stream, 0}; }

/// Independent child stream; the parent is not advanced.
RngState rng_split(const RngState& parent, std::uint64_t child);

std::uint64_t rng_next_u64(RngState& state);

/// Uniform integer in [0, n). Requires n >= 1.
std::uint64_t rng_uniform_int(RngState& state, std::uint64_t n);

/// Uniform double in [0, 1) with 53 random bits.
double rng_uniform01(RngState& state);

/// Standard normal draw (Box-Muller, one output per two uniforms).
double rng_normal(RngState& state);

/// Fisher-Yates shuffle.
void rng_shuffle(RngState& state, std::span<std::uint32_t> values);

std::vector<std::uint32_t> rng_permutation(RngState& state, std::size_t n);

}  // namespace tac
