#include "tac/rng.hpp"

#include <cmath>
#include <numbers>
#include <numeric>

#include "tac/error.hpp"

namespace tac {
namespace {

constexpr std::uint64_t golden_gamma = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::uint64_t stream_key(std::uint64_t seed, std::uint64_t stream) {
    return mix64(seed ^ mix64(stream + 0xD1B54A32D192ED03ULL));
}

}  // namespace

RngState rng_split(const RngState& parent, std::uint64_t child) {
    return {parent.seed, mix64(parent.stream * golden_gamma + child + 1), 0};
}

std::uint64_t rng_next_u64(RngState& state) {
    const std::uint64_t key = stream_key(state.seed, state.stream);
    return mix64(key + (++state.counter) * golden_gamma);
}

std::uint64_t rng_uniform_int(RngState& state, std::uint64_t n) {
    if (n == 0) throw ParameterError("rng_uniform_int: n must be >= 1");
    if (n == 1) {
        rng_next_u64(state);
        return 0;
    }
    // Reject the low residue so every bucket has equal preimage size.
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
        const std::uint64_t x = rng_next_u64(state);
        if (x >= threshold) return x % n;
    }
}

double rng_uniform01(RngState& state) {
    return static_cast<double>(rng_next_u64(state) >> 11) * 0x1.0p-53;
}

double rng_normal(RngState& state) {
    const double u1 = 1.0 - rng_uniform01(state);  // (0, 1]
    const double u2 = rng_uniform01(state);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

void rng_shuffle(RngState& state, std::span<std::uint32_t> values) {
    for (std::size_t i = values.size(); i > 1; --i) {
        const std::size_t j = rng_uniform_int(state, i);
        std::swap(values[i - 1], values[j]);
    }
}

std::vector<std::uint32_t> rng_permutation(RngState& state, std::size_t n) {
    std::vector<std::uint32_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0u);
    rng_shuffle(state, perm);
    return perm;
}

}  // namespace tac
