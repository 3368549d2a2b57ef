#pragma once

#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "tac/embedding_store.hpp"
#include "tac/rng.hpp"

namespace testing {

/// Fresh, empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("tac_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << text;
}

inline tac::EmbeddingMatrix random_embeddings(std::size_t n, std::size_t d, std::uint64_t seed,
                                              bool normalize = true) {
    tac::RngState rng = tac::make_rng(seed, tac::streams::fixture);
    std::vector<float> v(n * d);
    for (float& x : v) x = static_cast<float>(tac::rng_normal(rng));
    tac::EmbeddingMatrix m(n, d, std::move(v));
    return normalize ? m.normalized() : m;
}

}  // namespace testing
