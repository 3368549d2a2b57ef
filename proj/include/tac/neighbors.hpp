#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "tac/embedding_store.hpp"
#include "tac/rng.hpp"

namespace tac {

/// Exact cosine kNN lists. Row i holds the n_neighbors rows most similar to
/// row i, self excluded, by descending similarity (ties: lower index first).
class NeighborGraph {
public:
    NeighborGraph(std::size_t rows, std::size_t n_neighbors, std::vector<std::uint32_t> indices);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t n_neighbors() const noexcept { return n_neighbors_; }
    std::span<const std::uint32_t> row(std::size_t i) const {
        return {indices_.data() + i * n_neighbors_, n_neighbors_};
    }
    std::span<const std::uint32_t> indices() const noexcept { return indices_; }

    bool operator==(const NeighborGraph&) const = default;

private:
    std::size_t rows_;
    std::size_t n_neighbors_;
    std::vector<std::uint32_t> indices_;
};

/// Brute force over query blocks. Rows are normalized first when `x` is not
/// flagged unit-norm. Throws ParameterError when n_neighbors >= N or == 0.
NeighborGraph build_graph(const EmbeddingMatrix& x, std::size_t n_neighbors);

/// Uniform draw from row i.
std::uint32_t sample_neighbor(const NeighborGraph& g, std::size_t i, RngState& rng);

// Graph cache, little-endian: "TACG", u32 version, u64 N, u32 n_neighbors,
// 12 reserved bytes, then N*n_neighbors u32 indices row-major.
void write_graph(const std::filesystem::path& path, const NeighborGraph& g);
NeighborGraph load_graph(const std::filesystem::path& path);

}  // namespace tac
