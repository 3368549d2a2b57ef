#include "tac/neighbors.hpp"

#include <algorithm>
#include <array>
#include <cstring>
#include <fstream>
#include <numeric>
#include <string>

#include "tac/core_math.hpp"
#include "tac/error.hpp"
#include "tac/parallel.hpp"

namespace tac {
namespace {

constexpr std::size_t query_block = 128;
constexpr std::size_t graph_header_size = 32;
constexpr std::uint32_t graph_version = 1;

}  // namespace

NeighborGraph::NeighborGraph(std::size_t rows, std::size_t n_neighbors, std::vector<std::uint32_t> indices)
    : rows_(rows), n_neighbors_(n_neighbors), indices_(std::move(indices)) {
    if (n_neighbors_ == 0 || n_neighbors_ >= rows_) {
        throw ParameterError("NeighborGraph: need 0 < n_neighbors < N");
    }
    if (indices_.size() != rows_ * n_neighbors_) throw DimensionError("NeighborGraph: index count mismatch");
    for (std::size_t i = 0; i < rows_; ++i) {
        for (auto j : row(i)) {
            if (j >= rows_ || j == i) throw DataError("NeighborGraph: invalid neighbor in row " + std::to_string(i));
        }
    }
}

NeighborGraph build_graph(const EmbeddingMatrix& x, std::size_t n_neighbors) {
    const std::size_t n = x.rows();
    if (n_neighbors == 0 || n_neighbors >= n) {
        throw ParameterError("build_graph: n_neighbors=" + std::to_string(n_neighbors) +
                             " must be in [1, " + std::to_string(n - 1) + "]");
    }
    const EmbeddingMatrix unit = x.is_normalized() ? x : x.normalized();
    std::vector<std::uint32_t> indices(n * n_neighbors);
    const std::size_t blocks = (n + query_block - 1) / query_block;

    parallel_for(blocks, [&](std::size_t b_begin, std::size_t b_end) {
        std::vector<double> sims(query_block * n);
        std::vector<std::uint32_t> order(n);
        for (std::size_t b = b_begin; b < b_end; ++b) {
            const std::size_t q0 = b * query_block;
            const std::size_t q1 = std::min(n, q0 + query_block);
            for (std::size_t q = q0; q < q1; ++q) {
                double* s = sims.data() + (q - q0) * n;
                for (std::size_t j = 0; j < n; ++j) s[j] = dot(unit.row(q), unit.row(j));
            }
            for (std::size_t q = q0; q < q1; ++q) {
                const double* s = sims.data() + (q - q0) * n;
                std::iota(order.begin(), order.end(), 0u);
                // Move self to the back so it never competes for a slot.
                std::swap(order[q], order[n - 1]);
                auto closer = [s](std::uint32_t a, std::uint32_t c) {
                    return s[a] > s[c] || (s[a] == s[c] && a < c);
                };
                std::partial_sort(order.begin(), order.begin() + n_neighbors, order.end() - 1, closer);
                std::copy_n(order.begin(), n_neighbors, indices.begin() + q * n_neighbors);
            }
        }
    });
    return NeighborGraph(n, n_neighbors, std::move(indices));
}

std::uint32_t sample_neighbor(const NeighborGraph& g, std::size_t i, RngState& rng) {
    const auto r = g.row(i);
    return r[rng_uniform_int(rng, r.size())];
}

void write_graph(const std::filesystem::path& path, const NeighborGraph& g) {
    std::array<char, graph_header_size> header{};
    std::memcpy(header.data(), "TACG", 4);
    const std::uint32_t version = graph_version;
    const std::uint64_t rows = g.rows();
    const std::uint32_t k = static_cast<std::uint32_t>(g.n_neighbors());
    std::memcpy(header.data() + 4, &version, 4);
    std::memcpy(header.data() + 8, &rows, 8);
    std::memcpy(header.data() + 16, &k, 4);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot write " + path.string());
    out.write(header.data(), header.size());
    const auto idx = g.indices();
    out.write(reinterpret_cast<const char*>(idx.data()), static_cast<std::streamsize>(idx.size() * 4));
}

NeighborGraph load_graph(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open graph cache " + path.string());
    std::array<char, graph_header_size> header{};
    in.read(header.data(), header.size());
    if (in.gcount() != static_cast<std::streamsize>(header.size()) ||
        std::memcmp(header.data(), "TACG", 4) != 0) {
        throw FormatError(path.string() + ": not a graph cache");
    }
    std::uint32_t version = 0, k = 0;
    std::uint64_t rows = 0;
    std::memcpy(&version, header.data() + 4, 4);
    std::memcpy(&rows, header.data() + 8, 8);
    std::memcpy(&k, header.data() + 16, 4);
    if (version != graph_version) throw FormatError(path.string() + ": unsupported graph version");
    std::vector<std::uint32_t> idx(rows * k);
    in.read(reinterpret_cast<char*>(idx.data()), static_cast<std::streamsize>(idx.size() * 4));
    if (static_cast<std::size_t>(in.gcount()) != idx.size() * 4) {
        throw FormatError(path.string() + ": truncated graph payload");
    }
    return NeighborGraph(rows, k, std::move(idx));
}

}  // namespace tac
