#pragma once

#include <cstddef>
#include <vector>

#include "tac/core_math.hpp"
#include "tac/embedding_store.hpp"
#include "tac/rng.hpp"

namespace tac {

/// Granularity of the image semantic centers.
struct GranularityConfig {
    std::size_t compact_cluster_size = 300;  // expected images per compact cluster
    std::size_t centers_per_class = 3;
};

/// max(ceil(n / compact_cluster_size), target_k * centers_per_class), clamped to n.
std::size_t estimate_k(std::size_t n, std::size_t target_k, const GranularityConfig& cfg = {});

struct KmeansOptions {
    std::size_t max_iter = 300;
    double tol = 1e-6;  // relative inertia improvement
};

struct KmeansResult {
    Matrix centroids;                     // raw member means, k×D
    EmbeddingMatrix centers;              // unit-normalized member sums, k×D
    std::vector<int> assignment;          // cluster id per row, every id in [0,k) used
    double inertia = 0.0;                 // sum of squared distances to centroids
    std::size_t iterations = 0;
    std::vector<double> inertia_history;  // non-increasing
};

/// Lloyd's algorithm with greedy k-means++ seeding (best of 2 + ln k
/// D²-weighted candidates per center). Ties in the assignment step go to
/// the lowest cluster id; a cluster left empty takes the point farthest from
/// its current centroid.
KmeansResult kmeans_fit(const EmbeddingMatrix& x, std::size_t k, RngState& rng,
                        const KmeansOptions& opts = {});

}  // namespace tac
