#include <doctest.h>

#include <cmath>
#include <numeric>

#include "oracles.hpp"
#include "support.hpp"
#include "tac/error.hpp"
#include "tac/kmeans.hpp"
#include "tac/metrics.hpp"

namespace {

// k well-separated spherical blobs on the first k axes.
tac::EmbeddingMatrix blobs(std::size_t n, std::size_t d, std::size_t k, double sigma, std::uint64_t seed,
                           std::vector<int>& labels) {
    tac::RngState rng = tac::make_rng(seed, tac::streams::fixture);
    std::vector<float> v(n * d);
    labels.assign(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        labels[i] = static_cast<int>(tac::rng_uniform_int(rng, k));
        for (std::size_t j = 0; j < d; ++j) v[i * d + j] = static_cast<float>(sigma * tac::rng_normal(rng));
        v[i * d + labels[i]] += 1.0f;
    }
    return tac::EmbeddingMatrix(n, d, std::move(v)).normalized();
}

}  // namespace

TEST_CASE("estimate_k examples") {
    CHECK(tac::estimate_k(900, 3) == 9);
    CHECK(tac::estimate_k(13000, 10) == 44);
    CHECK(tac::estimate_k(1281167, 1000) == 4271);
    CHECK(tac::estimate_k(20, 10) == 20);  // clamped to n
    CHECK_THROWS_AS(tac::estimate_k(5, 10), tac::ParameterError);
    CHECK_THROWS_AS(tac::estimate_k(100, 1), tac::ParameterError);
}

TEST_CASE("separable pairs") {
    const tac::EmbeddingMatrix x(4, 2, {1.0f, 0.0f, 0.9f, 0.1f, -1.0f, 0.0f, -0.9f, -0.1f});
    tac::RngState rng = tac::make_rng(1, tac::streams::kmeans_init);
    const auto r = tac::kmeans_fit(x, 2, rng);
    CHECK(r.assignment[0] == r.assignment[1]);
    CHECK(r.assignment[2] == r.assignment[3]);
    CHECK(r.assignment[0] != r.assignment[2]);
    // Each pair contributes 2·(half distance)² = 0.5·|a-b|², |a-b|² = 0.02.
    CHECK(r.inertia == doctest::Approx(0.02).epsilon(1e-6));
}

TEST_CASE("k = N gives zero inertia") {
    const auto x = testing::random_embeddings(12, 4, 3);
    tac::RngState rng = tac::make_rng(2, tac::streams::kmeans_init);
    const auto r = tac::kmeans_fit(x, 12, rng);
    CHECK(r.inertia == doctest::Approx(0.0).epsilon(1e-12));
    auto sorted = r.assignment;
    std::sort(sorted.begin(), sorted.end());
    std::vector<int> iota(12);
    std::iota(iota.begin(), iota.end(), 0);
    CHECK(sorted == iota);
    tac::RngState rng2 = tac::make_rng(2, tac::streams::kmeans_init);
    CHECK_THROWS_AS(tac::kmeans_fit(x, 13, rng2), tac::ParameterError);
    CHECK_THROWS_AS(tac::kmeans_fit(x, 0, rng2), tac::ParameterError);
}

TEST_CASE("recovers a tight 3-component mixture") {
    std::vector<int> y;
    const auto x = blobs(600, 8, 3, 0.05, 7, y);
    tac::RngState rng = tac::make_rng(3, tac::streams::kmeans_init);
    const auto r = tac::kmeans_fit(x, 3, rng);
    CHECK(tac::acc(r.assignment, y) >= 0.99);
}

TEST_CASE("invariants on random data") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto x = testing::random_embeddings(150, 6, 100 + seed);
        tac::RngState rng = tac::make_rng(seed, tac::streams::kmeans_init);
        const std::size_t k = 2 + seed % 7;
        const auto r = tac::kmeans_fit(x, k, rng);
        // Inertia never increases.
        for (std::size_t i = 1; i < r.inertia_history.size(); ++i) {
            CHECK(r.inertia_history[i] <= r.inertia_history[i - 1] * (1 + 1e-12));
        }
        // Every cluster used.
        std::vector<int> used(k, 0);
        for (int a : r.assignment) used[a] = 1;
        CHECK(std::accumulate(used.begin(), used.end(), 0) == static_cast<int>(k));
        // Normalized center = direction of member mean.
        for (std::size_t l = 0; l < k; ++l) {
            std::vector<double> mean(x.dim(), 0.0);
            for (std::size_t i = 0; i < x.rows(); ++i) {
                if (r.assignment[i] != static_cast<int>(l)) continue;
                for (std::size_t j = 0; j < x.dim(); ++j) mean[j] += x.row(i)[j];
            }
            const auto unit = tac::l2_normalize(std::span<const double>(mean));
            for (std::size_t j = 0; j < x.dim(); ++j) CHECK(std::abs(unit[j] - r.centers.row(l)[j]) <= 1e-5);
        }
        CHECK(r.centers.is_normalized());
    }
}

TEST_CASE("row permutation permutes assignments") {
    std::vector<int> y;
    const auto x = blobs(200, 6, 4, 0.1, 11, y);
    tac::RngState perm_rng = tac::make_rng(5, tac::streams::fixture);
    const auto perm = tac::rng_permutation(perm_rng, x.rows());
    const auto xp = x.select_rows(perm);
    tac::RngState r1 = tac::make_rng(4, tac::streams::kmeans_init);
    tac::RngState r2 = tac::make_rng(4, tac::streams::kmeans_init);
    const auto a = tac::kmeans_fit(x, 4, r1).assignment;
    const auto b = tac::kmeans_fit(xp, 4, r2).assignment;
    std::vector<int> a_perm(perm.size());
    for (std::size_t i = 0; i < perm.size(); ++i) a_perm[i] = a[perm[i]];
    CHECK(tac::ari(a_perm, b) == doctest::Approx(1.0));
}

TEST_CASE("deterministic under a fixed seed") {
    const auto x = testing::random_embeddings(300, 8, 21);
    tac::RngState r1 = tac::make_rng(9, tac::streams::kmeans_init);
    tac::RngState r2 = tac::make_rng(9, tac::streams::kmeans_init);
    const auto a = tac::kmeans_fit(x, 9, r1);
    const auto b = tac::kmeans_fit(x, 9, r2);
    CHECK(a.assignment == b.assignment);
    CHECK(a.inertia == b.inertia);
}

TEST_CASE("duplicate points still fill every cluster") {
    const tac::EmbeddingMatrix x(6, 2, {1, 0, 1, 0, 1, 0, 1, 0, 0, 1, 0, 1}, true);
    tac::RngState rng = tac::make_rng(1, tac::streams::kmeans_init);
    const auto r = tac::kmeans_fit(x, 3, rng);
    std::vector<int> used(3, 0);
    for (int a : r.assignment) used[a] = 1;
    CHECK(used == std::vector<int>{1, 1, 1});
}
