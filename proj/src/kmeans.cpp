#include "tac/kmeans.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "tac/error.hpp"
#include "tac/parallel.hpp"

namespace tac {
namespace {

double squared_distance(std::span<const float> x, std::span<const double> c) {
    double acc = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
        const double d = static_cast<double>(x[j]) - c[j];
        acc += d * d;
    }
    return acc;
}

void set_center(Matrix& centroids, std::size_t l, std::span<const float> x) {
    auto c = centroids.row(l);
    for (std::size_t j = 0; j < x.size(); ++j) c[j] = x[j];
}

std::size_t sample_by_weight(const std::vector<double>& w, double total, RngState& rng) {
    const double target = rng_uniform01(rng) * total;
    double run = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (w[i] <= 0.0) continue;
        run += w[i];
        if (run > target) return i;
    }
    // Rounding left the target past the last positive weight.
    for (std::size_t i = w.size(); i-- > 0;) {
        if (w[i] > 0.0) return i;
    }
    return 0;
}

// Greedy k-means++: each new center is the best of several D²-weighted draws,
// judged by the resulting total squared distance.
Matrix seed_plus_plus(const EmbeddingMatrix& x, std::size_t k, RngState& rng) {
    const std::size_t n = x.rows();
    const std::size_t trials = 2 + static_cast<std::size_t>(std::log(static_cast<double>(k)));
    Matrix centroids(k, x.dim());
    std::vector<char> chosen(n, 0);
    std::vector<double> best(n, std::numeric_limits<double>::infinity());
    std::vector<double> trial_best(n);

    std::size_t pick = rng_uniform_int(rng, n);
    for (std::size_t l = 0; l < k; ++l) {
        chosen[pick] = 1;
        set_center(centroids, l, x.row(pick));
        if (l + 1 == k) break;

        const auto c = centroids.row(l);
        parallel_for(n, [&](std::size_t b, std::size_t e) {
            for (std::size_t i = b; i < e; ++i) best[i] = std::min(best[i], squared_distance(x.row(i), c));
        });
        double total = 0.0;
        for (double d : best) total += d;

        if (total <= 0.0) {
            // Every point coincides with a center; draw among the unchosen.
            std::vector<std::size_t> rest;
            for (std::size_t i = 0; i < n; ++i) {
                if (!chosen[i]) rest.push_back(i);
            }
            pick = rest[rng_uniform_int(rng, rest.size())];
            continue;
        }

        double best_potential = std::numeric_limits<double>::infinity();
        for (std::size_t t = 0; t < trials; ++t) {
            const std::size_t cand = sample_by_weight(best, total, rng);
            const auto xc = x.row(cand);
            std::vector<double> cand_center(xc.begin(), xc.end());
            parallel_for(n, [&](std::size_t b, std::size_t e) {
                for (std::size_t i = b; i < e; ++i) {
                    trial_best[i] = std::min(best[i], squared_distance(x.row(i), cand_center));
                }
            });
            double potential = 0.0;
            for (double d : trial_best) potential += d;
            if (potential < best_potential) {
                best_potential = potential;
                pick = cand;
            }
        }
    }
    return centroids;
}

void assign(const EmbeddingMatrix& x, const Matrix& centroids, std::vector<int>& assignment,
            std::vector<double>& dist) {
    const std::size_t k = centroids.rows();
    parallel_for(x.rows(), [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) {
            double best = std::numeric_limits<double>::infinity();
            int arg = 0;
            for (std::size_t l = 0; l < k; ++l) {
                const double d = squared_distance(x.row(i), centroids.row(l));
                if (d < best) {
                    best = d;
                    arg = static_cast<int>(l);
                }
            }
            assignment[i] = arg;
            dist[i] = best;
        }
    });
}

void repair_empty(const EmbeddingMatrix& x, Matrix& centroids, std::vector<int>& assignment,
                  std::vector<double>& dist) {
    const std::size_t k = centroids.rows();
    std::vector<std::size_t> sizes(k, 0);
    for (int a : assignment) ++sizes[a];
    for (std::size_t l = 0; l < k; ++l) {
        if (sizes[l] != 0) continue;
        std::size_t far = x.rows();
        double far_dist = -1.0;
        for (std::size_t i = 0; i < x.rows(); ++i) {
            if (sizes[assignment[i]] > 1 && dist[i] > far_dist) {
                far_dist = dist[i];
                far = i;
            }
        }
        --sizes[assignment[far]];
        assignment[far] = static_cast<int>(l);
        sizes[l] = 1;
        dist[far] = 0.0;
        set_center(centroids, l, x.row(far));
    }
}

void update_means(const EmbeddingMatrix& x, const std::vector<int>& assignment, Matrix& centroids) {
    const std::size_t k = centroids.rows();
    Matrix sums(k, x.dim());
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < x.rows(); ++i) {
        auto s = sums.row(assignment[i]);
        const auto r = x.row(i);
        for (std::size_t j = 0; j < r.size(); ++j) s[j] += r[j];
        ++counts[assignment[i]];
    }
    for (std::size_t l = 0; l < k; ++l) {
        auto c = centroids.row(l);
        const auto s = sums.row(l);
        for (std::size_t j = 0; j < c.size(); ++j) c[j] = s[j] / static_cast<double>(counts[l]);
    }
}

double total(const std::vector<double>& dist) {
    double acc = 0.0;
    for (double d : dist) acc += d;
    return acc;
}

EmbeddingMatrix summed_centers(const EmbeddingMatrix& x, const std::vector<int>& assignment,
                               std::size_t k) {
    Matrix sums(k, x.dim());
    for (std::size_t i = 0; i < x.rows(); ++i) {
        auto s = sums.row(assignment[i]);
        const auto r = x.row(i);
        for (std::size_t j = 0; j < r.size(); ++j) s[j] += r[j];
    }
    std::vector<float> out;
    out.reserve(k * x.dim());
    for (std::size_t l = 0; l < k; ++l) {
        const auto unit = l2_normalize(sums.row(l));
        for (double v : unit) out.push_back(static_cast<float>(v));
    }
    return EmbeddingMatrix(k, x.dim(), std::move(out), true);
}

}  // namespace

std::size_t estimate_k(std::size_t n, std::size_t target_k, const GranularityConfig& cfg) {
    if (cfg.compact_cluster_size == 0 || cfg.centers_per_class == 0) {
        throw ParameterError("estimate_k: granularity parameters must be positive");
    }
    if (target_k < 2) throw ParameterError("estimate_k: target K must be >= 2");
    if (n < target_k) {
        throw ParameterError("estimate_k: n=" + std::to_string(n) + " < K=" + std::to_string(target_k));
    }
    const std::size_t by_size = (n + cfg.compact_cluster_size - 1) / cfg.compact_cluster_size;
    const std::size_t by_class = target_k * cfg.centers_per_class;
    return std::min(n, std::max(by_size, by_class));
}

KmeansResult kmeans_fit(const EmbeddingMatrix& x, std::size_t k, RngState& rng,
                        const KmeansOptions& opts) {
    const std::size_t n = x.rows();
    if (k == 0 || k > n) {
        throw ParameterError("kmeans_fit: k=" + std::to_string(k) + " must be in [1, " +
                             std::to_string(n) + "]");
    }
    if (!(opts.tol >= 0.0)) throw ParameterError("kmeans_fit: tol must be >= 0");

    Matrix centroids = seed_plus_plus(x, k, rng);
    std::vector<int> assignment(n, 0);
    std::vector<double> dist(n, 0.0);
    assign(x, centroids, assignment, dist);
    repair_empty(x, centroids, assignment, dist);

    KmeansResult result{Matrix{}, EmbeddingMatrix(1, 1, {1.0f}), {}, 0.0, 0, {}};
    result.inertia_history.push_back(total(dist));

    std::vector<int> next(n, 0);
    bool moved = true;
    for (std::size_t it = 1; it <= opts.max_iter; ++it) {
        update_means(x, assignment, centroids);
        assign(x, centroids, next, dist);
        repair_empty(x, centroids, next, dist);
        const double prev = result.inertia_history.back();
        const double cur = total(dist);
        result.inertia_history.push_back(cur);
        result.iterations = it;
        moved = next != assignment;
        assignment.swap(next);
        if (!moved) break;
        if (prev - cur <= opts.tol * prev) break;
    }
    if (moved) {
        // Leave centroids equal to the means of the returned assignment.
        update_means(x, assignment, centroids);
        for (std::size_t i = 0; i < n; ++i) dist[i] = squared_distance(x.row(i), centroids.row(assignment[i]));
        result.inertia_history.push_back(total(dist));
    }

    result.inertia = result.inertia_history.back();
    result.centers = summed_centers(x, assignment, k);
    result.centroids = std::move(centroids);
    result.assignment = std::move(assignment);
    return result;
}

}  // namespace tac
