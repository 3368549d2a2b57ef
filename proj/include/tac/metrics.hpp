#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace tac {

/// Counts n_ij of (pred cluster i, true class j). Ids are relabeled densely in
/// ascending order; empty clusters would only add zero rows, which change none
/// of the metrics.
struct Contingency {
    std::size_t rows = 0;  // predicted clusters
    std::size_t cols = 0;  // true classes
    std::vector<std::int64_t> counts;

    std::int64_t operator()(std::size_t i, std::size_t j) const { return counts[i * cols + j]; }
};

/// Throws DimensionError on a length mismatch or empty input, DataError on
/// negative labels.
Contingency contingency(std::span<const int> pred, std::span<const int> truth);

enum class NmiNormalization { Arithmetic, Geometric };

double nmi(std::span<const int> pred, std::span<const int> truth,
           NmiNormalization norm = NmiNormalization::Arithmetic);

/// Best one-to-one cluster-to-class matching (Hungarian on the zero-padded
/// square contingency table), as a fraction of N.
double acc(std::span<const int> pred, std::span<const int> truth);

/// Adjusted Rand index from pair counts. Returns 1 when both partitions are
/// trivial in the same way (the index is undefined there).
double ari(std::span<const int> pred, std::span<const int> truth);

/// Entropy (natural log) of the predicted cluster-size distribution.
double cluster_size_entropy(std::span<const int> pred);

/// Minimum-cost perfect matching on a square cost matrix (row-major).
/// Returns the column assigned to each row.
std::vector<std::size_t> hungarian(const std::vector<double>& cost, std::size_t n);

struct MetricsReport {
    double nmi = 0.0;
    double acc = 0.0;
    double ari = 0.0;
    std::size_t n = 0;
    std::size_t k_pred = 0;  // distinct predicted clusters
    std::size_t k_true = 0;  // distinct true classes
    double cluster_entropy = 0.0;
    std::uint64_t seed = 0;
    std::string config_hash;
    std::string timestamp;  // UTC, ISO 8601
};

MetricsReport evaluate(std::span<const int> pred, std::span<const int> truth);

/// Current UTC time as YYYY-MM-DDTHH:MM:SSZ.
std::string utc_timestamp();

// Field order of both serializations:
//   nmi, acc, ari, n, k_pred, k_true, cluster_entropy, seed, config_hash, timestamp
std::string report_text(const MetricsReport& r);
std::string report_csv_header();
std::string report_csv_row(const MetricsReport& r);
void write_report(const std::filesystem::path& path, const MetricsReport& r);

}  // namespace tac
