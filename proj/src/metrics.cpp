#include "tac/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <limits>
#include <map>

#include "tac/error.hpp"

namespace tac {
namespace {

std::vector<std::size_t> dense_labels(std::span<const int> labels, std::size_t& distinct) {
    std::map<int, std::size_t> ids;
    for (int l : labels) {
        if (l < 0) throw DataError("metrics: negative label " + std::to_string(l));
        ids.emplace(l, 0);
    }
    std::size_t next = 0;
    for (auto& [label, id] : ids) id = next++;
    distinct = next;
    std::vector<std::size_t> out(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) out[i] = ids[labels[i]];
    return out;
}

double entropy_of_counts(const std::vector<std::int64_t>& counts, double n) {
    double h = 0.0;
    for (auto c : counts) {
        if (c > 0) {
            const double p = static_cast<double>(c) / n;
            h -= p * std::log(p);
        }
    }
    return h;
}

double pairs(double x) { return x * (x - 1.0) / 2.0; }

std::vector<std::int64_t> row_sums(const Contingency& c) {
    std::vector<std::int64_t> s(c.rows, 0);
    for (std::size_t i = 0; i < c.rows; ++i) {
        for (std::size_t j = 0; j < c.cols; ++j) s[i] += c(i, j);
    }
    return s;
}

std::vector<std::int64_t> col_sums(const Contingency& c) {
    std::vector<std::int64_t> s(c.cols, 0);
    for (std::size_t i = 0; i < c.rows; ++i) {
        for (std::size_t j = 0; j < c.cols; ++j) s[j] += c(i, j);
    }
    return s;
}

}  // namespace

Contingency contingency(std::span<const int> pred, std::span<const int> truth) {
    if (pred.size() != truth.size()) {
        throw DimensionError("metrics: " + std::to_string(pred.size()) + " predictions vs " +
                             std::to_string(truth.size()) + " labels");
    }
    if (pred.empty()) throw DimensionError("metrics: empty input");
    Contingency c;
    const auto p = dense_labels(pred, c.rows);
    const auto t = dense_labels(truth, c.cols);
    c.counts.assign(c.rows * c.cols, 0);
    for (std::size_t i = 0; i < p.size(); ++i) ++c.counts[p[i] * c.cols + t[i]];
    return c;
}

double nmi(std::span<const int> pred, std::span<const int> truth, NmiNormalization norm) {
    const Contingency c = contingency(pred, truth);
    const double n = static_cast<double>(pred.size());
    const double hu = entropy_of_counts(row_sums(c), n);
    const double hv = entropy_of_counts(col_sums(c), n);
    if (hu == 0.0 && hv == 0.0) return 1.0;
    if (hu == 0.0 || hv == 0.0) return 0.0;

    const auto rs = row_sums(c);
    const auto cs = col_sums(c);
    double mi = 0.0;
    for (std::size_t i = 0; i < c.rows; ++i) {
        for (std::size_t j = 0; j < c.cols; ++j) {
            const double nij = static_cast<double>(c(i, j));
            if (nij == 0.0) continue;
            mi += nij / n * std::log(nij * n / (static_cast<double>(rs[i]) * static_cast<double>(cs[j])));
        }
    }
    const double denom = norm == NmiNormalization::Arithmetic ? 0.5 * (hu + hv) : std::sqrt(hu * hv);
    return std::clamp(mi / denom, 0.0, 1.0);
}

std::vector<std::size_t> hungarian(const std::vector<double>& cost, std::size_t n) {
    if (cost.size() != n * n) throw DimensionError("hungarian: cost matrix is not n×n");
    const double inf = std::numeric_limits<double>::infinity();
    // Shortest augmenting paths with row/column potentials; index 0 is a sentinel.
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<std::size_t> match(n + 1, 0), way(n + 1, 0);
    for (std::size_t i = 1; i <= n; ++i) {
        match[0] = i;
        std::size_t j0 = 0;
        std::vector<double> minv(n + 1, inf);
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            const std::size_t i0 = match[j0];
            double delta = inf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[match[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (match[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            match[j0] = match[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<std::size_t> assign(n, 0);
    for (std::size_t j = 1; j <= n; ++j) {
        if (match[j] != 0) assign[match[j] - 1] = j - 1;
    }
    return assign;
}

double acc(std::span<const int> pred, std::span<const int> truth) {
    const Contingency c = contingency(pred, truth);
    const std::size_t m = std::max(c.rows, c.cols);
    std::vector<double> cost(m * m, 0.0);
    for (std::size_t i = 0; i < c.rows; ++i) {
        for (std::size_t j = 0; j < c.cols; ++j) cost[i * m + j] = -static_cast<double>(c(i, j));
    }
    const auto assign = hungarian(cost, m);
    std::int64_t matched = 0;
    for (std::size_t i = 0; i < c.rows; ++i) {
        if (assign[i] < c.cols) matched += c(i, assign[i]);
    }
    return static_cast<double>(matched) / static_cast<double>(pred.size());
}

double ari(std::span<const int> pred, std::span<const int> truth) {
    const Contingency c = contingency(pred, truth);
    double index = 0.0;
    for (auto nij : c.counts) index += pairs(static_cast<double>(nij));
    double a = 0.0, b = 0.0;
    for (auto s : row_sums(c)) a += pairs(static_cast<double>(s));
    for (auto s : col_sums(c)) b += pairs(static_cast<double>(s));
    const double total = pairs(static_cast<double>(pred.size()));
    if (total == 0.0) return 1.0;
    const double expected = a * b / total;
    const double max_index = 0.5 * (a + b);
    if (max_index == expected) return 1.0;
    return (index - expected) / (max_index - expected);
}

double cluster_size_entropy(std::span<const int> pred) {
    if (pred.empty()) return 0.0;
    std::size_t k = 0;
    const auto ids = dense_labels(pred, k);
    std::vector<std::int64_t> counts(k, 0);
    for (auto id : ids) ++counts[id];
    return entropy_of_counts(counts, static_cast<double>(pred.size()));
}

MetricsReport evaluate(std::span<const int> pred, std::span<const int> truth) {
    const Contingency c = contingency(pred, truth);
    MetricsReport r;
    r.nmi = nmi(pred, truth);
    r.acc = acc(pred, truth);
    r.ari = ari(pred, truth);
    r.n = pred.size();
    r.k_pred = c.rows;
    r.k_true = c.cols;
    r.cluster_entropy = cluster_size_entropy(pred);
    r.timestamp = utc_timestamp();
    return r;
}

std::string utc_timestamp() {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string report_text(const MetricsReport& r) {
    char buf[512];
    std::snprintf(buf, sizeof buf,
                  "nmi: %.6f\nacc: %.6f\nari: %.6f\nn: %zu\nk_pred: %zu\nk_true: %zu\n"
                  "cluster_entropy: %.6f\nseed: %llu\nconfig_hash: %s\ntimestamp: %s\n",
                  r.nmi, r.acc, r.ari, r.n, r.k_pred, r.k_true, r.cluster_entropy,
                  static_cast<unsigned long long>(r.seed), r.config_hash.c_str(), r.timestamp.c_str());
    return buf;
}

std::string report_csv_header() {
    return "nmi,acc,ari,n,k_pred,k_true,cluster_entropy,seed,config_hash,timestamp";
}

std::string report_csv_row(const MetricsReport& r) {
    char buf[512];
    std::snprintf(buf, sizeof buf, "%.6f,%.6f,%.6f,%zu,%zu,%zu,%.6f,%llu,%s,%s", r.nmi, r.acc, r.ari, r.n,
                  r.k_pred, r.k_true, r.cluster_entropy, static_cast<unsigned long long>(r.seed),
                  r.config_hash.c_str(), r.timestamp.c_str());
    return buf;
}

void write_report(const std::filesystem::path& path, const MetricsReport& r) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw FormatError("cannot write " + path.string());
    out << report_text(r);
}

}  // namespace tac
