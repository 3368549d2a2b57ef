#include "tac/core_math.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tac/error.hpp"

namespace tac {
namespace {

template <typename T>
double dot_impl(std::span<const T> a, std::span<const T> b) {
    if (a.size() != b.size()) {
        throw DimensionError("dot: size " + std::to_string(a.size()) + " vs " +
                             std::to_string(b.size()));
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    }
    return acc;
}

template <typename T>
std::vector<T> normalize_impl(std::span<const T> v) {
    const double norm = std::sqrt(dot_impl(v, v));
    if (!(norm > 0.0) || !std::isfinite(norm)) {
        throw NormalizationError("l2_normalize: vector has zero or non-finite norm");
    }
    std::vector<T> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        out[i] = static_cast<T>(static_cast<double>(v[i]) / norm);
    }
    return out;
}

template <typename T>
double cosine_impl(std::span<const T> a, std::span<const T> b) {
    if (a.size() != b.size()) {
        throw DimensionError("cosine_sim: dimension " + std::to_string(a.size()) + " vs " +
                             std::to_string(b.size()));
    }
    const double na = std::sqrt(dot_impl(a, a));
    const double nb = std::sqrt(dot_impl(b, b));
    if (!(na > 0.0) || !(nb > 0.0)) {
        throw NormalizationError("cosine_sim: zero vector");
    }
    const double c = dot_impl(a, b) / (na * nb);
    return std::clamp(c, -1.0, 1.0);
}

}  // namespace

double dot(std::span<const float> a, std::span<const float> b) { return dot_impl(a, b); }
double dot(std::span<const double> a, std::span<const double> b) { return dot_impl(a, b); }

double l2_norm(std::span<const float> v) { return std::sqrt(dot_impl(v, v)); }
double l2_norm(std::span<const double> v) { return std::sqrt(dot_impl(v, v)); }

std::vector<float> l2_normalize(std::span<const float> v) { return normalize_impl(v); }
std::vector<double> l2_normalize(std::span<const double> v) { return normalize_impl(v); }

double cosine_sim(std::span<const float> a, std::span<const float> b) { return cosine_impl(a, b); }
double cosine_sim(std::span<const double> a, std::span<const double> b) { return cosine_impl(a, b); }

std::vector<double> softmax_temp(std::span<const double> scores, double tau) {
    if (!(tau > 0.0)) throw ParameterError("softmax_temp: tau must be > 0");
    if (scores.empty()) throw ParameterError("softmax_temp: empty score vector");
    const double top = *std::max_element(scores.begin(), scores.end());
    std::vector<double> probs(scores.size());
    double total = 0.0;
    for (std::size_t j = 0; j < scores.size(); ++j) {
        probs[j] = std::exp((scores[j] - top) / tau);
        total += probs[j];
    }
    for (double& p : probs) p /= total;
    return probs;
}

void softmax_inplace(std::span<double> row) {
    if (row.empty()) return;
    const double top = *std::max_element(row.begin(), row.end());
    double total = 0.0;
    for (double& x : row) {
        x = std::exp(x - top);
        total += x;
    }
    for (double& x : row) x /= total;
}

}  // namespace tac
