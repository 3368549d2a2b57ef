#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "tac/core_math.hpp"
#include "tac/embedding_store.hpp"
#include "tac/rng.hpp"

namespace tac {

enum class Activation : std::uint8_t { Relu = 0, Tanh = 1 };

/// Two-layer head x -> softmax(act(x·W1 + b1)·W2 + b2), D -> H -> K.
struct ClusterHeadParams {
    Matrix w1;               // D×H
    std::vector<double> b1;  // H
    Matrix w2;               // H×K
    std::vector<double> b2;  // K
    Activation activation = Activation::Relu;

    std::size_t input_dim() const noexcept { return w1.rows(); }
    std::size_t hidden_dim() const noexcept { return w1.cols(); }
    std::size_t clusters() const noexcept { return w2.cols(); }

    /// Parameter tensors in declaration order: W1, b1, W2, b2.
    std::array<std::span<double>, 4> tensors();
    std::array<std::span<const double>, 4> tensors() const;

    bool operator==(const ClusterHeadParams&) const = default;
};

/// Zero-valued parameters with the given shape.
ClusterHeadParams zero_head(std::size_t input_dim, std::size_t hidden_dim, std::size_t clusters,
                            Activation activation = Activation::Relu);

/// Weights uniform in [-a, a], a = sqrt(6 / (fan_in + fan_out)); biases zero.
ClusterHeadParams init_head(std::size_t input_dim, std::size_t hidden_dim, std::size_t clusters,
                            RngState& rng, Activation activation = Activation::Relu);

/// Intermediate values kept for the backward pass.
struct HeadActivations {
    Matrix pre;    // n×H, before the activation
    Matrix hidden; // n×H
    Matrix probs;  // n×K, row-stochastic
};

HeadActivations head_forward_cached(const ClusterHeadParams& params, const Matrix& x);

/// Soft cluster assignments, n×K. Throws DimensionError on a width mismatch.
Matrix head_forward(const ClusterHeadParams& params, const Matrix& x);
Matrix head_forward(const ClusterHeadParams& params, const EmbeddingMatrix& x);

/// Accumulates into `grad` the parameter gradient given dLoss/dprobs.
void head_backward(const ClusterHeadParams& params, const Matrix& x, const HeadActivations& act,
                   const Matrix& dprobs, ClusterHeadParams& grad);

/// Rows of `x` (as doubles) in the given order.
Matrix gather_rows(const EmbeddingMatrix& x, std::span<const std::uint32_t> indices);
Matrix to_matrix(const EmbeddingMatrix& x);

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    ClusterHeadParams m;
    ClusterHeadParams v;
    std::uint64_t t = 0;

    explicit AdamState(const ClusterHeadParams& like);
};

void adam_step(ClusterHeadParams& params, const ClusterHeadParams& grad, AdamState& state,
               const AdamConfig& cfg);

}  // namespace tac
