#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "tac/cluster_head.hpp"
#include "tac/distill_loss.hpp"
#include "tac/embedding_store.hpp"
#include "tac/neighbors.hpp"
#include "tac/text_space.hpp"

namespace tac {

struct DistillConfig {
    LossConfig loss;
    std::size_t n_neighbors = 50;
    std::size_t batch_size = 512;
    std::size_t epochs = 20;
    std::size_t hidden_dim = 0;  // 0: same as the image dimension
    AdamConfig adam;
    std::uint64_t seed = 0;
    Activation activation = Activation::Relu;

    /// Settings for many target clusters: tau_hat 5, batch 8192, 100 epochs.
    static DistillConfig large_k();
};

/// Throws ParameterError unless tau_hat > 0, alpha >= 0, batch_size >= 2,
/// lr > 0 (or exactly 0, which freezes the parameters), epochs >= 1.
void validate_config(const DistillConfig& cfg);

/// f maps images, g maps text counterparts.
struct HeadPair {
    ClusterHeadParams f;
    ClusterHeadParams g;

    bool operator==(const HeadPair&) const = default;
};

/// Embeddings of one batch and of one sampled neighbor per row.
struct BatchInputs {
    Matrix v;
    Matrix v_nbr;
    Matrix t;
    Matrix t_nbr;
};

HeadPair init_heads(std::size_t image_dim, std::size_t text_dim, std::size_t clusters,
                    const DistillConfig& cfg);

LossBreakdown objective(const HeadPair& heads, const BatchInputs& in, const LossConfig& cfg);

/// Loss and exact gradient for every parameter of both heads; neighbor rows
/// share parameters with their anchors and contribute to the same gradient.
LossBreakdown objective_with_grads(const HeadPair& heads, const BatchInputs& in, const LossConfig& cfg,
                                   HeadPair& grad);

struct TrainResult {
    HeadPair heads;
    std::vector<LossBreakdown> history;  // one entry per step
    std::uint64_t steps = 0;
};

/// epochs × ceil(N / batch_size) Adam steps. Each epoch reshuffles; each
/// appearance of a row draws fresh neighbors from both graphs. Throws
/// TrainingDiverged on a non-finite loss.
TrainResult train(const EmbeddingMatrix& images, const TextCounterparts& counterparts,
                  const NeighborGraph& image_graph, const NeighborGraph& text_graph,
                  std::size_t clusters, const DistillConfig& cfg);

/// argmax of the image head per row, ties to the lowest cluster id.
std::vector<int> predict(const ClusterHeadParams& f, const EmbeddingMatrix& images);

// Checkpoint, little-endian: "TACK", u32 version, u32 D, u32 H, u32 K,
// u32 text D, u64 step, u8 activation, padding to 48 bytes, then float32
// W1, b1, W2, b2 of f followed by the same for g.
void write_checkpoint(const std::filesystem::path& path, const HeadPair& heads, std::uint64_t step);
HeadPair load_checkpoint(const std::filesystem::path& path, std::uint64_t* step = nullptr);

/// CSV "step,dis,con,bal,total", steps counted from 1. A non-empty hash is
/// written first as a "# config_hash: ..." line.
void write_loss_csv(const std::filesystem::path& path, const std::vector<LossBreakdown>& history,
                    const std::string& config_hash = {});

}  // namespace tac
