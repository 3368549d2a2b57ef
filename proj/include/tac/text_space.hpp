#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tac/core_math.hpp"
#include "tac/embedding_store.hpp"
#include "tac/kmeans.hpp"
#include "tac/rng.hpp"

namespace tac {

/// Row-by-row cosine similarities, |a| × |b|.
Matrix cosine_matrix(const EmbeddingMatrix& a, const EmbeddingMatrix& b);

/// p(center | noun): softmax over centers of cosine(noun, center) / temperature.
/// The default temperature of 1 is the plain softmax over raw cosines.
Matrix classify_nouns(const EmbeddingMatrix& nouns, const EmbeddingMatrix& centers,
                      double temperature = 1.0);
Matrix classify_nouns(const NounVocabulary& nouns, const EmbeddingMatrix& centers,
                      double temperature = 1.0);

struct CenterNouns {
    int center = 0;
    std::vector<std::uint32_t> members;  // by confidence desc, then index asc
    std::vector<double> confidences;     // aligned with members
};

struct NounSelection {
    std::vector<std::uint32_t> selected;  // ascending, unique
    std::vector<CenterNouns> per_center;  // centers with a non-empty pool, ascending id
    std::size_t gamma = 0;
};

/// Each noun is eligible only for its argmax center (ties: lowest center id).
/// Within a pool, nouns whose confidence reaches the gamma-th largest are kept;
/// nouns tied with the gamma-th are all kept. Throws SelectionError when no
/// noun lands in any pool, ParameterError when gamma == 0.
NounSelection select_nouns(const Matrix& probs, std::size_t gamma);

struct TextCounterparts {
    EmbeddingMatrix matrix;  // N×D, unit rows
    double retrieval_tau;
};

/// Soft retrieval: row i is the p(noun | image i)-weighted sum of the selected
/// noun embeddings (softmax over cosines at `tau`), renormalized to unit norm.
TextCounterparts build_counterparts(const EmbeddingMatrix& images, const NounVocabulary& nouns,
                                    const NounSelection& selection, double tau);

/// k-means with k = K on [counterpart_i ‖ image_i].
std::vector<int> cluster_no_train(const EmbeddingMatrix& images, const TextCounterparts& counterparts,
                                  std::size_t target_k, RngState& rng,
                                  const KmeansOptions& opts = {}, bool normalize_halves = true);

struct ZeroShotConfig {
    double clip_tau = 0.01;
    std::string prompt_template = "a photo of [CLASS]";
};

/// Substitutes `class_name` for the single [CLASS] placeholder.
std::string apply_prompt(const std::string& prompt_template, const std::string& class_name);

/// p(class | image): softmax over classes of cosine(image, class_text) / clip_tau.
Matrix zero_shot_classify(const EmbeddingMatrix& images, const EmbeddingMatrix& class_texts,
                          const ZeroShotConfig& cfg);

/// Row-wise argmax, ties to the lowest column.
std::vector<int> argmax_rows(const Matrix& probs);

struct TextSpaceConfig {
    GranularityConfig granularity;
    std::size_t gamma = 5;
    double retrieval_tau = 0.005;
    double noun_temperature = 1.0;
    KmeansOptions kmeans;
};

/// Everything produced while building the text space, kept for reporting.
struct TextSpace {
    std::size_t k = 0;
    EmbeddingMatrix centers;
    Matrix noun_probs;
    NounSelection selection;
    TextCounterparts counterparts;
};

/// Semantic centers (k-means with estimated k, unless `external_centers` is
/// given), noun classification, selection and counterpart construction.
TextSpace build_text_space(const EmbeddingMatrix& images, const NounVocabulary& nouns,
                           std::size_t target_k, const TextSpaceConfig& cfg, RngState& rng,
                           const std::optional<EmbeddingMatrix>& external_centers = std::nullopt);

/// Tab-separated: center, noun, confidence; one line per selected noun.
void write_selection_report(const std::filesystem::path& path, const NounSelection& selection,
                            const NounVocabulary& nouns, const std::string& config_hash = {});

}  // namespace tac
