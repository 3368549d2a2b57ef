#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "tac/embedding_store.hpp"

namespace tac {

/// Gaussian-mixture stand-in for paired image/text embeddings.
///
/// Class c sits on axis c. Images additionally carry a class-independent
/// "style" on one of the next `styles` axes, so image-only clustering is
/// pulled towards styles while the text side sees classes only. Nouns: a few
/// per class near the class axis plus distractors away from every class and
/// style axis.
struct SyntheticConfig {
    std::size_t n = 2000;
    std::size_t dim = 32;
    std::size_t clusters = 4;
    std::size_t styles = 4;
    double class_radius = 2.0;
    double style_radius = 2.5;
    double image_sigma = 0.4;
    double text_sigma = 0.15;
    std::size_t nouns_per_class = 6;
    double noun_sigma = 0.08;
    std::size_t distractors = 200;
    std::uint64_t seed = 1;
};

struct SyntheticData {
    EmbeddingMatrix images;  // unit rows
    EmbeddingMatrix texts;   // unit rows, paired with images
    std::vector<int> labels;
    NounVocabulary nouns;
};

SyntheticData make_synthetic(const SyntheticConfig& cfg);

/// Writes images.tace, labels.txt, nouns.txt, nouns.tace and manifest.txt
/// into `dir` (created if needed) and returns the manifest path.
std::filesystem::path write_synthetic_dataset(const std::filesystem::path& dir, const SyntheticData& data,
                                              const std::string& name = "synthetic");

}  // namespace tac
