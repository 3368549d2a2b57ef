#include "tac/text_space.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "tac/error.hpp"
#include "tac/parallel.hpp"

namespace tac {

Matrix cosine_matrix(const EmbeddingMatrix& a, const EmbeddingMatrix& b) {
    if (a.dim() != b.dim()) {
        throw DimensionError("cosine_matrix: dimension " + std::to_string(a.dim()) + " vs " +
                             std::to_string(b.dim()));
    }
    std::vector<double> norm_b(b.rows());
    for (std::size_t j = 0; j < b.rows(); ++j) {
        norm_b[j] = l2_norm(b.row(j));
        if (!(norm_b[j] > 0.0)) throw NormalizationError("cosine_matrix: zero row " + std::to_string(j));
    }
    Matrix out(a.rows(), b.rows());
    parallel_for(a.rows(), [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const double na = l2_norm(a.row(i));
            if (!(na > 0.0)) throw NormalizationError("cosine_matrix: zero row " + std::to_string(i));
            for (std::size_t j = 0; j < b.rows(); ++j) {
                out(i, j) = std::clamp(dot(a.row(i), b.row(j)) / (na * norm_b[j]), -1.0, 1.0);
            }
        }
    });
    return out;
}

Matrix classify_nouns(const EmbeddingMatrix& nouns, const EmbeddingMatrix& centers,
                      double temperature) {
    if (!(temperature > 0.0)) throw ParameterError("classify_nouns: temperature must be > 0");
    Matrix probs = cosine_matrix(nouns, centers);
    for (std::size_t i = 0; i < probs.rows(); ++i) {
        auto row = probs.row(i);
        const auto p = softmax_temp(row, temperature);
        std::copy(p.begin(), p.end(), row.begin());
    }
    return probs;
}

Matrix classify_nouns(const NounVocabulary& nouns, const EmbeddingMatrix& centers,
                      double temperature) {
    return classify_nouns(nouns.embeddings, centers, temperature);
}

std::vector<int> argmax_rows(const Matrix& probs) {
    std::vector<int> out(probs.rows(), 0);
    for (std::size_t i = 0; i < probs.rows(); ++i) {
        const auto row = probs.row(i);
        // max_element returns the first maximum, i.e. the lowest column on ties.
        out[i] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
    }
    return out;
}

NounSelection select_nouns(const Matrix& probs, std::size_t gamma) {
    if (gamma == 0) throw ParameterError("select_nouns: gamma must be >= 1");
    if (probs.rows() == 0 || probs.cols() == 0) {
        throw SelectionError("select_nouns: no nouns or no centers to select from");
    }
    const std::size_t k = probs.cols();
    const auto owner = argmax_rows(probs);
    std::vector<std::vector<std::uint32_t>> pools(k);
    for (std::size_t i = 0; i < owner.size(); ++i) pools[owner[i]].push_back(static_cast<std::uint32_t>(i));

    NounSelection sel;
    sel.gamma = gamma;
    for (std::size_t l = 0; l < k; ++l) {
        auto& pool = pools[l];
        if (pool.empty()) continue;
        std::stable_sort(pool.begin(), pool.end(), [&](std::uint32_t a, std::uint32_t b) {
            return probs(a, l) > probs(b, l);
        });
        const double threshold = probs(pool[std::min(gamma, pool.size()) - 1], l);
        CenterNouns entry;
        entry.center = static_cast<int>(l);
        for (auto idx : pool) {
            if (probs(idx, l) < threshold) break;
            entry.members.push_back(idx);
            entry.confidences.push_back(probs(idx, l));
        }
        sel.selected.insert(sel.selected.end(), entry.members.begin(), entry.members.end());
        sel.per_center.push_back(std::move(entry));
    }
    std::sort(sel.selected.begin(), sel.selected.end());
    if (sel.selected.empty()) throw SelectionError("select_nouns: every pool is empty");
    return sel;
}

TextCounterparts build_counterparts(const EmbeddingMatrix& images, const NounVocabulary& nouns,
                                    const NounSelection& selection, double tau) {
    if (!(tau > 0.0)) throw ParameterError("build_counterparts: tau must be > 0");
    if (selection.selected.empty()) throw SelectionError("build_counterparts: no selected nouns");
    const EmbeddingMatrix selected = nouns.embeddings.select_rows(selection.selected);
    const Matrix sims = cosine_matrix(images, selected);
    const std::size_t dim = selected.dim();

    std::vector<float> out(images.rows() * dim);
    parallel_for(images.rows(), [&](std::size_t begin, std::size_t end) {
        std::vector<double> acc(dim);
        for (std::size_t i = begin; i < end; ++i) {
            const auto weights = softmax_temp(sims.row(i), tau);
            std::fill(acc.begin(), acc.end(), 0.0);
            for (std::size_t j = 0; j < weights.size(); ++j) {
                const auto t = selected.row(j);
                for (std::size_t d = 0; d < dim; ++d) acc[d] += weights[j] * t[d];
            }
            const auto unit = l2_normalize(std::span<const double>(acc));
            for (std::size_t d = 0; d < dim; ++d) out[i * dim + d] = static_cast<float>(unit[d]);
        }
    });
    return TextCounterparts{EmbeddingMatrix(images.rows(), dim, std::move(out), true), tau};
}

std::vector<int> cluster_no_train(const EmbeddingMatrix& images, const TextCounterparts& counterparts,
                                  std::size_t target_k, RngState& rng, const KmeansOptions& opts,
                                  bool normalize_halves) {
    const auto features = concat_features(counterparts.matrix, images, normalize_halves);
    return kmeans_fit(features, target_k, rng, opts).assignment;
}

std::string apply_prompt(const std::string& prompt_template, const std::string& class_name) {
    static const std::string placeholder = "[CLASS]";
    const auto pos = prompt_template.find(placeholder);
    if (pos == std::string::npos || prompt_template.find(placeholder, pos + 1) != std::string::npos) {
        throw ParameterError("prompt template must contain exactly one [CLASS] placeholder");
    }
    std::string out = prompt_template;
    out.replace(pos, placeholder.size(), class_name);
    return out;
}

Matrix zero_shot_classify(const EmbeddingMatrix& images, const EmbeddingMatrix& class_texts,
                          const ZeroShotConfig& cfg) {
    if (!(cfg.clip_tau > 0.0)) throw ParameterError("zero_shot_classify: clip_tau must be > 0");
    Matrix probs = cosine_matrix(images, class_texts);
    for (std::size_t i = 0; i < probs.rows(); ++i) {
        auto row = probs.row(i);
        const auto p = softmax_temp(row, cfg.clip_tau);
        std::copy(p.begin(), p.end(), row.begin());
    }
    return probs;
}

TextSpace build_text_space(const EmbeddingMatrix& images, const NounVocabulary& nouns,
                           std::size_t target_k, const TextSpaceConfig& cfg, RngState& rng,
                           const std::optional<EmbeddingMatrix>& external_centers) {
    if (images.dim() != nouns.embeddings.dim()) {
        throw DimensionError("image dim " + std::to_string(images.dim()) + " vs noun dim " +
                             std::to_string(nouns.embeddings.dim()));
    }
    EmbeddingMatrix centers = [&] {
        if (external_centers) return external_centers->normalized();
        const std::size_t k = estimate_k(images.rows(), target_k, cfg.granularity);
        return kmeans_fit(images, k, rng, cfg.kmeans).centers;
    }();
    Matrix probs = classify_nouns(nouns, centers, cfg.noun_temperature);
    NounSelection sel = select_nouns(probs, cfg.gamma);
    TextCounterparts counterparts = build_counterparts(images, nouns, sel, cfg.retrieval_tau);
    const std::size_t k = centers.rows();
    return TextSpace{k, std::move(centers), std::move(probs), std::move(sel), std::move(counterparts)};
}

void write_selection_report(const std::filesystem::path& path, const NounSelection& selection,
                            const NounVocabulary& nouns, const std::string& config_hash) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw FormatError("cannot write " + path.string());
    if (!config_hash.empty()) out << "# config_hash: " << config_hash << '\n';
    out << "center\tnoun\tconfidence\n";
    char buf[32];
    for (const auto& entry : selection.per_center) {
        for (std::size_t j = 0; j < entry.members.size(); ++j) {
            std::snprintf(buf, sizeof(buf), "%.6f", entry.confidences[j]);
            out << entry.center << '\t' << nouns.nouns[entry.members[j]] << '\t' << buf << '\n';
        }
    }
}

}  // namespace tac
