#include "tac/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "tac/core_math.hpp"
#include "tac/error.hpp"
#include "tac/rng.hpp"

namespace tac {
namespace {

void push_unit(std::vector<float>& out, std::vector<double>& v) {
    const auto unit = l2_normalize(std::span<const double>(v));
    out.insert(out.end(), unit.begin(), unit.end());
}

}  // namespace

SyntheticData make_synthetic(const SyntheticConfig& cfg) {
    if (cfg.clusters < 2 || cfg.n < cfg.clusters || cfg.styles == 0) {
        throw ParameterError("synthetic: need n >= clusters >= 2 and styles >= 1");
    }
    if (cfg.dim < cfg.clusters + cfg.styles) throw ParameterError("synthetic: dim must cover class and style axes");

    const RngState root = make_rng(cfg.seed, streams::fixture);
    RngState label_rng = rng_split(root, 0);
    RngState style_rng = rng_split(root, 1);
    RngState image_rng = rng_split(root, 2);
    RngState text_rng = rng_split(root, 3);
    RngState noun_rng = rng_split(root, 4);

    std::vector<int> labels(cfg.n);
    std::vector<float> images, texts;
    images.reserve(cfg.n * cfg.dim);
    texts.reserve(cfg.n * cfg.dim);
    std::vector<double> v(cfg.dim);
    for (std::size_t i = 0; i < cfg.n; ++i) {
        labels[i] = static_cast<int>(rng_uniform_int(label_rng, cfg.clusters));
        const std::size_t style = cfg.clusters + rng_uniform_int(style_rng, cfg.styles);

        for (double& x : v) x = cfg.image_sigma * rng_normal(image_rng);
        v[labels[i]] += cfg.class_radius;
        v[style] += cfg.style_radius;
        push_unit(images, v);

        for (double& x : v) x = cfg.text_sigma * rng_normal(text_rng);
        v[labels[i]] += cfg.class_radius;
        push_unit(texts, v);
    }

    std::vector<std::string> names;
    std::vector<float> noun_data;
    for (std::size_t c = 0; c < cfg.clusters; ++c) {
        for (std::size_t j = 0; j < cfg.nouns_per_class; ++j) {
            for (double& x : v) x = cfg.noun_sigma * rng_normal(noun_rng);
            v[c] += 1.0;
            push_unit(noun_data, v);
            names.push_back("concept " + std::to_string(c) + " variant " + std::to_string(j));
        }
    }
    const std::size_t content_axes = cfg.clusters + cfg.styles;
    for (std::size_t j = 0; j < cfg.distractors; ++j) {
        for (std::size_t d = 0; d < cfg.dim; ++d) {
            v[d] = rng_normal(noun_rng) * (d < content_axes ? 0.1 : 1.0);
        }
        push_unit(noun_data, v);
        names.push_back("filler " + std::to_string(j));
    }
    const std::size_t noun_count = names.size();

    return SyntheticData{EmbeddingMatrix(cfg.n, cfg.dim, std::move(images), true),
                         EmbeddingMatrix(cfg.n, cfg.dim, std::move(texts), true), std::move(labels),
                         make_vocabulary(std::move(names),
                                         EmbeddingMatrix(noun_count, cfg.dim, std::move(noun_data), true))};
}

std::filesystem::path write_synthetic_dataset(const std::filesystem::path& dir, const SyntheticData& data,
                                              const std::string& name) {
    std::filesystem::create_directories(dir);
    write_embeddings(dir / "images.tace", data.images);
    write_labels(dir / "labels.txt", data.labels);
    write_embeddings(dir / "nouns.tace", data.nouns.embeddings);
    {
        std::ofstream out(dir / "nouns.txt", std::ios::trunc);
        if (!out) throw FormatError("cannot write " + (dir / "nouns.txt").string());
        for (const auto& noun : data.nouns.nouns) out << noun << '\n';
    }
    int max_label = 0;
    for (int l : data.labels) max_label = std::max(max_label, l);

    DatasetManifest m;
    m.name = name;
    m.images = "images.tace";
    m.labels = "labels.txt";
    m.nouns = "nouns.txt";
    m.target_k = static_cast<std::size_t>(max_label) + 1;
    const auto path = dir / "manifest.txt";
    write_manifest(path, m);
    return path;
}

}  // namespace tac
