#include <doctest.h>

#include <cmath>
#include <numeric>

#include "oracles.hpp"
#include "support.hpp"
#include "tac/error.hpp"
#include "tac/metrics.hpp"
#include "tac/text_space.hpp"

namespace {

tac::EmbeddingMatrix axes(std::size_t d, std::initializer_list<std::size_t> which) {
    std::vector<float> v;
    for (std::size_t a : which) {
        for (std::size_t j = 0; j < d; ++j) v.push_back(j == a ? 1.0f : 0.0f);
    }
    return tac::EmbeddingMatrix(which.size(), d, std::move(v), true);
}

tac::NounVocabulary vocab(const tac::EmbeddingMatrix& e) {
    std::vector<std::string> names;
    for (std::size_t i = 0; i < e.rows(); ++i) names.push_back("noun " + std::to_string(i));
    return tac::make_vocabulary(names, e);
}

}  // namespace

TEST_CASE("classify_nouns examples") {
    const auto centers = axes(3, {0, 1, 2});
    const auto nouns = axes(3, {0});
    const auto p = tac::classify_nouns(nouns, centers);
    const double e = std::exp(1.0);
    CHECK(p(0, 0) == doctest::Approx(e / (e + 2)));
    CHECK(p(0, 1) == doctest::Approx(1 / (e + 2)));

    const auto one = tac::classify_nouns(testing::random_embeddings(5, 3, 1), axes(3, {1}));
    for (std::size_t i = 0; i < 5; ++i) CHECK(one(i, 0) == doctest::Approx(1.0));

    CHECK_THROWS_AS(tac::classify_nouns(nouns, axes(4, {0})), tac::DimensionError);
    CHECK_THROWS_AS(tac::classify_nouns(nouns, centers, 0.0), tac::ParameterError);

    // Rows are distributions.
    const auto r = tac::classify_nouns(testing::random_embeddings(40, 6, 2), testing::random_embeddings(7, 6, 3));
    for (std::size_t i = 0; i < r.rows(); ++i) {
        double s = 0;
        for (double v : r.row(i)) {
            CHECK(v > 0.0);
            s += v;
        }
        CHECK(s == doctest::Approx(1.0));
    }
}

TEST_CASE("select_nouns examples") {
    tac::Matrix p(4, 2);
    const double rows[4][2] = {{0.9, 0.1}, {0.8, 0.2}, {0.3, 0.7}, {0.6, 0.4}};
    for (int i = 0; i < 4; ++i) {
        p(i, 0) = rows[i][0];
        p(i, 1) = rows[i][1];
    }
    const auto s1 = tac::select_nouns(p, 1);
    CHECK(s1.selected == std::vector<std::uint32_t>{0, 2});
    const auto s2 = tac::select_nouns(p, 2);
    CHECK(s2.selected == std::vector<std::uint32_t>{0, 1, 2});
    REQUIRE(s2.per_center.size() == 2);
    CHECK(s2.per_center[0].members == std::vector<std::uint32_t>{0, 1});
    CHECK(s2.per_center[1].members == std::vector<std::uint32_t>{2});

    // A tie at the cut keeps both.
    tac::Matrix t(3, 2);
    t(0, 0) = 0.9; t(0, 1) = 0.1;
    t(1, 0) = 0.7; t(1, 1) = 0.3;
    t(2, 0) = 0.7; t(2, 1) = 0.3;
    CHECK(tac::select_nouns(t, 2).selected == std::vector<std::uint32_t>{0, 1, 2});

    CHECK_THROWS_AS(tac::select_nouns(p, 0), tac::ParameterError);
    CHECK_THROWS_AS(tac::select_nouns(tac::Matrix(0, 2), 1), tac::SelectionError);
}

TEST_CASE("select_nouns invariants against exhaustive oracle") {
    tac::RngState rng = tac::make_rng(31, tac::streams::fixture);
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t m = 5 + tac::rng_uniform_int(rng, 40);
        const std::size_t k = 2 + tac::rng_uniform_int(rng, 6);
        const std::size_t gamma = 1 + tac::rng_uniform_int(rng, 6);
        auto probs = oracle::random_stochastic(m, k, rng);
        const auto sel = tac::select_nouns(probs, gamma);
        const auto expected = oracle::exhaustive_selection(probs, gamma);
        std::set<std::uint32_t> all;
        for (const auto& [c, s] : expected) all.insert(s.begin(), s.end());
        CHECK(std::vector<std::uint32_t>(all.begin(), all.end()) == sel.selected);
        for (const auto& pool : sel.per_center) {
            CHECK(pool.members.size() >= std::min<std::size_t>(gamma, pool.members.size()));
            CHECK(std::set<std::uint32_t>(pool.members.begin(), pool.members.end()) == expected.at(pool.center));
            CHECK(std::is_sorted(pool.confidences.rbegin(), pool.confidences.rend()));
        }
        CHECK(std::is_sorted(sel.selected.begin(), sel.selected.end()));
        // Never more than gamma per center unless ties.
        CHECK(sel.selected.size() <= gamma * k);
    }
}

TEST_CASE("build_counterparts examples") {
    const auto nouns = vocab(axes(3, {0, 1, 2}));
    tac::NounSelection all;
    all.selected = {0, 1, 2};

    // Sharp temperature retrieves the closest noun.
    const tac::EmbeddingMatrix img(1, 3, {0.8f, 0.6f, 0.0f}, true);
    const auto sharp = tac::build_counterparts(img, nouns, all, 0.005);
    CHECK(sharp.matrix.row(0)[0] == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(sharp.matrix.is_normalized());

    // Equidistant image gets the normalized average of the nouns.
    const auto mid = axes(3, {2});
    tac::NounSelection two;
    two.selected = {0, 1};
    const auto avg = tac::build_counterparts(mid, nouns, two, 0.5);
    CHECK(avg.matrix.row(0)[0] == doctest::Approx(std::sqrt(0.5)));
    CHECK(avg.matrix.row(0)[1] == doctest::Approx(std::sqrt(0.5)));

    // Only selected nouns contribute.
    tac::NounSelection only;
    only.selected = {1};
    const auto forced = tac::build_counterparts(img, nouns, only, 0.005);
    CHECK(forced.matrix.row(0)[1] == doctest::Approx(1.0));

    CHECK_THROWS_AS(tac::build_counterparts(img, nouns, tac::NounSelection{}, 0.1), tac::SelectionError);
    CHECK_THROWS_AS(tac::build_counterparts(img, nouns, all, 0.0), tac::ParameterError);
}

TEST_CASE("cluster_no_train recovers paired structure") {
    // Images are ambiguous on their own; counterparts carry the class.
    const std::size_t n = 200;
    tac::RngState rng = tac::make_rng(3, tac::streams::fixture);
    std::vector<float> iv(n * 4), tv(n * 4);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        y[i] = static_cast<int>(i % 2);
        for (std::size_t j = 0; j < 4; ++j) {
            iv[i * 4 + j] = static_cast<float>(0.3 * tac::rng_normal(rng)) + (j == 2 ? 1.0f : 0.0f);
            tv[i * 4 + j] = static_cast<float>(0.05 * tac::rng_normal(rng)) + (j == std::size_t(y[i]) ? 1.0f : 0.0f);
        }
    }
    const auto images = tac::EmbeddingMatrix(n, 4, iv).normalized();
    const tac::TextCounterparts texts{tac::EmbeddingMatrix(n, 4, tv).normalized(), 0.005};
    tac::RngState krng = tac::make_rng(1, tac::streams::kmeans_init);
    const auto a = tac::cluster_no_train(images, texts, 2, krng);
    CHECK(tac::acc(a, y) >= 0.99);

    const tac::TextCounterparts wrong{testing::random_embeddings(n - 1, 4, 2), 0.005};
    CHECK_THROWS_AS(tac::cluster_no_train(images, wrong, 2, krng), tac::DimensionError);
}

TEST_CASE("zero-shot classification") {
    const auto classes = axes(3, {0, 1, 2});
    const tac::EmbeddingMatrix img(2, 3, {0.8f, 0.6f, 0.0f, 0.0f, 0.0f, 1.0f}, true);
    const auto p = tac::zero_shot_classify(img, classes, {});
    CHECK(tac::argmax_rows(p) == std::vector<int>{0, 2});
    // Logit gap 0.2 / 0.01 = 20.
    CHECK(p(0, 1) / p(0, 0) == doctest::Approx(std::exp(-20.0)).epsilon(1e-6));
    tac::ZeroShotConfig bad;
    bad.clip_tau = 0;
    CHECK_THROWS_AS(tac::zero_shot_classify(img, classes, bad), tac::ParameterError);

    CHECK(tac::apply_prompt("a photo of [CLASS]", "dog") == "a photo of dog");
    CHECK(tac::apply_prompt("[CLASS]", "cat") == "cat");
    CHECK_THROWS_AS(tac::apply_prompt("a photo", "dog"), tac::ParameterError);
    CHECK_THROWS_AS(tac::apply_prompt("[CLASS] and [CLASS]", "dog"), tac::ParameterError);
}

TEST_CASE("argmax ties go to the lowest column") {
    tac::Matrix p(2, 3, 1.0 / 3);
    p(1, 2) = 0.5;
    CHECK(tac::argmax_rows(p) == std::vector<int>{0, 2});
}

TEST_CASE("build_text_space wiring") {
    const auto images = testing::random_embeddings(120, 8, 4);
    const auto nouns = vocab(testing::random_embeddings(30, 8, 5));
    tac::TextSpaceConfig cfg;
    cfg.granularity.compact_cluster_size = 20;
    tac::RngState rng = tac::make_rng(0, tac::streams::kmeans_init);
    const auto ts = tac::build_text_space(images, nouns, 2, cfg, rng);
    CHECK(ts.k == 6);
    CHECK(ts.centers.rows() == 6);
    CHECK(ts.noun_probs.rows() == 30);
    CHECK(ts.counterparts.matrix.rows() == 120);

    tac::RngState rng2 = tac::make_rng(0, tac::streams::kmeans_init);
    const auto ext = tac::build_text_space(images, nouns, 2, cfg, rng2, axes(8, {0, 1}));
    CHECK(ext.k == 2);
    CHECK(ext.selection.selected.size() <= 2 * cfg.gamma + 2);

    tac::RngState rng3 = tac::make_rng(0, tac::streams::kmeans_init);
    CHECK_THROWS_AS(tac::build_text_space(testing::random_embeddings(50, 4, 1), nouns, 2, cfg, rng3),
                    tac::DimensionError);
}
