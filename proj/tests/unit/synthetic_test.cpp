#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "jema/data/synthetic.hpp"

using namespace jema;

namespace {

SyntheticSpec small_spec() {
    SyntheticSpec s;
    s.class_count = 3;
    s.pairs_per_class = 4;
    s.latent_dim = 5;
    s.noise_sigma = 0.1;
    s.seed = 11;
    s.sequence_dim = 8;
    s.key_term_dim = 4;
    s.visual_dim = 6;
    return s;
}

bool same_examples(const std::vector<PairExample>& a, const std::vector<PairExample>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].id != b[i].id || a[i].label() != b[i].label()) return false;
        if (a[i].recipe.sequence.data != b[i].recipe.sequence.data) return false;
        if (a[i].recipe.key_term.data != b[i].recipe.key_term.data) return false;
        if (a[i].image.visual.data != b[i].image.visual.data) return false;
    }
    return true;
}

} // namespace

TEST_CASE("synthetic corpus has the promised shape") {
    const SyntheticSpec spec = small_spec();
    const SyntheticCorpus corpus = generate_synthetic_corpus(spec);

    REQUIRE(corpus.examples.size() == 12);
    REQUIRE(corpus.categories.size() == 3);
    REQUIRE(corpus.categories.index("class_2") == 2);
    REQUIRE(corpus.centroids.rows == 3);
    REQUIRE(corpus.centroids.cols == 5);
    REQUIRE(corpus.latents.rows == 12);

    std::set<std::string> ids;
    for (std::size_t i = 0; i < corpus.examples.size(); ++i) {
        const PairExample& e = corpus.examples[i];
        REQUIRE(e.label() == static_cast<int>(i) / 4);  // class-major order
        REQUIRE(e.recipe.sequence.rows == 8);
        REQUIRE(e.recipe.key_term.rows == 4);
        REQUIRE(e.image.visual.rows == 6);
        ids.insert(e.id);
    }
    REQUIRE(ids.size() == corpus.examples.size());
}

TEST_CASE("zero noise collapses every pair onto its class centroid") {
    SyntheticSpec spec = small_spec();
    spec.noise_sigma = 0.0;
    const SyntheticCorpus corpus = generate_synthetic_corpus(spec);

    for (int c = 0; c < spec.class_count; ++c) {
        const int base = c * spec.pairs_per_class;
        for (int j = 0; j < spec.latent_dim; ++j)
            REQUIRE(corpus.latents.at(base, j) == corpus.centroids.at(c, j));
        for (int k = 1; k < spec.pairs_per_class; ++k) {
            const PairExample& a = corpus.examples[static_cast<std::size_t>(base)];
            const PairExample& b = corpus.examples[static_cast<std::size_t>(base + k)];
            REQUIRE(a.recipe.sequence.data == b.recipe.sequence.data);
            REQUIRE(a.recipe.key_term.data == b.recipe.key_term.data);
            REQUIRE(a.image.visual.data == b.image.visual.data);
        }
    }
}

TEST_CASE("the two modalities are distinct projections of one latent") {
    SyntheticSpec spec = small_spec();
    spec.noise_sigma = 0.0;
    spec.visual_dim = spec.sequence_dim;  // comparable shapes
    const SyntheticCorpus corpus = generate_synthetic_corpus(spec);
    const PairExample& e = corpus.examples.front();
    REQUIRE(e.recipe.sequence.data != e.image.visual.data);
}

TEST_CASE("synthetic generation is bit-identical under one seed") {
    const SyntheticSpec spec = small_spec();
    const SyntheticCorpus a = generate_synthetic_corpus(spec);
    const SyntheticCorpus b = generate_synthetic_corpus(spec);
    REQUIRE(same_examples(a.examples, b.examples));
    REQUIRE(a.centroids.data == b.centroids.data);
    REQUIRE(a.latents.data == b.latents.data);

    SyntheticSpec other = spec;
    other.seed = 12;
    REQUIRE_FALSE(same_examples(a.examples, generate_synthetic_corpus(other).examples));
}

TEST_CASE("feature scale multiplies features and nothing else") {
    SyntheticSpec spec = small_spec();
    const SyntheticCorpus base = generate_synthetic_corpus(spec);
    spec.feature_scale = 2.0;
    const SyntheticCorpus doubled = generate_synthetic_corpus(spec);

    REQUIRE(base.latents.data == doubled.latents.data);
    for (std::size_t i = 0; i < base.examples.size(); ++i)
        for (std::size_t j = 0; j < base.examples[i].image.visual.data.size(); ++j)
            REQUIRE(doubled.examples[i].image.visual.data[j] ==
                    2.0 * base.examples[i].image.visual.data[j]);
}

TEST_CASE("latents classify back to their centroids perfectly") {
    SyntheticSpec spec;  // 10 classes x 20 pairs, latent 16, noise 0.05
    spec.sequence_dim = 4;
    spec.key_term_dim = 3;
    spec.visual_dim = 5;
    spec.seed = 77;
    const SyntheticCorpus corpus = generate_synthetic_corpus(spec);
    REQUIRE(corpus.examples.size() == 200);
    REQUIRE(nearest_centroid_accuracy(corpus) == 1.0);
}

TEST_CASE("synthetic spec rejects degenerate settings") {
    SyntheticSpec spec = small_spec();
    spec.class_count = 1;
    REQUIRE_THROWS_WITH(generate_synthetic_corpus(spec),
                        Catch::Matchers::ContainsSubstring("class count"));
    spec = small_spec();
    spec.noise_sigma = -0.5;
    REQUIRE_THROWS_WITH(generate_synthetic_corpus(spec),
                        Catch::Matchers::ContainsSubstring("noise sigma"));
    spec = small_spec();
    spec.pairs_per_class = 0;
    REQUIRE_THROWS_WITH(generate_synthetic_corpus(spec),
                        Catch::Matchers::ContainsSubstring("pairs per class"));
    spec = small_spec();
    spec.feature_scale = 0.0;
    REQUIRE_THROWS_WITH(generate_synthetic_corpus(spec),
                        Catch::Matchers::ContainsSubstring("feature scale"));
}
