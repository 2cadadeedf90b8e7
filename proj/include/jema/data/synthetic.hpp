#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "jema/data/pair_example.hpp"
#include "jema/error.hpp"
#include "jema/matrix.hpp"
#include "jema/rng.hpp"
#include "jema/text/category.hpp"

namespace jema {

// Class-structured paired data with known ground-truth alignment: each class
// owns a latent centroid, each pair perturbs it, and the two modalities see
// the same latent through different fixed projections.
struct SyntheticSpec {
    int class_count = 10;
    int pairs_per_class = 20;
    int latent_dim = 16;
    double noise_sigma = 0.05;
    std::uint64_t seed = 1;
    int sequence_dim = 512;
    int key_term_dim = 300;
    int visual_dim = 512;
    double feature_scale = 1.0;

    void validate() const {
        if (class_count < 2) fail("synthetic spec: class count must be >= 2, got ", class_count);
        if (pairs_per_class < 1)
            fail("synthetic spec: pairs per class must be >= 1, got ", pairs_per_class);
        if (latent_dim < 1) fail("synthetic spec: latent dim must be >= 1, got ", latent_dim);
        if (noise_sigma < 0.0)
            fail("synthetic spec: noise sigma must be >= 0, got ", noise_sigma);
        if (sequence_dim < 1 || key_term_dim < 1 || visual_dim < 1)
            fail("synthetic spec: feature dims must be >= 1");
        if (!(feature_scale > 0.0)) fail("synthetic spec: feature scale must be > 0");
    }
};

// Examples plus the ground truth they were drawn from; the latents and
// centroids stay visible so alignment claims can be checked directly.
struct SyntheticCorpus {
    std::vector<PairExample> examples;
    CategorySpace categories;
    DenseMatrix centroids;  // class_count x latent_dim
    DenseMatrix latents;    // one row per example, class-major order
};

inline SyntheticCorpus generate_synthetic_corpus(const SyntheticSpec& spec) {
    spec.validate();
    SplitMix64 rng(spec.seed);

    SyntheticCorpus out;
    out.centroids = DenseMatrix(spec.class_count, spec.latent_dim);
    out.centroids.fill_gaussian(rng, 1.0);

    // Fixed projections; entries scale like 1/sqrt(latent) so feature
    // magnitudes stay O(1) regardless of the latent width.
    const double proj_sigma = 1.0 / std::sqrt(static_cast<double>(spec.latent_dim));
    const int recipe_dim = spec.sequence_dim + spec.key_term_dim;
    DenseMatrix proj_recipe(recipe_dim, spec.latent_dim);
    DenseMatrix proj_visual(spec.visual_dim, spec.latent_dim);
    proj_recipe.fill_gaussian(rng, proj_sigma);
    proj_visual.fill_gaussian(rng, proj_sigma);

    const int total = spec.class_count * spec.pairs_per_class;
    out.latents = DenseMatrix(total, spec.latent_dim);

    for (int c = 0; c < spec.class_count; ++c)
        out.categories.add("class_" + std::to_string(c));

    DenseMatrix z(spec.latent_dim, 1);
    for (int c = 0; c < spec.class_count; ++c) {
        for (int k = 0; k < spec.pairs_per_class; ++k) {
            const int row = c * spec.pairs_per_class + k;
            for (int j = 0; j < spec.latent_dim; ++j) {
                z.data[static_cast<std::size_t>(j)] =
                    out.centroids.at(c, j) + spec.noise_sigma * rng.gaussian();
                out.latents.at(row, j) = z.data[static_cast<std::size_t>(j)];
            }
            DenseMatrix r = matmul(proj_recipe, z);
            DenseMatrix v = matmul(proj_visual, z);
            for (double& x : r.data) x = spec.feature_scale * (x + spec.noise_sigma * rng.gaussian());
            for (double& x : v.data) x = spec.feature_scale * (x + spec.noise_sigma * rng.gaussian());

            PairExample e;
            e.id = "syn_" + std::to_string(c) + "_" + std::to_string(k);
            e.recipe.sequence = DenseMatrix(spec.sequence_dim, 1);
            e.recipe.key_term = DenseMatrix(spec.key_term_dim, 1);
            for (int j = 0; j < spec.sequence_dim; ++j)
                e.recipe.sequence.data[static_cast<std::size_t>(j)] =
                    r.data[static_cast<std::size_t>(j)];
            for (int j = 0; j < spec.key_term_dim; ++j)
                e.recipe.key_term.data[static_cast<std::size_t>(j)] =
                    r.data[static_cast<std::size_t>(spec.sequence_dim + j)];
            e.image.visual = std::move(v);
            e.image.category_label = c;
            out.examples.push_back(std::move(e));
        }
    }
    validate_examples(out.examples, spec.class_count);
    return out;
}

// Fraction of examples whose latent sits nearest its own class centroid.
// With modest noise this is exactly 1.0; it is the generator's sanity oracle.
inline double nearest_centroid_accuracy(const SyntheticCorpus& corpus) {
    const int total = corpus.latents.rows;
    if (total == 0) fail("nearest_centroid_accuracy: empty corpus");
    int hits = 0;
    for (int i = 0; i < total; ++i) {
        int best = -1;
        double best_d = 0.0;
        for (int c = 0; c < corpus.centroids.rows; ++c) {
            const double d =
                euclidean(corpus.latents.row(i), corpus.centroids.row(c), corpus.latents.cols);
            if (best < 0 || d < best_d) {
                best = c;
                best_d = d;
            }
        }
        if (best == corpus.examples[static_cast<std::size_t>(i)].label()) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(total);
}

} // namespace jema
