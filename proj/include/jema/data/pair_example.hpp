#pragma once

#include <string>
#include <vector>

#include "jema/encode/features.hpp"
#include "jema/error.hpp"
#include "jema/matrix.hpp"

namespace jema {

// One recipe-image training pair in feature space. The label lives on the
// image side (the image tower consumes it); label() is the single source.
struct PairExample {
    std::string id;
    RecipeFeatures recipe;
    ImageFeatures image;

    int label() const { return image.category_label; }

    void validate(int n_categories) const {
        if (recipe.sequence.cols != 1 || recipe.key_term.cols != 1 || image.visual.cols != 1)
            fail("pair '", id, "': features must be single columns");
        if (!recipe.sequence.all_finite() || !recipe.key_term.all_finite() ||
            !image.visual.all_finite())
            fail("pair '", id, "': non-finite feature value");
        if (image.category_label < 0 || image.category_label >= n_categories)
            fail("pair '", id, "': label ", image.category_label, " outside ", n_categories,
                 " categories");
    }
};

// Shape check across a corpus; every downstream matrix assembly assumes it.
inline void validate_examples(const std::vector<PairExample>& examples, int n_categories) {
    if (examples.empty()) fail("empty corpus");
    const PairExample& first = examples.front();
    for (const PairExample& e : examples) {
        e.validate(n_categories);
        if (e.recipe.sequence.rows != first.recipe.sequence.rows ||
            e.recipe.key_term.rows != first.recipe.key_term.rows ||
            e.image.visual.rows != first.image.visual.rows)
            fail("pair '", e.id, "': feature dimensions differ from pair '", first.id, "'");
    }
}

} // namespace jema
