#pragma once

#include <vector>

#include "jema/data/pair_example.hpp"
#include "jema/error.hpp"
#include "jema/loss/losses.hpp"
#include "jema/rng.hpp"

namespace jema {

namespace detail {

inline TrainingBatch assemble_batch(const std::vector<PairExample>& examples,
                                    const std::vector<int>& idx) {
    const PairExample& first = examples[static_cast<std::size_t>(idx.front())];
    const int seq = first.recipe.sequence.rows;
    const int term = first.recipe.key_term.rows;
    const int vis = first.image.visual.rows;
    const int n = static_cast<int>(idx.size());

    TrainingBatch b;
    b.recipe_features = DenseMatrix(seq + term, n);
    b.visual_features = DenseMatrix(vis, n);
    for (int j = 0; j < n; ++j) {
        const PairExample& e = examples[static_cast<std::size_t>(idx[static_cast<std::size_t>(j)])];
        for (int r = 0; r < seq; ++r)
            b.recipe_features.at(r, j) = e.recipe.sequence.data[static_cast<std::size_t>(r)];
        for (int r = 0; r < term; ++r)
            b.recipe_features.at(seq + r, j) = e.recipe.key_term.data[static_cast<std::size_t>(r)];
        for (int r = 0; r < vis; ++r)
            b.visual_features.at(r, j) = e.image.visual.data[static_cast<std::size_t>(r)];
        b.labels.push_back(e.label());
        b.pair_ids.push_back(e.id);
    }
    return b;
}

} // namespace detail

// One epoch of batches over a seeded shuffle; the short tail is dropped so
// every batch has exactly n pairs. Class-balanced mode repairs single-category
// batches by swapping in an example from another batch, erroring only when no
// swap can fix a batch without breaking the donor.
inline std::vector<TrainingBatch> make_batches(const std::vector<PairExample>& examples,
                                               int n, SplitMix64& rng,
                                               bool class_balanced) {
    if (n < 2) fail("make_batches: batch size must be >= 2, got ", n);
    const int total = static_cast<int>(examples.size());
    if (n > total)
        fail("make_batches: batch size ", n, " exceeds corpus of ", total, " examples");

    std::vector<int> order(static_cast<std::size_t>(total));
    for (int i = 0; i < total; ++i) order[static_cast<std::size_t>(i)] = i;
    rng.shuffle(order);

    const int n_batches = total / n;
    std::vector<std::vector<int>> plan(static_cast<std::size_t>(n_batches));
    for (int b = 0; b < n_batches; ++b)
        plan[static_cast<std::size_t>(b)] =
            std::vector<int>(order.begin() + static_cast<std::ptrdiff_t>(b) * n,
                             order.begin() + static_cast<std::ptrdiff_t>(b + 1) * n);

    bool corpus_mixed = false;
    for (const PairExample& e : examples)
        if (e.label() != examples.front().label()) {
            corpus_mixed = true;
            break;
        }

    if (class_balanced && corpus_mixed) {
        auto label_at = [&](int idx) { return examples[static_cast<std::size_t>(idx)].label(); };
        auto single_category = [&](const std::vector<int>& batch) {
            for (const int idx : batch)
                if (label_at(idx) != label_at(batch.front())) return false;
            return true;
        };
        for (std::size_t b = 0; b < plan.size(); ++b) {
            if (!single_category(plan[b])) continue;
            const int lone = label_at(plan[b].front());
            bool fixed = false;
            for (std::size_t j = 0; j < plan.size() && !fixed; ++j) {
                if (j == b) continue;
                // the donor must keep a second category after giving one up
                int foreign = 0;
                for (const int idx : plan[j])
                    if (label_at(idx) != lone) ++foreign;
                if (foreign < 2 && foreign != static_cast<int>(plan[j].size())) continue;
                for (std::size_t k = 0; k < plan[j].size() && !fixed; ++k) {
                    if (label_at(plan[j][k]) == lone) continue;
                    std::swap(plan[b][0], plan[j][k]);
                    fixed = true;
                }
            }
            if (!fixed)
                fail("make_batches: cannot give batch ", b,
                     " a second category without starving another batch; the corpus is "
                     "too imbalanced for class-balanced batches of ", n);
        }
    }

    std::vector<TrainingBatch> out;
    out.reserve(plan.size());
    for (const auto& idx : plan) out.push_back(detail::assemble_batch(examples, idx));
    return out;
}

} // namespace jema
