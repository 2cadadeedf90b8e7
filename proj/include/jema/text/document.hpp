#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "jema/error.hpp"

namespace jema {

struct RecipeDocument {
    std::string id;
    std::string title;
    std::vector<std::string> ingredient_lines;
    std::vector<std::string> instructions;  // one sentence per entry
    std::string category;                   // empty means unassigned

    void validate() const {
        if (id.empty()) fail("recipe document: empty id");
        if (ingredient_lines.empty())
            fail("recipe document '", id, "': at least one ingredient line required");
    }
};

enum class TermKind : std::uint8_t { Ingredient, Utensil, Action };

inline const char* term_kind_name(TermKind k) {
    switch (k) {
        case TermKind::Ingredient: return "ingredient";
        case TermKind::Utensil: return "utensil";
        case TermKind::Action: return "action";
    }
    return "?";
}

// A normalized key term. `term` is lowercase with multi-word entries joined
// by underscores; `weight` is an occurrence count right after extraction and
// a ranking weight after rank_terms_*.
struct TermRecord {
    std::string term;
    TermKind kind = TermKind::Ingredient;
    double weight = 0.0;
};

// Fixed category label set. Index order is the embedding-table row order, so
// it must stay stable for a given corpus.
struct CategorySpace {
    std::vector<std::string> labels;
    std::map<std::string, int> index_of;

    int add(const std::string& label) {
        if (label.empty()) fail("category space: empty label");
        if (label == "background")
            fail("category space: the reserved label 'background' is not allowed");
        auto it = index_of.find(label);
        if (it != index_of.end()) return it->second;
        const int idx = static_cast<int>(labels.size());
        labels.push_back(label);
        index_of[label] = idx;
        return idx;
    }

    bool contains(const std::string& label) const { return index_of.count(label) > 0; }

    int index(const std::string& label) const {
        auto it = index_of.find(label);
        if (it == index_of.end()) fail("category space: unknown label '", label, "'");
        return it->second;
    }

    int size() const { return static_cast<int>(labels.size()); }
};

} // namespace jema
