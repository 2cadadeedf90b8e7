#pragma once

#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "jema/error.hpp"
#include "jema/text/document.hpp"
#include "jema/text/tokenize.hpp"

namespace jema {

// One bank of known surface forms. Entries are stored as space-joined
// normalized token sequences ("black pepper"), which makes both n-gram
// lookups and substring containment checks cheap.
struct LexiconBank {
    std::set<std::string> entries;
    std::size_t max_tokens = 0;

    void add(const std::string& raw) {
        const std::vector<std::string> toks = tokenize(raw);
        if (toks.empty()) return;
        entries.insert(join_tokens(toks, ' '));
        max_tokens = std::max(max_tokens, toks.size());
    }

    bool empty() const { return entries.empty(); }

    bool contains_joined(const std::string& joined) const { return entries.count(joined) > 0; }
};

struct EntityLexicon {
    LexiconBank ingredients;
    LexiconBank utensils;
    LexiconBank actions;

    const LexiconBank& bank(TermKind k) const {
        switch (k) {
            case TermKind::Ingredient: return ingredients;
            case TermKind::Utensil: return utensils;
            case TermKind::Action: return actions;
        }
        fail("lexicon: bad term kind");
    }
};

// File format: UTF-8 text with three section headers (#ingredients,
// #utensils, #actions), one entry per line, blank lines skipped. Duplicate
// entries collapse silently through the set.
inline EntityLexicon load_lexicon(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("lexicon: cannot open '", path, "'");
    EntityLexicon lex;
    LexiconBank* current = nullptr;
    std::string line;
    std::size_t line_no = 0;
    bool saw_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            if (line == "#ingredients") current = &lex.ingredients;
            else if (line == "#utensils") current = &lex.utensils;
            else if (line == "#actions") current = &lex.actions;
            else fail("lexicon '", path, "' line ", line_no, ": unknown section '", line, "'");
            saw_header = true;
            continue;
        }
        if (!current)
            fail("lexicon '", path, "' line ", line_no, ": entry before any section header");
        current->add(line);
    }
    if (!saw_header) fail("lexicon '", path, "': no section headers found");
    return lex;
}

} // namespace jema
