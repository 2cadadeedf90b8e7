#pragma once

#include <cstdint>
#include <fstream>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "jema/data/pair_example.hpp"
#include "jema/embed/cbow.hpp"
#include "jema/embed/vocab.hpp"
#include "jema/encode/features.hpp"
#include "jema/error.hpp"
#include "jema/text/category.hpp"
#include "jema/text/extract.hpp"
#include "jema/text/lexicon.hpp"
#include "jema/text/rank.hpp"

namespace jema {

enum class RankerKind { Tfidf, TextRank };

inline RankerKind ranker_from_name(const std::string& name) {
    if (name == "tfidf") return RankerKind::Tfidf;
    if (name == "textrank") return RankerKind::TextRank;
    fail("unknown ranker '", name, "' (expected tfidf or textrank)");
}

// Text-to-feature pipeline settings for corpus ingestion.
struct CorpusOptions {
    RankerKind ranker = RankerKind::Tfidf;
    double term_threshold = 0.0;  // filter_terms cutoff, 0 keeps everything
    int sequence_bins = 512;
    TextRankOptions textrank{};
    CbowOptions cbow{};
    std::uint64_t cbow_seed = 1;
    int min_count = 1;       // vocabulary floor for term-vector training
    long min_bigram_docs = 2;  // category model seeding threshold
};

struct LoadedCorpus {
    std::vector<PairExample> examples;
    CategorySpace categories;
    WordVectors vectors;  // empty vocabulary when features came precomputed
    std::vector<RecipeDocument> documents;
    std::vector<std::vector<TermRecord>> ranked_terms;  // parallel to documents
    std::vector<std::string> dropped_terms;  // key terms missing from the vectors
};

namespace detail {

inline const nlohmann::json& require_field(const nlohmann::json& obj, const char* field,
                                           std::size_t line) {
    const auto it = obj.find(field);
    if (it == obj.end())
        fail("corpus line ", line, ": missing required field '", field, "'");
    return *it;
}

inline std::string string_field(const nlohmann::json& obj, const char* field,
                                std::size_t line) {
    const nlohmann::json& v = require_field(obj, field, line);
    if (!v.is_string())
        fail("corpus line ", line, ": field '", field, "' must be a string");
    return v.get<std::string>();
}

inline std::vector<std::string> string_list_field(const nlohmann::json& obj,
                                                  const char* field, std::size_t line) {
    const nlohmann::json& v = require_field(obj, field, line);
    if (!v.is_array())
        fail("corpus line ", line, ": field '", field, "' must be an array of strings");
    std::vector<std::string> out;
    for (const auto& e : v) {
        if (!e.is_string())
            fail("corpus line ", line, ": field '", field, "' must be an array of strings");
        out.push_back(e.get<std::string>());
    }
    return out;
}

inline DenseMatrix number_column_field(const nlohmann::json& obj, const char* field,
                                       std::size_t line) {
    const nlohmann::json& v = require_field(obj, field, line);
    if (!v.is_array() || v.empty())
        fail("corpus line ", line, ": field '", field,
             "' must be a non-empty array of numbers");
    DenseMatrix col(static_cast<int>(v.size()), 1);
    int i = 0;
    for (const auto& e : v) {
        if (!e.is_number())
            fail("corpus line ", line, ": field '", field,
                 "' must be a non-empty array of numbers");
        const double x = e.get<double>();
        if (!std::isfinite(x))
            fail("corpus line ", line, ": field '", field, "' element ", i,
                 " is not finite");
        col.data[static_cast<std::size_t>(i++)] = x;
    }
    return col;
}

// One parsed line, either text-bearing or feature-bearing.
struct CorpusLine {
    std::size_t line = 0;
    bool feature_mode = false;
    RecipeDocument doc;          // text mode
    RecipeFeatures features;     // feature mode
    DenseMatrix visual;
    bool has_category = false;
    std::string category;
};

inline std::vector<CorpusLine> parse_corpus_lines(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("cannot open corpus file '", path, "'");

    std::vector<CorpusLine> lines;
    std::string raw;
    std::size_t lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        if (raw.find_first_not_of(" \t\r") == std::string::npos) continue;
        const nlohmann::json obj = nlohmann::json::parse(raw, nullptr, false);
        if (obj.is_discarded()) fail("corpus line ", lineno, ": malformed JSON");
        if (!obj.is_object()) fail("corpus line ", lineno, ": expected a JSON object");

        CorpusLine rec;
        rec.line = lineno;
        rec.feature_mode =
            obj.contains("sequence_feature") || obj.contains("key_term_feature");
        const std::string id = string_field(obj, "id", lineno);
        if (rec.feature_mode) {
            rec.doc.id = id;
            rec.features.sequence = number_column_field(obj, "sequence_feature", lineno);
            rec.features.key_term = number_column_field(obj, "key_term_feature", lineno);
        } else {
            rec.doc.id = id;
            rec.doc.title = string_field(obj, "title", lineno);
            rec.doc.ingredient_lines = string_list_field(obj, "ingredients", lineno);
            rec.doc.instructions = string_list_field(obj, "instructions", lineno);
        }
        rec.visual = number_column_field(obj, "visual_feature", lineno);
        if (obj.contains("category")) {
            rec.has_category = true;
            rec.category = string_field(obj, "category", lineno);
            rec.doc.category = rec.category;
        } else if (rec.feature_mode) {
            fail("corpus line ", lineno,
                 ": missing required field 'category' (feature-bearing lines carry no "
                 "title to derive one from)");
        }
        lines.push_back(std::move(rec));
    }
    if (lines.empty()) fail("empty corpus: '", path, "'");

    for (const CorpusLine& rec : lines) {
        if (rec.feature_mode != lines.front().feature_mode)
            fail("corpus line ", rec.line, ": mixes feature-bearing and text-bearing lines");
        if (rec.visual.rows != lines.front().visual.rows)
            fail("corpus line ", rec.line, ": visual_feature has ", rec.visual.rows,
                 " entries, expected ", lines.front().visual.rows);
        if (rec.feature_mode) {
            if (rec.features.sequence.rows != lines.front().features.sequence.rows ||
                rec.features.key_term.rows != lines.front().features.key_term.rows)
                fail("corpus line ", rec.line, ": feature dimensions differ from line ",
                     lines.front().line);
        }
    }
    return lines;
}

} // namespace detail

// Loads a JSONL corpus. Text-bearing lines run the extraction / ranking /
// term-vector pipeline (training vectors unless `pretrained` supplies them);
// feature-bearing lines are taken as-is. Labels come from the `category`
// field when every line has one, otherwise from the title-derived category
// model.
inline LoadedCorpus load_corpus_jsonl(const std::string& path, const EntityLexicon& lexicon,
                                      const CorpusOptions& opt = {},
                                      const WordVectors* pretrained = nullptr) {
    std::vector<detail::CorpusLine> lines = detail::parse_corpus_lines(path);
    const bool feature_mode = lines.front().feature_mode;

    LoadedCorpus out;

    std::size_t labeled = 0;
    for (const auto& rec : lines) labeled += rec.has_category ? 1u : 0u;
    std::vector<int> label_of(lines.size(), -1);
    if (labeled == lines.size()) {
        for (const auto& rec : lines)
            if (!out.categories.contains(rec.category)) out.categories.add(rec.category);
        for (std::size_t i = 0; i < lines.size(); ++i)
            label_of[i] = out.categories.index(lines[i].category);
    } else if (labeled == 0) {
        std::vector<RecipeDocument> docs;
        for (const auto& rec : lines) docs.push_back(rec.doc);
        const CategoryModel model = build_category_model(docs, opt.min_bigram_docs);
        out.categories = model.space;
        for (std::size_t i = 0; i < lines.size(); ++i)
            label_of[i] = assign_category(lines[i].doc, model);
    } else {
        for (const auto& rec : lines)
            if (!rec.has_category)
                fail("corpus line ", rec.line,
                     ": missing 'category' while other lines have one; label all lines "
                     "or none");
    }

    if (feature_mode) {
        for (std::size_t i = 0; i < lines.size(); ++i) {
            PairExample e;
            e.id = lines[i].doc.id;
            e.recipe = std::move(lines[i].features);
            e.image.visual = std::move(lines[i].visual);
            e.image.category_label = label_of[i];
            out.examples.push_back(std::move(e));
        }
        validate_examples(out.examples, out.categories.size());
        return out;
    }

    for (auto& rec : lines) out.documents.push_back(std::move(rec.doc));

    std::vector<std::vector<TermRecord>> per_doc;
    for (const RecipeDocument& doc : out.documents)
        per_doc.push_back(extract_terms(doc, lexicon));
    if (opt.ranker == RankerKind::Tfidf) {
        out.ranked_terms = rank_terms_tfidf(per_doc);
    } else {
        out.ranked_terms.reserve(per_doc.size());
        for (std::size_t i = 0; i < per_doc.size(); ++i)
            out.ranked_terms.push_back(
                rank_terms_textrank(out.documents[i], per_doc[i], opt.textrank));
    }
    for (auto& terms : out.ranked_terms) terms = filter_terms(terms, opt.term_threshold);

    if (pretrained) {
        out.vectors = *pretrained;
    } else {
        const std::vector<std::vector<std::string>> streams =
            corpus_token_streams(out.documents, out.ranked_terms);
        const Vocabulary vocab = build_vocab(streams, opt.min_count);
        out.vectors = train_cbow(streams, vocab, opt.cbow, opt.cbow_seed);
    }

    std::set<std::string> dropped;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        std::vector<std::string> missing;
        PairExample e;
        e.id = out.documents[i].id;
        e.recipe = recipe_features(out.documents[i], out.ranked_terms[i], out.vectors,
                                   opt.sequence_bins, &missing);
        e.image.visual = std::move(lines[i].visual);
        e.image.category_label = label_of[i];
        out.examples.push_back(std::move(e));
        dropped.insert(missing.begin(), missing.end());
    }
    out.dropped_terms.assign(dropped.begin(), dropped.end());
    validate_examples(out.examples, out.categories.size());
    return out;
}

// One text-bearing corpus record for writing; category is omitted when empty.
struct CorpusRecord {
    RecipeDocument doc;
    std::vector<double> visual;
};

inline void write_corpus_jsonl(const std::string& path,
                               const std::vector<CorpusRecord>& records) {
    std::ofstream outf(path, std::ios::trunc);
    if (!outf) fail("cannot write corpus file '", path, "'");
    for (const CorpusRecord& rec : records) {
        nlohmann::json obj;
        obj["id"] = rec.doc.id;
        obj["title"] = rec.doc.title;
        obj["ingredients"] = rec.doc.ingredient_lines;
        obj["instructions"] = rec.doc.instructions;
        obj["visual_feature"] = rec.visual;
        if (!rec.doc.category.empty()) obj["category"] = rec.doc.category;
        outf << obj.dump() << '\n';
    }
    if (!outf) fail("failed writing corpus file '", path, "'");
}

// Feature-bearing writer; the loader's feature mode reads these back exactly.
inline void write_feature_corpus_jsonl(const std::string& path,
                                       const std::vector<PairExample>& examples,
                                       const CategorySpace& categories) {
    std::ofstream outf(path, std::ios::trunc);
    if (!outf) fail("cannot write corpus file '", path, "'");
    for (const PairExample& e : examples) {
        nlohmann::json obj;
        obj["id"] = e.id;
        obj["sequence_feature"] = e.recipe.sequence.data;
        obj["key_term_feature"] = e.recipe.key_term.data;
        obj["visual_feature"] = e.image.visual.data;
        obj["category"] = categories.labels.at(static_cast<std::size_t>(e.label()));
        outf << obj.dump() << '\n';
    }
    if (!outf) fail("failed writing corpus file '", path, "'");
}

} // namespace jema
