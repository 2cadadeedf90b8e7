#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "jema/data/corpus.hpp"
#include "jema/data/synthetic.hpp"

using namespace jema;

namespace {

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& name) : path("/tmp/jema_jsonl_" + name) {}
    ~TempFile() { std::remove(path.c_str()); }
};

void write_raw(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::trunc);
    out << content;
}

EntityLexicon test_lexicon() {
    EntityLexicon lex;
    lex.ingredients.add("pork");
    lex.ingredients.add("black pepper");
    lex.ingredients.add("chicken");
    lex.ingredients.add("salt");
    lex.utensils.add("wok");
    lex.actions.add("stir");
    lex.actions.add("grind");
    return lex;
}

CorpusOptions fast_options() {
    CorpusOptions opt;
    opt.sequence_bins = 64;
    opt.cbow.dimension = 8;
    opt.cbow.epochs = 2;
    opt.cbow.window = 2;
    return opt;
}

std::vector<CorpusRecord> sample_records() {
    std::vector<CorpusRecord> recs;
    const char* titles[4] = {"Pork Stew Classic", "Pork Stew House", "Chicken Soup",
                             "Chicken Soup Deluxe"};
    const char* cats[4] = {"stew", "stew", "soup", "soup"};
    for (int i = 0; i < 4; ++i) {
        CorpusRecord r;
        r.doc.id = "doc_" + std::to_string(i);
        r.doc.title = titles[i];
        r.doc.ingredient_lines = {"1 lb pork", "black pepper to taste"};
        r.doc.instructions = {"Stir the pork in a wok.", "Grind black pepper over it."};
        r.doc.category = cats[i];
        r.visual = {0.5 + i, -1.0, 0.25 * i};
        recs.push_back(r);
    }
    return recs;
}

} // namespace

TEST_CASE("text corpora survive a write and load round trip") {
    TempFile f("roundtrip.jsonl");
    const std::vector<CorpusRecord> recs = sample_records();
    write_corpus_jsonl(f.path, recs);

    const EntityLexicon lex = test_lexicon();
    const CorpusOptions opt = fast_options();
    const LoadedCorpus corpus = load_corpus_jsonl(f.path, lex, opt);

    REQUIRE(corpus.examples.size() == 4);
    REQUIRE(corpus.documents.size() == 4);
    REQUIRE(corpus.categories.size() == 2);
    REQUIRE(corpus.categories.index("stew") == 0);  // first-appearance order
    REQUIRE(corpus.categories.index("soup") == 1);

    for (std::size_t i = 0; i < recs.size(); ++i) {
        const RecipeDocument& got = corpus.documents[i];
        REQUIRE(got.id == recs[i].doc.id);
        REQUIRE(got.title == recs[i].doc.title);
        REQUIRE(got.ingredient_lines == recs[i].doc.ingredient_lines);
        REQUIRE(got.instructions == recs[i].doc.instructions);
        REQUIRE(corpus.examples[i].image.visual.data == recs[i].visual);
        REQUIRE(corpus.examples[i].label() == (i < 2 ? 0 : 1));
        REQUIRE(corpus.examples[i].recipe.sequence.rows == opt.sequence_bins);
        REQUIRE(corpus.examples[i].recipe.key_term.rows == opt.cbow.dimension);
    }
}

TEST_CASE("the loader wires the exact extraction and embedding pipeline") {
    TempFile f("pipeline.jsonl");
    write_corpus_jsonl(f.path, sample_records());
    const EntityLexicon lex = test_lexicon();
    const CorpusOptions opt = fast_options();
    const LoadedCorpus corpus = load_corpus_jsonl(f.path, lex, opt);

    // replay the documented pipeline by hand and demand bit-equal features
    std::vector<std::vector<TermRecord>> per_doc;
    for (const RecipeDocument& doc : corpus.documents)
        per_doc.push_back(extract_terms(doc, lex));
    std::vector<std::vector<TermRecord>> ranked = rank_terms_tfidf(per_doc);
    for (auto& terms : ranked) terms = filter_terms(terms, opt.term_threshold);

    const auto streams = corpus_token_streams(corpus.documents, ranked);
    const Vocabulary vocab = build_vocab(streams, opt.min_count);
    const WordVectors vectors = train_cbow(streams, vocab, opt.cbow, opt.cbow_seed);
    REQUIRE(vectors.matrix.data == corpus.vectors.matrix.data);

    for (std::size_t i = 0; i < corpus.examples.size(); ++i) {
        const RecipeFeatures expect =
            recipe_features(corpus.documents[i], ranked[i], vectors, opt.sequence_bins);
        REQUIRE(corpus.examples[i].recipe.sequence.data == expect.sequence.data);
        REQUIRE(corpus.examples[i].recipe.key_term.data == expect.key_term.data);
    }
}

TEST_CASE("unlabeled corpora fall back to title-derived categories") {
    TempFile f("derived.jsonl");
    std::vector<CorpusRecord> recs = sample_records();
    for (auto& r : recs) r.doc.category.clear();
    write_corpus_jsonl(f.path, recs);

    const LoadedCorpus corpus = load_corpus_jsonl(f.path, test_lexicon(), fast_options());
    REQUIRE(corpus.categories.size() == 2);
    REQUIRE(corpus.categories.contains("pork_stew"));
    REQUIRE(corpus.categories.contains("chicken_soup"));
    REQUIRE(corpus.examples[0].label() == corpus.categories.index("pork_stew"));
    REQUIRE(corpus.examples[2].label() == corpus.categories.index("chicken_soup"));
}

TEST_CASE("pretrained vectors are used verbatim and misses are reported") {
    TempFile f("pretrained.jsonl");
    write_corpus_jsonl(f.path, sample_records());
    const EntityLexicon lex = test_lexicon();
    const CorpusOptions opt = fast_options();

    const LoadedCorpus first = load_corpus_jsonl(f.path, lex, opt);
    const LoadedCorpus again = load_corpus_jsonl(f.path, lex, opt, &first.vectors);
    REQUIRE(again.dropped_terms.empty());
    for (std::size_t i = 0; i < first.examples.size(); ++i)
        REQUIRE(again.examples[i].recipe.key_term.data ==
                first.examples[i].recipe.key_term.data);

    // vectors that know none of the corpus terms zero the key-term features
    WordVectors stranger;
    stranger.dimension = 8;
    stranger.vocab.tokens = {"quinoa"};
    stranger.vocab.counts = {5};
    stranger.vocab.index_of["quinoa"] = 0;
    stranger.vocab.min_count = 1;
    stranger.matrix = DenseMatrix(1, 8, 0.5);
    const LoadedCorpus blind = load_corpus_jsonl(f.path, lex, opt, &stranger);
    REQUIRE_FALSE(blind.dropped_terms.empty());
    for (const PairExample& e : blind.examples)
        for (const double x : e.recipe.key_term.data) REQUIRE(x == 0.0);
}

TEST_CASE("feature-bearing corpora round trip exactly") {
    SyntheticSpec spec;
    spec.class_count = 3;
    spec.pairs_per_class = 2;
    spec.latent_dim = 4;
    spec.sequence_dim = 6;
    spec.key_term_dim = 3;
    spec.visual_dim = 5;
    spec.seed = 21;
    const SyntheticCorpus synth = generate_synthetic_corpus(spec);

    TempFile f("features.jsonl");
    write_feature_corpus_jsonl(f.path, synth.examples, synth.categories);
    const LoadedCorpus loaded = load_corpus_jsonl(f.path, EntityLexicon{});

    REQUIRE(loaded.examples.size() == synth.examples.size());
    REQUIRE(loaded.documents.empty());
    REQUIRE(loaded.vectors.vocab.size() == 0);
    for (std::size_t i = 0; i < synth.examples.size(); ++i) {
        REQUIRE(loaded.examples[i].id == synth.examples[i].id);
        REQUIRE(loaded.examples[i].label() == synth.examples[i].label());
        REQUIRE(loaded.examples[i].recipe.sequence.data == synth.examples[i].recipe.sequence.data);
        REQUIRE(loaded.examples[i].recipe.key_term.data == synth.examples[i].recipe.key_term.data);
        REQUIRE(loaded.examples[i].image.visual.data == synth.examples[i].image.visual.data);
    }
    for (int c = 0; c < synth.categories.size(); ++c)
        REQUIRE(loaded.categories.index(synth.categories.labels[static_cast<std::size_t>(c)]) == c);
}

TEST_CASE("the loader rejects broken corpora with line numbers") {
    const EntityLexicon lex = test_lexicon();

    REQUIRE_THROWS_WITH(load_corpus_jsonl("/tmp/jema_no_such_file.jsonl", lex),
                        Catch::Matchers::ContainsSubstring("cannot open"));

    TempFile empty("empty.jsonl");
    write_raw(empty.path, "");
    REQUIRE_THROWS_WITH(load_corpus_jsonl(empty.path, lex),
                        Catch::Matchers::ContainsSubstring("empty corpus"));

    TempFile blank("blank.jsonl");
    write_raw(blank.path, "\n   \n\t\n");
    REQUIRE_THROWS_WITH(load_corpus_jsonl(blank.path, lex),
                        Catch::Matchers::ContainsSubstring("empty corpus"));

    const std::string good =
        R"({"id":"a","title":"Pork Stew","ingredients":["pork"],"instructions":["Stir."],"visual_feature":[1.0,2.0]})";

    TempFile malformed("malformed.jsonl");
    write_raw(malformed.path, good + "\n{not json}\n");
    REQUIRE_THROWS_WITH(load_corpus_jsonl(malformed.path, lex),
                        Catch::Matchers::ContainsSubstring("line 2: malformed JSON"));

    TempFile notobj("notobj.jsonl");
    write_raw(notobj.path, "[1,2]\n");
    REQUIRE_THROWS_WITH(load_corpus_jsonl(notobj.path, lex),
                        Catch::Matchers::ContainsSubstring("expected a JSON object"));

    TempFile missing("missing.jsonl");
    write_raw(missing.path,
              R"({"id":"a","title":"Pork Stew","ingredients":["pork"],"instructions":["Stir."]})"
              "\n");
    REQUIRE_THROWS_WITH(load_corpus_jsonl(missing.path, lex),
                        Catch::Matchers::ContainsSubstring("missing required field 'visual_feature'"));

    TempFile badtype("badtype.jsonl");
    write_raw(badtype.path,
              R"({"id":"a","title":7,"ingredients":["pork"],"instructions":["Stir."],"visual_feature":[1.0]})"
              "\n");
    REQUIRE_THROWS_WITH(load_corpus_jsonl(badtype.path, lex),
                        Catch::Matchers::ContainsSubstring("field 'title' must be a string"));

    TempFile badarr("badarr.jsonl");
    write_raw(badarr.path,
              R"({"id":"a","title":"Pork Stew","ingredients":"pork","instructions":["Stir."],"visual_feature":[1.0]})"
              "\n");
    REQUIRE_THROWS_WITH(load_corpus_jsonl(badarr.path, lex),
                        Catch::Matchers::ContainsSubstring("'ingredients' must be an array of strings"));

    TempFile badnum("badnum.jsonl");
    write_raw(badnum.path,
              R"({"id":"a","title":"Pork Stew","ingredients":["pork"],"instructions":["Stir."],"visual_feature":[1.0,"x"]})"
              "\n");
    REQUIRE_THROWS_WITH(load_corpus_jsonl(badnum.path, lex),
                        Catch::Matchers::ContainsSubstring("'visual_feature' must be a non-empty array of numbers"));

    // the JSON layer already refuses non-finite literals; the loader still
    // reports the offending line
    TempFile inf("inf.jsonl");
    write_raw(inf.path,
              R"({"id":"a","title":"Pork Stew","ingredients":["pork"],"instructions":["Stir."],"visual_feature":[1e999]})"
              "\n");
    REQUIRE_THROWS_WITH(load_corpus_jsonl(inf.path, lex),
                        Catch::Matchers::ContainsSubstring("line 1"));

    TempFile dim("dim.jsonl");
    write_raw(dim.path,
              good + "\n" +
                  R"({"id":"b","title":"Chicken Soup","ingredients":["chicken"],"instructions":["Stir."],"visual_feature":[1.0]})"
                  "\n");
    REQUIRE_THROWS_WITH(load_corpus_jsonl(dim.path, lex),
                        Catch::Matchers::ContainsSubstring("visual_feature has 1 entries, expected 2"));

    TempFile mixedlab("mixedlab.jsonl");
    write_raw(mixedlab.path,
              R"({"id":"a","title":"Pork Stew","ingredients":["pork"],"instructions":["Stir."],"visual_feature":[1.0,2.0],"category":"stew"})"
              "\n" +
                  good + "\n");
    REQUIRE_THROWS_WITH(load_corpus_jsonl(mixedlab.path, lex),
                        Catch::Matchers::ContainsSubstring("label all lines or none"));

    TempFile mixedmode("mixedmode.jsonl");
    write_raw(mixedmode.path,
              good + "\n" +
                  R"({"id":"b","sequence_feature":[1.0],"key_term_feature":[1.0],"visual_feature":[1.0,2.0],"category":"stew"})"
                  "\n");
    REQUIRE_THROWS_WITH(load_corpus_jsonl(mixedmode.path, lex),
                        Catch::Matchers::ContainsSubstring("mixes feature-bearing and text-bearing"));

    TempFile nofcat("nofcat.jsonl");
    write_raw(nofcat.path,
              R"({"id":"b","sequence_feature":[1.0],"key_term_feature":[1.0],"visual_feature":[1.0]})"
              "\n");
    REQUIRE_THROWS_WITH(load_corpus_jsonl(nofcat.path, lex),
                        Catch::Matchers::ContainsSubstring("missing required field 'category'"));
}
