#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "jema/encode/features.hpp"

using namespace jema;

namespace {

double l2(const DenseMatrix& m) {
    double s = 0.0;
    for (double x : m.data) s += x * x;
    return std::sqrt(s);
}

int nonzeros(const DenseMatrix& m) {
    int n = 0;
    for (double x : m.data) n += x != 0.0 ? 1 : 0;
    return n;
}

} // namespace

TEST_CASE("sequence feature hashes instruction n-grams deterministically") {
    const std::vector<std::string> instructions = {"Heat the oil", "stir slowly"};
    const DenseMatrix a = sequence_feature(instructions);
    const DenseMatrix b = sequence_feature(instructions);
    REQUIRE(a.rows == 512);
    REQUIRE(a.cols == 1);
    REQUIRE(a.data == b.data);
    REQUIRE_THAT(l2(a), Catch::Matchers::WithinAbs(1.0, 1e-12));

    const DenseMatrix other = sequence_feature({"boil the rice"});
    REQUIRE(a.data != other.data);

    REQUIRE_THROWS_WITH(sequence_feature(instructions, 0),
                        Catch::Matchers::ContainsSubstring("bins"));
}

TEST_CASE("sequence feature counts unigrams and in-sentence bigrams") {
    // wide table so the five distinct n-grams land in distinct bins
    const DenseMatrix f = sequence_feature({"stir the pot"}, 1 << 16);
    REQUIRE(nonzeros(f) == 5);  // stir, the, pot, stir-the, the-pot
    for (double x : f.data)
        if (x != 0.0) REQUIRE_THAT(x, Catch::Matchers::WithinAbs(1.0 / std::sqrt(5.0), 1e-12));

    // a repeated token doubles its bin before normalization
    const DenseMatrix rep = sequence_feature({"stir stir"}, 1 << 16);
    REQUIRE(nonzeros(rep) == 2);  // stir (count 2), stir-stir (count 1)
    double hi = 0.0, lo = 1.0;
    for (double x : rep.data)
        if (x != 0.0) {
            hi = std::max(hi, x);
            lo = std::min(lo, x);
        }
    REQUIRE_THAT(hi, Catch::Matchers::WithinAbs(2.0 / std::sqrt(5.0), 1e-12));
    REQUIRE_THAT(lo, Catch::Matchers::WithinAbs(1.0 / std::sqrt(5.0), 1e-12));

    // bigrams never cross sentence boundaries
    const DenseMatrix split = sequence_feature({"stir", "pot"}, 1 << 16);
    const DenseMatrix joined = sequence_feature({"stir pot"}, 1 << 16);
    REQUIRE(nonzeros(split) == 2);
    REQUIRE(nonzeros(joined) == 3);
}

TEST_CASE("sequence feature degrades to zero without instructions") {
    const DenseMatrix empty = sequence_feature({});
    for (double x : empty.data) REQUIRE(x == 0.0);
    const DenseMatrix punct = sequence_feature({"!!!"});
    for (double x : punct.data) REQUIRE(x == 0.0);
}

TEST_CASE("recipe features fuse the sequence and key-term paths") {
    const std::vector<std::vector<std::string>> streams = {{"salt", "pork", "salt"}};
    const Vocabulary vocab = build_vocab(streams, 1);
    CbowOptions opt;
    opt.dimension = 8;
    opt.epochs = 1;
    const WordVectors wv = train_cbow(streams, vocab, opt, 2);

    RecipeDocument doc;
    doc.id = "r1";
    doc.title = "Salted Pork";
    doc.ingredient_lines = {"salt", "pork"};
    doc.instructions = {"rub the salt on the pork"};

    const std::vector<TermRecord> terms = {{"salt", TermKind::Ingredient, 0.5},
                                           {"pork", TermKind::Ingredient, 0.5},
                                           {"saffron", TermKind::Ingredient, 0.0}};
    std::vector<std::string> dropped;
    const RecipeFeatures f = recipe_features(doc, terms, wv, 256, &dropped);
    REQUIRE(f.sequence.rows == 256);
    REQUIRE(f.key_term.rows == 8);
    REQUIRE(dropped == std::vector<std::string>{"saffron"});
    REQUIRE_THAT(l2(f.sequence), Catch::Matchers::WithinAbs(1.0, 1e-12));

    const DenseMatrix direct = key_term_feature(terms, wv);
    REQUIRE(f.key_term.data == direct.data);
}
