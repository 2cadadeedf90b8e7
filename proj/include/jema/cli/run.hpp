#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "jema/data/corpus.hpp"
#include "jema/data/synthetic.hpp"
#include "jema/error.hpp"
#include "jema/eval/retrieval.hpp"
#include "jema/io/binio.hpp"
#include "jema/text/extract.hpp"
#include "jema/text/lexicon.hpp"
#include "jema/text/rank.hpp"
#include "jema/train/trainer.hpp"

namespace jema::cli {

inline constexpr const char* kEngineVersion = "1.0.0";

namespace detail {

inline std::string hex64(std::uint64_t v) {
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << v;
    return os.str();
}

inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (const char c : s) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += "\"";
    return out;
}

inline std::filesystem::path ensure_out_dir(const std::string& dir) {
    const std::filesystem::path p(dir);
    std::error_code ec;
    std::filesystem::create_directories(p, ec);
    if (ec) fail("cannot create output directory '", dir, "': ", ec.message());
    return p;
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc | std::ios::binary);
    if (!out) fail("cannot write '", path.string(), "'");
    out << text;
    if (!out) fail("failed writing '", path.string(), "'");
}

// Every run records what produced its outputs: the hash of the fully resolved
// options, the seed, and format versions. No timestamps, so a rerun with the
// same manifest writes byte-identical artifacts.
inline void write_manifest(const std::filesystem::path& dir, const std::string& command,
                           const std::string& options_dump, std::uint64_t seed,
                           const nlohmann::json& inputs,
                           const std::vector<std::string>& outputs) {
    const nlohmann::json m{
        {"command", command},
        {"config_fnv1a64", hex64(io::fnv1a64(options_dump.data(), options_dump.size()))},
        {"seed", seed},
        {"inputs", inputs},
        {"outputs", outputs},
        {"versions",
         {{"engine", kEngineVersion}, {"checkpoint_format", kCheckpointVersion}}},
    };
    write_text_file(dir / "manifest.json", m.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// terms: extract and rank key terms from a text-bearing JSONL corpus
// ---------------------------------------------------------------------------

struct TermsOptions {
    std::string corpus;
    std::string lexicon;
    std::string out_dir = ".";
    std::string ranker = "tfidf";
    double threshold = 0.0;
};

// Light parse of the text fields only; `terms` has no use for visual features
// and should not demand them.
inline std::vector<RecipeDocument> load_documents_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("cannot open corpus file '", path, "'");
    std::vector<RecipeDocument> docs;
    std::string raw;
    std::size_t lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        if (raw.find_first_not_of(" \t\r") == std::string::npos) continue;
        const nlohmann::json obj = nlohmann::json::parse(raw, nullptr, false);
        if (obj.is_discarded()) fail("corpus line ", lineno, ": malformed JSON");
        if (!obj.is_object()) fail("corpus line ", lineno, ": expected a JSON object");
        RecipeDocument doc;
        doc.id = jema::detail::string_field(obj, "id", lineno);
        doc.title = jema::detail::string_field(obj, "title", lineno);
        doc.ingredient_lines = jema::detail::string_list_field(obj, "ingredients", lineno);
        doc.instructions = jema::detail::string_list_field(obj, "instructions", lineno);
        if (obj.contains("category"))
            doc.category = jema::detail::string_field(obj, "category", lineno);
        doc.validate();
        docs.push_back(std::move(doc));
    }
    if (docs.empty()) fail("empty corpus: '", path, "'");
    return docs;
}

inline int run_terms(const TermsOptions& o) {
    const EntityLexicon lex = load_lexicon(o.lexicon);
    const std::vector<RecipeDocument> docs = load_documents_jsonl(o.corpus);

    std::vector<std::vector<TermRecord>> per_doc;
    per_doc.reserve(docs.size());
    for (const RecipeDocument& doc : docs) per_doc.push_back(extract_terms(doc, lex));

    std::vector<std::vector<TermRecord>> ranked;
    if (o.ranker == "tfidf") {
        ranked = rank_terms_tfidf(per_doc);
    } else if (o.ranker == "textrank") {
        ranked.reserve(per_doc.size());
        for (std::size_t i = 0; i < per_doc.size(); ++i)
            ranked.push_back(rank_terms_textrank(docs[i], per_doc[i], TextRankOptions{}));
    } else {
        fail("unknown ranker '", o.ranker, "', expected tfidf or textrank");
    }
    for (auto& terms : ranked) terms = filter_terms(terms, o.threshold);

    const std::filesystem::path dir = ensure_out_dir(o.out_dir);
    std::ostringstream csv;
    csv << "doc_id,term,kind,weight\n";
    for (std::size_t i = 0; i < docs.size(); ++i)
        for (const TermRecord& t : ranked[i])
            csv << csv_field(docs[i].id) << "," << t.term << "," << term_kind_name(t.kind)
                << "," << jema::detail::fmt_real(t.weight) << "\n";
    write_text_file(dir / "terms.csv", csv.str());

    std::ostringstream dump;
    dump << "command=terms\nranker=" << o.ranker << "\nthreshold="
         << std::setprecision(17) << o.threshold << "\n";
    write_manifest(dir, "terms", dump.str(), 0,
                   {{"corpus", o.corpus}, {"lexicon", o.lexicon}}, {"terms.csv"});
    std::cout << "wrote " << (dir / "terms.csv").string() << " (" << docs.size()
              << " documents)\n";
    return 0;
}

// ---------------------------------------------------------------------------
// synth: emit a synthetic feature-bearing corpus
// ---------------------------------------------------------------------------

struct SynthOptions {
    SyntheticSpec spec;
    std::string out_dir = ".";
};

inline std::string spec_dump(const SyntheticSpec& s) {
    std::ostringstream os;
    os << std::setprecision(17);
    os << "classes=" << s.class_count << "\npairs_per_class=" << s.pairs_per_class
       << "\nlatent=" << s.latent_dim << "\nnoise=" << s.noise_sigma
       << "\nseed=" << s.seed << "\nsequence_dim=" << s.sequence_dim
       << "\nkey_term_dim=" << s.key_term_dim << "\nvisual_dim=" << s.visual_dim
       << "\nfeature_scale=" << s.feature_scale << "\n";
    return os.str();
}

inline int run_synth(const SynthOptions& o) {
    const SyntheticCorpus corpus = generate_synthetic_corpus(o.spec);
    const std::filesystem::path dir = ensure_out_dir(o.out_dir);
    write_feature_corpus_jsonl((dir / "corpus.jsonl").string(), corpus.examples,
                               corpus.categories);
    write_manifest(dir, "synth", "command=synth\n" + spec_dump(o.spec), o.spec.seed,
                   nlohmann::json::object(), {"corpus.jsonl"});
    std::cout << "wrote " << (dir / "corpus.jsonl").string() << " ("
              << corpus.examples.size() << " pairs, " << corpus.categories.size()
              << " categories)\n";
    return 0;
}

// ---------------------------------------------------------------------------
// train: corpus + config -> checkpoint + loss log
// ---------------------------------------------------------------------------

// Flag overrides mirror config fields; only flags the user actually passed
// replace file values, so the config file stays the single source of truth
// for everything else.
struct TrainOverrides {
    std::uint64_t seed = 0;
    double lambda1 = 0, lambda2 = 0, lambda3 = 0, margin = 0, gamma = 0;
    bool class_level_term = true, eq4_literal = false, normalize_embeddings = true;
    std::string gp_mode;

    bool has_seed = false, has_lambda1 = false, has_lambda2 = false, has_lambda3 = false,
         has_margin = false, has_gamma = false, has_class_level = false,
         has_eq4 = false, has_normalize = false;

    void apply(TrainConfig& cfg) const {
        if (has_seed) cfg.seed = seed;
        if (has_lambda1) cfg.loss.lambda1 = lambda1;
        if (has_lambda2) cfg.loss.lambda2 = lambda2;
        if (has_lambda3) cfg.loss.lambda3 = lambda3;
        if (has_margin) cfg.loss.margin = margin;
        if (has_gamma) cfg.loss.gamma = gamma;
        if (has_class_level) cfg.loss.class_level = class_level_term;
        if (has_eq4) cfg.loss.eq4_literal = eq4_literal;
        if (has_normalize) cfg.normalize_embeddings = normalize_embeddings;
        if (!gp_mode.empty()) cfg.loss.gp_mode = gp_mode_from_name(gp_mode);
    }
};

struct TrainOptions {
    std::string corpus;
    std::string config;
    std::string lexicon;
    std::string checkpoint;  // output path, defaults to <out-dir>/checkpoint.jema
    std::string out_dir = ".";
    TrainOverrides over;
};

inline LoadedCorpus load_any_corpus(const std::string& corpus_path,
                                    const std::string& lexicon_path) {
    const EntityLexicon lex =
        lexicon_path.empty() ? EntityLexicon{} : load_lexicon(lexicon_path);
    return load_corpus_jsonl(corpus_path, lex);
}

inline int run_train(const TrainOptions& o) {
    TrainConfig cfg = o.config.empty() ? TrainConfig{} : load_train_config(o.config);
    o.over.apply(cfg);
    cfg.validate();

    const LoadedCorpus corpus = load_any_corpus(o.corpus, o.lexicon);
    const Checkpoint ck = fit(corpus, cfg);

    const std::filesystem::path dir = ensure_out_dir(o.out_dir);
    const std::filesystem::path ck_path =
        o.checkpoint.empty() ? dir / "checkpoint.jema" : std::filesystem::path(o.checkpoint);
    save_checkpoint(ck, ck_path.string());

    std::ostringstream log;
    log << "epoch,mean_objective\n";
    for (std::size_t e = 0; e < ck.metric_history.size(); ++e)
        log << (e + 1) << "," << jema::detail::fmt_real(ck.metric_history[e]) << "\n";
    write_text_file(dir / "loss_log.csv", log.str());

    write_manifest(dir, "train", "command=train\n" + train_config_text(cfg), cfg.seed,
                   {{"corpus", o.corpus},
                    {"config", o.config.empty() ? "(defaults)" : o.config},
                    {"lexicon", o.lexicon.empty() ? "(none)" : o.lexicon}},
                   {ck_path.filename().string(), "loss_log.csv"});

    std::cout << "trained " << cfg.epochs << " epochs on " << corpus.examples.size()
              << " pairs";
    if (!ck.metric_history.empty())
        std::cout << ", final objective " << jema::detail::fmt_real(ck.metric_history.back());
    std::cout << "\nwrote " << ck_path.string() << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// eval: checkpoint + corpus -> retrieval report
// ---------------------------------------------------------------------------

struct EvalOptions {
    std::string checkpoint;
    std::string corpus;
    std::string lexicon;
    std::string out_dir = ".";
    std::string direction;  // empty means both
    int subset_size = 1000;
    std::uint64_t seed = 1;
};

// The corpus may list categories in a different order than the training run;
// labels are remapped through the checkpoint's category table.
inline void remap_labels(std::vector<PairExample>& examples, const CategorySpace& from,
                         const CategorySpace& to) {
    for (PairExample& e : examples) {
        const std::string& name = from.labels.at(static_cast<std::size_t>(e.label()));
        if (!to.contains(name))
            fail("corpus category '", name, "' is not in the checkpoint");
        e.image.category_label = to.index(name);
    }
}

inline int run_eval(const EvalOptions& o) {
    const Checkpoint ck = load_checkpoint(o.checkpoint);
    LoadedCorpus corpus = load_any_corpus(o.corpus, o.lexicon);
    remap_labels(corpus.examples, corpus.categories, ck.categories);

    std::vector<Direction> directions;
    if (o.direction.empty())
        directions = {Direction::ImageToRecipe, Direction::RecipeToImage};
    else
        directions = {direction_from_name(o.direction)};

    std::vector<RetrievalReport> reports;
    for (const Direction dir : directions)
        reports.push_back(
            subset_protocol_eval(ck, corpus.examples, o.subset_size, 10, o.seed, dir));

    const std::filesystem::path dir = ensure_out_dir(o.out_dir);
    std::ostringstream csv, json;
    write_report_csv(csv, reports);
    write_report_json(json, reports);
    write_text_file(dir / "retrieval.csv", csv.str());
    write_text_file(dir / "retrieval.json", json.str());

    std::ostringstream dump;
    dump << "command=eval\nsubset_size=" << o.subset_size << "\ndirection="
         << (o.direction.empty() ? "both" : o.direction) << "\nseed=" << o.seed << "\n";
    write_manifest(dir, "eval", dump.str(), o.seed,
                   {{"checkpoint", o.checkpoint}, {"corpus", o.corpus}},
                   {"retrieval.csv", "retrieval.json"});

    for (const RetrievalReport& r : reports)
        std::cout << direction_name(r.direction) << " @" << r.subset_size << ": MedR "
                  << jema::detail::fmt_real(r.medr) << ", R@1 "
                  << jema::detail::fmt_real(r.r_at_1) << "%, R@5 "
                  << jema::detail::fmt_real(r.r_at_5) << "%, R@10 "
                  << jema::detail::fmt_real(r.r_at_10) << "%\n";
    return 0;
}

// ---------------------------------------------------------------------------
// ablate: the component contribution matrix on the synthetic benchmark
// ---------------------------------------------------------------------------

struct AblateOptions {
    std::string config;
    std::string out_dir = ".";
    std::uint64_t seed = 1;         // training seed, matched across rows
    std::uint64_t corpus_seed = 7;  // benchmark corpus
    int classes = 10;
    int train_pairs = 20;
    int held_pairs = 10;
    int latent = 16;
    double noise = 0.05;
    int sequence_dim = 512;
    int key_term_dim = 300;
    int visual_dim = 512;
};

struct AblationRow {
    std::string name;
    bool key_term_channel;
    bool category_channel;
    bool batch_all;
    bool category_loss;
    bool adversarial_loss;
};

inline const std::vector<AblationRow>& ablation_rows() {
    static const std::vector<AblationRow> rows = {
        {"batch_all", false, false, true, false, false},
        {"batch_all+category_channel", false, true, true, false, false},
        {"batch_all+key_term_channel", true, false, true, false, false},
        {"batch_all+both_channels", true, true, true, false, false},
        {"batch_all+both_channels+category_loss", true, true, true, true, false},
        {"batch_all+both_channels+adversarial_loss", true, true, true, false, true},
        {"double_hard+both_channels", true, true, false, false, false},
        {"full_objective", true, true, false, true, true},
    };
    return rows;
}

// Withholding a channel keeps the architecture intact and blanks the signal:
// key terms become zero vectors, categories collapse onto a single label so
// the table lookup carries no information.
inline std::vector<PairExample> strip_channels(std::vector<PairExample> examples,
                                               bool key_term_channel,
                                               bool category_channel) {
    for (PairExample& e : examples) {
        if (!key_term_channel)
            std::fill(e.recipe.key_term.data.begin(), e.recipe.key_term.data.end(), 0.0);
        if (!category_channel) e.image.category_label = 0;
    }
    return examples;
}

inline TrainConfig ablation_config(const TrainConfig& base, const AblationRow& row) {
    TrainConfig c = base;
    c.loss.use_batch_all = row.batch_all;
    if (!row.category_loss) {
        c.loss.lambda1 = 0.0;
        c.loss.lambda2 = 0.0;
    }
    if (!row.adversarial_loss) c.loss.lambda3 = 0.0;
    return c;
}

inline int run_ablate(const AblateOptions& o) {
    SyntheticSpec spec;
    spec.class_count = o.classes;
    spec.pairs_per_class = o.train_pairs + o.held_pairs;
    spec.latent_dim = o.latent;
    spec.noise_sigma = o.noise;
    spec.seed = o.corpus_seed;
    spec.sequence_dim = o.sequence_dim;
    spec.key_term_dim = o.key_term_dim;
    spec.visual_dim = o.visual_dim;
    const SyntheticCorpus corpus = generate_synthetic_corpus(spec);

    std::vector<PairExample> train, held;
    for (int c = 0; c < spec.class_count; ++c)
        for (int k = 0; k < spec.pairs_per_class; ++k) {
            const PairExample& e =
                corpus.examples[static_cast<std::size_t>(c * spec.pairs_per_class + k)];
            (k < o.train_pairs ? train : held).push_back(e);
        }

    TrainConfig base = o.config.empty() ? TrainConfig{} : load_train_config(o.config);
    base.seed = o.seed;
    base.validate();

    std::ostringstream csv;
    csv << "configuration,medr,r_at_1,r_at_5,r_at_10\n";
    for (const AblationRow& row : ablation_rows()) {
        const std::vector<PairExample> row_train =
            strip_channels(train, row.key_term_channel, row.category_channel);
        const std::vector<PairExample> row_held =
            strip_channels(held, row.key_term_channel, row.category_channel);
        const TrainConfig cfg = ablation_config(base, row);

        std::cout << row.name << ": training " << cfg.epochs << " epochs..." << std::flush;
        const Checkpoint ck = fit(row_train, corpus.categories, cfg);
        const RetrievalReport rep =
            subset_protocol_eval(ck, row_held, static_cast<int>(row_held.size()), 10, 99,
                                 Direction::ImageToRecipe);
        std::cout << " MedR " << jema::detail::fmt_real(rep.medr) << ", R@1 "
                  << jema::detail::fmt_real(rep.r_at_1) << "%\n";

        csv << row.name << "," << jema::detail::fmt_real(rep.medr) << ","
            << jema::detail::fmt_real(rep.r_at_1) << ","
            << jema::detail::fmt_real(rep.r_at_5) << ","
            << jema::detail::fmt_real(rep.r_at_10) << "\n";
    }

    const std::filesystem::path dir = ensure_out_dir(o.out_dir);
    write_text_file(dir / "ablation.csv", csv.str());

    std::ostringstream dump;
    dump << "command=ablate\n" << train_config_text(base) << spec_dump(spec)
         << "train_pairs=" << o.train_pairs << "\nheld_pairs=" << o.held_pairs << "\n";
    write_manifest(dir, "ablate", dump.str(), o.seed,
                   {{"config", o.config.empty() ? "(defaults)" : o.config}},
                   {"ablation.csv"});
    std::cout << "wrote " << (dir / "ablation.csv").string() << "\n";
    return 0;
}

} // namespace detail

// ---------------------------------------------------------------------------
// dispatch
// ---------------------------------------------------------------------------

inline int run(int argc, char** argv) {
    CLI::App app{"cross-modal recipe-image retrieval engine"};
    app.require_subcommand(1);

    detail::TermsOptions terms;
    CLI::App* terms_cmd =
        app.add_subcommand("terms", "extract and rank key terms from a JSONL corpus");
    terms_cmd->add_option("--corpus", terms.corpus, "text-bearing JSONL corpus")
        ->required();
    terms_cmd->add_option("--lexicon", terms.lexicon, "entity lexicon file")->required();
    terms_cmd->add_option("--out-dir", terms.out_dir, "output directory");
    terms_cmd->add_option("--ranker", terms.ranker, "tfidf or textrank");
    terms_cmd->add_option("--threshold", terms.threshold, "drop terms below this weight");

    detail::SynthOptions synth;
    CLI::App* synth_cmd =
        app.add_subcommand("synth", "emit a synthetic feature-bearing corpus");
    synth_cmd->add_option("--classes", synth.spec.class_count, "number of categories");
    synth_cmd->add_option("--pairs-per-class", synth.spec.pairs_per_class,
                          "pairs per category");
    synth_cmd->add_option("--latent", synth.spec.latent_dim, "latent dimension");
    synth_cmd->add_option("--noise", synth.spec.noise_sigma, "noise level");
    synth_cmd->add_option("--seed", synth.spec.seed, "generator seed");
    synth_cmd->add_option("--sequence-dim", synth.spec.sequence_dim,
                          "sequence feature rows");
    synth_cmd->add_option("--key-term-dim", synth.spec.key_term_dim,
                          "key-term feature rows");
    synth_cmd->add_option("--visual-dim", synth.spec.visual_dim, "visual feature rows");
    synth_cmd->add_option("--feature-scale", synth.spec.feature_scale,
                          "feature magnitude multiplier");
    synth_cmd->add_option("--out-dir", synth.out_dir, "output directory");

    detail::TrainOptions train;
    CLI::App* train_cmd =
        app.add_subcommand("train", "train a joint embedding on a corpus");
    train_cmd->add_option("--corpus", train.corpus, "JSONL corpus")->required();
    train_cmd->add_option("--config", train.config, "key=value training config file");
    train_cmd->add_option("--lexicon", train.lexicon,
                          "entity lexicon (text-bearing corpora)");
    train_cmd->add_option("--checkpoint", train.checkpoint,
                          "checkpoint output path (default <out-dir>/checkpoint.jema)");
    train_cmd->add_option("--out-dir", train.out_dir, "output directory");
    CLI::Option* t_seed =
        train_cmd->add_option("--seed", train.over.seed, "override config seed");
    CLI::Option* t_l1 =
        train_cmd->add_option("--lambda1", train.over.lambda1, "recipe category weight");
    CLI::Option* t_l2 =
        train_cmd->add_option("--lambda2", train.over.lambda2, "image category weight");
    CLI::Option* t_l3 =
        train_cmd->add_option("--lambda3", train.over.lambda3, "alignment weight");
    CLI::Option* t_margin =
        train_cmd->add_option("--margin", train.over.margin, "triplet margin");
    CLI::Option* t_gamma =
        train_cmd->add_option("--gamma", train.over.gamma, "soft-margin sharpness");
    CLI::Option* t_cls = train_cmd->add_option(
        "--class-level-term", train.over.class_level_term,
        "true/false: add class-level mining to the instance-level term");
    CLI::Option* t_eq4 = train_cmd->add_option("--eq4-literal", train.over.eq4_literal,
                                               "true/false: printed adversary direction");
    CLI::Option* t_norm =
        train_cmd->add_option("--normalize-embeddings", train.over.normalize_embeddings,
                              "true/false: unit-length embeddings");
    train_cmd->add_option("--gp-mode", train.over.gp_mode,
                          "gradient penalty mode: standard or paper_literal");

    detail::EvalOptions eval;
    CLI::App* eval_cmd =
        app.add_subcommand("eval", "retrieval metrics for a trained checkpoint");
    eval_cmd->add_option("--checkpoint", eval.checkpoint, "trained checkpoint")
        ->required();
    eval_cmd->add_option("--corpus", eval.corpus, "JSONL corpus to evaluate on")
        ->required();
    eval_cmd->add_option("--lexicon", eval.lexicon,
                         "entity lexicon (text-bearing corpora)");
    eval_cmd->add_option("--out-dir", eval.out_dir, "output directory");
    eval_cmd->add_option("--subset-size", eval.subset_size, "candidates per subset");
    eval_cmd->add_option("--direction", eval.direction,
                         "image-to-recipe or recipe-to-image (default both)");
    eval_cmd->add_option("--seed", eval.seed, "subset sampling seed");

    detail::AblateOptions ablate;
    CLI::App* ablate_cmd = app.add_subcommand(
        "ablate", "component contribution matrix on the synthetic benchmark");
    ablate_cmd->add_option("--config", ablate.config, "key=value training config file");
    ablate_cmd->add_option("--out-dir", ablate.out_dir, "output directory");
    ablate_cmd->add_option("--seed", ablate.seed, "training seed, matched across rows");
    ablate_cmd->add_option("--corpus-seed", ablate.corpus_seed, "benchmark corpus seed");
    ablate_cmd->add_option("--classes", ablate.classes, "number of categories");
    ablate_cmd->add_option("--train-pairs-per-class", ablate.train_pairs,
                           "training pairs per category");
    ablate_cmd->add_option("--held-pairs-per-class", ablate.held_pairs,
                           "held-out pairs per category");
    ablate_cmd->add_option("--latent", ablate.latent, "latent dimension");
    ablate_cmd->add_option("--noise", ablate.noise, "noise level");
    ablate_cmd->add_option("--sequence-dim", ablate.sequence_dim, "sequence feature rows");
    ablate_cmd->add_option("--key-term-dim", ablate.key_term_dim, "key-term feature rows");
    ablate_cmd->add_option("--visual-dim", ablate.visual_dim, "visual feature rows");

    int rc = 0;
    terms_cmd->callback([&] { rc = detail::run_terms(terms); });
    synth_cmd->callback([&] { rc = detail::run_synth(synth); });
    train_cmd->callback([&] {
        train.over.has_seed = t_seed->count() > 0;
        train.over.has_lambda1 = t_l1->count() > 0;
        train.over.has_lambda2 = t_l2->count() > 0;
        train.over.has_lambda3 = t_l3->count() > 0;
        train.over.has_margin = t_margin->count() > 0;
        train.over.has_gamma = t_gamma->count() > 0;
        train.over.has_class_level = t_cls->count() > 0;
        train.over.has_eq4 = t_eq4->count() > 0;
        train.over.has_normalize = t_norm->count() > 0;
        rc = detail::run_train(train);
    });
    eval_cmd->callback([&] { rc = detail::run_eval(eval); });
    ablate_cmd->callback([&] { rc = detail::run_ablate(ablate); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return rc;
}

} // namespace jema::cli
