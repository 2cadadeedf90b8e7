#pragma once

// Alternating optimization: per batch the discriminator takes ascent steps on
// frozen embeddings, then the encoders and classifiers take one Adam step with
// the discriminator frozen. Checkpoints persist the full training state.

#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "jema/adam.hpp"
#include "jema/data/batching.hpp"
#include "jema/data/corpus.hpp"
#include "jema/data/pair_example.hpp"
#include "jema/embed/cbow.hpp"
#include "jema/encode/encoders.hpp"
#include "jema/error.hpp"
#include "jema/io/binio.hpp"
#include "jema/loss/losses.hpp"
#include "jema/matrix.hpp"
#include "jema/rng.hpp"
#include "jema/tape.hpp"

namespace jema {

struct TrainConfig {
    int epochs = 30;
    int batch_size = 100;
    double learning_rate = 1e-4;
    LossConfig loss;
    int d = 1024;          // shared space width; fusion hidden layer matches it
    int term_dim = 300;    // must equal the corpus key-term feature rows
    int category_dim = 300;
    // Small init is load-bearing at the published lr/epochs: Adam moves each
    // coordinate ~6e-3 over a 60-step run, which must dominate the starting
    // weights for the metric structure to form.
    double init_scale = 0.003;
    std::uint64_t seed = 1;
    int disc_steps = 1;  // discriminator updates per embedding update
    bool normalize_embeddings = true;

    void validate() const {
        if (epochs < 0) fail("train config: epochs must be >= 0, got ", epochs);
        if (batch_size < 2)
            fail("train config: batch size must be >= 2, got ", batch_size);
        if (!(learning_rate > 0.0))
            fail("train config: learning rate must be positive, got ", learning_rate);
        if (d < 1) fail("train config: d must be >= 1, got ", d);
        if (term_dim < 1) fail("train config: term dimension must be >= 1, got ", term_dim);
        if (category_dim < 1)
            fail("train config: category dimension must be >= 1, got ", category_dim);
        if (!(init_scale > 0.0))
            fail("train config: init scale must be positive, got ", init_scale);
        if (disc_steps < 1)
            fail("train config: discriminator steps must be >= 1, got ", disc_steps);
        loss.validate();
    }
};

// ---------------------------------------------------------------------------
// Config file: flat key = value text
// ---------------------------------------------------------------------------

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

inline bool parse_bool(const std::string& v, const std::string& key) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    fail("config: key '", key, "' expects true or false, got '", v, "'");
}

inline double parse_real(const std::string& v, const std::string& key) {
    try {
        std::size_t used = 0;
        const double x = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        fail("config: key '", key, "' expects a number, got '", v, "'");
    }
}

inline long long parse_int(const std::string& v, const std::string& key) {
    try {
        std::size_t used = 0;
        const long long x = std::stoll(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        fail("config: key '", key, "' expects an integer, got '", v, "'");
    }
}

} // namespace detail

inline const char* gp_mode_name(GpMode m) {
    return m == GpMode::Standard ? "standard" : "paper_literal";
}

inline GpMode gp_mode_from_name(const std::string& name) {
    if (name == "standard") return GpMode::Standard;
    if (name == "paper_literal") return GpMode::PaperLiteral;
    fail("unknown gp mode '", name, "', expected standard or paper_literal");
}

inline std::string train_config_text(const TrainConfig& cfg) {
    std::ostringstream f;
    f << std::setprecision(17);
    f << "epochs = " << cfg.epochs << "\n";
    f << "batch_size = " << cfg.batch_size << "\n";
    f << "learning_rate = " << cfg.learning_rate << "\n";
    f << "d = " << cfg.d << "\n";
    f << "term_dim = " << cfg.term_dim << "\n";
    f << "category_dim = " << cfg.category_dim << "\n";
    f << "init_scale = " << cfg.init_scale << "\n";
    f << "seed = " << cfg.seed << "\n";
    f << "disc_steps = " << cfg.disc_steps << "\n";
    f << "normalize_embeddings = " << (cfg.normalize_embeddings ? "true" : "false") << "\n";
    f << "margin = " << cfg.loss.margin << "\n";
    f << "gamma = " << cfg.loss.gamma << "\n";
    f << "lambda1 = " << cfg.loss.lambda1 << "\n";
    f << "lambda2 = " << cfg.loss.lambda2 << "\n";
    f << "lambda3 = " << cfg.loss.lambda3 << "\n";
    f << "lambda_d = " << cfg.loss.lambda_d << "\n";
    f << "class_level = " << (cfg.loss.class_level ? "true" : "false") << "\n";
    f << "use_batch_all = " << (cfg.loss.use_batch_all ? "true" : "false") << "\n";
    f << "gp_mode = " << gp_mode_name(cfg.loss.gp_mode) << "\n";
    f << "eq4_literal = " << (cfg.loss.eq4_literal ? "true" : "false") << "\n";
    return f.str();
}

inline void save_train_config(const TrainConfig& cfg, const std::string& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) fail("cannot write config '", path, "'");
    f << train_config_text(cfg);
    f.flush();
    if (!f) fail("config write failed for '", path, "'");
}

inline TrainConfig parse_train_config(std::istream& in, const std::string& origin) {
    TrainConfig cfg;
    std::string line;
    int ln = 0;
    while (std::getline(in, line)) {
        ++ln;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            fail("config '", origin, "' line ", ln, ": expected key = value, got '", line,
                 "'");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string val = detail::trim(line.substr(eq + 1));
        if (key.empty() || val.empty())
            fail("config '", origin, "' line ", ln, ": empty key or value");

        if (key == "epochs") cfg.epochs = static_cast<int>(detail::parse_int(val, key));
        else if (key == "batch_size") cfg.batch_size = static_cast<int>(detail::parse_int(val, key));
        else if (key == "learning_rate") cfg.learning_rate = detail::parse_real(val, key);
        else if (key == "d") cfg.d = static_cast<int>(detail::parse_int(val, key));
        else if (key == "term_dim") cfg.term_dim = static_cast<int>(detail::parse_int(val, key));
        else if (key == "category_dim") cfg.category_dim = static_cast<int>(detail::parse_int(val, key));
        else if (key == "init_scale") cfg.init_scale = detail::parse_real(val, key);
        else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(detail::parse_int(val, key));
        else if (key == "disc_steps") cfg.disc_steps = static_cast<int>(detail::parse_int(val, key));
        else if (key == "normalize_embeddings") cfg.normalize_embeddings = detail::parse_bool(val, key);
        else if (key == "margin") cfg.loss.margin = detail::parse_real(val, key);
        else if (key == "gamma") cfg.loss.gamma = detail::parse_real(val, key);
        else if (key == "lambda1") cfg.loss.lambda1 = detail::parse_real(val, key);
        else if (key == "lambda2") cfg.loss.lambda2 = detail::parse_real(val, key);
        else if (key == "lambda3") cfg.loss.lambda3 = detail::parse_real(val, key);
        else if (key == "lambda_d") cfg.loss.lambda_d = detail::parse_real(val, key);
        else if (key == "class_level") cfg.loss.class_level = detail::parse_bool(val, key);
        else if (key == "use_batch_all") cfg.loss.use_batch_all = detail::parse_bool(val, key);
        else if (key == "gp_mode") cfg.loss.gp_mode = gp_mode_from_name(val);
        else if (key == "eq4_literal") cfg.loss.eq4_literal = detail::parse_bool(val, key);
        else fail("config '", origin, "' line ", ln, ": unknown key '", key, "'");
    }
    cfg.validate();
    return cfg;
}

inline TrainConfig load_train_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) fail("cannot open config '", path, "'");
    return parse_train_config(f, path);
}

// ---------------------------------------------------------------------------
// Checkpoint
// ---------------------------------------------------------------------------

inline constexpr char kCheckpointMagic[] = "JEMACKPT2";  // 9 bytes on disk
inline constexpr std::uint32_t kCheckpointVersion = 2;

struct Checkpoint {
    EncoderParams encoder;
    CategoryClassifiers classifiers;
    DiscriminatorParams discriminator;
    WordVectors vectors;  // empty for feature-space corpora
    std::map<std::string, AdamState> adam;
    TrainConfig config;
    CategorySpace categories;
    int epoch = 0;
    std::vector<double> metric_history;  // mean total objective after each epoch

    // Every trainable parameter, canonical order; serialization and the
    // optimizer walk this list so names stay consistent everywhere.
    std::vector<std::pair<std::string, DenseMatrix*>> named_parameters() {
        std::vector<std::pair<std::string, DenseMatrix*>> out = encoder.named();
        for (auto& e : classifiers.named()) out.push_back(e);
        for (auto& e : discriminator.named()) out.push_back(e);
        return out;
    }

    std::vector<std::pair<std::string, const DenseMatrix*>> named_parameters() const {
        auto mut = const_cast<Checkpoint*>(this)->named_parameters();
        std::vector<std::pair<std::string, const DenseMatrix*>> out;
        for (auto& [name, m] : mut) out.push_back({name, m});
        return out;
    }

    void validate() const {
        config.validate();
        const EncoderDims& dm = encoder.dims;
        dm.validate();
        if (dm.out != config.d || dm.hidden != config.d)
            fail("checkpoint: encoder width ", dm.hidden, "/", dm.out,
                 " does not match config d = ", config.d);
        if (dm.key_term != config.term_dim)
            fail("checkpoint: key-term width ", dm.key_term,
                 " does not match config term_dim = ", config.term_dim);
        if (dm.category != config.category_dim)
            fail("checkpoint: category width ", dm.category,
                 " does not match config category_dim = ", config.category_dim);

        auto require_shape = [](const DenseMatrix& m, int r, int c, const char* name) {
            if (m.rows != r || m.cols != c)
                fail("checkpoint: ", name, " is ", m.rows, "x", m.cols, ", expected ", r,
                     "x", c);
        };
        require_shape(encoder.recipe_w1, dm.hidden, dm.recipe_in(), "recipe_w1");
        require_shape(encoder.recipe_b1, dm.hidden, 1, "recipe_b1");
        require_shape(encoder.recipe_w2, dm.out, dm.hidden, "recipe_w2");
        require_shape(encoder.recipe_b2, dm.out, 1, "recipe_b2");
        require_shape(encoder.image_w1, dm.hidden, dm.image_in(), "image_w1");
        require_shape(encoder.image_b1, dm.hidden, 1, "image_b1");
        require_shape(encoder.image_w2, dm.out, dm.hidden, "image_w2");
        require_shape(encoder.image_b2, dm.out, 1, "image_b2");
        require_shape(encoder.category_table, dm.n_categories, dm.category,
                      "category_table");
        require_shape(classifiers.recipe, dm.n_categories, dm.out, "classifier_recipe");
        require_shape(classifiers.image, dm.n_categories, dm.out, "classifier_image");

        if (discriminator.in_dim != dm.out)
            fail("checkpoint: discriminator input ", discriminator.in_dim,
                 " does not match embedding dimension ", dm.out);
        const int h1 = discriminator.in_dim / 2 > 0 ? discriminator.in_dim / 2 : 1;
        const int h2 = discriminator.in_dim / 4 > 0 ? discriminator.in_dim / 4 : 1;
        require_shape(discriminator.w1, h1, discriminator.in_dim, "disc_w1");
        require_shape(discriminator.b1, h1, 1, "disc_b1");
        require_shape(discriminator.w2, h2, h1, "disc_w2");
        require_shape(discriminator.b2, h2, 1, "disc_b2");
        require_shape(discriminator.w3, 1, h2, "disc_w3");
        require_shape(discriminator.b3, 1, 1, "disc_b3");

        if (categories.size() != dm.n_categories)
            fail("checkpoint: ", categories.size(), " category names but the table has ",
                 dm.n_categories, " rows");
        if (epoch < 0) fail("checkpoint: negative epoch ", epoch);

        for (const auto& [name, m] : named_parameters()) {
            auto it = adam.find(name);
            if (it == adam.end()) continue;
            if (it->second.m.rows == 0 && it->second.m.cols == 0) continue;  // lazy state
            if (!it->second.m.same_shape(*m) || !it->second.v.same_shape(*m))
                fail("checkpoint: optimizer state for '", name,
                     "' does not match the parameter shape");
        }
        if (!vectors.vocab.tokens.empty()) {
            if (vectors.matrix.rows != vectors.vocab.size() ||
                vectors.matrix.cols != vectors.dimension)
                fail("checkpoint: word-vector matrix is ", vectors.matrix.rows, "x",
                     vectors.matrix.cols, " for ", vectors.vocab.size(), " tokens of width ",
                     vectors.dimension);
        }
    }
};

// ---------------------------------------------------------------------------
// Training steps
// ---------------------------------------------------------------------------

inline AdamConfig adam_for(const TrainConfig& cfg) {
    AdamConfig a;
    a.lr = cfg.learning_rate;
    return a;
}

// Ascent steps maximize the adversary objective through its negated train
// target. Embeddings enter as values, so encoder parameters cannot move here.
inline double discriminator_update(Checkpoint& ck, const TrainingBatch& batch,
                                   SplitMix64& gp_rng, const AdamConfig& acfg) {
    batch.validate();
    const DenseMatrix er = encode_recipe_batch(ck.encoder, batch.recipe_features);
    const DenseMatrix ev = encode_image_batch(ck.encoder, batch.visual_features, batch.labels);
    Tape t;
    const DiscriminatorLossNodes d =
        discriminator_loss_graph(t, ck.discriminator, er, ev, ck.config.loss, gp_rng);
    const double reported = t.value(d.reported).scalar_value();
    if (!std::isfinite(reported))
        fail("training aborted: discriminator loss is non-finite (", reported, ")");
    const auto grads = t.backward_grad(d.train_target);
    for (auto& [name, m] : ck.discriminator.named())
        adam_step(*m, grads.at(name), ck.adam[name], acfg, name);
    return reported;
}

// One Adam step on the composite objective. The discriminator is frozen into
// constants by the graph, so its parameters cannot move here.
inline LossBreakdown embedding_update(Checkpoint& ck, const TrainingBatch& batch,
                                      const AdamConfig& acfg) {
    Tape t;
    const ObjectiveNodes o = total_objective_graph(t, ck.encoder, ck.classifiers,
                                                   ck.discriminator, batch, ck.config.loss);
    const LossBreakdown b = read_breakdown(t, o);
    if (!std::isfinite(b.dhtl))
        fail("training aborted: triplet component is non-finite (", b.dhtl, ")");
    if (!std::isfinite(b.ca_r))
        fail("training aborted: recipe category component is non-finite (", b.ca_r, ")");
    if (!std::isfinite(b.ca_v))
        fail("training aborted: image category component is non-finite (", b.ca_v, ")");
    if (!std::isfinite(b.da))
        fail("training aborted: alignment component is non-finite (", b.da, ")");
    if (!std::isfinite(b.total))
        fail("training aborted: total objective is non-finite (", b.total, ")");
    const auto grads = t.backward_grad(o.total);
    for (auto& [name, m] : ck.encoder.named())
        adam_step(*m, grads.at(name), ck.adam[name], acfg, name);
    for (auto& [name, m] : ck.classifiers.named())
        adam_step(*m, grads.at(name), ck.adam[name], acfg, name);
    return b;
}

inline LossBreakdown train_batch(Checkpoint& ck, const TrainingBatch& batch,
                                 SplitMix64& gp_rng) {
    const AdamConfig acfg = adam_for(ck.config);
    double d_loss = 0.0;
    for (int s = 0; s < ck.config.disc_steps; ++s)
        d_loss = discriminator_update(ck, batch, gp_rng, acfg);
    LossBreakdown b = embedding_update(ck, batch, acfg);
    b.d_loss = d_loss;
    return b;
}

inline std::vector<LossBreakdown> train_epoch(Checkpoint& ck,
                                              const std::vector<TrainingBatch>& batches,
                                              SplitMix64& gp_rng) {
    ck.validate();
    std::vector<LossBreakdown> log;
    log.reserve(batches.size());
    for (const TrainingBatch& b : batches) log.push_back(train_batch(ck, b, gp_rng));
    return log;
}

// Mean total objective over corpus-order batches (tail dropped). Deterministic
// in the parameters, so a reloaded checkpoint reproduces its history exactly.
inline double evaluate_mean_objective(const Checkpoint& ck,
                                      const std::vector<PairExample>& examples) {
    const int n = ck.config.batch_size;
    const int total = static_cast<int>(examples.size());
    if (total < n)
        fail("evaluate: corpus of ", total, " is smaller than one batch of ", n);
    double acc = 0.0;
    int count = 0;
    for (int start = 0; start + n <= total; start += n) {
        std::vector<int> idx(static_cast<std::size_t>(n));
        for (int k = 0; k < n; ++k) idx[static_cast<std::size_t>(k)] = start + k;
        const TrainingBatch b = detail::assemble_batch(examples, idx);
        Tape t;
        const ObjectiveNodes o = total_objective_graph(t, ck.encoder, ck.classifiers,
                                                       ck.discriminator, b, ck.config.loss);
        acc += t.value(o.total).scalar_value();
        ++count;
    }
    return acc / count;
}

// ---------------------------------------------------------------------------
// fit
// ---------------------------------------------------------------------------

inline Checkpoint init_checkpoint(const std::vector<PairExample>& examples,
                                  const CategorySpace& categories, const TrainConfig& cfg,
                                  const WordVectors* vectors = nullptr) {
    cfg.validate();
    if (categories.size() == 0) fail("fit: category list is empty");
    validate_examples(examples, categories.size());
    const PairExample& first = examples.front();
    if (first.recipe.key_term.rows != cfg.term_dim)
        fail("fit: config term dimension is ", cfg.term_dim,
             " but corpus key-term features have ", first.recipe.key_term.rows, " rows");

    EncoderDims dims;
    dims.sequence = first.recipe.sequence.rows;
    dims.key_term = cfg.term_dim;
    dims.visual = first.image.visual.rows;
    dims.category = cfg.category_dim;
    dims.hidden = cfg.d;
    dims.out = cfg.d;
    dims.n_categories = categories.size();

    SplitMix64 rng(cfg.seed);
    Checkpoint ck;
    ck.encoder = EncoderParams::init(dims, rng, cfg.init_scale, cfg.normalize_embeddings);
    ck.classifiers =
        CategoryClassifiers::init(dims.n_categories, cfg.d, rng, cfg.init_scale);
    ck.discriminator = DiscriminatorParams::init(cfg.d, rng, cfg.init_scale);
    ck.config = cfg;
    ck.categories = categories;
    if (vectors) ck.vectors = *vectors;
    ck.validate();
    return ck;
}

inline Checkpoint fit(const std::vector<PairExample>& examples,
                      const CategorySpace& categories, const TrainConfig& cfg,
                      const WordVectors* vectors = nullptr) {
    Checkpoint ck = init_checkpoint(examples, categories, cfg, vectors);
    SplitMix64 shuffle_rng = SplitMix64(cfg.seed).fork(0x5u);
    SplitMix64 gp_rng = SplitMix64(cfg.seed).fork(0x6u);
    for (int e = 0; e < cfg.epochs; ++e) {
        const std::vector<TrainingBatch> batches =
            make_batches(examples, cfg.batch_size, shuffle_rng, true);
        train_epoch(ck, batches, gp_rng);
        ck.epoch = e + 1;
        ck.metric_history.push_back(evaluate_mean_objective(ck, examples));
    }
    return ck;
}

inline Checkpoint fit(const LoadedCorpus& corpus, const TrainConfig& cfg) {
    return fit(corpus.examples, corpus.categories, cfg, &corpus.vectors);
}

// ---------------------------------------------------------------------------
// Checkpoint persistence
// ---------------------------------------------------------------------------

namespace detail {

inline void write_matrix(std::ostream& os, const DenseMatrix& m) {
    io::write_u32le(os, static_cast<std::uint32_t>(m.rows));
    io::write_u32le(os, static_cast<std::uint32_t>(m.cols));
    for (double v : m.data) io::write_f64le(os, v);
}

inline DenseMatrix read_matrix(std::istream& is, const char* what) {
    const std::uint32_t r = io::read_u32le(is, what);
    const std::uint32_t c = io::read_u32le(is, what);
    if (r > (1u << 20) || c > (1u << 20))
        fail("corrupt checkpoint: ", what, " claims shape ", r, "x", c);
    DenseMatrix m(static_cast<int>(r), static_cast<int>(c));
    for (double& v : m.data) v = io::read_f64le(is, what);
    return m;
}

inline void write_flag(std::ostream& os, bool b) { io::write_u32le(os, b ? 1u : 0u); }

inline bool read_flag(std::istream& is, const char* what) {
    const std::uint32_t v = io::read_u32le(is, what);
    if (v > 1) fail("corrupt checkpoint: ", what, " is ", v, ", expected 0 or 1");
    return v == 1;
}

} // namespace detail

inline void save_checkpoint(const Checkpoint& ck, const std::string& path) {
    ck.validate();
    std::ostringstream os(std::ios::binary);
    io::write_bytes(os, kCheckpointMagic, 9);
    io::write_u32le(os, kCheckpointVersion);

    const TrainConfig& c = ck.config;
    io::write_u32le(os, static_cast<std::uint32_t>(c.epochs));
    io::write_u32le(os, static_cast<std::uint32_t>(c.batch_size));
    io::write_f64le(os, c.learning_rate);
    io::write_u32le(os, static_cast<std::uint32_t>(c.d));
    io::write_u32le(os, static_cast<std::uint32_t>(c.term_dim));
    io::write_u32le(os, static_cast<std::uint32_t>(c.category_dim));
    io::write_f64le(os, c.init_scale);
    io::write_u64le(os, c.seed);
    io::write_u32le(os, static_cast<std::uint32_t>(c.disc_steps));
    detail::write_flag(os, c.normalize_embeddings);
    io::write_f64le(os, c.loss.margin);
    io::write_f64le(os, c.loss.gamma);
    io::write_f64le(os, c.loss.lambda1);
    io::write_f64le(os, c.loss.lambda2);
    io::write_f64le(os, c.loss.lambda3);
    io::write_f64le(os, c.loss.lambda_d);
    detail::write_flag(os, c.loss.class_level);
    detail::write_flag(os, c.loss.use_batch_all);
    io::write_u32le(os, c.loss.gp_mode == GpMode::Standard ? 0u : 1u);
    detail::write_flag(os, c.loss.eq4_literal);

    const EncoderDims& dm = ck.encoder.dims;
    io::write_u32le(os, static_cast<std::uint32_t>(dm.sequence));
    io::write_u32le(os, static_cast<std::uint32_t>(dm.key_term));
    io::write_u32le(os, static_cast<std::uint32_t>(dm.visual));
    io::write_u32le(os, static_cast<std::uint32_t>(dm.category));
    io::write_u32le(os, static_cast<std::uint32_t>(dm.hidden));
    io::write_u32le(os, static_cast<std::uint32_t>(dm.out));
    io::write_u32le(os, static_cast<std::uint32_t>(dm.n_categories));
    io::write_u32le(os, static_cast<std::uint32_t>(ck.discriminator.in_dim));
    io::write_f64le(os, ck.discriminator.leak);
    io::write_u32le(os, static_cast<std::uint32_t>(ck.epoch));

    io::write_u32le(os, static_cast<std::uint32_t>(ck.categories.size()));
    for (const std::string& name : ck.categories.labels) io::write_string(os, name);
    io::write_u32le(os, static_cast<std::uint32_t>(ck.metric_history.size()));
    for (double v : ck.metric_history) io::write_f64le(os, v);

    const auto params = ck.named_parameters();
    io::write_u32le(os, static_cast<std::uint32_t>(params.size()));
    for (const auto& [name, m] : params) {
        io::write_string(os, name);
        detail::write_matrix(os, *m);
    }

    io::write_u32le(os, static_cast<std::uint32_t>(ck.adam.size()));
    for (const auto& [name, st] : ck.adam) {
        io::write_string(os, name);
        io::write_u64le(os, static_cast<std::uint64_t>(st.step));
        detail::write_matrix(os, st.m);
        detail::write_matrix(os, st.v);
    }

    const bool has_vectors = !ck.vectors.vocab.tokens.empty();
    detail::write_flag(os, has_vectors);
    if (has_vectors) {
        io::write_u32le(os, static_cast<std::uint32_t>(ck.vectors.dimension));
        io::write_u64le(os, static_cast<std::uint64_t>(ck.vectors.vocab.min_count));
        io::write_u32le(os, static_cast<std::uint32_t>(ck.vectors.vocab.size()));
        for (int i = 0; i < ck.vectors.vocab.size(); ++i) {
            io::write_string(os, ck.vectors.vocab.tokens[static_cast<std::size_t>(i)]);
            io::write_u64le(os, static_cast<std::uint64_t>(
                                    ck.vectors.vocab.counts[static_cast<std::size_t>(i)]));
        }
        detail::write_matrix(os, ck.vectors.matrix);
    }

    const std::string payload = os.str();
    const std::uint64_t sum = io::fnv1a64(payload.data(), payload.size());
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) fail("cannot write checkpoint '", path, "'");
    io::write_bytes(f, payload.data(), payload.size());
    io::write_u64le(f, sum);
    f.flush();
    if (!f) fail("checkpoint write failed for '", path, "'");
}

inline Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) fail("cannot open checkpoint '", path, "'");
    std::ostringstream buf;
    buf << f.rdbuf();
    const std::string bytes = buf.str();
    if (bytes.size() < 9 + 4 + 8)
        fail("checkpoint checksum mismatch: file is corrupt or truncated");
    std::uint64_t stored = 0;
    for (int i = 0; i < 8; ++i)
        stored |= static_cast<std::uint64_t>(
                      static_cast<unsigned char>(bytes[bytes.size() - 8 + i]))
                  << (8 * i);
    if (io::fnv1a64(bytes.data(), bytes.size() - 8) != stored)
        fail("checkpoint checksum mismatch: file is corrupt or truncated");

    std::istringstream is(bytes.substr(0, bytes.size() - 8), std::ios::binary);
    char magic[9];
    io::read_exact(is, magic, 9, "magic");
    if (std::string(magic, 9) != kCheckpointMagic) fail("not a checkpoint file: bad magic");
    const std::uint32_t version = io::read_u32le(is, "version");
    if (version != kCheckpointVersion)
        fail("checkpoint version ", version, " is not supported, expected ",
             kCheckpointVersion);

    Checkpoint ck;
    TrainConfig& c = ck.config;
    c.epochs = static_cast<int>(io::read_u32le(is, "epochs"));
    c.batch_size = static_cast<int>(io::read_u32le(is, "batch size"));
    c.learning_rate = io::read_f64le(is, "learning rate");
    c.d = static_cast<int>(io::read_u32le(is, "d"));
    c.term_dim = static_cast<int>(io::read_u32le(is, "term dim"));
    c.category_dim = static_cast<int>(io::read_u32le(is, "category dim"));
    c.init_scale = io::read_f64le(is, "init scale");
    c.seed = io::read_u64le(is, "seed");
    c.disc_steps = static_cast<int>(io::read_u32le(is, "disc steps"));
    c.normalize_embeddings = detail::read_flag(is, "normalize flag");
    c.loss.margin = io::read_f64le(is, "margin");
    c.loss.gamma = io::read_f64le(is, "gamma");
    c.loss.lambda1 = io::read_f64le(is, "lambda1");
    c.loss.lambda2 = io::read_f64le(is, "lambda2");
    c.loss.lambda3 = io::read_f64le(is, "lambda3");
    c.loss.lambda_d = io::read_f64le(is, "lambda_d");
    c.loss.class_level = detail::read_flag(is, "class level flag");
    c.loss.use_batch_all = detail::read_flag(is, "batch-all flag");
    c.loss.gp_mode =
        io::read_u32le(is, "gp mode") == 0 ? GpMode::Standard : GpMode::PaperLiteral;
    c.loss.eq4_literal = detail::read_flag(is, "eq4 flag");

    EncoderDims dm;
    dm.sequence = static_cast<int>(io::read_u32le(is, "sequence dim"));
    dm.key_term = static_cast<int>(io::read_u32le(is, "key-term dim"));
    dm.visual = static_cast<int>(io::read_u32le(is, "visual dim"));
    dm.category = static_cast<int>(io::read_u32le(is, "category width"));
    dm.hidden = static_cast<int>(io::read_u32le(is, "hidden dim"));
    dm.out = static_cast<int>(io::read_u32le(is, "out dim"));
    dm.n_categories = static_cast<int>(io::read_u32le(is, "category count"));
    ck.encoder.dims = dm;
    ck.encoder.normalize = c.normalize_embeddings;
    ck.discriminator.in_dim = static_cast<int>(io::read_u32le(is, "disc input dim"));
    ck.discriminator.leak = io::read_f64le(is, "disc leak");
    ck.epoch = static_cast<int>(io::read_u32le(is, "epoch"));

    const std::uint32_t n_cats = io::read_u32le(is, "category names");
    for (std::uint32_t i = 0; i < n_cats; ++i)
        ck.categories.add(io::read_string(is, "category name"));
    const std::uint32_t n_hist = io::read_u32le(is, "metric history");
    for (std::uint32_t i = 0; i < n_hist; ++i)
        ck.metric_history.push_back(io::read_f64le(is, "metric entry"));

    const std::uint32_t n_params = io::read_u32le(is, "parameter count");
    std::map<std::string, DenseMatrix> table;
    for (std::uint32_t i = 0; i < n_params; ++i) {
        const std::string name = io::read_string(is, "parameter name");
        if (table.count(name)) fail("corrupt checkpoint: duplicate parameter '", name, "'");
        table[name] = detail::read_matrix(is, "parameter");
    }
    for (auto& [name, slot] : ck.named_parameters()) {
        auto it = table.find(name);
        if (it == table.end()) fail("checkpoint is missing parameter '", name, "'");
        *slot = std::move(it->second);
        table.erase(it);
    }
    if (!table.empty())
        fail("checkpoint has unexpected parameter '", table.begin()->first, "'");

    const std::uint32_t n_states = io::read_u32le(is, "optimizer state count");
    for (std::uint32_t i = 0; i < n_states; ++i) {
        const std::string name = io::read_string(is, "optimizer state name");
        AdamState st;
        st.step = static_cast<std::int64_t>(io::read_u64le(is, "optimizer step"));
        st.m = detail::read_matrix(is, "optimizer m");
        st.v = detail::read_matrix(is, "optimizer v");
        ck.adam[name] = std::move(st);
    }

    if (detail::read_flag(is, "word-vector flag")) {
        ck.vectors.dimension = static_cast<int>(io::read_u32le(is, "word-vector dim"));
        ck.vectors.vocab.min_count =
            static_cast<long>(io::read_u64le(is, "vocabulary min count"));
        const std::uint32_t n_tokens = io::read_u32le(is, "vocabulary size");
        for (std::uint32_t i = 0; i < n_tokens; ++i) {
            const std::string tok = io::read_string(is, "vocabulary token");
            ck.vectors.vocab.index_of[tok] =
                static_cast<int>(ck.vectors.vocab.tokens.size());
            ck.vectors.vocab.tokens.push_back(tok);
            ck.vectors.vocab.counts.push_back(
                static_cast<long>(io::read_u64le(is, "vocabulary count")));
        }
        ck.vectors.matrix = detail::read_matrix(is, "word-vector matrix");
    } else {
        ck.vectors.dimension = 0;
    }

    ck.validate();
    return ck;
}

} // namespace jema
