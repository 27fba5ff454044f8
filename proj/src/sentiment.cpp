#include "propnet/sentiment/sentiment.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "propnet/nncore/ops.hpp"

namespace propnet::sentiment {

std::size_t class_index(ingest::Sentiment s) {
    switch (s) {
        case ingest::Sentiment::Positive: return 0;
        case ingest::Sentiment::Neutral: return 1;
        case ingest::Sentiment::Negative: return 2;
    }
    return 1;
}

// ---------------------------------------------------------------------------
// Vocabulary
// ---------------------------------------------------------------------------

Vocabulary Vocabulary::build(const std::vector<std::string>& clean_texts, std::size_t min_frequency) {
    std::map<std::string, std::size_t> counts;
    for (const std::string& text : clean_texts)
        for (const std::string& tok : ingest::tokenize(text)) ++counts[tok];

    Vocabulary vocab;
    std::size_t next = 2;  // 0 pad, 1 unk
    for (const auto& [token, count] : counts) {  // map order keeps indices stable
        if (count >= min_frequency) vocab.tokens_[token] = next++;
    }
    return vocab;
}

std::string Vocabulary::to_json() const {
    nlohmann::ordered_json j;
    j["<pad>"] = kPadding;
    j["<unk>"] = kUnknown;
    for (const auto& [token, index] : tokens_) j[token] = index;
    return j.dump(2);
}

Vocabulary Vocabulary::from_json(const std::string& json_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw_error(ErrorKind::Checkpoint, "vocabulary is not valid JSON: " + std::string(e.what()));
    }
    Vocabulary vocab;
    for (auto& [token, index] : j.items()) {
        if (token == "<pad>" || token == "<unk>") continue;
        vocab.tokens_[token] = index.get<std::size_t>();
    }
    return vocab;
}

// ---------------------------------------------------------------------------
// Params
// ---------------------------------------------------------------------------

void TextCnnConfig::validate() const {
    if (max_len < 3 || embed_dim < 3)
        throw_error(ErrorKind::Config, "textcnn: max_len and embed_dim must be at least 3 for 3x3 kernels");
    if (kernels == 0) throw_error(ErrorKind::Config, "textcnn: need at least one kernel");
}

TextCnnParams TextCnnParams::init(const TextCnnConfig& config, std::size_t vocab_size, Rng& rng) {
    config.validate();
    TextCnnParams p;
    p.config = config;
    p.embedding = nncore::random_uniform({vocab_size, config.embed_dim}, -0.1, 0.1, rng);
    for (std::size_t k = 0; k < config.kernels; ++k) {
        p.kernels.push_back(nncore::random_uniform({3, 3}, -0.1, 0.1, rng));
        p.kernel_biases.push_back(nncore::random_uniform({1}, -0.1, 0.1, rng));
    }
    p.fc_weight = nncore::random_uniform({config.kernels, kClasses}, -0.1, 0.1, rng);
    p.fc_bias = nncore::random_uniform({kClasses}, -0.1, 0.1, rng);
    return p;
}

std::vector<nncore::NumArray> TextCnnParams::flatten() const {
    std::vector<nncore::NumArray> flat;
    flat.push_back(embedding);
    for (std::size_t k = 0; k < kernels.size(); ++k) {
        flat.push_back(kernels[k]);
        flat.push_back(kernel_biases[k]);
    }
    flat.push_back(fc_weight);
    flat.push_back(fc_bias);
    return flat;
}

TextCnnParams TextCnnParams::unflatten(const TextCnnConfig& config, const std::vector<nncore::NumArray>& flat) {
    if (flat.size() != 3 + 2 * config.kernels)
        throw_error(ErrorKind::Dimension, "textcnn unflatten: wrong parameter count");
    TextCnnParams p;
    p.config = config;
    p.embedding = flat[0];
    for (std::size_t k = 0; k < config.kernels; ++k) {
        p.kernels.push_back(flat[1 + 2 * k]);
        p.kernel_biases.push_back(flat[2 + 2 * k]);
    }
    p.fc_weight = flat[flat.size() - 2];
    p.fc_bias = flat[flat.size() - 1];
    return p;
}

// ---------------------------------------------------------------------------
// Forward
// ---------------------------------------------------------------------------

std::vector<std::size_t> encode(const std::string& clean_text, const Vocabulary& vocab, std::size_t max_len) {
    std::vector<std::size_t> out(max_len, Vocabulary::kPadding);
    std::size_t i = 0;
    for (const std::string& tok : ingest::tokenize(clean_text)) {
        if (i >= max_len) break;
        out[i++] = vocab.index_of(tok);
    }
    return out;
}

nncore::NumArray embed_grid(const nncore::NumArray& embedding, const std::vector<std::size_t>& indices) {
    nncore::NumArray grid = nncore::NumArray::zeros({indices.size(), embedding.shape[1]});
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] >= embedding.shape[0]) throw_error(ErrorKind::Domain, "embed_grid: index out of vocabulary");
        for (std::size_t j = 0; j < embedding.shape[1]; ++j) grid.at(i, j) = embedding.at(indices[i], j);
    }
    return grid;
}

nncore::GradTape::Ref textcnn_probs_from_grid(nncore::GradTape& tape, nncore::GradTape::Ref grid,
                                              const std::vector<nncore::GradTape::Ref>& rest,
                                              const TextCnnConfig& config) {
    config.validate();
    if (rest.size() != 2 + 2 * config.kernels)
        throw_error(ErrorKind::Dimension, "textcnn tape: wrong parameter count");
    std::vector<nncore::GradTape::Ref> pooled;
    pooled.reserve(config.kernels);
    for (std::size_t k = 0; k < config.kernels; ++k) {
        auto featmap = tape.conv2d(grid, rest[2 * k], rest[2 * k + 1]);
        pooled.push_back(tape.global_max_pool(featmap));
    }
    auto h = tape.transpose(tape.stack_rows(pooled));  // [1 x F]
    auto logits = tape.add_rowvec(tape.matmul(h, rest[rest.size() - 2]), rest[rest.size() - 1]);
    return tape.softmax_rows(logits);  // [1 x 3]
}

nncore::GradTape::Ref textcnn_probs_on_tape(nncore::GradTape& tape, const std::vector<nncore::GradTape::Ref>& flat,
                                            const TextCnnConfig& config, const std::vector<std::size_t>& indices) {
    if (flat.size() != 3 + 2 * config.kernels)
        throw_error(ErrorKind::Dimension, "textcnn tape: wrong parameter count");
    auto grid = tape.gather_rows(flat[0], indices);  // [max_len x E]
    return textcnn_probs_from_grid(tape, grid, {flat.begin() + 1, flat.end()}, config);
}

SentimentOutput textcnn_forward(const std::vector<std::size_t>& indices, const TextCnnParams& params) {
    nncore::GradTape tape;
    auto grid = tape.constant(embed_grid(params.embedding, indices));
    std::vector<nncore::GradTape::Ref> rest;
    for (std::size_t k = 0; k < params.kernels.size(); ++k) {
        rest.push_back(tape.constant(params.kernels[k]));
        rest.push_back(tape.constant(params.kernel_biases[k]));
    }
    rest.push_back(tape.constant(params.fc_weight));
    rest.push_back(tape.constant(params.fc_bias));
    auto probs = textcnn_probs_from_grid(tape, grid, rest, params.config);

    SentimentOutput out;
    for (std::size_t c = 0; c < kClasses; ++c) out.probs[c] = tape.value(probs)[c];
    out.y_pos = out.probs[0];
    out.y_neg = out.probs[2];
    out.delta = out.y_pos - out.y_neg;
    out.tendency = sentiment_tendency(out.probs);
    return out;
}

ingest::Sentiment sentiment_tendency(const std::array<double, kClasses>& probs, double epsilon) {
    const double delta = probs[0] - probs[2];
    if (delta > epsilon) return ingest::Sentiment::Positive;
    if (delta < -epsilon) return ingest::Sentiment::Negative;
    return ingest::Sentiment::Neutral;
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

namespace {

struct Sample {
    std::vector<std::size_t> indices;
    std::size_t label;
};

std::vector<Sample> encode_labeled(const std::vector<ingest::TweetRecord>& records, const Vocabulary& vocab,
                                   std::size_t max_len) {
    std::vector<Sample> out;
    for (const ingest::TweetRecord& r : records) {
        if (!r.sentiment_label.has_value()) continue;
        out.push_back({encode(r.clean_text, vocab, max_len), class_index(*r.sentiment_label)});
    }
    return out;
}

double evaluate_loss(const std::vector<Sample>& samples, const TextCnnParams& params, double* accuracy) {
    if (samples.empty()) {
        if (accuracy) *accuracy = 0.0;
        return 0.0;
    }
    double loss = 0.0;
    std::size_t correct = 0;
    for (const Sample& s : samples) {
        SentimentOutput out = textcnn_forward(s.indices, params);
        loss += -std::log(std::max(out.probs[s.label], nncore::kLogClamp));
        std::size_t argmax = 0;
        for (std::size_t c = 1; c < kClasses; ++c)
            if (out.probs[c] > out.probs[argmax]) argmax = c;
        if (argmax == s.label) ++correct;
    }
    if (accuracy) *accuracy = static_cast<double>(correct) / static_cast<double>(samples.size());
    return loss / static_cast<double>(samples.size());
}

}  // namespace

TextCnnModel train_textcnn(const std::vector<ingest::TweetRecord>& train,
                           const std::vector<ingest::TweetRecord>& validation, const TextCnnConfig& config,
                           const TrainHyper& hyper, std::uint64_t seed) {
    config.validate();

    std::size_t class_counts[kClasses] = {0, 0, 0};
    std::vector<std::string> train_texts;
    for (const ingest::TweetRecord& r : train) {
        if (!r.sentiment_label.has_value()) continue;
        ++class_counts[class_index(*r.sentiment_label)];
        train_texts.push_back(r.clean_text);
    }
    const char* class_names[kClasses] = {"positive", "neutral", "negative"};
    for (std::size_t c = 0; c < kClasses; ++c)
        if (class_counts[c] == 0)
            throw_error(ErrorKind::Training,
                        std::string("train_textcnn: class '") + class_names[c] + "' missing from train split");

    TextCnnModel model;
    model.vocab = Vocabulary::build(train_texts, config.min_frequency);

    Rng rng = Rng(seed).stream("textcnn");
    model.params = TextCnnParams::init(config, model.vocab.size(), rng);

    std::vector<Sample> train_samples = encode_labeled(train, model.vocab, config.max_len);
    std::vector<Sample> val_samples = encode_labeled(validation, model.vocab, config.max_len);

    nncore::ParamStore store;
    {
        std::vector<nncore::NumArray> flat = model.params.flatten();
        for (std::size_t i = 0; i < flat.size(); ++i) store.add("p" + std::to_string(i), flat[i]);
    }
    nncore::OptimizerState opt = nncore::OptimizerState::for_params(store.params(), hyper.learning_rate);

    std::vector<std::size_t> order(train_samples.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    double best_val = std::numeric_limits<double>::infinity();
    std::vector<nncore::NumArray> best_params = store.params();
    std::size_t best_epoch = 0;
    std::size_t since_best = 0;

    for (std::size_t epoch = 0; epoch < hyper.epochs; ++epoch) {
        rng.shuffle(order);
        double epoch_loss = 0.0;
        std::size_t batch_count = 0;
        store.zero_grads();
        for (std::size_t i = 0; i < order.size(); ++i) {
            const Sample& s = train_samples[order[i]];
            nncore::GradTape tape;
            // the embedding enters as gathered rows so the tape never copies V x E
            auto grid = tape.input(embed_grid(store.param(0), s.indices));
            std::vector<nncore::GradTape::Ref> rest;
            for (std::size_t p = 1; p < store.size(); ++p) rest.push_back(tape.input(store.param(p)));
            auto probs = textcnn_probs_from_grid(tape, grid, rest, config);
            auto loss = tape.cross_entropy(probs, s.label);
            epoch_loss += tape.value(loss)[0];
            tape.backward(loss);
            const nncore::NumArray& grid_grad = tape.grad(grid);
            nncore::NumArray& emb_grad = store.grad(0);
            for (std::size_t row = 0; row < s.indices.size(); ++row)
                for (std::size_t j = 0; j < emb_grad.shape[1]; ++j)
                    emb_grad.at(s.indices[row], j) += grid_grad.at(row, j);
            for (std::size_t p = 1; p < store.size(); ++p) store.accumulate_grad(p, tape.grad(rest[p - 1]));
            ++batch_count;
            if (batch_count == hyper.batch_size || i + 1 == order.size()) {
                for (nncore::NumArray& gr : store.grads())
                    for (double& x : gr.data) x /= static_cast<double>(batch_count);
                nncore::adam_step(store.params(), store.grads(), opt);
                store.zero_grads();
                batch_count = 0;
            }
        }

        TextCnnParams current = TextCnnParams::unflatten(config, store.params());
        EpochStats stats;
        stats.train_loss = train_samples.empty() ? 0.0 : epoch_loss / static_cast<double>(train_samples.size());
        stats.val_loss = evaluate_loss(val_samples, current, &stats.val_accuracy);
        model.history.push_back(stats);

        const double watched = val_samples.empty() ? stats.train_loss : stats.val_loss;
        if (watched < best_val - 1e-12) {
            best_val = watched;
            best_params = store.params();
            best_epoch = epoch;
            since_best = 0;
        } else if (++since_best >= hyper.patience) {
            log_info("textcnn: early stop at epoch " + std::to_string(epoch) + " (best " +
                     std::to_string(best_epoch) + ")");
            break;
        }
    }

    model.params = TextCnnParams::unflatten(config, best_params);
    return model;
}

std::vector<std::array<double, 3>> batch_probs(const std::vector<ingest::TweetRecord>& records,
                                               const TextCnnModel& model) {
    std::vector<std::array<double, 3>> out;
    out.reserve(records.size());
    for (const ingest::TweetRecord& r : records) {
        SentimentOutput s = textcnn_forward(encode(r.clean_text, model.vocab, model.params.config.max_len),
                                            model.params);
        out.push_back(s.probs);
    }
    return out;
}

}  // namespace propnet::sentiment
