#ifndef PROPNET_SENTIMENT_SENTIMENT_HPP
#define PROPNET_SENTIMENT_SENTIMENT_HPP

#include <array>
#include <map>
#include <string>
#include <vector>

#include "propnet/common.hpp"
#include "propnet/ingest/ingest.hpp"
#include "propnet/nncore/optimizer.hpp"
#include "propnet/nncore/tape.hpp"

namespace propnet::sentiment {

// Class order everywhere: 0 = positive, 1 = neutral, 2 = negative.
constexpr std::size_t kClasses = 3;
std::size_t class_index(ingest::Sentiment s);

// Token -> dense index. 0 is reserved for padding, 1 for unknown tokens.
class Vocabulary {
  public:
    static Vocabulary build(const std::vector<std::string>& clean_texts, std::size_t min_frequency = 2);

    std::size_t index_of(const std::string& token) const {
        auto it = tokens_.find(token);
        return it == tokens_.end() ? kUnknown : it->second;
    }
    std::size_t size() const { return 2 + tokens_.size(); }  // incl. pad + unk rows

    std::string to_json() const;
    static Vocabulary from_json(const std::string& json_text);

    static constexpr std::size_t kPadding = 0;
    static constexpr std::size_t kUnknown = 1;

  private:
    std::map<std::string, std::size_t> tokens_;
};

struct TextCnnConfig {
    std::size_t embed_dim = 16;   // E; must be >= 3 for the 3x3 kernels
    std::size_t kernels = 8;      // F
    std::size_t max_len = 64;     // sequence length after padding/truncation
    std::size_t min_frequency = 2;

    void validate() const;
};

struct TextCnnParams {
    TextCnnConfig config;
    nncore::NumArray embedding;                    // [V x E]
    std::vector<nncore::NumArray> kernels;         // F entries of [3 x 3]
    std::vector<nncore::NumArray> kernel_biases;   // F entries of [1]
    nncore::NumArray fc_weight;                    // [F x 3]
    nncore::NumArray fc_bias;                      // [3]

    static TextCnnParams init(const TextCnnConfig& config, std::size_t vocab_size, Rng& rng);

    // Canonical flat order: embedding, (kernel, bias)*, fc_weight, fc_bias.
    std::vector<nncore::NumArray> flatten() const;
    static TextCnnParams unflatten(const TextCnnConfig& config, const std::vector<nncore::NumArray>& flat);
};

struct SentimentOutput {
    std::array<double, kClasses> probs = {0, 0, 0};  // (positive, neutral, negative)
    double y_pos = 0.0;
    double y_neg = 0.0;
    double delta = 0.0;
    ingest::Sentiment tendency = ingest::Sentiment::Neutral;
};

// tokens -> indices, unknown -> 1, padded/truncated to max_len
std::vector<std::size_t> encode(const std::string& clean_text, const Vocabulary& vocab, std::size_t max_len = 64);

// Tape builder shared by training, inference and gradient checking. `flat`
// must follow TextCnnParams::flatten() order; returns the [1 x 3] probability ref.
nncore::GradTape::Ref textcnn_probs_on_tape(nncore::GradTape& tape, const std::vector<nncore::GradTape::Ref>& flat,
                                            const TextCnnConfig& config, const std::vector<std::size_t>& indices);

// Variant taking an already-embedded [max_len x E] grid ref; `rest` holds the
// non-embedding parameters in flatten() order. The trainer uses this so a
// per-sample tape never copies the whole embedding matrix.
nncore::GradTape::Ref textcnn_probs_from_grid(nncore::GradTape& tape, nncore::GradTape::Ref grid,
                                              const std::vector<nncore::GradTape::Ref>& rest,
                                              const TextCnnConfig& config);

nncore::NumArray embed_grid(const nncore::NumArray& embedding, const std::vector<std::size_t>& indices);

SentimentOutput textcnn_forward(const std::vector<std::size_t>& indices, const TextCnnParams& params);

// Positive if delta > eps, Negative if delta < -eps, else Neutral.
ingest::Sentiment sentiment_tendency(const std::array<double, kClasses>& probs, double epsilon = 1e-6);

struct TrainHyper {
    double learning_rate = 1e-3;
    std::size_t epochs = 30;
    std::size_t batch_size = 32;
    std::size_t patience = 5;
};

struct EpochStats {
    double train_loss = 0.0;
    double val_loss = 0.0;
    double val_accuracy = 0.0;
};

struct TextCnnModel {
    Vocabulary vocab;
    TextCnnParams params;
    std::vector<EpochStats> history;
};

// Trains on sentiment labels with Adam + early stopping on validation loss.
// Deterministic under seed; requires every class present in the train split.
TextCnnModel train_textcnn(const std::vector<ingest::TweetRecord>& train,
                           const std::vector<ingest::TweetRecord>& validation, const TextCnnConfig& config,
                           const TrainHyper& hyper, std::uint64_t seed);

// Per-record probability triples for downstream feature assembly.
std::vector<std::array<double, 3>> batch_probs(const std::vector<ingest::TweetRecord>& records,
                                               const TextCnnModel& model);

}  // namespace propnet::sentiment

#endif  // PROPNET_SENTIMENT_SENTIMENT_HPP
