#ifndef PROPNET_FUSION_FUSION_HPP
#define PROPNET_FUSION_FUSION_HPP

#include <array>
#include <string>
#include <vector>

#include "propnet/features/features.hpp"
#include "propnet/nncore/tape.hpp"
#include "propnet/temporal/bilstm.hpp"

namespace propnet::fusion {

struct FusionConfig {
    std::size_t d_model = 32;
    std::size_t heads = 4;
    std::size_t d_ff = 64;
    std::size_t lstm_hidden = 16;
    std::size_t seq_cap = 128;  // longer topics are split into segments

    std::size_t d_k() const { return d_model / heads; }
    void validate() const;
};

// Which feature families reach the model; ablation rows zero one of these.
struct FeatureMask {
    bool use_influence = true;
    bool use_sentiment = true;
    bool use_propagation = true;
    bool use_temporal = true;
};

struct FusionParams {
    FusionConfig config;
    nncore::NumArray w_modality;  // [7 x d_model]
    nncore::NumArray b_modality;  // [d_model]
    nncore::NumArray w_temporal;  // [2H x d_model]
    nncore::NumArray b_temporal;  // [d_model]
    std::vector<nncore::NumArray> w_query;  // per head [d_model x d_k]
    std::vector<nncore::NumArray> w_key;    // per head [d_model x d_k]
    std::vector<nncore::NumArray> w_value;  // per head [d_model x d_k]
    nncore::NumArray w_mix;      // [heads*d_k x d_model]; output mixing matrix
    nncore::NumArray w_hidden;   // [d_model x d_ff]
    nncore::NumArray b_hidden;   // [d_ff]
    nncore::NumArray w_out;      // [d_ff x 2]
    nncore::NumArray b_out;      // [2]

    static FusionParams init(const FusionConfig& config, Rng& rng);
    std::vector<nncore::NumArray> flatten() const;
    static FusionParams unflatten(const FusionConfig& config, const std::vector<nncore::NumArray>& flat);
    std::size_t flat_count() const { return 9 + 3 * config.heads; }
};

// Bi-LSTM encoder plus the fusion head; the full trainable model.
struct MptParams {
    temporal::BiLstmParams lstm;
    FusionParams fusion;

    std::vector<nncore::NumArray> flatten() const;  // lstm arrays first
    static MptParams unflatten(const FusionConfig& config, const std::vector<nncore::NumArray>& flat);
};

// Fixed sinusoidal table, base 10000: row p, even col 2i = sin(p / 10000^(2i/d)),
// odd col 2i+1 = cos(p / 10000^(2i/d)).
nncore::NumArray positional_encoding(std::size_t length, std::size_t d_model);

// Adds the encoding to a sequence of row vectors (the spec-level op).
std::vector<nncore::NumArray> positional_encode(const std::vector<nncore::NumArray>& sequence);

// [L x L] additive mask: 0 on and below the diagonal, -1e9 above.
nncore::NumArray causal_mask(std::size_t length);

// softmax(Q K^T / sqrt(d_k) + mask) V with row-wise softmax.
nncore::NumArray attention(const nncore::NumArray& q, const nncore::NumArray& k, const nncore::NumArray& v,
                           const nncore::NumArray& mask);

nncore::GradTape::Ref attention_on_tape(nncore::GradTape& tape, nncore::GradTape::Ref q, nncore::GradTape::Ref k,
                                        nncore::GradTape::Ref v, nncore::GradTape::Ref mask, std::size_t d_k);

// Queries from the positionally-encoded temporal sequence, keys/values from
// the projected modality sequence; causal mask per head, heads concatenated,
// mixed by w_mix, residual from T'.
nncore::NumArray multi_head_fuse(const nncore::NumArray& t_encoded, const nncore::NumArray& h_projected,
                                 const FusionParams& params);

struct Prediction {
    double p_not_propagated = 0.5;
    double p_propagated = 0.5;
    bool propagated() const { return p_propagated > 0.5; }  // boundary 0.5 -> not propagated
};

// Two-layer head per position: softmax(relu(A W3 + b3) W4 + b4).
std::vector<Prediction> classify(const nncore::NumArray& fused, const FusionParams& params);

// ---------------------------------------------------------------------------
// End-to-end model
// ---------------------------------------------------------------------------

// One trainable segment of a topic (<= seq_cap buckets).
struct SequenceExample {
    std::string topic;
    std::vector<std::array<double, features::BucketFeatures::kDim>> features;
    std::vector<int> labels;  // -1 for unlabeled (empty) buckets
};

// Splits bundles into segments, dropping topics with fewer than 2 buckets.
std::vector<SequenceExample> to_sequences(const std::vector<features::FeatureBundle>& bundles, std::size_t cap,
                                          std::size_t* dropped_topics = nullptr);

// Builds per-position probabilities [L x 2] for one sequence. Predictions are
// causal by construction: position t sees the forward-LSTM state over buckets
// <= t, a backward cell step over bucket t alone, and causally-masked
// attention over buckets <= t. Evaluating any prefix reproduces the same
// leading rows, which is what the truncation-equivalence contract requires
// even though the standalone Bi-LSTM op is bidirectional.
nncore::GradTape::Ref mpt_probs_on_tape(nncore::GradTape& tape, const std::vector<nncore::GradTape::Ref>& flat,
                                        const FusionConfig& config, const SequenceExample& sequence,
                                        const FeatureMask& mask);

struct TopicPrediction {
    std::string topic;
    std::vector<Prediction> per_bucket;
    bool topic_propagated = false;  // final bucket, strict > 0.5
};

TopicPrediction predict(const SequenceExample& sequence, const MptParams& params, const FeatureMask& mask = {});
std::vector<TopicPrediction> predict_bundle(const features::FeatureBundle& bundle, const MptParams& params,
                                            const FeatureMask& mask = {});

struct FusionTrainHyper {
    double learning_rate = 1e-3;
    std::size_t epochs = 50;
    std::size_t patience = 5;
};

struct FusionEpochStats {
    double train_loss = 0.0;
    double val_f1 = 0.0;
};

struct MptModel {
    FusionConfig config;
    MptParams params;
    std::vector<FusionEpochStats> history;
    std::size_t trained_epochs = 0;
};

// Joint optimization of the Bi-LSTM and fusion head on per-position cross
// entropy against bucket-majority labels; early stopping on validation F1.
MptModel train_mptpropnet(const std::vector<features::FeatureBundle>& train_bundles,
                          const std::vector<features::FeatureBundle>& val_bundles, const FusionConfig& config,
                          const FusionTrainHyper& hyper, std::uint64_t seed, const FeatureMask& mask = {},
                          const MptModel* resume_from = nullptr);

}  // namespace propnet::fusion

#endif  // PROPNET_FUSION_FUSION_HPP
