#include "propnet/fusion/fusion.hpp"

#include <algorithm>
#include <cmath>

#include "propnet/nncore/ops.hpp"

namespace propnet::fusion {

void FusionConfig::validate() const {
    if (d_model == 0 || heads == 0 || d_ff == 0 || lstm_hidden == 0 || seq_cap < 2)
        throw_error(ErrorKind::Config, "fusion: dimensions must be positive (seq_cap >= 2)");
    if (d_model % heads != 0)
        throw_error(ErrorKind::Config, "fusion: d_model " + std::to_string(d_model) + " not divisible by heads " +
                                           std::to_string(heads));
}

FusionParams FusionParams::init(const FusionConfig& config, Rng& rng) {
    config.validate();
    const std::size_t dk = config.d_k();
    FusionParams p;
    p.config = config;
    p.w_modality = nncore::random_uniform({features::BucketFeatures::kDim, config.d_model}, -0.1, 0.1, rng);
    p.b_modality = nncore::random_uniform({config.d_model}, -0.1, 0.1, rng);
    p.w_temporal = nncore::random_uniform({2 * config.lstm_hidden, config.d_model}, -0.1, 0.1, rng);
    p.b_temporal = nncore::random_uniform({config.d_model}, -0.1, 0.1, rng);
    for (std::size_t h = 0; h < config.heads; ++h) {
        p.w_query.push_back(nncore::random_uniform({config.d_model, dk}, -0.1, 0.1, rng));
        p.w_key.push_back(nncore::random_uniform({config.d_model, dk}, -0.1, 0.1, rng));
        p.w_value.push_back(nncore::random_uniform({config.d_model, dk}, -0.1, 0.1, rng));
    }
    p.w_mix = nncore::random_uniform({config.heads * dk, config.d_model}, -0.1, 0.1, rng);
    p.w_hidden = nncore::random_uniform({config.d_model, config.d_ff}, -0.1, 0.1, rng);
    p.b_hidden = nncore::random_uniform({config.d_ff}, -0.1, 0.1, rng);
    p.w_out = nncore::random_uniform({config.d_ff, 2}, -0.1, 0.1, rng);
    p.b_out = nncore::random_uniform({2}, -0.1, 0.1, rng);
    return p;
}

std::vector<nncore::NumArray> FusionParams::flatten() const {
    std::vector<nncore::NumArray> flat = {w_modality, b_modality, w_temporal, b_temporal};
    for (std::size_t h = 0; h < w_query.size(); ++h) {
        flat.push_back(w_query[h]);
        flat.push_back(w_key[h]);
        flat.push_back(w_value[h]);
    }
    flat.push_back(w_mix);
    flat.push_back(w_hidden);
    flat.push_back(b_hidden);
    flat.push_back(w_out);
    flat.push_back(b_out);
    return flat;
}

FusionParams FusionParams::unflatten(const FusionConfig& config, const std::vector<nncore::NumArray>& flat) {
    FusionParams p;
    p.config = config;
    if (flat.size() != p.flat_count())
        throw_error(ErrorKind::Dimension, "fusion unflatten: expected " + std::to_string(p.flat_count()) +
                                              " arrays, got " + std::to_string(flat.size()));
    std::size_t i = 0;
    p.w_modality = flat[i++];
    p.b_modality = flat[i++];
    p.w_temporal = flat[i++];
    p.b_temporal = flat[i++];
    for (std::size_t h = 0; h < config.heads; ++h) {
        p.w_query.push_back(flat[i++]);
        p.w_key.push_back(flat[i++]);
        p.w_value.push_back(flat[i++]);
    }
    p.w_mix = flat[i++];
    p.w_hidden = flat[i++];
    p.b_hidden = flat[i++];
    p.w_out = flat[i++];
    p.b_out = flat[i++];
    return p;
}

std::vector<nncore::NumArray> MptParams::flatten() const {
    std::vector<nncore::NumArray> flat = lstm.flatten();
    for (nncore::NumArray& a : fusion.flatten()) flat.push_back(std::move(a));
    return flat;
}

MptParams MptParams::unflatten(const FusionConfig& config, const std::vector<nncore::NumArray>& flat) {
    MptParams p;
    std::vector<nncore::NumArray> lstm_flat(flat.begin(), flat.begin() + temporal::BiLstmParams::kFlatCount);
    p.lstm = temporal::BiLstmParams::unflatten(lstm_flat);
    std::vector<nncore::NumArray> fusion_flat(flat.begin() + temporal::BiLstmParams::kFlatCount, flat.end());
    p.fusion = FusionParams::unflatten(config, fusion_flat);
    return p;
}

// ---------------------------------------------------------------------------
// Attention pieces
// ---------------------------------------------------------------------------

nncore::NumArray positional_encoding(std::size_t length, std::size_t d_model) {
    nncore::NumArray pe = nncore::NumArray::zeros({length, d_model});
    for (std::size_t pos = 0; pos < length; ++pos) {
        for (std::size_t i = 0; 2 * i < d_model; ++i) {
            const double angle =
                static_cast<double>(pos) / std::pow(10000.0, (2.0 * static_cast<double>(i)) / static_cast<double>(d_model));
            pe.at(pos, 2 * i) = std::sin(angle);
            if (2 * i + 1 < d_model) pe.at(pos, 2 * i + 1) = std::cos(angle);
        }
    }
    return pe;
}

std::vector<nncore::NumArray> positional_encode(const std::vector<nncore::NumArray>& sequence) {
    if (sequence.empty()) throw_error(ErrorKind::Domain, "positional_encode: empty sequence");
    const std::size_t d = sequence[0].cols();
    nncore::NumArray pe = positional_encoding(sequence.size(), d);
    std::vector<nncore::NumArray> out = sequence;
    for (std::size_t t = 0; t < out.size(); ++t) {
        if (out[t].cols() != d) throw_error(ErrorKind::Dimension, "positional_encode: ragged sequence");
        for (std::size_t j = 0; j < d; ++j) out[t][j] += pe.at(t, j);
    }
    return out;
}

nncore::NumArray causal_mask(std::size_t length) {
    nncore::NumArray mask = nncore::NumArray::zeros({length, length});
    for (std::size_t r = 0; r < length; ++r)
        for (std::size_t c = r + 1; c < length; ++c) mask.at(r, c) = -1e9;
    return mask;
}

nncore::GradTape::Ref attention_on_tape(nncore::GradTape& tape, nncore::GradTape::Ref q, nncore::GradTape::Ref k,
                                        nncore::GradTape::Ref v, nncore::GradTape::Ref mask, std::size_t d_k) {
    if (d_k == 0) throw_error(ErrorKind::Dimension, "attention: d_k must be positive");
    auto scores = tape.scale(tape.matmul(q, tape.transpose(k)), 1.0 / std::sqrt(static_cast<double>(d_k)));
    auto weights = tape.softmax_rows(tape.add(scores, mask));
    return tape.matmul(weights, v);
}

nncore::NumArray attention(const nncore::NumArray& q, const nncore::NumArray& k, const nncore::NumArray& v,
                           const nncore::NumArray& mask) {
    if (!q.is_matrix() || !k.is_matrix() || !v.is_matrix())
        throw_error(ErrorKind::Dimension, "attention: Q, K, V must be matrices");
    if (q.shape[1] != k.shape[1] || k.shape[0] != v.shape[0])
        throw_error(ErrorKind::Dimension, "attention: incompatible shapes " + q.shape_str() + ", " + k.shape_str() +
                                              ", " + v.shape_str());
    if (mask.shape[0] != q.shape[0] || mask.shape[1] != k.shape[0])
        throw_error(ErrorKind::Dimension, "attention: mask shape " + mask.shape_str() + " does not cover scores");
    nncore::GradTape tape;
    auto out = attention_on_tape(tape, tape.constant(q), tape.constant(k), tape.constant(v), tape.constant(mask),
                                 q.shape[1]);
    return tape.value(out);
}

namespace {

struct FusionRefs {
    std::size_t base = 0;  // offset of fusion params inside the flat vector
    const std::vector<nncore::GradTape::Ref>* flat = nullptr;
    const FusionConfig* config = nullptr;

    nncore::GradTape::Ref w_modality() const { return (*flat)[base + 0]; }
    nncore::GradTape::Ref b_modality() const { return (*flat)[base + 1]; }
    nncore::GradTape::Ref w_temporal() const { return (*flat)[base + 2]; }
    nncore::GradTape::Ref b_temporal() const { return (*flat)[base + 3]; }
    nncore::GradTape::Ref w_query(std::size_t h) const { return (*flat)[base + 4 + 3 * h]; }
    nncore::GradTape::Ref w_key(std::size_t h) const { return (*flat)[base + 5 + 3 * h]; }
    nncore::GradTape::Ref w_value(std::size_t h) const { return (*flat)[base + 6 + 3 * h]; }
    nncore::GradTape::Ref w_mix() const { return (*flat)[base + 4 + 3 * config->heads]; }
    nncore::GradTape::Ref w_hidden() const { return (*flat)[base + 5 + 3 * config->heads]; }
    nncore::GradTape::Ref b_hidden() const { return (*flat)[base + 6 + 3 * config->heads]; }
    nncore::GradTape::Ref w_out() const { return (*flat)[base + 7 + 3 * config->heads]; }
    nncore::GradTape::Ref b_out() const { return (*flat)[base + 8 + 3 * config->heads]; }
};

// T' queries, H' keys/values, causal mask, concat, mix, residual from T'.
nncore::GradTape::Ref fuse_on_tape(nncore::GradTape& tape, nncore::GradTape::Ref t_encoded,
                                   nncore::GradTape::Ref h_projected, const FusionRefs& refs) {
    const FusionConfig& config = *refs.config;
    const std::size_t length = tape.value(t_encoded).shape[0];
    auto mask = tape.constant(causal_mask(length));
    nncore::GradTape::Ref heads_concat = 0;
    for (std::size_t h = 0; h < config.heads; ++h) {
        auto q = tape.matmul(t_encoded, refs.w_query(h));
        auto k = tape.matmul(h_projected, refs.w_key(h));
        auto v = tape.matmul(h_projected, refs.w_value(h));
        auto head = attention_on_tape(tape, q, k, v, mask, config.d_k());
        heads_concat = h == 0 ? head : tape.concat_cols(heads_concat, head);
    }
    auto mixed = tape.matmul(heads_concat, refs.w_mix());
    return tape.add(mixed, t_encoded);
}

nncore::GradTape::Ref classify_on_tape(nncore::GradTape& tape, nncore::GradTape::Ref fused, const FusionRefs& refs) {
    auto hidden = tape.relu(tape.add_rowvec(tape.matmul(fused, refs.w_hidden()), refs.b_hidden()));
    auto logits = tape.add_rowvec(tape.matmul(hidden, refs.w_out()), refs.b_out());
    return tape.softmax_rows(logits);
}

}  // namespace

nncore::NumArray multi_head_fuse(const nncore::NumArray& t_encoded, const nncore::NumArray& h_projected,
                                 const FusionParams& params) {
    params.config.validate();
    if (!t_encoded.is_matrix() || t_encoded.shape[0] == 0)
        throw_error(ErrorKind::Dimension, "multi_head_fuse: T' must be a nonempty matrix");
    nncore::GradTape tape;
    std::vector<nncore::GradTape::Ref> flat;
    for (const nncore::NumArray& a : params.flatten()) flat.push_back(tape.constant(a));
    FusionRefs refs{0, &flat, &params.config};
    auto out = fuse_on_tape(tape, tape.constant(t_encoded), tape.constant(h_projected), refs);
    return tape.value(out);
}

std::vector<Prediction> classify(const nncore::NumArray& fused, const FusionParams& params) {
    nncore::GradTape tape;
    std::vector<nncore::GradTape::Ref> flat;
    for (const nncore::NumArray& a : params.flatten()) flat.push_back(tape.constant(a));
    FusionRefs refs{0, &flat, &params.config};
    auto probs_ref = classify_on_tape(tape, tape.constant(fused), refs);
    const nncore::NumArray& probs = tape.value(probs_ref);
    std::vector<Prediction> out;
    for (std::size_t r = 0; r < probs.shape[0]; ++r) out.push_back({probs.at(r, 0), probs.at(r, 1)});
    return out;
}

// ---------------------------------------------------------------------------
// End-to-end model
// ---------------------------------------------------------------------------

std::vector<SequenceExample> to_sequences(const std::vector<features::FeatureBundle>& bundles, std::size_t cap,
                                          std::size_t* dropped_topics) {
    if (dropped_topics) *dropped_topics = 0;
    std::vector<SequenceExample> out;
    for (const features::FeatureBundle& bundle : bundles) {
        if (bundle.buckets.size() < 2) {
            if (dropped_topics) ++(*dropped_topics);
            log_warn("fusion: topic '" + bundle.topic + "' has fewer than 2 buckets, excluded");
            continue;
        }
        for (std::size_t start = 0; start < bundle.buckets.size(); start += cap) {
            SequenceExample seq;
            seq.topic = bundle.topic;
            const std::size_t stop = std::min(bundle.buckets.size(), start + cap);
            for (std::size_t i = start; i < stop; ++i) {
                seq.features.push_back(bundle.buckets[i].vector());
                seq.labels.push_back(bundle.buckets[i].label);
            }
            out.push_back(std::move(seq));  // short tail segments still predict their buckets
        }
    }
    return out;
}

nncore::GradTape::Ref mpt_probs_on_tape(nncore::GradTape& tape, const std::vector<nncore::GradTape::Ref>& flat,
                                        const FusionConfig& config, const SequenceExample& sequence,
                                        const FeatureMask& mask) {
    config.validate();
    const std::size_t length = sequence.features.size();
    if (length == 0) throw_error(ErrorKind::Domain, "mpt forward: empty sequence");
    const std::size_t expected = temporal::BiLstmParams::kFlatCount + 9 + 3 * config.heads;
    if (flat.size() != expected)
        throw_error(ErrorKind::Dimension, "mpt forward: expected " + std::to_string(expected) + " parameter refs");

    // bucket features with masked families zeroed (dimension preserving)
    std::vector<nncore::GradTape::Ref> x_rows;
    nncore::NumArray x_matrix = nncore::NumArray::zeros({length, features::BucketFeatures::kDim});
    for (std::size_t t = 0; t < length; ++t) {
        std::array<double, features::BucketFeatures::kDim> v = sequence.features[t];
        if (!mask.use_influence) v[0] = 0.0;
        if (!mask.use_sentiment) v[1] = v[2] = v[3] = 0.0;
        if (!mask.use_propagation) v[4] = v[5] = v[6] = 0.0;
        nncore::NumArray row({1, features::BucketFeatures::kDim}, std::vector<double>(v.begin(), v.end()));
        for (std::size_t j = 0; j < features::BucketFeatures::kDim; ++j) x_matrix.at(t, j) = v[j];
        x_rows.push_back(tape.constant(std::move(row)));
    }

    // temporal embedding, causal form: forward chain state + one backward cell
    // step over the current bucket only
    nncore::GradTape::Ref t_base;
    if (mask.use_temporal) {
        std::vector<nncore::GradTape::Ref> h_rows;
        temporal::TapeLstmState fwd{tape.constant(nncore::NumArray::zeros({1, config.lstm_hidden})),
                                    tape.constant(nncore::NumArray::zeros({1, config.lstm_hidden}))};
        const std::size_t bwd_base = temporal::LstmCellParams::kFlatCount;
        for (std::size_t t = 0; t < length; ++t) {
            fwd = temporal::lstm_cell_step_on_tape(tape, x_rows[t], fwd, flat, 0);
            temporal::TapeLstmState bwd{tape.constant(nncore::NumArray::zeros({1, config.lstm_hidden})),
                                        tape.constant(nncore::NumArray::zeros({1, config.lstm_hidden}))};
            bwd = temporal::lstm_cell_step_on_tape(tape, x_rows[t], bwd, flat, bwd_base);
            h_rows.push_back(tape.concat_cols(fwd.h, bwd.h));
        }
        t_base = tape.stack_rows(h_rows);  // [L x 2H]
    } else {
        t_base = tape.constant(nncore::NumArray::zeros({length, 2 * config.lstm_hidden}));
    }

    FusionRefs refs{temporal::BiLstmParams::kFlatCount, &flat, &config};
    auto t_projected = tape.add_rowvec(tape.matmul(t_base, refs.w_temporal()), refs.b_temporal());
    auto t_encoded = tape.add(t_projected, tape.constant(positional_encoding(length, config.d_model)));
    auto h_projected =
        tape.add_rowvec(tape.matmul(tape.constant(std::move(x_matrix)), refs.w_modality()), refs.b_modality());

    auto fused = fuse_on_tape(tape, t_encoded, h_projected, refs);
    return classify_on_tape(tape, fused, refs);
}

TopicPrediction predict(const SequenceExample& sequence, const MptParams& params, const FeatureMask& mask) {
    nncore::GradTape tape;
    std::vector<nncore::GradTape::Ref> flat;
    for (const nncore::NumArray& a : params.flatten()) flat.push_back(tape.constant(a));
    auto probs_ref = mpt_probs_on_tape(tape, flat, params.fusion.config, sequence, mask);
    const nncore::NumArray& probs = tape.value(probs_ref);

    TopicPrediction out;
    out.topic = sequence.topic;
    for (std::size_t r = 0; r < probs.shape[0]; ++r) out.per_bucket.push_back({probs.at(r, 0), probs.at(r, 1)});
    out.topic_propagated = !out.per_bucket.empty() && out.per_bucket.back().propagated();
    return out;
}

std::vector<TopicPrediction> predict_bundle(const features::FeatureBundle& bundle, const MptParams& params,
                                            const FeatureMask& mask) {
    std::vector<TopicPrediction> out;
    for (const SequenceExample& seq : to_sequences({bundle}, params.fusion.config.seq_cap))
        out.push_back(predict(seq, params, mask));
    return out;
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

namespace {

double f1_at_half(const std::vector<std::pair<double, int>>& scored) {
    std::size_t tp = 0, fp = 0, fn = 0;
    for (const auto& [p, label] : scored) {
        const bool predicted = p > 0.5;
        if (predicted && label == 1) ++tp;
        else if (predicted && label == 0) ++fp;
        else if (!predicted && label == 1) ++fn;
    }
    if (tp == 0) return 0.0;
    const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    const double recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
    return 2.0 * precision * recall / (precision + recall);
}

}  // namespace

MptModel train_mptpropnet(const std::vector<features::FeatureBundle>& train_bundles,
                          const std::vector<features::FeatureBundle>& val_bundles, const FusionConfig& config,
                          const FusionTrainHyper& hyper, std::uint64_t seed, const FeatureMask& mask,
                          const MptModel* resume_from) {
    config.validate();
    std::size_t dropped = 0;
    std::vector<SequenceExample> train_seqs = to_sequences(train_bundles, config.seq_cap, &dropped);
    std::vector<SequenceExample> val_seqs = to_sequences(val_bundles, config.seq_cap);

    // keep only sequences with at least one labeled bucket
    std::erase_if(train_seqs, [](const SequenceExample& s) {
        return std::none_of(s.labels.begin(), s.labels.end(), [](int l) { return l >= 0; });
    });
    if (train_seqs.empty()) throw_error(ErrorKind::Training, "train_mptpropnet: no labeled training sequences");

    MptModel model;
    model.config = config;
    Rng rng = Rng(seed).stream("mptpropnet");
    if (resume_from) {
        model.params = resume_from->params;
        model.history = resume_from->history;
        model.trained_epochs = resume_from->trained_epochs;
    } else {
        model.params.lstm = temporal::BiLstmParams::init(features::BucketFeatures::kDim, config.lstm_hidden, rng);
        model.params.fusion = FusionParams::init(config, rng);
    }

    nncore::ParamStore store;
    {
        std::vector<nncore::NumArray> flat = model.params.flatten();
        for (std::size_t i = 0; i < flat.size(); ++i) store.add("p" + std::to_string(i), flat[i]);
    }
    nncore::OptimizerState opt = nncore::OptimizerState::for_params(store.params(), hyper.learning_rate);

    auto val_f1 = [&]() {
        if (val_seqs.empty()) return 0.0;
        MptParams current = MptParams::unflatten(config, store.params());
        std::vector<std::pair<double, int>> scored;
        for (const SequenceExample& seq : val_seqs) {
            TopicPrediction pred = predict(seq, current, mask);
            for (std::size_t t = 0; t < seq.labels.size(); ++t)
                if (seq.labels[t] >= 0) scored.push_back({pred.per_bucket[t].p_propagated, seq.labels[t]});
        }
        return f1_at_half(scored);
    };

    std::vector<std::size_t> order(train_seqs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    double best_f1 = -1.0;
    std::vector<nncore::NumArray> best_params = store.params();
    std::size_t since_best = 0;

    // hyper.epochs is the total budget; a resumed run covers the remainder
    while (model.trained_epochs < hyper.epochs) {
        rng.shuffle(order);
        double epoch_loss = 0.0;
        for (std::size_t idx : order) {
            const SequenceExample& seq = train_seqs[idx];
            nncore::GradTape tape;
            std::vector<nncore::GradTape::Ref> leaves;
            for (const nncore::NumArray& p : store.params()) leaves.push_back(tape.input(p));
            auto probs = mpt_probs_on_tape(tape, leaves, config, seq, mask);

            std::vector<std::size_t> targets(seq.labels.size(), 0);
            std::vector<double> weights(seq.labels.size(), 0.0);
            for (std::size_t t = 0; t < seq.labels.size(); ++t) {
                if (seq.labels[t] >= 0) {
                    targets[t] = static_cast<std::size_t>(seq.labels[t]);
                    weights[t] = 1.0;
                }
            }
            auto loss = tape.mean_cross_entropy_rows(probs, targets, weights);
            epoch_loss += tape.value(loss)[0];
            tape.backward(loss);
            store.zero_grads();
            for (std::size_t p = 0; p < leaves.size(); ++p) store.accumulate_grad(p, tape.grad(leaves[p]));
            nncore::adam_step(store.params(), store.grads(), opt);
        }

        FusionEpochStats stats;
        stats.train_loss = epoch_loss / static_cast<double>(train_seqs.size());
        stats.val_f1 = val_f1();
        model.history.push_back(stats);
        model.trained_epochs += 1;

        const double watched = val_seqs.empty() ? -stats.train_loss : stats.val_f1;
        if (watched > best_f1 + 1e-12) {
            best_f1 = watched;
            best_params = store.params();
            since_best = 0;
        } else if (++since_best >= hyper.patience) {
            log_info("mptpropnet: early stop after epoch " + std::to_string(model.trained_epochs));
            break;
        }
    }

    model.params = MptParams::unflatten(config, best_params);
    return model;
}

}  // namespace propnet::fusion
