#include "propnet/features/features.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace propnet::features {

namespace {

PropagationFeatures sum_counts(const ingest::TopicSeries& series, std::uint64_t ingest::Bucket::* field) {
    PropagationFeatures out;
    out.per_bucket.reserve(series.buckets.size());
    for (const ingest::Bucket& b : series.buckets) {
        out.per_bucket.push_back(b.*field);
        out.total += b.*field;
    }
    return out;
}

}  // namespace

PropagationFeatures topic_resonance(const ingest::TopicSeries& series) {
    return sum_counts(series, &ingest::Bucket::sum_likes);
}

PropagationFeatures direct_transmission(const ingest::TopicSeries& series) {
    return sum_counts(series, &ingest::Bucket::sum_retweets);
}

PropagationFeatures topic_exposure(const ingest::TopicSeries& series) {
    return sum_counts(series, &ingest::Bucket::sum_comments);
}

std::vector<std::array<double, 3>> raw_propagation_deltas(const ingest::TopicSeries& series) {
    std::vector<std::array<double, 3>> out;
    out.reserve(series.buckets.size());
    for (const ingest::Bucket& b : series.buckets)
        out.push_back({static_cast<double>(b.sum_likes), static_cast<double>(b.sum_retweets),
                       static_cast<double>(b.sum_comments)});
    return out;
}

StandardizationStats fit_standardization(const std::vector<std::array<double, 3>>& train_deltas) {
    StandardizationStats stats;
    if (train_deltas.empty()) return stats;
    const double n = static_cast<double>(train_deltas.size());
    for (int k = 0; k < 3; ++k) {
        double sum = 0.0;
        for (const auto& d : train_deltas) sum += d[k];
        stats.mean[k] = sum / n;
        double var = 0.0;
        for (const auto& d : train_deltas) var += (d[k] - stats.mean[k]) * (d[k] - stats.mean[k]);
        stats.sd[k] = std::max(std::sqrt(var / n), 1e-8);
    }
    return stats;
}

FeatureBundle build_feature_bundle(const ingest::TopicSeries& series,
                                   const std::vector<ingest::TweetRecord>& records,
                                   const influence::InfluenceTable& influence_table,
                                   const std::vector<std::array<double, 3>>& sentiments,
                                   const StandardizationStats& stats) {
    if (sentiments.size() != records.size())
        throw_error(ErrorKind::Dimension, "build_feature_bundle: one sentiment triple per record required");

    FeatureBundle bundle;
    bundle.topic = series.topic;
    const double median_influence = influence_table.median_norm();

    for (const ingest::Bucket& bucket : series.buckets) {
        BucketFeatures f;
        f.tweet_count = bucket.member_rows.size();
        f.has_tweets = !bucket.member_rows.empty();

        if (f.has_tweets) {
            double influence_sum = 0.0;
            std::array<double, 3> sent_sum = {0, 0, 0};
            std::size_t propagated = 0, labeled = 0;
            for (std::size_t row : bucket.member_rows) {
                if (row >= records.size())
                    throw_error(ErrorKind::Dimension, "build_feature_bundle: bucket row out of range");
                const ingest::TweetRecord& r = records[row];
                auto it = influence_table.scores.find(r.user_id);
                if (it == influence_table.scores.end()) {
                    influence_sum += median_influence;
                    ++bundle.missing_influence_authors;
                } else {
                    influence_sum += it->second.pr_uir_norm;
                }
                for (int k = 0; k < 3; ++k) sent_sum[k] += sentiments[row][k];
                if (r.propagation_label.has_value()) {
                    ++labeled;
                    if (*r.propagation_label == ingest::Propagation::Propagated) ++propagated;
                }
            }
            const double n = static_cast<double>(bucket.member_rows.size());
            f.influence = influence_sum / n;
            for (int k = 0; k < 3; ++k) f.sentiment[k] = sent_sum[k] / n;
            // majority label; ties go to propagated
            if (labeled > 0) f.label = (2 * propagated >= labeled) ? 1 : 0;
        }

        const double raw[3] = {static_cast<double>(bucket.sum_likes), static_cast<double>(bucket.sum_retweets),
                               static_cast<double>(bucket.sum_comments)};
        for (int k = 0; k < 3; ++k) f.propagation[k] = (raw[k] - stats.mean[k]) / stats.sd[k];
        bundle.buckets.push_back(f);
    }
    return bundle;
}

std::string feature_bundle_csv(const FeatureBundle& bundle, const ingest::TopicSeries& series) {
    if (bundle.buckets.size() != series.buckets.size())
        throw_error(ErrorKind::Dimension, "feature_bundle_csv: bundle and series disagree");
    std::ostringstream out;
    out << "bucket_start,influence,sent_pos,sent_neu,sent_neg,d_ap,d_tp,d_ct\n";
    char buf[256];
    for (std::size_t i = 0; i < bundle.buckets.size(); ++i) {
        const BucketFeatures& f = bundle.buckets[i];
        std::snprintf(buf, sizeof buf, "%s,%.9f,%.9f,%.9f,%.9f,%.9f,%.9f,%.9f",
                      ingest::format_iso8601(series.buckets[i].start).c_str(), f.influence, f.sentiment[0],
                      f.sentiment[1], f.sentiment[2], f.propagation[0], f.propagation[1], f.propagation[2]);
        out << buf << '\n';
    }
    return out.str();
}

}  // namespace propnet::features
