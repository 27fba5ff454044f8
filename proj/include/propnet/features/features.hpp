#ifndef PROPNET_FEATURES_FEATURES_HPP
#define PROPNET_FEATURES_FEATURES_HPP

#include <array>
#include <cstdint>
#include <vector>

#include "propnet/influence/influence.hpp"
#include "propnet/ingest/ingest.hpp"

namespace propnet::features {

struct PropagationFeatures {
    std::uint64_t total = 0;
    std::vector<std::uint64_t> per_bucket;
};

// Sum of likes per bucket and over the whole series.
PropagationFeatures topic_resonance(const ingest::TopicSeries& series);
// Same over retweets.
PropagationFeatures direct_transmission(const ingest::TopicSeries& series);
// Same over comments.
PropagationFeatures topic_exposure(const ingest::TopicSeries& series);

// Train-split mean/sd for the three propagation deltas; sd floored at 1e-8.
struct StandardizationStats {
    std::array<double, 3> mean = {0, 0, 0};
    std::array<double, 3> sd = {1, 1, 1};
};

struct BucketFeatures {
    double influence = 0.0;                      // mean normalized PR_UIR of bucket authors
    std::array<double, 3> sentiment = {1.0 / 3, 1.0 / 3, 1.0 / 3};  // (pos, neu, neg), sums to 1
    std::array<double, 3> propagation = {0, 0, 0};                  // standardized (dAP, dTP, dCT)
    bool has_tweets = false;
    int label = -1;            // bucket-majority propagation label; -1 when empty
    std::size_t tweet_count = 0;

    static constexpr std::size_t kDim = 7;
    std::array<double, kDim> vector() const {
        return {influence, sentiment[0], sentiment[1], sentiment[2], propagation[0], propagation[1], propagation[2]};
    }
};

struct FeatureBundle {
    std::string topic;
    std::vector<BucketFeatures> buckets;
    std::size_t missing_influence_authors = 0;  // authors absent from the table, median-filled
};

// Raw (unstandardized) per-bucket deltas; used to fit StandardizationStats on
// the train split before any bundle is assembled.
std::vector<std::array<double, 3>> raw_propagation_deltas(const ingest::TopicSeries& series);

StandardizationStats fit_standardization(const std::vector<std::array<double, 3>>& train_deltas);

// Assembles per-bucket features for one topic series. `sentiments` holds one
// (pos, neu, neg) probability triple per source record row. Standardization
// uses train-split stats only; bucket labels are the member-majority
// propagation labels with ties resolved to propagated.
FeatureBundle build_feature_bundle(const ingest::TopicSeries& series,
                                   const std::vector<ingest::TweetRecord>& records,
                                   const influence::InfluenceTable& influence_table,
                                   const std::vector<std::array<double, 3>>& sentiments,
                                   const StandardizationStats& stats);

std::string feature_bundle_csv(const FeatureBundle& bundle, const ingest::TopicSeries& series);

}  // namespace propnet::features

#endif  // PROPNET_FEATURES_FEATURES_HPP
