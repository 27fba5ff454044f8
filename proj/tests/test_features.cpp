#include <doctest.h>

#include "propnet/features/features.hpp"

using namespace propnet;
using namespace propnet::features;

namespace {

ingest::TweetRecord rec(std::string id, std::string user, std::uint64_t likes, std::uint64_t rts, std::uint64_t cms,
                        std::int64_t at, ingest::Propagation label) {
    ingest::TweetRecord r;
    r.tweet_id = std::move(id);
    r.user_id = std::move(user);
    r.topic = "t";
    r.likes = likes;
    r.retweets = rts;
    r.comments = cms;
    r.created_at = at;
    r.propagation_label = label;
    return r;
}

constexpr std::int64_t kBase = 1659312000;  // 2022-08-01T00:00:00Z

}  // namespace

TEST_CASE("topic resonance, transmission, exposure") {
    CHECK(topic_resonance(ingest::TopicSeries{}).total == 0);

    std::vector<ingest::TweetRecord> records = {
        rec("a", "u1", 3, 1, 2, kBase + 10, ingest::Propagation::Propagated),
        rec("b", "u2", 0, 1, 2, kBase + 3700, ingest::Propagation::Propagated),
        rec("c", "u3", 2, 1, 0, kBase + 7300, ingest::Propagation::NotPropagated),
    };
    ingest::TopicSeries series = ingest::bucket_by_time(records, 3600);
    PropagationFeatures ap = topic_resonance(series);
    CHECK(ap.total == 5);
    REQUIRE(ap.per_bucket.size() == 3);
    CHECK(ap.per_bucket[0] == 3);
    CHECK(ap.per_bucket[1] == 0);
    CHECK(ap.per_bucket[2] == 2);

    CHECK(direct_transmission(series).total == 3);
    PropagationFeatures ct = topic_exposure(series);
    CHECK(ct.total == 4);

    // permuting tweets within a bucket leaves the deltas unchanged
    std::swap(records[0], records[2]);
    ingest::TopicSeries swapped = ingest::bucket_by_time(records, 3600);
    CHECK(topic_resonance(swapped).per_bucket == ap.per_bucket);
}

TEST_CASE("totals equal record-level sums regardless of bucket width") {
    Rng rng(3);
    std::vector<ingest::TweetRecord> records;
    std::uint64_t raw_likes = 0, raw_rts = 0, raw_cms = 0;
    for (int i = 0; i < 50; ++i) {
        auto r = rec(std::to_string(i), "u", rng.uniform_index(20), rng.uniform_index(10), rng.uniform_index(5),
                     kBase + static_cast<std::int64_t>(rng.uniform_index(86400)), ingest::Propagation::Propagated);
        raw_likes += r.likes;
        raw_rts += r.retweets;
        raw_cms += r.comments;
        records.push_back(r);
    }
    for (std::int64_t width : {900, 3600, 7200}) {
        ingest::TopicSeries s = ingest::bucket_by_time(records, width);
        CHECK(topic_resonance(s).total == raw_likes);
        CHECK(direct_transmission(s).total == raw_rts);
        CHECK(topic_exposure(s).total == raw_cms);
    }
}

TEST_CASE("standardization: constant feature maps to zeros") {
    std::vector<std::array<double, 3>> deltas = {{5, 1, 0}, {5, 2, 0}, {5, 3, 0}};
    StandardizationStats stats = fit_standardization(deltas);
    CHECK(stats.mean[0] == doctest::Approx(5.0));
    CHECK(stats.sd[0] == doctest::Approx(1e-8));
    CHECK((5.0 - stats.mean[0]) / stats.sd[0] == doctest::Approx(0.0));
    CHECK(stats.sd[1] > 0.1);
}

TEST_CASE("build_feature_bundle: single-tweet bucket carries that tweet's features") {
    std::vector<ingest::TweetRecord> records = {rec("a", "u1", 4, 2, 1, kBase, ingest::Propagation::Propagated)};
    ingest::TopicSeries series = ingest::bucket_by_time(records, 3600);

    influence::InfluenceTable table;
    table.scores["u1"].pr_uir_norm = 0.75;

    std::vector<std::array<double, 3>> sentiments = {{0.6, 0.3, 0.1}};
    StandardizationStats stats;  // identity standardization
    FeatureBundle bundle = build_feature_bundle(series, records, table, sentiments, stats);
    REQUIRE(bundle.buckets.size() == 1);
    const BucketFeatures& f = bundle.buckets[0];
    CHECK(f.influence == doctest::Approx(0.75));
    CHECK(f.sentiment[0] == doctest::Approx(0.6));
    CHECK(f.propagation[0] == doctest::Approx(4.0));
    CHECK(f.label == 1);
    CHECK(bundle.missing_influence_authors == 0);
}

TEST_CASE("build_feature_bundle: missing author falls back to the median influence") {
    std::vector<ingest::TweetRecord> records = {rec("a", "ghost", 0, 0, 0, kBase, ingest::Propagation::NotPropagated)};
    ingest::TopicSeries series = ingest::bucket_by_time(records, 3600);
    influence::InfluenceTable table;
    table.scores["u1"].pr_uir_norm = 0.2;
    table.scores["u2"].pr_uir_norm = 0.4;
    table.scores["u3"].pr_uir_norm = 0.9;
    std::vector<std::array<double, 3>> sentiments = {{1.0 / 3, 1.0 / 3, 1.0 / 3}};
    FeatureBundle bundle = build_feature_bundle(series, records, table, sentiments, StandardizationStats{});
    CHECK(bundle.missing_influence_authors == 1);
    CHECK(bundle.buckets[0].influence == doctest::Approx(0.4));  // median of the table
    CHECK(bundle.buckets[0].label == 0);
}

TEST_CASE("build_feature_bundle: 3-bucket hand fixture") {
    std::vector<ingest::TweetRecord> records = {
        rec("a", "u1", 2, 1, 0, kBase + 10, ingest::Propagation::Propagated),
        rec("b", "u2", 4, 1, 2, kBase + 20, ingest::Propagation::NotPropagated),
        rec("c", "u1", 6, 0, 0, kBase + 2 * 3600, ingest::Propagation::NotPropagated),
    };
    ingest::TopicSeries series = ingest::bucket_by_time(records, 3600);
    REQUIRE(series.buckets.size() == 3);

    influence::InfluenceTable table;
    table.scores["u1"].pr_uir_norm = 1.0;
    table.scores["u2"].pr_uir_norm = 0.0;
    std::vector<std::array<double, 3>> sentiments = {{1, 0, 0}, {0, 0, 1}, {0, 1, 0}};

    StandardizationStats stats;
    stats.mean = {2.0, 0.0, 0.0};
    stats.sd = {2.0, 1.0, 1.0};

    FeatureBundle bundle = build_feature_bundle(series, records, table, sentiments, stats);
    // bucket 0: two tweets, mean influence 0.5, mean sentiment (0.5, 0, 0.5)
    CHECK(bundle.buckets[0].influence == doctest::Approx(0.5));
    CHECK(bundle.buckets[0].sentiment[0] == doctest::Approx(0.5));
    CHECK(bundle.buckets[0].sentiment[2] == doctest::Approx(0.5));
    CHECK(bundle.buckets[0].propagation[0] == doctest::Approx((6.0 - 2.0) / 2.0));
    // tie between propagated and not -> propagated
    CHECK(bundle.buckets[0].label == 1);
    // bucket 1 is empty: neutral sentiment, influence 0, no label
    CHECK_FALSE(bundle.buckets[1].has_tweets);
    CHECK(bundle.buckets[1].label == -1);
    CHECK(bundle.buckets[1].sentiment[1] == doctest::Approx(1.0 / 3));
    CHECK(bundle.buckets[1].propagation[0] == doctest::Approx((0.0 - 2.0) / 2.0));
    // bucket 2: single not-propagated tweet
    CHECK(bundle.buckets[2].label == 0);
    CHECK(bundle.buckets[2].influence == doctest::Approx(1.0));
}

TEST_CASE("standardization stats come from the train deltas only") {
    std::vector<std::array<double, 3>> train = {{1, 0, 0}, {3, 0, 0}};
    StandardizationStats stats = fit_standardization(train);
    // feeding different "test" deltas through the same stats changes nothing about them
    StandardizationStats again = fit_standardization(train);
    CHECK(stats.mean[0] == again.mean[0]);
    CHECK(stats.sd[0] == again.sd[0]);
    CHECK(stats.mean[0] == doctest::Approx(2.0));
}

TEST_CASE("feature csv export shape") {
    std::vector<ingest::TweetRecord> records = {rec("a", "u1", 1, 1, 1, kBase, ingest::Propagation::Propagated)};
    ingest::TopicSeries series = ingest::bucket_by_time(records, 3600);
    influence::InfluenceTable table;
    table.scores["u1"].pr_uir_norm = 1.0;
    FeatureBundle bundle =
        build_feature_bundle(series, records, table, {{1, 0, 0}}, StandardizationStats{});
    std::string csv = feature_bundle_csv(bundle, series);
    CHECK(csv.find("bucket_start,influence,sent_pos") == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 2);
    CHECK(csv.find("2022-08-01T00:00:00Z") != std::string::npos);
}
