#ifndef PROPNET_INGEST_INGEST_HPP
#define PROPNET_INGEST_INGEST_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "propnet/common.hpp"

namespace propnet::ingest {

enum class Sentiment { Positive, Neutral, Negative };
enum class Propagation { Propagated, NotPropagated };

const char* sentiment_name(Sentiment s);
const char* propagation_name(Propagation p);

struct TweetRecord {
    std::string tweet_id;
    std::string user_id;
    std::string topic;
    std::string raw_text;
    std::string clean_text;
    std::int64_t created_at = 0;  // epoch seconds, UTC
    std::uint64_t likes = 0;
    std::uint64_t retweets = 0;
    std::uint64_t comments = 0;
    std::uint64_t followers = 0;
    std::uint64_t following = 0;
    bool verified = false;
    std::vector<std::string> mentions;  // captured before cleaning
    std::optional<Sentiment> sentiment_label;
    std::optional<Propagation> propagation_label;
};

// ---------------------------------------------------------------------------
// Timestamp handling
// ---------------------------------------------------------------------------

// Accepts YYYY-MM-DD[T ]HH:MM:SS with optional fractional seconds and
// Z / +HH:MM / +HHMM offsets; a bare date means midnight UTC.
std::optional<std::int64_t> parse_iso8601(const std::string& text);
std::string format_iso8601(std::int64_t epoch_seconds);
int utc_hour(std::int64_t epoch_seconds);

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

// CSV column name -> canonical field name. Canonical fields: tweet_id,
// user_id, topic, text, created_at, likes, retweets, comments, followers,
// following, verified, sentiment_label, propagation_label.
using SchemaConfig = std::map<std::string, std::string>;

SchemaConfig default_schema_config();
SchemaConfig load_schema_config(const std::string& path);

struct ParseResult {
    std::vector<TweetRecord> records;
    std::size_t rows_total = 0;
    std::size_t rows_skipped = 0;
};

ParseResult parse_dataset(const std::string& path, const SchemaConfig& schema);

// ---------------------------------------------------------------------------
// Cleaning
// ---------------------------------------------------------------------------

struct CleanText {
    std::string clean;
    std::vector<std::string> mentions;
};

// Extracts @mentions first, then strips URLs, user references, non-ASCII
// codepoints and punctuation; lowercases and collapses whitespace. Total and
// idempotent on its own output.
CleanText clean_text(const std::string& raw);

std::vector<std::string> tokenize(const std::string& clean);

// ---------------------------------------------------------------------------
// Labeling
// ---------------------------------------------------------------------------

struct LabelWeights {
    double w_like = 0.20;
    double w_retweet = 0.25;
    double w_comment = 0.20;
    double w_follower = 0.15;
    double w_verified = 0.10;
    double w_daytime = 0.10;
    bool median_threshold = true;
    double fixed_threshold = 0.5;

    void validate() const;
};

// Per-field minima/maxima over the full dataset, computed before labeling.
struct EngagementStats {
    double likes_min = 0, likes_max = 0;
    double retweets_min = 0, retweets_max = 0;
    double comments_min = 0, comments_max = 0;
    double log_followers_min = 0, log_followers_max = 0;

    static EngagementStats compute(const std::vector<TweetRecord>& records);
};

double propagation_score(const TweetRecord& r, const LabelWeights& w, const EngagementStats& stats);

Propagation assign_propagation_label(const TweetRecord& r, const LabelWeights& w, const EngagementStats& stats,
                                     double threshold);

// Scores every record, resolves the threshold (median or fixed) and stores
// labels in place. Returns the threshold used.
double label_dataset(std::vector<TweetRecord>& records, const LabelWeights& weights);

using Lexicon = std::map<std::string, int>;  // word -> +1 / -1

Lexicon load_lexicon(const std::string& path);
Sentiment assign_sentiment_label(const std::string& clean, const Lexicon& lexicon);

// ---------------------------------------------------------------------------
// Splitting
// ---------------------------------------------------------------------------

struct DatasetSplit {
    std::vector<TweetRecord> train;
    std::vector<TweetRecord> validation;
    std::vector<TweetRecord> test;
    std::uint64_t seed = 0;
};

DatasetSplit split_dataset(const std::vector<TweetRecord>& records, double train_ratio, double val_ratio,
                           double test_ratio, std::uint64_t seed);

inline DatasetSplit split_dataset(const std::vector<TweetRecord>& records, std::uint64_t seed) {
    return split_dataset(records, 0.8, 0.1, 0.1, seed);
}

// ---------------------------------------------------------------------------
// Time bucketing
// ---------------------------------------------------------------------------

struct Bucket {
    std::int64_t start = 0;  // aligned to an epoch multiple of the width
    std::vector<std::string> tweet_ids;
    std::vector<std::size_t> member_rows;  // indices into the source record list
    std::uint64_t sum_likes = 0;
    std::uint64_t sum_retweets = 0;
    std::uint64_t sum_comments = 0;
};

struct TopicSeries {
    std::string topic;
    std::int64_t bucket_width = 3600;
    std::vector<Bucket> buckets;  // strictly increasing starts, interior gaps materialized
};

TopicSeries bucket_by_time(const std::vector<TweetRecord>& records, std::int64_t width_seconds = 3600);

// Groups records by topic, preserving first-seen topic order.
std::vector<std::pair<std::string, std::vector<std::size_t>>> group_by_topic(
    const std::vector<TweetRecord>& records);

}  // namespace propnet::ingest

#endif  // PROPNET_INGEST_INGEST_HPP
