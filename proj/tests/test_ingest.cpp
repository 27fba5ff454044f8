#include <doctest.h>

#include <fstream>
#include <set>

#include "propnet/ingest/csv.hpp"
#include "propnet/ingest/ingest.hpp"

using namespace propnet;
using namespace propnet::ingest;

namespace {

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
}

TweetRecord make_record(std::string id, std::uint64_t likes, std::uint64_t retweets, std::uint64_t comments,
                        std::uint64_t followers, bool verified, std::int64_t created_at) {
    TweetRecord r;
    r.tweet_id = std::move(id);
    r.user_id = "u_" + r.tweet_id;
    r.topic = "t";
    r.likes = likes;
    r.retweets = retweets;
    r.comments = comments;
    r.followers = followers;
    r.verified = verified;
    r.created_at = created_at;
    return r;
}

constexpr std::int64_t kNoonUtc = 1659355200;      // 2022-08-01T12:00:00Z
constexpr std::int64_t kMidnightUtc = 1659312000;  // 2022-08-01T00:00:00Z

}  // namespace

TEST_CASE("csv parser handles quotes, commas, embedded newlines") {
    auto rows = parse_csv("a,b,c\n\"x,y\",\"he said \"\"hi\"\"\",\"line1\nline2\"\n");
    REQUIRE(rows.size() == 2);
    CHECK(rows[1][0] == "x,y");
    CHECK(rows[1][1] == "he said \"hi\"");
    CHECK(rows[1][2] == "line1\nline2");

    // round trip through the writer
    auto again = parse_csv(format_csv_row(rows[1]));
    CHECK(again[0] == rows[1]);
}

TEST_CASE("iso8601 parsing variants") {
    CHECK(parse_iso8601("1970-01-01T00:00:00Z") == 0);
    CHECK(parse_iso8601("1970-01-02 00:00:00") == 86400);
    CHECK(parse_iso8601("2022-08-01T12:00:00Z") == kNoonUtc);
    CHECK(parse_iso8601("2022-08-01T14:00:00+02:00") == kNoonUtc);
    CHECK(parse_iso8601("2022-08-01 12:00:00.123Z") == kNoonUtc);
    CHECK(parse_iso8601("2022-08-01") == kMidnightUtc);
    CHECK(!parse_iso8601("not a time").has_value());
    CHECK(!parse_iso8601("2022-13-01T00:00:00Z").has_value());
    CHECK(format_iso8601(kNoonUtc) == "2022-08-01T12:00:00Z");
    CHECK(utc_hour(kNoonUtc) == 12);
}

TEST_CASE("parse_dataset: well-formed rows, skipped rows, aliased columns") {
    const std::string dir = "/tmp/propnet_ingest_test";
    std::system(("mkdir -p " + dir).c_str());

    const std::string good =
        "tweet_id,user_id,text,created_at,likes,retweets,comments,followers,verified\n"
        "1,ua,hello,2022-08-01T10:00:00Z,1,2,3,10,true\n"
        "2,ub,world,2022-08-01T11:00:00Z,0,0,0,5,false\n"
        "3,uc,again,2022-08-01T12:00:00Z,4,1,0,8,false\n";
    write_file(dir + "/good.csv", good);
    ParseResult res = parse_dataset(dir + "/good.csv", default_schema_config());
    CHECK(res.records.size() == 3);
    CHECK(res.rows_skipped == 0);
    CHECK(res.records[0].verified);
    CHECK(res.records[0].likes == 1);

    const std::string bad_ts =
        "tweet_id,user_id,text,created_at,likes,retweets,comments,followers,verified\n"
        "1,ua,hello,2022-08-01T10:00:00Z,1,2,3,10,true\n"
        "2,ub,world,yesterday,0,0,0,5,false\n";
    write_file(dir + "/badts.csv", bad_ts);
    res = parse_dataset(dir + "/badts.csv", default_schema_config());
    CHECK(res.records.size() == 1);
    CHECK(res.rows_skipped == 1);

    const std::string aliased =
        "id,author,content,date,favorite_count,rt_count,reply_count,follower_count,is_verified\n"
        "1,ua,hi there,2022-08-01T10:00:00Z,7,1,0,100,false\n";
    write_file(dir + "/aliased.csv", aliased);
    SchemaConfig schema = {{"id", "tweet_id"},          {"author", "user_id"},
                           {"content", "text"},         {"date", "created_at"},
                           {"favorite_count", "likes"}, {"rt_count", "retweets"},
                           {"reply_count", "comments"}, {"follower_count", "followers"},
                           {"is_verified", "verified"}};
    res = parse_dataset(dir + "/aliased.csv", schema);
    REQUIRE(res.records.size() == 1);
    CHECK(res.records[0].likes == 7);
    CHECK(res.records[0].clean_text == "hi there");

    // missing column lists the missing names
    const std::string missing = "tweet_id,user_id,text\n1,u,t\n";
    write_file(dir + "/missing.csv", missing);
    try {
        parse_dataset(dir + "/missing.csv", default_schema_config());
        FAIL("expected schema error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Schema);
        CHECK(std::string(e.what()).find("created_at") != std::string::npos);
        CHECK(std::string(e.what()).find("likes") != std::string::npos);
    }

    CHECK_THROWS_AS(parse_dataset(dir + "/nope.csv", default_schema_config()), Error);
}

TEST_CASE("clean_text removes urls, mentions, punctuation; extracts handles") {
    CleanText ct = clean_text("Check https://x.co @bob!!");
    CHECK(ct.clean == "check");
    REQUIRE(ct.mentions.size() == 1);
    CHECK(ct.mentions[0] == "bob");

    ct = clean_text("");
    CHECK(ct.clean.empty());
    CHECK(ct.mentions.empty());

    ct = clean_text("hello world");
    CHECK(ct.clean == "hello world");
    CHECK(ct.mentions.empty());

    ct = clean_text("BIG @Ana and @ana_2 say #Crypto \xF0\x9F\x98\x80 www.spam.io !!!");
    CHECK(ct.clean == "big and say crypto");
    REQUIRE(ct.mentions.size() == 2);
    CHECK(ct.mentions[0] == "ana");
    CHECK(ct.mentions[1] == "ana_2");
}

TEST_CASE("clean_text is idempotent") {
    const std::string samples[] = {"Check https://x.co @bob!!", "a,b..c", "MiXeD CaSe 42",
                                   "@a @b @c", "\tspaced\n out \r", "emoji \xE2\x9D\xA4 mid"};
    for (const std::string& s : samples) {
        std::string once = clean_text(s).clean;
        CHECK(clean_text(once).clean == once);
    }
}

TEST_CASE("propagation score bounds") {
    std::vector<TweetRecord> records;
    records.push_back(make_record("max", 100, 50, 20, 100000, true, kNoonUtc));
    records.push_back(make_record("min", 0, 0, 0, 0, false, kMidnightUtc));

    LabelWeights w;
    EngagementStats stats = EngagementStats::compute(records);
    CHECK(propagation_score(records[0], w, stats) == doctest::Approx(1.0));
    CHECK(propagation_score(records[1], w, stats) == doctest::Approx(0.0));
    CHECK(assign_propagation_label(records[0], w, stats, 0.5) == Propagation::Propagated);
    CHECK(assign_propagation_label(records[1], w, stats, 0.5) == Propagation::NotPropagated);
}

TEST_CASE("median threshold labels about half of 100 random records") {
    Rng rng(99);
    std::vector<TweetRecord> records;
    for (int i = 0; i < 100; ++i) {
        records.push_back(make_record("r" + std::to_string(i), rng.uniform_index(1000), rng.uniform_index(500),
                                      rng.uniform_index(100), rng.uniform_index(100000), rng.uniform() < 0.3,
                                      kMidnightUtc + static_cast<std::int64_t>(rng.uniform_index(86400))));
    }
    LabelWeights w;
    double threshold = label_dataset(records, w);

    // oracle: sort the scores and count strictly-above-median entries
    EngagementStats stats = EngagementStats::compute(records);
    std::size_t above = 0;
    for (const TweetRecord& r : records)
        if (propagation_score(r, w, stats) > threshold) ++above;

    std::size_t labeled = 0;
    for (const TweetRecord& r : records)
        if (r.propagation_label == Propagation::Propagated) ++labeled;
    CHECK(labeled == above);
    CHECK(labeled >= 49);
    CHECK(labeled <= 51);
}

TEST_CASE("labeling is scale invariant per field") {
    Rng rng(7);
    std::vector<TweetRecord> records;
    for (int i = 0; i < 60; ++i)
        records.push_back(make_record("r" + std::to_string(i), rng.uniform_index(100), rng.uniform_index(60),
                                      rng.uniform_index(30), rng.uniform_index(5000), rng.uniform() < 0.5,
                                      kMidnightUtc + static_cast<std::int64_t>(rng.uniform_index(86400))));
    LabelWeights w;
    std::vector<TweetRecord> scaled = records;
    for (TweetRecord& r : scaled) r.likes *= 7;

    label_dataset(records, w);
    label_dataset(scaled, w);
    for (std::size_t i = 0; i < records.size(); ++i)
        CHECK(records[i].propagation_label == scaled[i].propagation_label);
}

TEST_CASE("degenerate engagement field contributes zero") {
    std::vector<TweetRecord> records;
    for (int i = 0; i < 4; ++i) records.push_back(make_record("r" + std::to_string(i), 5, 0, 0, 0, false, kMidnightUtc));
    EngagementStats stats = EngagementStats::compute(records);
    LabelWeights w;
    CHECK(propagation_score(records[0], w, stats) == doctest::Approx(0.0));  // likes max == min
}

TEST_CASE("sentiment lexicon labeling") {
    Lexicon lex = {{"great", 1}, {"amazing", 1}, {"good", 1}, {"bad", -1}};
    CHECK(assign_sentiment_label("great amazing", lex) == Sentiment::Positive);
    CHECK(assign_sentiment_label("", lex) == Sentiment::Neutral);
    CHECK(assign_sentiment_label("good bad", lex) == Sentiment::Neutral);
    CHECK(assign_sentiment_label("bad bad day", lex) == Sentiment::Negative);
    CHECK_THROWS_AS(assign_sentiment_label("x", Lexicon{}), Error);
}

TEST_CASE("lexicon file loading") {
    const std::string path = "/tmp/propnet_test_lexicon.tsv";
    write_file(path, "# comment\ngood\t+1\nbad\t-1\n");
    Lexicon lex = load_lexicon(path);
    CHECK(lex.at("good") == 1);
    CHECK(lex.at("bad") == -1);
    write_file(path, "oops\t2\n");
    CHECK_THROWS_AS(load_lexicon(path), Error);
}

TEST_CASE("split_dataset sizes and remainder rule") {
    std::vector<TweetRecord> records;
    for (int i = 0; i < 100; ++i) records.push_back(make_record(std::to_string(i), 0, 0, 0, 0, false, kNoonUtc));
    DatasetSplit s = split_dataset(records, 42);
    CHECK(s.train.size() == 80);
    CHECK(s.validation.size() == 10);
    CHECK(s.test.size() == 10);

    records.push_back(make_record("100", 0, 0, 0, 0, false, kNoonUtc));
    DatasetSplit s2 = split_dataset(records, 42);
    CHECK(s2.train.size() == 81);
    CHECK(s2.validation.size() == 10);
    CHECK(s2.test.size() == 10);

    std::vector<TweetRecord> tiny(records.begin(), records.begin() + 9);
    CHECK_THROWS_AS(split_dataset(tiny, 1), Error);
}

TEST_CASE("split_dataset deterministic and a disjoint cover for any seed") {
    Rng rng(5);
    for (int trial = 0; trial < 8; ++trial) {
        std::size_t n = 10 + rng.uniform_index(200);
        std::uint64_t seed = rng.next_u64();
        std::vector<TweetRecord> records;
        for (std::size_t i = 0; i < n; ++i)
            records.push_back(make_record(std::to_string(i), 0, 0, 0, 0, false, kNoonUtc));

        DatasetSplit a = split_dataset(records, seed);
        DatasetSplit b = split_dataset(records, seed);
        REQUIRE(a.train.size() == b.train.size());
        for (std::size_t i = 0; i < a.train.size(); ++i) CHECK(a.train[i].tweet_id == b.train[i].tweet_id);

        std::set<std::string> seen;
        for (const auto* part : {&a.train, &a.validation, &a.test})
            for (const TweetRecord& r : *part) CHECK(seen.insert(r.tweet_id).second);
        CHECK(seen.size() == n);
    }
}

TEST_CASE("bucket_by_time widths and alignment") {
    std::vector<TweetRecord> two;
    two.push_back(make_record("a", 1, 0, 0, 0, false, kMidnightUtc + 600));
    two.push_back(make_record("b", 2, 0, 0, 0, false, kMidnightUtc + 600 + 1800));
    TopicSeries s = bucket_by_time(two, 3600);
    CHECK(s.buckets.size() == 1);
    CHECK(s.buckets[0].sum_likes == 3);
    CHECK(s.buckets[0].start == kMidnightUtc);

    two[1].created_at = kMidnightUtc + 600 + 5400;
    s = bucket_by_time(two, 3600);
    CHECK(s.buckets.size() == 2);

    TopicSeries empty = bucket_by_time({}, 3600);
    CHECK(empty.buckets.empty());
}

TEST_CASE("bucket_by_time materializes interior gaps and conserves sums") {
    std::vector<TweetRecord> records;
    records.push_back(make_record("a", 3, 1, 2, 0, false, kMidnightUtc + 100));
    records.push_back(make_record("b", 0, 2, 1, 0, false, kMidnightUtc + 200));
    records.push_back(make_record("c", 2, 0, 0, 0, false, kMidnightUtc + 3 * 3600));
    records.push_back(make_record("d", 5, 5, 5, 0, false, kMidnightUtc + 3 * 3600 + 30));
    records.push_back(make_record("e", 1, 1, 1, 0, false, kMidnightUtc + 5 * 3600));
    TopicSeries s = bucket_by_time(records, 3600);
    REQUIRE(s.buckets.size() == 6);
    CHECK(s.buckets[0].sum_likes == 3);
    CHECK(s.buckets[1].sum_likes == 0);   // materialized empty bucket
    CHECK(s.buckets[1].tweet_ids.empty());
    CHECK(s.buckets[3].sum_likes == 7);
    CHECK(s.buckets[5].sum_likes == 1);

    for (std::size_t i = 1; i < s.buckets.size(); ++i)
        CHECK(s.buckets[i].start == s.buckets[i - 1].start + 3600);

    std::uint64_t likes = 0, rts = 0, cms = 0;
    for (const Bucket& b : s.buckets) {
        likes += b.sum_likes;
        rts += b.sum_retweets;
        cms += b.sum_comments;
    }
    CHECK(likes == 11);
    CHECK(rts == 9);
    CHECK(cms == 9);
}

TEST_CASE("bucket width refinement: halving the width preserves totals") {
    Rng rng(21);
    std::vector<TweetRecord> records;
    for (int i = 0; i < 40; ++i)
        records.push_back(make_record(std::to_string(i), rng.uniform_index(10), rng.uniform_index(10),
                                      rng.uniform_index(10), 0, false,
                                      kMidnightUtc + static_cast<std::int64_t>(rng.uniform_index(10 * 3600))));
    TopicSeries coarse = bucket_by_time(records, 3600);
    TopicSeries fine = bucket_by_time(records, 1800);
    std::uint64_t coarse_likes = 0, fine_likes = 0;
    for (const Bucket& b : coarse.buckets) coarse_likes += b.sum_likes;
    for (const Bucket& b : fine.buckets) fine_likes += b.sum_likes;
    CHECK(coarse_likes == fine_likes);

    // each coarse bucket equals the sum of the fine buckets it covers
    for (const Bucket& cb : coarse.buckets) {
        std::uint64_t sum = 0;
        for (const Bucket& fb : fine.buckets)
            if (fb.start >= cb.start && fb.start < cb.start + 3600) sum += fb.sum_likes;
        CHECK(sum == cb.sum_likes);
    }
}
