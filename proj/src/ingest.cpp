#include "propnet/ingest/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "propnet/ingest/csv.hpp"

namespace propnet::ingest {

const char* sentiment_name(Sentiment s) {
    switch (s) {
        case Sentiment::Positive: return "positive";
        case Sentiment::Neutral: return "neutral";
        case Sentiment::Negative: return "negative";
    }
    return "?";
}

const char* propagation_name(Propagation p) {
    return p == Propagation::Propagated ? "propagated" : "not_propagated";
}

// ---------------------------------------------------------------------------
// Timestamps
// ---------------------------------------------------------------------------

namespace {

// Howard Hinnant's days-from-civil; avoids timezone-dependent libc calls.
std::int64_t days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const int era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * static_cast<unsigned>(m + (m > 2 ? -3 : 9)) + 2) / 5 + static_cast<unsigned>(d) - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return static_cast<std::int64_t>(era) * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, int& y, unsigned& m, unsigned& d) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t yr = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = doy - (153 * mp + 2) / 5 + 1;
    m = mp + (mp < 10 ? 3 : -9);
    y = static_cast<int>(yr + (m <= 2));
}

bool read_int(const std::string& s, std::size_t pos, std::size_t len, int& out) {
    if (pos + len > s.size()) return false;
    int v = 0;
    for (std::size_t i = 0; i < len; ++i) {
        char c = s[pos + i];
        if (c < '0' || c > '9') return false;
        v = v * 10 + (c - '0');
    }
    out = v;
    return true;
}

}  // namespace

std::optional<std::int64_t> parse_iso8601(const std::string& raw) {
    std::size_t start = 0;
    while (start < raw.size() && (raw[start] == ' ' || raw[start] == '\t')) ++start;
    std::size_t stop = raw.size();
    while (stop > start && (raw[stop - 1] == ' ' || raw[stop - 1] == '\t')) --stop;
    const std::string s = raw.substr(start, stop - start);

    int year, month, day;
    if (s.size() < 10 || !read_int(s, 0, 4, year) || s[4] != '-' || !read_int(s, 5, 2, month) || s[7] != '-' ||
        !read_int(s, 8, 2, day))
        return std::nullopt;
    if (month < 1 || month > 12 || day < 1 || day > 31) return std::nullopt;

    int hour = 0, minute = 0, second = 0;
    std::size_t pos = 10;
    if (pos < s.size()) {
        if (s[pos] != 'T' && s[pos] != ' ') return std::nullopt;
        ++pos;
        if (!read_int(s, pos, 2, hour) || pos + 5 > s.size() || s[pos + 2] != ':' || !read_int(s, pos + 3, 2, minute))
            return std::nullopt;
        pos += 5;
        if (pos < s.size() && s[pos] == ':') {
            if (!read_int(s, pos + 1, 2, second)) return std::nullopt;
            pos += 3;
        }
        if (pos < s.size() && s[pos] == '.') {  // fractional seconds: ignored
            ++pos;
            while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) ++pos;
        }
        if (hour > 23 || minute > 59 || second > 60) return std::nullopt;
    }

    std::int64_t offset = 0;
    if (pos < s.size()) {
        char c = s[pos];
        if (c == 'Z' || c == 'z') {
            ++pos;
        } else if (c == '+' || c == '-') {
            int oh = 0, om = 0;
            if (!read_int(s, pos + 1, 2, oh)) return std::nullopt;
            std::size_t opos = pos + 3;
            if (opos < s.size() && s[opos] == ':') ++opos;
            if (opos < s.size()) {
                if (!read_int(s, opos, 2, om)) return std::nullopt;
                opos += 2;
            }
            offset = (c == '+' ? 1 : -1) * (oh * 3600LL + om * 60LL);
            pos = opos;
        } else {
            return std::nullopt;
        }
    }
    if (pos != s.size()) return std::nullopt;

    std::int64_t days = days_from_civil(year, month, day);
    return days * 86400 + hour * 3600 + minute * 60 + second - offset;
}

std::string format_iso8601(std::int64_t t) {
    std::int64_t days = t >= 0 ? t / 86400 : (t - 86399) / 86400;
    std::int64_t rem = t - days * 86400;
    int y;
    unsigned m, d;
    civil_from_days(days, y, m, d);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", y, m, d, static_cast<int>(rem / 3600),
                  static_cast<int>((rem % 3600) / 60), static_cast<int>(rem % 60));
    return buf;
}

int utc_hour(std::int64_t t) {
    std::int64_t sec = ((t % 86400) + 86400) % 86400;
    return static_cast<int>(sec / 3600);
}

// ---------------------------------------------------------------------------
// Schema + parsing
// ---------------------------------------------------------------------------

namespace {

const std::vector<std::string> kCanonicalFields = {
    "tweet_id", "user_id",   "topic",     "text",     "created_at",      "likes",            "retweets",
    "comments", "followers", "following", "verified", "sentiment_label", "propagation_label"};

const std::vector<std::string> kRequiredFields = {"tweet_id", "user_id",  "text",      "created_at", "likes",
                                                  "retweets", "comments", "followers", "verified"};

bool parse_bool(const std::string& s, bool& out) {
    std::string t;
    for (char c : s) t += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (t == "true" || t == "1" || t == "yes") {
        out = true;
        return true;
    }
    if (t == "false" || t == "0" || t == "no" || t.empty()) {
        out = false;
        return true;
    }
    return false;
}

bool parse_count(const std::string& s, std::uint64_t& out) {
    if (s.empty()) {
        out = 0;
        return true;
    }
    std::uint64_t v = 0;
    std::size_t i = 0;
    for (; i < s.size(); ++i) {
        char c = s[i];
        if (c == '.') {  // tolerate "12.0" style exports
            for (std::size_t j = i + 1; j < s.size(); ++j)
                if (!std::isdigit(static_cast<unsigned char>(s[j]))) return false;
            break;
        }
        if (!std::isdigit(static_cast<unsigned char>(c))) return false;
        v = v * 10 + static_cast<std::uint64_t>(c - '0');
    }
    out = v;
    return true;
}

}  // namespace

SchemaConfig default_schema_config() {
    SchemaConfig cfg;
    for (const std::string& f : kCanonicalFields) cfg[f] = f;
    return cfg;
}

SchemaConfig load_schema_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw_error(ErrorKind::Io, "cannot open schema config: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw_error(ErrorKind::Schema, "schema config is not valid JSON: " + std::string(e.what()));
    }
    if (!j.is_object()) throw_error(ErrorKind::Schema, "schema config must be a JSON object of column -> field");
    SchemaConfig cfg;
    for (auto& [column, field] : j.items()) {
        if (!field.is_string())
            throw_error(ErrorKind::Schema, "schema config value for column '" + column + "' must be a string");
        const std::string f = field.get<std::string>();
        if (std::find(kCanonicalFields.begin(), kCanonicalFields.end(), f) == kCanonicalFields.end())
            throw_error(ErrorKind::Schema, "schema config maps column '" + column + "' to unknown field '" + f + "'");
        cfg[column] = f;
    }
    return cfg;
}

ParseResult parse_dataset(const std::string& path, const SchemaConfig& schema) {
    std::vector<CsvRow> rows = read_csv_file(path);
    if (rows.empty()) throw_error(ErrorKind::Schema, "dataset is empty: " + path);

    const CsvRow& header = rows.front();
    std::map<std::string, std::size_t> field_to_col;
    for (std::size_t c = 0; c < header.size(); ++c) {
        auto it = schema.find(header[c]);
        if (it != schema.end()) field_to_col[it->second] = c;
    }

    std::vector<std::string> missing;
    for (const std::string& f : kRequiredFields)
        if (!field_to_col.count(f)) missing.push_back(f);
    if (!missing.empty()) {
        std::string msg = "dataset missing required column(s):";
        for (const std::string& f : missing) msg += " " + f;
        throw_error(ErrorKind::Schema, msg + " (in " + path + ")");
    }

    auto get = [&](const CsvRow& row, const std::string& field, const std::string& fallback = "") -> std::string {
        auto it = field_to_col.find(field);
        if (it == field_to_col.end() || it->second >= row.size()) return fallback;
        return row[it->second];
    };

    ParseResult result;
    result.rows_total = rows.size() - 1;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const CsvRow& row = rows[i];
        TweetRecord r;
        r.tweet_id = get(row, "tweet_id");
        r.user_id = get(row, "user_id");
        r.topic = get(row, "topic", "default");
        if (r.topic.empty()) r.topic = "default";
        r.raw_text = get(row, "text");

        auto ts = parse_iso8601(get(row, "created_at"));
        bool ok = ts.has_value() && !r.tweet_id.empty() && !r.user_id.empty();
        ok = ok && parse_count(get(row, "likes"), r.likes);
        ok = ok && parse_count(get(row, "retweets"), r.retweets);
        ok = ok && parse_count(get(row, "comments"), r.comments);
        ok = ok && parse_count(get(row, "followers"), r.followers);
        ok = ok && parse_count(get(row, "following", "0"), r.following);
        ok = ok && parse_bool(get(row, "verified"), r.verified);
        if (!ok) {
            ++result.rows_skipped;
            continue;
        }
        r.created_at = *ts;

        CleanText ct = clean_text(r.raw_text);
        r.clean_text = ct.clean;
        r.mentions = ct.mentions;

        const std::string sent = get(row, "sentiment_label");
        if (sent == "positive") r.sentiment_label = Sentiment::Positive;
        else if (sent == "neutral") r.sentiment_label = Sentiment::Neutral;
        else if (sent == "negative") r.sentiment_label = Sentiment::Negative;

        const std::string prop = get(row, "propagation_label");
        if (prop == "propagated" || prop == "1") r.propagation_label = Propagation::Propagated;
        else if (prop == "not_propagated" || prop == "0") r.propagation_label = Propagation::NotPropagated;

        result.records.push_back(std::move(r));
    }
    return result;
}

// ---------------------------------------------------------------------------
// Cleaning
// ---------------------------------------------------------------------------

namespace {

bool is_handle_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

bool token_is_url(const std::string& t) {
    std::string l;
    for (char c : t) l += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return l.rfind("http://", 0) == 0 || l.rfind("https://", 0) == 0 || l.rfind("www.", 0) == 0;
}

}  // namespace

CleanText clean_text(const std::string& raw) {
    CleanText out;

    // whitespace-delimited pass: drop URL tokens, pull @handles out
    std::string without_refs;
    std::size_t i = 0;
    const std::size_t n = raw.size();
    while (i < n) {
        if (std::isspace(static_cast<unsigned char>(raw[i]))) {
            without_refs += ' ';
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < n && !std::isspace(static_cast<unsigned char>(raw[j]))) ++j;
        std::string token = raw.substr(i, j - i);
        i = j;
        if (token_is_url(token)) continue;
        std::string kept;
        for (std::size_t k = 0; k < token.size();) {
            if (token[k] == '@' && k + 1 < token.size() && is_handle_char(token[k + 1])) {
                std::size_t h = k + 1;
                std::string handle;
                while (h < token.size() && is_handle_char(token[h])) {
                    handle += static_cast<char>(std::tolower(static_cast<unsigned char>(token[h])));
                    ++h;
                }
                out.mentions.push_back(handle);
                k = h;
            } else {
                kept += token[k];
                ++k;
            }
        }
        without_refs += kept;
        without_refs += ' ';
    }

    // character pass: lowercase; punctuation, emoticon codepoints and other
    // non-alphanumeric bytes become separators
    std::string filtered;
    for (unsigned char c : without_refs) {
        if (c < 0x80 && std::isalnum(c)) {
            filtered += static_cast<char>(std::tolower(c));
        } else {
            filtered += ' ';
        }
    }

    std::string collapsed;
    bool pending_space = false;
    for (char c : filtered) {
        if (c == ' ') {
            pending_space = !collapsed.empty();
        } else {
            if (pending_space) collapsed += ' ';
            pending_space = false;
            collapsed += c;
        }
    }
    out.clean = collapsed;
    return out;
}

std::vector<std::string> tokenize(const std::string& clean) {
    std::vector<std::string> tokens;
    std::istringstream in(clean);
    std::string t;
    while (in >> t) tokens.push_back(t);
    return tokens;
}

// ---------------------------------------------------------------------------
// Labeling
// ---------------------------------------------------------------------------

void LabelWeights::validate() const {
    const double ws[] = {w_like, w_retweet, w_comment, w_follower, w_verified, w_daytime};
    double sum = 0.0;
    for (double w : ws) {
        if (w < 0.0) throw_error(ErrorKind::Config, "label weights must be nonnegative");
        sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw_error(ErrorKind::Config, "label weights must sum to 1, got " + std::to_string(sum));
}

EngagementStats EngagementStats::compute(const std::vector<TweetRecord>& records) {
    EngagementStats s;
    bool first = true;
    for (const TweetRecord& r : records) {
        const double lf = std::log1p(static_cast<double>(r.followers));
        if (first) {
            s.likes_min = s.likes_max = static_cast<double>(r.likes);
            s.retweets_min = s.retweets_max = static_cast<double>(r.retweets);
            s.comments_min = s.comments_max = static_cast<double>(r.comments);
            s.log_followers_min = s.log_followers_max = lf;
            first = false;
            continue;
        }
        s.likes_min = std::min(s.likes_min, static_cast<double>(r.likes));
        s.likes_max = std::max(s.likes_max, static_cast<double>(r.likes));
        s.retweets_min = std::min(s.retweets_min, static_cast<double>(r.retweets));
        s.retweets_max = std::max(s.retweets_max, static_cast<double>(r.retweets));
        s.comments_min = std::min(s.comments_min, static_cast<double>(r.comments));
        s.comments_max = std::max(s.comments_max, static_cast<double>(r.comments));
        s.log_followers_min = std::min(s.log_followers_min, lf);
        s.log_followers_max = std::max(s.log_followers_max, lf);
    }
    return s;
}

namespace {

// min-max with the degenerate max==min rule: the term contributes 0
double mm(double v, double lo, double hi) {
    if (hi <= lo) return 0.0;
    return (v - lo) / (hi - lo);
}

}  // namespace

double propagation_score(const TweetRecord& r, const LabelWeights& w, const EngagementStats& s) {
    double score = 0.0;
    score += w.w_like * mm(static_cast<double>(r.likes), s.likes_min, s.likes_max);
    score += w.w_retweet * mm(static_cast<double>(r.retweets), s.retweets_min, s.retweets_max);
    score += w.w_comment * mm(static_cast<double>(r.comments), s.comments_min, s.comments_max);
    score += w.w_follower * mm(std::log1p(static_cast<double>(r.followers)), s.log_followers_min, s.log_followers_max);
    score += w.w_verified * (r.verified ? 1.0 : 0.0);
    const int hour = utc_hour(r.created_at);
    score += w.w_daytime * ((hour >= 6 && hour < 22) ? 1.0 : 0.0);
    return score;
}

Propagation assign_propagation_label(const TweetRecord& r, const LabelWeights& w, const EngagementStats& stats,
                                     double threshold) {
    return propagation_score(r, w, stats) > threshold ? Propagation::Propagated : Propagation::NotPropagated;
}

double label_dataset(std::vector<TweetRecord>& records, const LabelWeights& weights) {
    weights.validate();
    if (records.empty()) throw_error(ErrorKind::Domain, "label_dataset: no records");
    EngagementStats stats = EngagementStats::compute(records);
    std::vector<double> scores;
    scores.reserve(records.size());
    for (const TweetRecord& r : records) scores.push_back(propagation_score(r, weights, stats));

    double threshold = weights.fixed_threshold;
    if (weights.median_threshold) {
        std::vector<double> sorted = scores;
        std::sort(sorted.begin(), sorted.end());
        const std::size_t n = sorted.size();
        threshold = (n % 2 == 1) ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
    }
    for (std::size_t i = 0; i < records.size(); ++i)
        records[i].propagation_label = scores[i] > threshold ? Propagation::Propagated : Propagation::NotPropagated;
    return threshold;
}

Lexicon load_lexicon(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw_error(ErrorKind::Io, "cannot open lexicon: " + path);
    Lexicon lex;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos)
            throw_error(ErrorKind::Schema, "lexicon line " + std::to_string(lineno) + ": expected word<TAB>+1|-1");
        std::string word = line.substr(0, tab);
        std::string pol = line.substr(tab + 1);
        if (pol == "+1" || pol == "1") lex[word] = 1;
        else if (pol == "-1") lex[word] = -1;
        else
            throw_error(ErrorKind::Schema, "lexicon line " + std::to_string(lineno) + ": polarity must be +1 or -1");
    }
    return lex;
}

Sentiment assign_sentiment_label(const std::string& clean, const Lexicon& lexicon) {
    if (lexicon.empty()) throw_error(ErrorKind::Domain, "assign_sentiment_label: empty lexicon");
    int sum = 0;
    for (const std::string& tok : tokenize(clean)) {
        auto it = lexicon.find(tok);
        if (it != lexicon.end()) sum += it->second;
    }
    if (sum > 0) return Sentiment::Positive;
    if (sum < 0) return Sentiment::Negative;
    return Sentiment::Neutral;
}

// ---------------------------------------------------------------------------
// Splitting
// ---------------------------------------------------------------------------

DatasetSplit split_dataset(const std::vector<TweetRecord>& records, double train_ratio, double val_ratio,
                           double test_ratio, std::uint64_t seed) {
    if (records.size() < 10)
        throw_error(ErrorKind::Domain,
                    "split_dataset: need at least 10 records, got " + std::to_string(records.size()));
    if (std::abs(train_ratio + val_ratio + test_ratio - 1.0) > 1e-9)
        throw_error(ErrorKind::Config, "split_dataset: ratios must sum to 1");

    std::vector<std::size_t> order(records.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng = Rng(seed).stream("split");
    rng.shuffle(order);

    const std::size_t n = records.size();
    const std::size_t n_val = static_cast<std::size_t>(std::floor(val_ratio * static_cast<double>(n)));
    const std::size_t n_test = static_cast<std::size_t>(std::floor(test_ratio * static_cast<double>(n)));
    const std::size_t n_train = n - n_val - n_test;  // remainder goes to train

    DatasetSplit split;
    split.seed = seed;
    for (std::size_t i = 0; i < n; ++i) {
        const TweetRecord& r = records[order[i]];
        if (i < n_train) split.train.push_back(r);
        else if (i < n_train + n_val) split.validation.push_back(r);
        else split.test.push_back(r);
    }
    return split;
}

// ---------------------------------------------------------------------------
// Bucketing
// ---------------------------------------------------------------------------

TopicSeries bucket_by_time(const std::vector<TweetRecord>& records, std::int64_t width) {
    if (width <= 0) throw_error(ErrorKind::Config, "bucket_by_time: width must be positive");
    TopicSeries series;
    series.bucket_width = width;
    if (records.empty()) return series;

    series.topic = records[0].topic;
    for (const TweetRecord& r : records)
        if (r.topic != series.topic)
            throw_error(ErrorKind::Domain,
                        "bucket_by_time: records span topics '" + series.topic + "' and '" + r.topic + "'");

    auto bucket_start = [width](std::int64_t t) {
        std::int64_t q = t / width;
        if (t < 0 && t % width != 0) --q;  // floor toward -inf
        return q * width;
    };

    std::int64_t lo = bucket_start(records[0].created_at), hi = lo;
    for (const TweetRecord& r : records) {
        std::int64_t b = bucket_start(r.created_at);
        lo = std::min(lo, b);
        hi = std::max(hi, b);
    }

    const std::size_t count = static_cast<std::size_t>((hi - lo) / width) + 1;
    series.buckets.resize(count);
    for (std::size_t i = 0; i < count; ++i) series.buckets[i].start = lo + static_cast<std::int64_t>(i) * width;

    for (std::size_t row = 0; row < records.size(); ++row) {
        const TweetRecord& r = records[row];
        std::size_t idx = static_cast<std::size_t>((bucket_start(r.created_at) - lo) / width);
        Bucket& b = series.buckets[idx];
        b.tweet_ids.push_back(r.tweet_id);
        b.member_rows.push_back(row);
        b.sum_likes += r.likes;
        b.sum_retweets += r.retweets;
        b.sum_comments += r.comments;
    }
    return series;
}

std::vector<std::pair<std::string, std::vector<std::size_t>>> group_by_topic(
    const std::vector<TweetRecord>& records) {
    std::vector<std::pair<std::string, std::vector<std::size_t>>> groups;
    std::map<std::string, std::size_t> pos;
    for (std::size_t i = 0; i < records.size(); ++i) {
        auto it = pos.find(records[i].topic);
        if (it == pos.end()) {
            pos[records[i].topic] = groups.size();
            groups.push_back({records[i].topic, {i}});
        } else {
            groups[it->second].second.push_back(i);
        }
    }
    return groups;
}

}  // namespace propnet::ingest
