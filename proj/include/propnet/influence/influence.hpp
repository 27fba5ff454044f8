#ifndef PROPNET_INFLUENCE_INFLUENCE_HPP
#define PROPNET_INFLUENCE_INFLUENCE_HPP

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "propnet/common.hpp"
#include "propnet/ingest/ingest.hpp"

namespace propnet::influence {

struct UserNode {
    std::string user_id;
    std::uint64_t advocates = 0;      // follower count
    std::uint64_t retweets_sent = 0;  // retweet activity
    bool verified = false;
};

enum class GraphOrigin { ExplicitEdgeFile, DerivedFromMentions };

// Directed edge (from, to) means "from links to to": from belongs to the
// inbox set of to, and counts toward from's out-degree.
struct SocialGraph {
    std::map<std::string, UserNode> nodes;
    std::set<std::pair<std::string, std::string>> edges;  // deduplicated
    GraphOrigin origin = GraphOrigin::DerivedFromMentions;

    void add_edge(const std::string& from, const std::string& to);
};

struct InfluenceScore {
    double pr_people = 0.0;
    double uad = 0.0;
    double pr_influence = 0.0;
    double pr_uir_raw = 0.0;
    double pr_uir_norm = 0.0;  // min-max over raw scores, feature use only
};

struct InfluenceTable {
    std::map<std::string, InfluenceScore> scores;
    std::size_t iterations = 0;
    double residual = 0.0;

    double norm_or(const std::string& user_id, double fallback) const {
        auto it = scores.find(user_id);
        return it == scores.end() ? fallback : it->second.pr_uir_norm;
    }

    double median_norm() const;
};

// follower count over the dataset maximum; N_max == 0 means every user scores 0
double relationship_breadth(const UserNode& node, std::uint64_t n_max);

// alpha * B_verified + beta * retweets/NR_max, B_verified = 1.5 when verified else 1.0
double authority(const UserNode& node, std::uint64_t nr_max, double alpha, double beta);

struct ContextMaxima {
    std::uint64_t n_max = 0;
    std::uint64_t nr_max = 0;

    static ContextMaxima compute(const SocialGraph& g);
};

double self_influence(const UserNode& node, const ContextMaxima& maxima, double alpha, double beta);

struct UirOptions {
    double damping = 0.85;
    double tolerance = 1e-6;
    std::size_t max_iterations = 100;
    double alpha = 0.5;
    double beta = 0.5;
};

// Fixed point of PR(i) = PR_influence(i) + d * sum_{j in N(i)} PR(j)/LR(j) + (1-d),
// iterated from an all-ones start until the max per-node change drops below
// tolerance. LR(j) is the out-degree; nodes with LR == 0 contribute to nobody.
InfluenceTable uir_pagerank(const SocialGraph& g, const UirOptions& options = {});

// Descending raw PR_UIR, ties broken by user_id.
std::vector<std::string> rank_users(const InfluenceTable& table);

// One edge (author -> mentioned user) per distinct pair; node attributes are
// taken from each author's records (max counts win). Mentioned users that
// never authored a tweet become attribute-less nodes.
SocialGraph derive_graph_from_mentions(const std::vector<ingest::TweetRecord>& records);

SocialGraph load_edge_graph(const std::string& path, const std::vector<ingest::TweetRecord>& records);

// Ranked CSV export; a negative limit keeps every row.
std::string influence_table_csv(const InfluenceTable& table, std::int64_t limit = -1);

}  // namespace propnet::influence

#endif  // PROPNET_INFLUENCE_INFLUENCE_HPP
