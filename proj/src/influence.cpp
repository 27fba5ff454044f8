#include "propnet/influence/influence.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "propnet/ingest/csv.hpp"

namespace propnet::influence {

void SocialGraph::add_edge(const std::string& from, const std::string& to) {
    if (!nodes.count(from) || !nodes.count(to))
        throw_error(ErrorKind::Domain, "SocialGraph: edge endpoint missing: " + from + " -> " + to);
    edges.insert({from, to});
}

double InfluenceTable::median_norm() const {
    if (scores.empty()) return 0.0;
    std::vector<double> values;
    values.reserve(scores.size());
    for (const auto& [id, s] : scores) values.push_back(s.pr_uir_norm);
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return (n % 2 == 1) ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

double relationship_breadth(const UserNode& node, std::uint64_t n_max) {
    if (n_max == 0) return 0.0;  // degenerate dataset: nobody has advocates
    return static_cast<double>(node.advocates) / static_cast<double>(n_max);
}

double authority(const UserNode& node, std::uint64_t nr_max, double alpha, double beta) {
    if (alpha < 0.0 || beta < 0.0) throw_error(ErrorKind::Config, "authority: alpha/beta must be nonnegative");
    const double b_verified = node.verified ? 1.5 : 1.0;
    const double activity =
        nr_max == 0 ? 0.0 : static_cast<double>(node.retweets_sent) / static_cast<double>(nr_max);
    return alpha * b_verified + beta * activity;
}

ContextMaxima ContextMaxima::compute(const SocialGraph& g) {
    ContextMaxima m;
    for (const auto& [id, node] : g.nodes) {
        m.n_max = std::max(m.n_max, node.advocates);
        m.nr_max = std::max(m.nr_max, node.retweets_sent);
    }
    return m;
}

double self_influence(const UserNode& node, const ContextMaxima& maxima, double alpha, double beta) {
    return relationship_breadth(node, maxima.n_max) + authority(node, maxima.nr_max, alpha, beta);
}

InfluenceTable uir_pagerank(const SocialGraph& g, const UirOptions& opt) {
    if (g.nodes.empty()) throw_error(ErrorKind::Domain, "uir_pagerank: empty graph");

    // stable node order = map order (sorted user_id)
    std::vector<std::string> ids;
    ids.reserve(g.nodes.size());
    for (const auto& [id, node] : g.nodes) ids.push_back(id);
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < ids.size(); ++i) index[ids[i]] = i;

    const std::size_t n = ids.size();
    std::vector<std::size_t> out_degree(n, 0);
    std::vector<std::vector<std::size_t>> inbox(n);  // inbox[i] = sources j with edge j -> i
    for (const auto& [from, to] : g.edges) {
        ++out_degree[index.at(from)];
        inbox[index.at(to)].push_back(index.at(from));
    }

    ContextMaxima maxima = ContextMaxima::compute(g);
    std::vector<double> personalization(n);
    std::vector<double> breadth(n), authority_score(n);
    for (std::size_t i = 0; i < n; ++i) {
        const UserNode& node = g.nodes.at(ids[i]);
        breadth[i] = relationship_breadth(node, maxima.n_max);
        authority_score[i] = authority(node, maxima.nr_max, opt.alpha, opt.beta);
        personalization[i] = breadth[i] + authority_score[i];
    }

    std::vector<double> pr(n, 1.0), next(n, 0.0);
    double residual = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
    while (iterations < opt.max_iterations) {
        ++iterations;
        for (std::size_t i = 0; i < n; ++i) {
            double acc = 0.0;
            for (std::size_t j : inbox[i]) acc += pr[j] / static_cast<double>(out_degree[j]);
            next[i] = personalization[i] + opt.damping * acc + (1.0 - opt.damping);
        }
        residual = 0.0;
        for (std::size_t i = 0; i < n; ++i) residual = std::max(residual, std::abs(next[i] - pr[i]));
        pr.swap(next);
        if (residual < opt.tolerance) {
            converged = true;
            break;
        }
    }
    if (!converged)
        throw_error(ErrorKind::Convergence, "uir_pagerank: no convergence after " +
                                                std::to_string(iterations) + " iterations, residual " +
                                                std::to_string(residual));

    double lo = pr[0], hi = pr[0];
    for (double v : pr) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }

    InfluenceTable table;
    table.iterations = iterations;
    table.residual = residual;
    for (std::size_t i = 0; i < n; ++i) {
        InfluenceScore s;
        s.pr_people = breadth[i];
        s.uad = authority_score[i];
        s.pr_influence = personalization[i];
        s.pr_uir_raw = pr[i];
        s.pr_uir_norm = hi > lo ? (pr[i] - lo) / (hi - lo) : 0.0;
        table.scores[ids[i]] = s;
    }
    return table;
}

std::vector<std::string> rank_users(const InfluenceTable& table) {
    if (table.scores.empty()) throw_error(ErrorKind::Domain, "rank_users: empty table");
    std::vector<std::string> ids;
    ids.reserve(table.scores.size());
    for (const auto& [id, s] : table.scores) ids.push_back(id);
    std::stable_sort(ids.begin(), ids.end(), [&table](const std::string& a, const std::string& b) {
        double ra = table.scores.at(a).pr_uir_raw;
        double rb = table.scores.at(b).pr_uir_raw;
        if (ra != rb) return ra > rb;
        return a < b;  // deterministic tie-break
    });
    return ids;
}

namespace {

void absorb_record(SocialGraph& g, const ingest::TweetRecord& r) {
    UserNode& node = g.nodes[r.user_id];
    node.user_id = r.user_id;
    node.advocates = std::max(node.advocates, r.followers);
    node.retweets_sent = std::max(node.retweets_sent, r.retweets);
    node.verified = node.verified || r.verified;
}

}  // namespace

SocialGraph derive_graph_from_mentions(const std::vector<ingest::TweetRecord>& records) {
    SocialGraph g;
    g.origin = GraphOrigin::DerivedFromMentions;
    for (const ingest::TweetRecord& r : records) absorb_record(g, r);
    for (const ingest::TweetRecord& r : records) {
        for (const std::string& mentioned : r.mentions) {
            if (mentioned == r.user_id) continue;
            UserNode& node = g.nodes[mentioned];  // mentioned-only users get bare nodes
            node.user_id = mentioned;
            g.edges.insert({r.user_id, mentioned});
        }
    }
    return g;
}

SocialGraph load_edge_graph(const std::string& path, const std::vector<ingest::TweetRecord>& records) {
    SocialGraph g;
    g.origin = GraphOrigin::ExplicitEdgeFile;
    for (const ingest::TweetRecord& r : records) absorb_record(g, r);
    auto rows = ingest::read_csv_file(path);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (i == 0 && rows[i].size() >= 2 && rows[i][0] == "from_user") continue;  // optional header
        if (rows[i].size() < 2)
            throw_error(ErrorKind::Schema, "edge file row " + std::to_string(i + 1) + ": expected from_user,to_user");
        const std::string& from = rows[i][0];
        const std::string& to = rows[i][1];
        if (from.empty() || to.empty() || from == to) continue;
        g.nodes[from].user_id = from;
        g.nodes[to].user_id = to;
        g.edges.insert({from, to});
    }
    return g;
}

std::string influence_table_csv(const InfluenceTable& table, std::int64_t limit) {
    std::ostringstream out;
    out << "user_id,pr_people,uad,pr_influence,pr_uir_raw,pr_uir_norm\n";
    if (limit == 0) return out.str();
    char buf[256];
    std::int64_t written = 0;
    for (const std::string& id : rank_users(table)) {
        if (limit > 0 && written >= limit) break;
        const InfluenceScore& s = table.scores.at(id);
        std::snprintf(buf, sizeof buf, "%.9f,%.9f,%.9f,%.9f,%.9f", s.pr_people, s.uad, s.pr_influence, s.pr_uir_raw,
                      s.pr_uir_norm);
        out << ingest::csv_escape(id) << ',' << buf << '\n';
        ++written;
    }
    return out.str();
}

}  // namespace propnet::influence
