#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "shadowmarket/metrics.hpp"
#include "shadowmarket/model.hpp"

namespace smk {

// ---------------------------------------------------------------------------
// Quality of service. A merchant promises a value (EXPECT) per term of
// service and is measured on what it delivered (PERFORM):
//
//   term = 1 - (EXPECT - PERFORM) / PERFORM
//
// Meeting a promise exactly scores 1, overdelivery scores above 1, and the
// merchant score is the unweighted mean of its measured terms.
// ---------------------------------------------------------------------------

inline double per_promise_score(double expect, double perform) {
    if (!(perform > 0.0))
        throw computation_error("per_promise_score: perform must be positive");
    return 1.0 - (expect - perform) / perform;
}

struct QosResult {
    std::string merchant_id;
    std::vector<std::pair<std::string, double>> per_promise_terms;
    double qos = 0.0;

    bool operator==(const QosResult&) const = default;
};

inline QosResult merchant_qos(const Merchant& merchant) {
    QosResult r;
    r.merchant_id = merchant.merchant_id;
    for (const auto& perf : merchant.performances) {
        const Promise* promise = nullptr;
        for (const auto& p : merchant.promises) {
            if (p.promise_id == perf.promise_id) {
                promise = &p;
                break;
            }
        }
        if (!promise)
            throw validation_error("merchant_qos: performance for unknown promise '" +
                                   perf.promise_id + "'");
        r.per_promise_terms.emplace_back(perf.promise_id,
                                         per_promise_score(promise->expect, perf.perform));
    }
    if (r.per_promise_terms.empty())
        throw insufficient_data_error("merchant_qos: merchant '" + merchant.merchant_id +
                                      "' has no measured promises");
    double sum = 0.0;
    for (const auto& [id, term] : r.per_promise_terms) sum += term;
    r.qos = sum / static_cast<double>(r.per_promise_terms.size());
    return r;
}

// ---------------------------------------------------------------------------
// Popularity. Traffic rank is normalized against the worst rank in the set
// (lower rank = more popular), promotional-tweet counts against the busiest
// merchant, and the two are averaged.
// ---------------------------------------------------------------------------

inline std::map<std::string, double> alexa_norm(const std::map<std::string, std::uint64_t>& ranks) {
    if (ranks.empty())
        throw insufficient_data_error("alexa_norm: empty merchant set");
    std::uint64_t max_rank = 0;
    for (const auto& [id, rank] : ranks) {
        if (rank < 1) throw validation_error("alexa_norm: rank for '" + id + "' must be >= 1");
        max_rank = std::max(max_rank, rank);
    }
    std::map<std::string, double> out;
    for (const auto& [id, rank] : ranks)
        out[id] = 1.0 - static_cast<double>(rank) / static_cast<double>(max_rank);
    return out;
}

struct OsnPopularity {
    std::map<std::string, double> scores;
    bool all_zero = false;
};

inline OsnPopularity osn_popularity(const std::map<std::string, std::uint64_t>& tweet_counts) {
    if (tweet_counts.empty())
        throw insufficient_data_error("osn_popularity: empty merchant set");
    OsnPopularity out;
    std::uint64_t max_count = 0;
    for (const auto& [id, c] : tweet_counts) max_count = std::max(max_count, c);
    if (max_count == 0) {
        out.all_zero = true;
        for (const auto& [id, c] : tweet_counts) out.scores[id] = 0.0;
        return out;
    }
    for (const auto& [id, c] : tweet_counts)
        out.scores[id] = static_cast<double>(c) / static_cast<double>(max_count);
    return out;
}

struct PopularityResult {
    std::string merchant_id;
    double alexa_norm = 0.0;
    double osn_popularity = 0.0;
    double popularity = 0.0;

    bool operator==(const PopularityResult&) const = default;
};

inline std::vector<PopularityResult> merchant_popularity(
    const std::map<std::string, double>& alexa, const std::map<std::string, double>& osn) {
    std::vector<PopularityResult> out;
    for (const auto& [id, a] : alexa) {
        auto it = osn.find(id);
        if (it == osn.end())
            throw computation_error("merchant_popularity: missing OSN component for '" + id + "'");
        PopularityResult r;
        r.merchant_id = id;
        r.alexa_norm = a;
        r.osn_popularity = it->second;
        r.popularity = (a + it->second) / 2.0;
        out.push_back(std::move(r));
    }
    for (const auto& [id, o] : osn)
        if (!alexa.count(id))
            throw computation_error("merchant_popularity: missing rank component for '" + id + "'");
    return out;
}

// ---------------------------------------------------------------------------
// Knee point of a curve: the point farthest (perpendicular distance) from the
// chord joining the endpoints. Ties break toward smaller x. A collinear curve
// has no knee. The selection is invariant under uniform affine rescaling of
// both axes.
// ---------------------------------------------------------------------------

struct KneePoint {
    double x = 0.0;
    double y = 0.0;
    bool found = false;

    bool operator==(const KneePoint&) const = default;
};

inline KneePoint knee_point(const std::vector<std::pair<double, double>>& curve) {
    if (curve.size() < 3)
        throw insufficient_data_error("knee_point: need at least 3 points");
    for (std::size_t i = 1; i < curve.size(); ++i)
        if (!(curve[i].first > curve[i - 1].first))
            throw validation_error("knee_point: x values must be strictly increasing");

    const auto [ax, ay] = curve.front();
    const auto [bx, by] = curve.back();
    const double ux = bx - ax, uy = by - ay;
    const double chord_sq = ux * ux + uy * uy;

    double best = 0.0;
    std::size_t best_i = 0;
    for (std::size_t i = 1; i + 1 < curve.size(); ++i) {
        const double px = curve[i].first - ax, py = curve[i].second - ay;
        const double cross = std::fabs(ux * py - uy * px);
        if (cross > best) {
            best = cross;
            best_i = i;
        }
    }
    KneePoint k;
    // |cross| scales with the square of a uniform rescale, as does chord_sq,
    // so this flatness cutoff is scale-free.
    if (best_i == 0 || best <= 1e-9 * chord_sq) return k;
    k.x = curve[best_i].first;
    k.y = curve[best_i].second;
    k.found = true;
    return k;
}

// ---------------------------------------------------------------------------
// Leader extraction. Merchants are ranked by popularity; the leader set is
// either the top k or everyone above a score threshold. The market counts as
// an oligopoly when a nonempty strict-subset leader group sits clearly above
// the rest.
// ---------------------------------------------------------------------------

constexpr double kOligopolyGap = 0.15;

struct LeaderReport {
    std::vector<PopularityResult> ranked;   // descending popularity
    std::vector<std::string> leaders;
    std::optional<double> gap;              // last leader minus first runner-up
    bool oligopoly = false;
};

struct LeaderQuery {
    std::optional<std::size_t> top_k;
    std::optional<double> threshold;        // leaders strictly above this
};

inline LeaderReport rank_leaders(std::vector<PopularityResult> pops, const LeaderQuery& query) {
    if (pops.empty())
        throw insufficient_data_error("rank_leaders: empty merchant set");
    std::sort(pops.begin(), pops.end(), [](const PopularityResult& a, const PopularityResult& b) {
        if (a.popularity != b.popularity) return a.popularity > b.popularity;
        return a.merchant_id < b.merchant_id;
    });
    LeaderReport r;
    r.ranked = std::move(pops);
    std::size_t k = 0;
    if (query.threshold) {
        while (k < r.ranked.size() && r.ranked[k].popularity > *query.threshold) ++k;
    } else {
        k = std::min(query.top_k.value_or(5), r.ranked.size());
    }
    for (std::size_t i = 0; i < k; ++i) r.leaders.push_back(r.ranked[i].merchant_id);
    if (k > 0 && k < r.ranked.size()) {
        r.gap = r.ranked[k - 1].popularity - r.ranked[k].popularity;
        r.oligopoly = *r.gap >= kOligopolyGap;
    }
    return r;
}

// ---------------------------------------------------------------------------
// Customer-side follower retention: dips in the follower count of a monitored
// account, plus the correlation between count and hour-of-day (phony-follower
// churn shows no daily rhythm).
// ---------------------------------------------------------------------------

struct DipEvent {
    UtcSeconds ts = 0;
    std::uint64_t drop = 0;

    bool operator==(const DipEvent&) const = default;
};

struct RetentionReport {
    std::string subject_id;
    std::vector<std::pair<UtcSeconds, std::uint64_t>> counts;  // per snapshot
    std::vector<DipEvent> dips;
    std::optional<double> pcc_vs_hour;  // empty when either series is constant
};

inline RetentionReport retention_report(const SnapshotSeries& series) {
    if (series.snapshots.size() < 24)
        throw insufficient_data_error("retention_report: need at least 24 snapshots for '" +
                                      series.subject_id + "'");
    RetentionReport r;
    r.subject_id = series.subject_id;
    std::vector<double> counts, hours;
    for (const auto& s : series.snapshots) {
        r.counts.emplace_back(s.ts, s.follower_ids.size());
        counts.push_back(static_cast<double>(s.follower_ids.size()));
        hours.push_back(static_cast<double>(utc_hour(s.ts)));
    }
    for (std::size_t i = 1; i < r.counts.size(); ++i) {
        if (r.counts[i].second < r.counts[i - 1].second)
            r.dips.push_back({r.counts[i].first, r.counts[i - 1].second - r.counts[i].second});
    }
    try {
        r.pcc_vs_hour = pearson(counts, hours);
    } catch (const computation_error&) {
        r.pcc_vs_hour.reset();
    }
    return r;
}

// ---------------------------------------------------------------------------
// QoS vs popularity scatter.
// ---------------------------------------------------------------------------

struct QosPopularityReport {
    std::vector<std::pair<std::string, std::pair<double, double>>> rows;  // id -> (qos, popularity)
    std::optional<double> pcc;
};

inline QosPopularityReport qos_popularity_report(const std::map<std::string, double>& qos,
                                                 const std::map<std::string, double>& popularity) {
    QosPopularityReport r;
    std::vector<double> xs, ys;
    for (const auto& [id, q] : qos) {
        auto it = popularity.find(id);
        if (it == popularity.end()) continue;
        r.rows.emplace_back(id, std::make_pair(q, it->second));
        xs.push_back(q);
        ys.push_back(it->second);
    }
    if (r.rows.size() < 2)
        throw insufficient_data_error("qos_popularity_report: need at least 2 shared merchants");
    try {
        r.pcc = pearson(xs, ys);
    } catch (const computation_error&) {
        r.pcc.reset();
    }
    return r;
}

// ---------------------------------------------------------------------------
// Customer profiling: reputation threshold exceedance, blacklisted bio URLs,
// dominant bio terms, and per-merchant subscription counts.
// ---------------------------------------------------------------------------

inline std::string strip_url_scheme(std::string url) {
    url = to_lower(url);
    for (const char* scheme : {"https://", "http://"}) {
        if (url.rfind(scheme, 0) == 0) {
            url.erase(0, std::string(scheme).size());
            break;
        }
    }
    if (!url.empty() && url.back() == '/') url.pop_back();
    return url;
}

inline std::string url_host(const std::string& url) {
    std::string s = strip_url_scheme(url);
    auto slash = s.find('/');
    return slash == std::string::npos ? s : s.substr(0, slash);
}

/// An entry matches on full (scheme-stripped) equality, or on host equality
/// for bare-host entries.
inline bool url_blacklisted(const std::string& url, const std::vector<std::string>& blacklist) {
    const std::string norm = strip_url_scheme(url);
    const std::string host = url_host(url);
    for (const auto& entry : blacklist) {
        const std::string e = strip_url_scheme(entry);
        if (e == norm || e == host) return true;
    }
    return false;
}

struct CustomerProfileReport {
    std::size_t n_customers = 0;
    std::size_t n_with_reputation = 0;
    double frac_above_threshold = 0.0;   // of customers carrying a reputation score
    double frac_with_blacklisted_url = 0.0;
    std::vector<std::pair<std::string, std::uint64_t>> top_bio_terms;
    std::size_t verified_count = 0;
    std::map<std::string, std::uint64_t> subscriptions_by_merchant;
};

inline CustomerProfileReport customer_profile_report(const std::vector<AccountDossier>& customers,
                                                     const std::vector<std::string>& url_blacklist,
                                                     const std::set<std::string>& stopwords,
                                                     double reputation_threshold = 40.0,
                                                     std::size_t top_n_terms = 20) {
    CustomerProfileReport r;
    r.n_customers = customers.size();
    if (customers.empty()) return r;

    std::size_t above = 0, with_bad_url = 0;
    std::map<std::string, std::uint64_t> term_counts;
    for (const auto& c : customers) {
        if (c.reputation_score) {
            ++r.n_with_reputation;
            if (*c.reputation_score > reputation_threshold) ++above;
        }
        bool bad = false;
        for (const auto& u : c.bio_urls) bad = bad || url_blacklisted(u, url_blacklist);
        if (bad) ++with_bad_url;
        if (c.verified) ++r.verified_count;
        if (c.bio) {
            for (const auto& tok : tokenize_lower(*c.bio))
                if (!stopwords.count(tok)) ++term_counts[tok];
        }
        for (const auto& m : c.subscribed_merchant_ids) ++r.subscriptions_by_merchant[m];
    }
    if (r.n_with_reputation > 0)
        r.frac_above_threshold =
            static_cast<double>(above) / static_cast<double>(r.n_with_reputation);
    r.frac_with_blacklisted_url =
        static_cast<double>(with_bad_url) / static_cast<double>(customers.size());

    std::vector<std::pair<std::string, std::uint64_t>> terms(term_counts.begin(), term_counts.end());
    std::sort(terms.begin(), terms.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (terms.size() > top_n_terms) terms.resize(top_n_terms);
    r.top_bio_terms = std::move(terms);
    return r;
}

// ---------------------------------------------------------------------------
// Reputation proxy for datasets without external scores: a logistic squash of
// log-follower reach plus list membership, mapped to [0,100]. This is a rough
// stand-in, not a Klout-compatible score, and is only used when explicitly
// enabled.
// ---------------------------------------------------------------------------

inline double reputation_proxy(const AccountDossier& subject) {
    const double reach = std::log1p(static_cast<double>(subject.follower_count));
    const double z = 0.55 * reach + 1.2 * (subject.listed ? 1.0 : 0.0) - 4.0;
    return 100.0 / (1.0 + std::exp(-z));
}

}  // namespace smk
