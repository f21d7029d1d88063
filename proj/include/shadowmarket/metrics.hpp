#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "shadowmarket/model.hpp"

namespace smk {

// ---------------------------------------------------------------------------
// Engagement: how many of the subject's peers she interacts with (coverage)
// times what share of her interactions target peers (share). Both factors live
// in [0,1], so the product does too. Degenerate inputs (no peers, no actions)
// score 0.
// ---------------------------------------------------------------------------

struct EngagementScore {
    double value = 0.0;
    std::uint64_t n_peers = 0;
    std::uint64_t total_actions = 0;

    bool operator==(const EngagementScore&) const = default;
};

inline EngagementScore retweet_engagement(const AccountDossier& subject, const IdSet& friend_ids) {
    EngagementScore s;
    s.n_peers = friend_ids.size();
    IdSet friends_retweeted;
    std::uint64_t targeting = 0;
    for (const auto& t : subject.tweets) {
        if (!t.is_retweet) continue;
        ++s.total_actions;
        if (t.retweeted_of && friend_ids.count(*t.retweeted_of)) {
            ++targeting;
            friends_retweeted.insert(*t.retweeted_of);
        }
    }
    if (s.n_peers == 0 || s.total_actions == 0) return s;
    const double coverage =
        static_cast<double>(friends_retweeted.size()) / static_cast<double>(s.n_peers);
    const double share = static_cast<double>(targeting) / static_cast<double>(s.total_actions);
    s.value = coverage * share;
    return s;
}

inline EngagementScore mention_engagement(const AccountDossier& subject, const IdSet& friend_ids) {
    EngagementScore s;
    s.n_peers = friend_ids.size();
    IdSet friends_mentioned;
    std::uint64_t targeting = 0;
    for (const auto& t : subject.tweets) {
        for (const auto& m : t.mentions) {
            ++s.total_actions;
            if (friend_ids.count(m)) {
                ++targeting;
                friends_mentioned.insert(m);
            }
        }
    }
    if (s.n_peers == 0 || s.total_actions == 0) return s;
    const double coverage =
        static_cast<double>(friends_mentioned.size()) / static_cast<double>(s.n_peers);
    const double share = static_cast<double>(targeting) / static_cast<double>(s.total_actions);
    s.value = coverage * share;
    return s;
}

/// Fraction of peers sharing at least one tweet language with the subject.
inline double language_overlap(const std::set<std::string>& subject_langs,
                               const std::vector<std::set<std::string>>& peer_langs) {
    if (peer_langs.empty()) return 0.0;
    std::size_t overlapping = 0;
    for (const auto& peer : peer_langs) {
        bool any = false;
        for (const auto& l : subject_langs) {
            if (peer.count(l)) {
                any = true;
                break;
            }
        }
        if (any) ++overlapping;
    }
    return static_cast<double>(overlapping) / static_cast<double>(peer_langs.size());
}

// ---------------------------------------------------------------------------
// Unfollow entropy: Shannon entropy of the per-day unfollow distribution,
// normalized by the T-day maximum so the score is in [0,1]. A point mass (all
// unfollows on a single day) scores 0; a uniform spread scores 1. The log base
// cancels in the ratio; log2 is used for readable hand checks.
// ---------------------------------------------------------------------------

inline double unfollow_entropy(const std::vector<std::uint64_t>& daily_counts) {
    if (daily_counts.empty())
        throw insufficient_data_error("unfollow_entropy: empty day list");
    const std::size_t T = daily_counts.size();
    std::uint64_t total = 0;
    for (auto c : daily_counts) total += c;
    if (total == 0 || T == 1) return 0.0;
    double h = 0.0;
    for (auto c : daily_counts) {
        if (c == 0) continue;
        const double p = static_cast<double>(c) / static_cast<double>(total);
        h -= p * std::log2(p);
    }
    return h / std::log2(static_cast<double>(T));
}

// ---------------------------------------------------------------------------
// Follower/friends ratio. Division by zero is reported via an explicit flag,
// never as a non-finite double; downstream feature extraction maps the flag to
// a documented cap.
// ---------------------------------------------------------------------------

struct FollowerFriendRatio {
    double value = 0.0;
    bool infinite = false;

    bool operator==(const FollowerFriendRatio&) const = default;
};

inline FollowerFriendRatio follower_friend_ratio(const AccountDossier& subject) {
    FollowerFriendRatio r;
    if (subject.friend_count == 0) {
        if (subject.follower_count > 0) r.infinite = true;
        return r;
    }
    r.value = static_cast<double>(subject.follower_count) /
              static_cast<double>(subject.friend_count);
    return r;
}

// ---------------------------------------------------------------------------
// Continuous power-law MLE (Hill estimator with x_min = sample minimum):
//   alpha = 1 + n / sum(ln(x_i / x_min)),  sigma = (alpha - 1) / sqrt(n).
// ---------------------------------------------------------------------------

struct PowerLawFit {
    double alpha = 0.0;
    double sigma = 0.0;
    double x_min = 0.0;
    std::size_t n = 0;

    bool operator==(const PowerLawFit&) const = default;
};

inline PowerLawFit fit_power_law(const std::vector<double>& samples) {
    if (samples.size() < 10)
        throw insufficient_data_error("fit_power_law: need at least 10 samples, got " +
                                      std::to_string(samples.size()));
    PowerLawFit fit;
    fit.n = samples.size();
    fit.x_min = *std::min_element(samples.begin(), samples.end());
    if (fit.x_min <= 0.0)
        throw computation_error("fit_power_law: samples must be positive");
    double log_sum = 0.0;
    for (double x : samples) log_sum += std::log(x / fit.x_min);
    if (log_sum <= 0.0)
        throw computation_error("fit_power_law: degenerate sample (all values equal)");
    fit.alpha = 1.0 + static_cast<double>(fit.n) / log_sum;
    fit.sigma = (fit.alpha - 1.0) / std::sqrt(static_cast<double>(fit.n));
    return fit;
}

/// Sample PCC. Throws when either series has zero variance.
inline double pearson(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size())
        throw computation_error("pearson: length mismatch");
    if (xs.size() < 2)
        throw insufficient_data_error("pearson: need at least 2 points");
    const double mx = mean_of(xs);
    const double my = mean_of(ys);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double dx = xs[i] - mx;
        const double dy = ys[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0)
        throw computation_error("pearson: undefined correlation (zero variance)");
    return sxy / std::sqrt(sxx * syy);
}

// ---------------------------------------------------------------------------
// Per-account content statistics over the dossier's tweet stream. `now` and
// the observation window come from the caller so results are reproducible.
// Spam-word matching is case-insensitive on token boundaries (no substring
// hits); the lexicon is expected lowercased.
// ---------------------------------------------------------------------------

struct ContentStats {
    double hashtags_per_tweet = 0.0;
    double spam_words_per_tweet = 0.0;
    double mean_tweet_length = 0.0;
    double num_languages = 0.0;
    double rt_fraction = 0.0;
    double mentions_per_tweet = 0.0;
    double seconds_since_last_tweet = 0.0;
    double tweets_per_day = 0.0;

    bool operator==(const ContentStats&) const = default;
};

inline ContentStats content_stats(const AccountDossier& subject,
                                  const std::set<std::string>& spam_lexicon, UtcSeconds now,
                                  std::int64_t window_seconds) {
    ContentStats cs;
    const std::size_t n = subject.tweets.size();
    if (n == 0) {
        cs.seconds_since_last_tweet = static_cast<double>(std::max<std::int64_t>(window_seconds, 0));
        return cs;
    }
    std::uint64_t hashtags = 0, mentions = 0, retweets = 0, spam_hits = 0;
    double length_sum = 0.0;
    std::set<std::string> languages;
    for (const auto& t : subject.tweets) {
        hashtags += t.hashtags.size();
        mentions += t.mentions.size();
        if (t.is_retweet) ++retweets;
        length_sum += static_cast<double>(t.text.size());
        languages.insert(t.languages.begin(), t.languages.end());
        if (!spam_lexicon.empty()) {
            for (const auto& tok : tokenize_lower(t.text))
                if (spam_lexicon.count(tok)) ++spam_hits;
        }
    }
    const double dn = static_cast<double>(n);
    cs.hashtags_per_tweet = static_cast<double>(hashtags) / dn;
    cs.spam_words_per_tweet = static_cast<double>(spam_hits) / dn;
    cs.mean_tweet_length = length_sum / dn;
    cs.num_languages = static_cast<double>(languages.size());
    cs.rt_fraction = static_cast<double>(retweets) / dn;
    cs.mentions_per_tweet = static_cast<double>(mentions) / dn;
    cs.seconds_since_last_tweet =
        static_cast<double>(std::max<std::int64_t>(now - subject.tweets.back().timestamp, 0));
    if (window_seconds > 0)
        cs.tweets_per_day = dn / (static_cast<double>(window_seconds) /
                                  static_cast<double>(kSecondsPerDay));
    return cs;
}

}  // namespace smk
