#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "shadowmarket/common.hpp"

namespace smk {

using IdSet = std::set<std::string>;

enum class Label { suspicious, legitimate };

inline const char* label_name(Label l) {
    return l == Label::suspicious ? "suspicious" : "legitimate";
}

inline std::optional<Label> label_from_string(std::string_view s) {
    if (s == "suspicious") return Label::suspicious;
    if (s == "legitimate") return Label::legitimate;
    return std::nullopt;
}

struct TweetRecord {
    UtcSeconds timestamp = 0;
    std::string text;
    std::vector<std::string> hashtags;
    std::vector<std::string> mentions;
    bool is_retweet = false;
    std::optional<std::string> retweeted_of;
    std::set<std::string> languages;

    bool operator==(const TweetRecord&) const = default;
};

struct AccountDossier {
    std::string account_id;
    UtcSeconds created_at = 0;
    std::optional<std::string> bio;
    std::vector<std::string> bio_urls;
    std::uint64_t post_count = 0;
    bool listed = false;
    bool verified = false;
    std::uint64_t follower_count = 0;
    std::uint64_t friend_count = 0;
    IdSet follower_ids;   // edge sample present in the data; may be smaller than follower_count
    IdSet friend_ids;
    std::vector<TweetRecord> tweets;  // ordered by non-decreasing timestamp
    std::optional<double> reputation_score;  // in [0,100] when present
    std::vector<std::string> subscribed_merchant_ids;

    bool operator==(const AccountDossier&) const = default;
};

struct Snapshot {
    UtcSeconds ts = 0;
    IdSet follower_ids;

    bool operator==(const Snapshot&) const = default;
};

struct SnapshotSeries {
    std::string subject_id;
    std::vector<Snapshot> snapshots;  // strictly increasing timestamps

    bool operator==(const SnapshotSeries&) const = default;
};

struct FollowDelta {
    UtcSeconds t_prev = 0;
    UtcSeconds t_next = 0;
    IdSet gained;
    IdSet lost;
};

enum class Scheme { freemium, premium };

inline const char* scheme_name(Scheme s) { return s == Scheme::freemium ? "freemium" : "premium"; }

inline std::optional<Scheme> scheme_from_string(std::string_view s) {
    if (s == "freemium") return Scheme::freemium;
    if (s == "premium") return Scheme::premium;
    return std::nullopt;
}

struct Promise {
    std::string promise_id;
    double expect = 0.0;
    std::string unit;

    bool operator==(const Promise&) const = default;
};

struct Performance {
    std::string promise_id;
    double perform = 0.0;

    bool operator==(const Performance&) const = default;
};

struct Merchant {
    std::string merchant_id;
    std::set<Scheme> schemes;
    std::vector<Promise> promises;
    std::vector<Performance> performances;  // promise_ids must exist in promises
    std::uint64_t traffic_rank = 1;         // lower = more popular
    std::uint64_t promo_tweet_count = 0;
    bool has_twitter_profile = false;

    bool operator==(const Merchant&) const = default;
};

struct Dataset {
    std::map<std::string, AccountDossier> accounts;
    std::map<std::string, Merchant> merchants;
    std::map<std::string, SnapshotSeries> snapshots;
    std::map<std::string, Label> labels;
    std::set<std::string> spam_lexicon;       // lowercased words
    std::vector<std::string> url_blacklist;   // entries as listed in the file
};

// ---------------------------------------------------------------------------
// Snapshot differencing.
// ---------------------------------------------------------------------------

inline FollowDelta diff_snapshots(const Snapshot& prev, const Snapshot& next) {
    FollowDelta d;
    d.t_prev = prev.ts;
    d.t_next = next.ts;
    std::set_difference(next.follower_ids.begin(), next.follower_ids.end(),
                        prev.follower_ids.begin(), prev.follower_ids.end(),
                        std::inserter(d.gained, d.gained.end()));
    std::set_difference(prev.follower_ids.begin(), prev.follower_ids.end(),
                        next.follower_ids.begin(), next.follower_ids.end(),
                        std::inserter(d.lost, d.lost.end()));
    return d;
}

/// Per-UTC-day unfollow counts over the observed span. Index 0 is the calendar
/// day of the first snapshot; a loss is attributed to the day of the later
/// snapshot of its diff pair. Days without losses are present with count 0.
inline std::vector<std::uint64_t> daily_unfollow_counts(const SnapshotSeries& series) {
    if (series.snapshots.size() < 2) {
        throw insufficient_data_error("daily_unfollow_counts: need at least 2 snapshots for '" +
                                      series.subject_id + "'");
    }
    const std::int64_t day0 = utc_day(series.snapshots.front().ts);
    const std::int64_t day_last = utc_day(series.snapshots.back().ts);
    std::vector<std::uint64_t> counts(static_cast<std::size_t>(day_last - day0 + 1), 0);
    for (std::size_t i = 1; i < series.snapshots.size(); ++i) {
        const FollowDelta d = diff_snapshots(series.snapshots[i - 1], series.snapshots[i]);
        const std::int64_t day = utc_day(d.t_next) - day0;
        counts[static_cast<std::size_t>(day)] += d.lost.size();
    }
    return counts;
}

}  // namespace smk
