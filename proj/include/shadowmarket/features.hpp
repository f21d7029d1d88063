#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "shadowmarket/market.hpp"
#include "shadowmarket/metrics.hpp"
#include "shadowmarket/model.hpp"

namespace smk {

using Matrix = std::vector<std::vector<double>>;

// ---------------------------------------------------------------------------
// The 18 features, grouped into four incrementally-added sets:
//   A — profile, B — network, C — content, D — behaviour.
// Order is fixed; a mask selects whole sets and masked-out entries are absent
// from the emitted vector (not zero-filled).
// ---------------------------------------------------------------------------

constexpr std::size_t kNumFeatures = 18;

constexpr std::array<const char*, kNumFeatures> kFeatureNames = {
    "has_bio",            // A
    "has_bio_url",        // A
    "post_count",         // A
    "social_reputation",  // A
    "follower_friend_ratio",  // B
    "follower_count",         // B
    "hashtags_per_tweet",    // C
    "spam_words_per_tweet",  // C
    "tweet_length",          // C
    "num_languages",         // C
    "rts_per_tweet",         // C
    "mentions_per_tweet",    // C
    "unfollow_entropy",       // D
    "rt_engagement",          // D
    "mention_engagement",     // D
    "language_overlap",       // D
    "time_since_last_tweet",  // D
    "tweets_per_day",         // D
};

constexpr std::array<char, kNumFeatures> kFeatureSet = {
    'A', 'A', 'A', 'A', 'B', 'B', 'C', 'C', 'C', 'C', 'C', 'C', 'D', 'D', 'D', 'D', 'D', 'D'};

constexpr std::size_t kRatioFeature = 4;  // global index of follower_friend_ratio

struct SetMask {
    bool a = false, b = false, c = false, d = false;

    bool operator==(const SetMask&) const = default;

    bool includes(char set) const {
        switch (set) {
            case 'A': return a;
            case 'B': return b;
            case 'C': return c;
            case 'D': return d;
            default: return false;
        }
    }

    std::size_t dimensions() const {
        std::size_t n = 0;
        for (char s : kFeatureSet) n += includes(s) ? 1 : 0;
        return n;
    }

    /// Global feature indices selected by this mask, in table order.
    std::vector<std::size_t> selected() const {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < kNumFeatures; ++i)
            if (includes(kFeatureSet[i])) idx.push_back(i);
        return idx;
    }

    std::string to_string() const {
        std::string s;
        if (a) s += 'A';
        if (b) s += 'B';
        if (c) s += 'C';
        if (d) s += 'D';
        return s;
    }

    static SetMask parse(const std::string& s) {
        SetMask m;
        for (char c : s) {
            switch (c) {
                case 'A': case 'a': m.a = true; break;
                case 'B': case 'b': m.b = true; break;
                case 'C': case 'c': m.c = true; break;
                case 'D': case 'd': m.d = true; break;
                default:
                    throw validation_error(std::string("unknown feature set '") + c + "'");
            }
        }
        if (!m.a && !m.b && !m.c && !m.d)
            throw validation_error("empty feature-set mask");
        return m;
    }

    static SetMask all() { return {true, true, true, true}; }
};

/// The default incremental ablation schedule: {A}, {A,B}, {A,B,C}, {A,B,C,D}.
inline std::vector<SetMask> incremental_masks() {
    return {{true, false, false, false},
            {true, true, false, false},
            {true, true, true, false},
            {true, true, true, true}};
}

struct FeatureVector {
    std::string account_id;
    std::vector<double> values;  // mask-selected entries in table order
    SetMask mask;
    bool ratio_capped = false;   // the ratio entry was an infinity mapped to the cap

    bool operator==(const FeatureVector&) const = default;
};

struct ExtractionContext {
    std::set<std::string> spam_lexicon;
    UtcSeconds now = 0;
    std::int64_t window_seconds = 0;
    double ratio_cap = 1e6;            // placeholder for infinite ratios
    bool use_reputation_proxy = false; // substitute a profile-derived proxy when unscored
};

/// Computes the masked feature vector for one account. `series` is required
/// only when set D is requested; `peer_languages` holds the tweet-language
/// sets of the subject's friends.
inline FeatureVector extract_features(const AccountDossier& subject, const SnapshotSeries* series,
                                      const std::vector<std::set<std::string>>& peer_languages,
                                      const ExtractionContext& ctx, SetMask mask) {
    FeatureVector fv;
    fv.account_id = subject.account_id;
    fv.mask = mask;

    std::array<double, kNumFeatures> full{};
    const ContentStats cs = (mask.c || mask.d)
                                ? content_stats(subject, ctx.spam_lexicon, ctx.now,
                                                ctx.window_seconds)
                                : ContentStats{};

    if (mask.a) {
        full[0] = subject.bio && !subject.bio->empty() ? 1.0 : 0.0;
        full[1] = subject.bio_urls.empty() ? 0.0 : 1.0;
        full[2] = static_cast<double>(subject.post_count);
        if (subject.reputation_score)
            full[3] = *subject.reputation_score;
        else if (ctx.use_reputation_proxy)
            full[3] = reputation_proxy(subject);
        else
            full[3] = 0.0;  // unscored and no proxy requested
    }
    if (mask.b) {
        const FollowerFriendRatio r = follower_friend_ratio(subject);
        if (r.infinite) {
            full[kRatioFeature] = ctx.ratio_cap;
            fv.ratio_capped = true;
        } else {
            full[kRatioFeature] = r.value;
        }
        full[5] = static_cast<double>(subject.follower_count);
    }
    if (mask.c) {
        full[6] = cs.hashtags_per_tweet;
        full[7] = cs.spam_words_per_tweet;
        full[8] = cs.mean_tweet_length;
        full[9] = cs.num_languages;
        full[10] = cs.rt_fraction;
        full[11] = cs.mentions_per_tweet;
    }
    if (mask.d) {
        if (!series)
            throw computation_error("extract_features: set D requires a snapshot series for '" +
                                    subject.account_id + "'");
        full[12] = unfollow_entropy(daily_unfollow_counts(*series));
        full[13] = retweet_engagement(subject, subject.friend_ids).value;
        full[14] = mention_engagement(subject, subject.friend_ids).value;
        std::set<std::string> own_langs;
        for (const auto& t : subject.tweets)
            own_langs.insert(t.languages.begin(), t.languages.end());
        full[15] = language_overlap(own_langs, peer_languages);
        full[16] = cs.seconds_since_last_tweet;
        full[17] = cs.tweets_per_day;
    }

    for (std::size_t i : mask.selected()) {
        if (!std::isfinite(full[i]))
            throw computation_error("extract_features: non-finite value for feature '" +
                                    std::string(kFeatureNames[i]) + "' of '" + subject.account_id +
                                    "'");
        fv.values.push_back(full[i]);
    }
    return fv;
}

// ---------------------------------------------------------------------------
// Column standardization (z-score with population std). Zero-variance columns
// pass through unchanged and are flagged.
// ---------------------------------------------------------------------------

struct Scaler {
    std::vector<double> offset;
    std::vector<double> scale;
    std::vector<bool> zero_variance;

    bool operator==(const Scaler&) const = default;

    bool identity() const { return offset.empty(); }

    std::vector<double> apply(const std::vector<double>& row) const {
        if (identity()) return row;
        if (row.size() != offset.size())
            throw computation_error("scaler: expected " + std::to_string(offset.size()) +
                                    " columns, got " + std::to_string(row.size()));
        std::vector<double> out(row.size());
        for (std::size_t j = 0; j < row.size(); ++j) out[j] = (row[j] - offset[j]) / scale[j];
        return out;
    }

    Matrix apply(const Matrix& m) const {
        Matrix out;
        out.reserve(m.size());
        for (const auto& row : m) out.push_back(apply(row));
        return out;
    }
};

inline std::pair<Matrix, Scaler> standardize(const Matrix& m) {
    if (m.size() < 2)
        throw insufficient_data_error("standardize: need at least 2 rows");
    const std::size_t cols = m.front().size();
    for (const auto& row : m)
        if (row.size() != cols)
            throw computation_error("standardize: ragged matrix");

    Scaler s;
    s.offset.assign(cols, 0.0);
    s.scale.assign(cols, 1.0);
    s.zero_variance.assign(cols, false);
    const double n = static_cast<double>(m.size());
    for (std::size_t j = 0; j < cols; ++j) {
        double mean = 0.0;
        for (const auto& row : m) mean += row[j];
        mean /= n;
        double var = 0.0;
        for (const auto& row : m) var += (row[j] - mean) * (row[j] - mean);
        var /= n;
        if (var > 0.0) {
            s.offset[j] = mean;
            s.scale[j] = std::sqrt(var);
        } else {
            s.zero_variance[j] = true;  // column left as-is
        }
    }
    return {s.apply(m), s};
}

}  // namespace smk
