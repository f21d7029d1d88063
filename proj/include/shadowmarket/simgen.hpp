#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "shadowmarket/io.hpp"
#include "shadowmarket/model.hpp"

namespace smk {

// ---------------------------------------------------------------------------
// Seeded synthetic follower-market generator.
//
// Suspicious accounts are produced in five scripted "campaign batches": bot
// herds cloned from a shared playbook with small per-account jitter, which is
// both how such accounts look in the wild and what gives each batch a crisp
// statistical signature. Profile and content behaviour is deliberately bland
// — the batches sit inside the normal range of the nine legitimate behaviour
// archetypes — while the follower-churn pattern is what separates them. One
// batch (the "premium" bots) shadows a large legitimate archetype on every
// profile, network and content column; only its churn gives it away.
// ---------------------------------------------------------------------------

struct GeneratorConfig {
    std::size_t n_suspicious = 650;
    std::size_t n_legitimate = 1350;
    std::size_t n_customers = 40;
    std::size_t n_ambient = 48;

    std::size_t merchants_freemium = 12;
    std::size_t merchants_premium = 5;
    std::size_t merchants_dual = 48;
    std::size_t n_leaders = 5;

    UtcSeconds base_ts = 1772323200;  // 2026-03-01T00:00:00Z
    std::size_t observation_days = 15;

    std::size_t snapshot_pool = 45;       // follower ids tracked per labeled account
    std::size_t customer_pool_min = 60;   // customer follower set bounds
    std::size_t customer_pool_max = 120;

    double level_jitter = 0.015;      // multiplicative jitter on batch levels
    double reputation_jitter = 0.45;  // additive, suspicious accounts
    double ratio_x_min = 0.25;        // smallest batch follower/friend ratio
    double ratio_growth = 1.8386;     // geometric spacing between batch ratios

    bool operator==(const GeneratorConfig&) const = default;
};

inline ordered_json generator_config_to_json(const GeneratorConfig& c) {
    ordered_json j;
    j["n_suspicious"] = c.n_suspicious;
    j["n_legitimate"] = c.n_legitimate;
    j["n_customers"] = c.n_customers;
    j["n_ambient"] = c.n_ambient;
    j["merchants"] = {{"freemium_only", c.merchants_freemium},
                      {"premium_only", c.merchants_premium},
                      {"dual", c.merchants_dual},
                      {"leaders", c.n_leaders}};
    j["base_timestamp"] = format_iso8601(c.base_ts);
    j["observation_days"] = c.observation_days;
    j["snapshot_pool"] = c.snapshot_pool;
    j["customer_pool_min"] = c.customer_pool_min;
    j["customer_pool_max"] = c.customer_pool_max;
    j["level_jitter"] = c.level_jitter;
    j["reputation_jitter"] = c.reputation_jitter;
    j["ratio_x_min"] = c.ratio_x_min;
    j["ratio_growth"] = c.ratio_growth;
    return j;
}

inline GeneratorConfig generator_config_from_json(const ordered_json& j) {
    GeneratorConfig c;
    auto get = [&](const char* key, auto& out) {
        if (j.contains(key)) out = j.at(key).template get<std::decay_t<decltype(out)>>();
    };
    get("n_suspicious", c.n_suspicious);
    get("n_legitimate", c.n_legitimate);
    get("n_customers", c.n_customers);
    get("n_ambient", c.n_ambient);
    if (j.contains("merchants")) {
        const auto& m = j.at("merchants");
        if (m.contains("freemium_only")) c.merchants_freemium = m.at("freemium_only").get<std::size_t>();
        if (m.contains("premium_only")) c.merchants_premium = m.at("premium_only").get<std::size_t>();
        if (m.contains("dual")) c.merchants_dual = m.at("dual").get<std::size_t>();
        if (m.contains("leaders")) c.n_leaders = m.at("leaders").get<std::size_t>();
    }
    if (j.contains("base_timestamp"))
        c.base_ts = parse_iso8601(j.at("base_timestamp").get<std::string>());
    get("observation_days", c.observation_days);
    get("snapshot_pool", c.snapshot_pool);
    get("customer_pool_min", c.customer_pool_min);
    get("customer_pool_max", c.customer_pool_max);
    get("level_jitter", c.level_jitter);
    get("reputation_jitter", c.reputation_jitter);
    get("ratio_x_min", c.ratio_x_min);
    get("ratio_growth", c.ratio_growth);
    if (c.observation_days < 2) throw validation_error("generator: observation_days must be >= 2");
    if (c.n_ambient < 16) throw validation_error("generator: need at least 16 ambient accounts");
    if (c.customer_pool_min < 20 || c.customer_pool_max < c.customer_pool_min)
        throw validation_error("generator: bad customer pool bounds");
    if (c.ratio_x_min <= 0.0 || c.ratio_growth <= 1.0)
        throw validation_error("generator: ratio ladder must be positive and increasing");
    return c;
}

inline GeneratorConfig load_generator_config(const std::string& path) {
    ordered_json j = ordered_json::parse(read_file(path));
    return generator_config_from_json(j);
}

struct GroundTruth {
    std::map<std::string, Label> labels;            // true labels
    std::map<std::string, std::string> cohort_of;   // account -> generation cohort
    std::vector<std::string> customer_ids;
    std::vector<std::string> leader_ids;

    bool operator==(const GroundTruth&) const = default;
};

inline ordered_json ground_truth_to_json(const GroundTruth& t) {
    ordered_json j;
    j["format"] = "shadowmarket-ground-truth";
    j["version"] = 1;
    ordered_json labels = ordered_json::object();
    for (const auto& [id, l] : t.labels) labels[id] = label_name(l);
    j["labels"] = std::move(labels);
    ordered_json cohorts = ordered_json::object();
    for (const auto& [id, c] : t.cohort_of) cohorts[id] = c;
    j["cohorts"] = std::move(cohorts);
    j["customers"] = t.customer_ids;
    j["leaders"] = t.leader_ids;
    return j;
}

struct GeneratedMarket {
    Dataset dataset;
    GroundTruth truth;
};

namespace detail {

// Campaign playbooks for the suspicious batches. `active_days` of the
// observed day-to-day transitions carry follower removals (evenly, so the
// normalized churn entropy is log(active)/log(T)); `removals` is the count
// shed on each such day. Follower counts all sit near one band — the batches
// differ in who they claim to follow, not how many follow them.
struct PhonyBatch {
    const char* name;
    int active_days;
    std::uint64_t removals;
    double reputation;
    double post_count;
    double follower_band;
    int ratio_rank;         // ratio level = x_min * growth^rank
    std::size_t n_tweets;
    double hashtags;        // per-tweet target, realized by a cycled pattern
    double spam_words;
    std::size_t tweet_len;
    const char* lang_a;
    const char* lang_b;
    double rt_frac;
    double mention_frac;
    double last_tweet_days;
};

inline constexpr std::array<PhonyBatch, 5> kPhonyBatches = {{
    {"burst-churn", 13, 2, 2.0, 195.0, 2000.0, 0, 42, 1.1, 0.5, 62, "es", "pt", 0.30, 0.20, 1.30},
    {"steady-churn", 11, 2, 13.0, 210.0, 2010.0, 1, 44, 1.1, 0.5, 62, "es", "de", 0.30, 0.20, 1.25},
    {"slow-churn", 8, 2, 5.0, 225.0, 1990.0, 2, 46, 1.1, 0.5, 62, "pt", "ru", 0.30, 0.20, 1.20},
    {"premium", 6, 3, 9.0, 205.0, 2005.0, 3, 44, 1.1, 0.5, 62, "es", "fr", 0.30, 0.20, 1.40},
    {"dormant", 3, 3, 17.0, 218.0, 1995.0, 4, 40, 1.1, 0.5, 62, "en", "es", 0.30, 0.20, 1.35},
}};

inline constexpr double kPhonyBioProb = 0.5;
inline constexpr double kPhonyUrlProb = 0.35;
inline constexpr double kPhonyPeerMatch = 0.5;  // friends tweeting one of the batch languages

// Behaviour archetypes for legitimate accounts. share is in tenths of the
// legitimate population. Archetype 0 intentionally shadows the "premium"
// batch on sets A, B and C (its churn pattern is the only difference), and a
// few deliberately extreme archetypes (curator, chatter, celebrity) keep the
// population's spread realistic.
struct LegitArchetype {
    const char* name;
    int share_tenths;
    double reputation, reputation_sigma;
    double p_bio, p_url;
    double post_count;
    double follower_count;
    double friend_count;
    std::size_t n_tweets;
    double hashtags;
    double spam_words;
    std::size_t tweet_len;
    const char* lang_a;
    const char* lang_b;       // nullptr when absent
    const char* lang_c;
    double rt_frac;
    double mention_frac;
    int mention_burst;        // mentions added per mentioning tweet
    double p_rt_friend;       // retweet targets a friend vs a stranger
    double p_mention_friend;
    double last_tweet_days;
    double peer_match;        // fraction of friends tweeting one of the languages
};

inline constexpr std::array<LegitArchetype, 9> kLegitArchetypes = {{
    {"bilingual-fan", 2, 9.0, 2.0, 0.50, 0.35, 205.0, 3200.0, 4600.0, 42, 1.05, 0.5, 62, "es", "fr", nullptr, 0.32, 0.21, 1, 0.0, 0.0, 1.4, 0.5},
    {"neighborly", 1, 24.0, 4.0, 0.70, 0.50, 120.0, 800.0, 700.0, 15, 0.6, 0.15, 78, "en", "es", nullptr, 0.22, 0.30, 1, 0.8, 0.7, 0.3, 0.6},
    {"commuter", 1, 28.0, 4.0, 0.60, 0.40, 260.0, 1400.0, 560.0, 22, 0.8, 0.2, 70, "en", nullptr, nullptr, 0.25, 0.15, 1, 0.9, 0.8, 0.5, 0.9},
    {"organizer", 1, 33.0, 4.0, 0.80, 0.60, 380.0, 2600.0, 1300.0, 28, 0.95, 0.3, 85, "en", "es", nullptr, 0.30, 0.28, 1, 0.5, 0.6, 0.8, 0.55},
    {"lurker", 1, 39.0, 4.0, 0.75, 0.50, 150.0, 1200.0, 1050.0, 30, 1.3, 0.1, 88, "en", nullptr, nullptr, 0.18, 0.24, 1, 0.0, 0.5, 1.1, 0.65},
    {"curator", 1, 46.0, 4.0, 0.85, 0.70, 900.0, 5200.0, 1280.0, 8, 0.5, 0.1, 235, "en", "de", nullptr, 0.15, 0.10, 1, 0.6, 0.9, 13.5, 0.45},
    {"chatter", 1, 54.0, 5.0, 0.65, 0.55, 2400.0, 1100.0, 240.0, 180, 3.6, 1.9, 45, "en", "es", nullptr, 0.80, 0.80, 3, 0.4, 0.3, 0.02, 0.6},
    {"fringe", 1, 60.0, 5.0, 0.50, 0.30, 520.0, 900.0, 1400.0, 19, 0.9, 0.35, 52, "ru", "pt", "uk", 0.38, 0.20, 1, 0.0, 0.0, 2.6, 0.2},
    {"celebrity", 1, 71.0, 4.0, 0.90, 0.80, 45000.0, 600000.0, 1200.0, 34, 1.15, 0.45, 64, "en", "es", nullptr, 0.30, 0.22, 1, 0.4, 0.4, 0.9, 0.66},
}};

inline constexpr std::array<const char*, 10> kSpamWords = {
    "free", "followers", "win", "cheap", "instant", "boost", "viral", "promo", "deal", "gratis"};

inline constexpr std::array<const char*, 28> kFillerWords = {
    "the",  "quick", "morning", "coffee", "river",  "walk",  "today", "music", "game",
    "night", "light", "street", "cloud",  "garden", "story", "photo", "train", "smile",
    "rain",  "book",  "friend", "city",   "sun",    "ocean", "bread", "road",  "moon", "tree"};

inline std::string fill_text(Rng& rng, std::size_t target_len, std::size_t spam_count) {
    std::string text;
    for (std::size_t s = 0; s < spam_count; ++s) {
        if (!text.empty()) text += ' ';
        text += kSpamWords[rand_index(rng, kSpamWords.size())];
    }
    while (text.size() < target_len) {
        if (!text.empty()) text += ' ';
        text += kFillerWords[rand_index(rng, kFillerWords.size())];
    }
    if (text.size() > target_len) text.resize(target_len);
    return text;
}

/// Evenly spread removal pattern over `active` of the day transitions; a coin
/// flip nudges one unit between two days so entropies are not all equal.
inline std::vector<std::uint64_t> churn_pattern(Rng& rng, int days, int active,
                                                std::uint64_t removals) {
    std::vector<std::uint64_t> counts(static_cast<std::size_t>(days), 0);
    auto chosen = sample_without_replacement(rng, static_cast<std::size_t>(days),
                                             static_cast<std::size_t>(active));
    for (auto d : chosen) counts[d] = removals;
    if (active >= 2 && rand_bool(rng, 0.5)) {
        counts[chosen[0]] += 1;
        counts[chosen[1]] -= 1;
    }
    return counts;
}

/// Ambient account language by position: half English, the rest a mix.
inline const char* ambient_language(std::size_t i, std::size_t n) {
    const double f = static_cast<double>(i) / static_cast<double>(n);
    if (f < 0.50) return "en";
    if (f < 0.625) return "es";
    if (f < 0.73) return "pt";
    if (f < 0.81) return "fr";
    if (f < 0.875) return "de";
    if (f < 0.9375) return "ru";
    return "uk";
}

/// Draws `n` friends, aiming for `match` of them tweeting one of `langs`.
inline std::set<std::string> draw_friends(Rng& rng,
                                          const std::map<std::string, std::vector<std::string>>& by_lang,
                                          const std::vector<std::string>& langs, double p_match,
                                          std::size_t n) {
    std::vector<std::string> matching, other;
    for (const auto& [lang, ids] : by_lang) {
        const bool is_match = std::find(langs.begin(), langs.end(), lang) != langs.end();
        auto& dst = is_match ? matching : other;
        dst.insert(dst.end(), ids.begin(), ids.end());
    }
    std::set<std::string> out;
    std::size_t want_match = std::min(
        matching.size(), static_cast<std::size_t>(std::llround(p_match * static_cast<double>(n))));
    for (auto p : sample_without_replacement(rng, matching.size(), want_match))
        out.insert(matching[p]);
    const std::size_t want_other = std::min(other.size(), n - want_match);
    for (auto p : sample_without_replacement(rng, other.size(), want_other)) out.insert(other[p]);
    return out;
}

}  // namespace detail

inline GeneratedMarket generate_market(const GeneratorConfig& cfg, std::uint64_t seed) {
    GeneratedMarket out;
    Dataset& ds = out.dataset;
    const UtcSeconds now = cfg.base_ts + static_cast<UtcSeconds>(cfg.observation_days) * kSecondsPerDay;
    const int diff_days = static_cast<int>(cfg.observation_days) - 1;

    ds.spam_lexicon.insert(detail::kSpamWords.begin(), detail::kSpamWords.end());
    ds.url_blacklist = {"tinyurl.example/fzz01", "bit.example/fastfans", "sho.rt/followgen"};

    // --- ambient accounts: the language context labeled accounts follow ---
    std::map<std::string, std::vector<std::string>> ambient_by_lang;
    for (std::size_t i = 0; i < cfg.n_ambient; ++i) {
        Rng rng = stream_rng(seed, "ambient", i);
        AccountDossier a;
        a.account_id = "amb" + std::to_string(100 + i);
        a.created_at = cfg.base_ts - 900 * kSecondsPerDay;
        a.post_count = 200 + rand_index(rng, 400);
        a.follower_count = 300 + rand_index(rng, 700);
        a.friend_count = 200 + rand_index(rng, 400);
        const std::string lang = detail::ambient_language(i, cfg.n_ambient);
        for (int t = 0; t < 3; ++t) {
            TweetRecord tw;
            tw.timestamp = cfg.base_ts + (static_cast<UtcSeconds>(t) + 1) * 2 * kSecondsPerDay +
                           static_cast<UtcSeconds>(i) * 60;
            tw.text = detail::fill_text(rng, 60, 0);
            tw.languages = {lang};
            a.tweets.push_back(std::move(tw));
        }
        // two sentinel tweets pin the observation window exactly
        if (i == 0) {
            TweetRecord first, last;
            first.timestamp = cfg.base_ts;
            first.text = "good morning";
            first.languages = {"en"};
            last.timestamp = now;
            last.text = "good night";
            last.languages = {"en"};
            a.tweets.insert(a.tweets.begin(), first);
            a.tweets.push_back(last);
        }
        ambient_by_lang[lang].push_back(a.account_id);
        out.truth.cohort_of[a.account_id] = "ambient";
        ds.accounts[a.account_id] = std::move(a);
    }

    // --- labeled population: slot -> cohort assignment is shuffled so ids
    //     carry no class information ---
    const std::size_t n_labeled = cfg.n_suspicious + cfg.n_legitimate;
    std::vector<int> cohort(n_labeled);  // 0..4 phony batch, 5.. legit archetype
    {
        std::size_t slot = 0;
        for (std::size_t b = 0; b < detail::kPhonyBatches.size(); ++b) {
            const std::size_t count = cfg.n_suspicious / detail::kPhonyBatches.size() +
                                      (b < cfg.n_suspicious % detail::kPhonyBatches.size() ? 1 : 0);
            for (std::size_t k = 0; k < count; ++k) cohort[slot++] = static_cast<int>(b);
        }
        int tenths_total = 0;
        for (const auto& arch : detail::kLegitArchetypes) tenths_total += arch.share_tenths;
        std::size_t assigned = 0;
        for (std::size_t a = 0; a < detail::kLegitArchetypes.size(); ++a) {
            std::size_t count = a + 1 == detail::kLegitArchetypes.size()
                                    ? cfg.n_legitimate - assigned
                                    : cfg.n_legitimate *
                                          static_cast<std::size_t>(
                                              detail::kLegitArchetypes[a].share_tenths) /
                                          static_cast<std::size_t>(tenths_total);
            assigned += count;
            for (std::size_t k = 0; k < count; ++k) cohort[slot++] = static_cast<int>(5 + a);
        }
        while (slot < n_labeled) cohort[slot++] = 5;
        Rng arng = stream_rng(seed, "cohort-assignment", 0);
        deterministic_shuffle(cohort, arng);
    }

    for (std::size_t i = 0; i < n_labeled; ++i) {
        Rng rng = stream_rng(seed, "labeled", i);
        char idbuf[24];
        std::snprintf(idbuf, sizeof(idbuf), "u%04llu", static_cast<unsigned long long>(i));
        const std::string id = idbuf;
        const bool suspicious = cohort[i] < 5;

        AccountDossier a;
        a.account_id = id;
        SnapshotSeries series;
        series.subject_id = id;

        const auto jitter = [&](double level) {
            return level * (1.0 + rand_range(rng, -cfg.level_jitter, cfg.level_jitter));
        };

        std::vector<std::string> langs;
        std::size_t n_tweets = 0, tweet_len = 0;
        double hashtags = 0, spam = 0, rt_frac = 0, mention_frac = 0;
        int mention_burst = 1;
        double p_rt_friend = 0, p_mention_friend = 0, last_days = 0, p_match = 0.5;

        if (suspicious) {
            const auto& b = detail::kPhonyBatches[static_cast<std::size_t>(cohort[i])];
            out.truth.cohort_of[id] = std::string("phony/") + b.name;
            a.created_at = cfg.base_ts - (10 + static_cast<UtcSeconds>(rand_index(rng, 110))) * kSecondsPerDay;
            if (rand_bool(rng, detail::kPhonyBioProb))
                a.bio = "follow for follow " + std::string(b.lang_a);
            if (rand_bool(rng, detail::kPhonyUrlProb))
                a.bio_urls.push_back("http://promo.example/p" + std::to_string(cohort[i]));
            a.post_count = static_cast<std::uint64_t>(std::llround(jitter(b.post_count)));
            a.reputation_score =
                std::clamp(b.reputation + rand_normal(rng) * cfg.reputation_jitter, 0.0, 100.0);
            const double ratio =
                cfg.ratio_x_min * std::pow(cfg.ratio_growth, b.ratio_rank) *
                (1.0 + rand_range(rng, -cfg.level_jitter, cfg.level_jitter));
            a.friend_count = std::max<std::uint64_t>(
                1, static_cast<std::uint64_t>(std::llround(b.follower_band / ratio)));
            a.follower_count = std::max<std::uint64_t>(
                1, static_cast<std::uint64_t>(std::llround(ratio * static_cast<double>(a.friend_count))));
            langs = {b.lang_a, b.lang_b};
            n_tweets = b.n_tweets;
            tweet_len = b.tweet_len;
            hashtags = b.hashtags;
            spam = b.spam_words;
            rt_frac = b.rt_frac;
            mention_frac = b.mention_frac;
            last_days = b.last_tweet_days;
            p_match = detail::kPhonyPeerMatch;
        } else {
            const auto& arch = detail::kLegitArchetypes[static_cast<std::size_t>(cohort[i] - 5)];
            out.truth.cohort_of[id] = std::string("legit/") + arch.name;
            a.created_at = cfg.base_ts - (400 + static_cast<UtcSeconds>(rand_index(rng, 1600))) * kSecondsPerDay;
            if (rand_bool(rng, arch.p_bio)) a.bio = "coffee books and long walks";
            if (rand_bool(rng, arch.p_url)) a.bio_urls.push_back("https://blog.example/" + id);
            const double spread = 0.06;
            const auto ljitter = [&](double level) {
                return level * (1.0 + rand_range(rng, -spread, spread));
            };
            a.post_count = static_cast<std::uint64_t>(std::llround(ljitter(arch.post_count)));
            a.reputation_score = std::clamp(
                arch.reputation + rand_normal(rng) * arch.reputation_sigma, 0.0, 100.0);
            a.friend_count = static_cast<std::uint64_t>(std::llround(ljitter(arch.friend_count)));
            a.follower_count = std::max<std::uint64_t>(
                1, static_cast<std::uint64_t>(std::llround(ljitter(arch.follower_count))));
            langs.push_back(arch.lang_a);
            if (arch.lang_b) langs.push_back(arch.lang_b);
            if (arch.lang_c) langs.push_back(arch.lang_c);
            n_tweets = arch.n_tweets;
            tweet_len = arch.tweet_len;
            hashtags = arch.hashtags;
            spam = arch.spam_words;
            rt_frac = arch.rt_frac;
            mention_frac = arch.mention_frac;
            mention_burst = arch.mention_burst;
            p_rt_friend = arch.p_rt_friend;
            p_mention_friend = arch.p_mention_friend;
            last_days = arch.last_tweet_days;
            p_match = arch.peer_match;
        }

        a.friend_ids = detail::draw_friends(rng, ambient_by_lang, langs, p_match, 12);
        std::vector<std::string> friends(a.friend_ids.begin(), a.friend_ids.end());

        // tweets: campaign accounts follow exact cycled patterns, organic ones
        // draw per-tweet
        const UtcSeconds last_ts =
            now - static_cast<UtcSeconds>(last_days * static_cast<double>(kSecondsPerDay)) +
            static_cast<UtcSeconds>(rand_index(rng, 7200)) - 3600;
        for (std::size_t t = 0; t < n_tweets; ++t) {
            TweetRecord tw;
            tw.timestamp =
                t + 1 == n_tweets
                    ? last_ts
                    : cfg.base_ts + static_cast<UtcSeconds>(
                                        rand_range(rng, 0.0,
                                                   static_cast<double>(last_ts - cfg.base_ts - 60)));
            std::size_t n_hash, n_mention = 0;
            std::size_t n_spam;
            bool is_rt;
            if (suspicious) {
                n_hash = static_cast<std::size_t>(hashtags) +
                         ((static_cast<double>(t % 10) + 0.5) / 10.0 <
                                  hashtags - std::floor(hashtags)
                              ? 1
                              : 0);
                n_spam = static_cast<std::size_t>(spam) +
                         ((static_cast<double>((t + 3) % 10) + 0.5) / 10.0 <
                                  spam - std::floor(spam)
                              ? 1
                              : 0);
                is_rt = (static_cast<double>((t + 5) % 20) + 0.5) / 20.0 < rt_frac;
                n_mention =
                    (static_cast<double>((t + 7) % 10) + 0.5) / 10.0 < mention_frac ? 1 : 0;
            } else {
                n_hash = static_cast<std::size_t>(std::floor(hashtags)) +
                         (rand_unit(rng) < hashtags - std::floor(hashtags) ? 1 : 0);
                n_spam = static_cast<std::size_t>(std::floor(spam)) +
                         (rand_unit(rng) < spam - std::floor(spam) ? 1 : 0);
                is_rt = rand_bool(rng, rt_frac);
                n_mention = rand_bool(rng, mention_frac)
                                ? static_cast<std::size_t>(mention_burst)
                                : 0;
            }
            tw.text = detail::fill_text(rng, tweet_len, n_spam);
            for (std::size_t h = 0; h < n_hash; ++h)
                tw.hashtags.push_back("#tag" + std::to_string(rand_index(rng, 40)));
            tw.languages = {langs[t % langs.size()]};
            if (is_rt) {
                tw.is_retweet = true;
                tw.retweeted_of = rand_bool(rng, p_rt_friend) && !friends.empty()
                                      ? friends[rand_index(rng, friends.size())]
                                      : "ext" + std::to_string(rand_index(rng, 40));
            }
            for (std::size_t m = 0; m < n_mention; ++m)
                tw.mentions.push_back(rand_bool(rng, p_mention_friend) && !friends.empty()
                                          ? friends[rand_index(rng, friends.size())]
                                          : "ext" + std::to_string(rand_index(rng, 40)));
            a.tweets.push_back(std::move(tw));
        }
        std::sort(a.tweets.begin(), a.tweets.end(),
                  [](const TweetRecord& x, const TweetRecord& y) { return x.timestamp < y.timestamp; });

        // follower snapshots, one per day at 10:00 UTC
        std::vector<std::uint64_t> churn(static_cast<std::size_t>(diff_days), 0);
        if (suspicious) {
            const auto& b = detail::kPhonyBatches[static_cast<std::size_t>(cohort[i])];
            churn = detail::churn_pattern(rng, diff_days, b.active_days, b.removals);
        }
        std::set<std::string> members;
        for (std::size_t f = 0; f < cfg.snapshot_pool; ++f)
            members.insert(id + "_f" + std::to_string(100 + f));
        std::size_t next_removal = 0, next_gain = 0;
        for (std::size_t d = 0; d < cfg.observation_days; ++d) {
            if (d > 0) {
                for (std::uint64_t r = 0; r < churn[d - 1]; ++r)
                    members.erase(id + "_f" + std::to_string(100 + next_removal++));
                if (rand_bool(rng, 0.3)) members.insert(id + "_g" + std::to_string(100 + next_gain++));
            }
            series.snapshots.push_back(
                {cfg.base_ts + static_cast<UtcSeconds>(d) * kSecondsPerDay + 10 * kSecondsPerHour,
                 members});
        }

        ds.labels[id] = suspicious ? Label::suspicious : Label::legitimate;
        out.truth.labels[id] = ds.labels[id];
        ds.snapshots[id] = std::move(series);
        ds.accounts[id] = std::move(a);
    }

    // --- customers: merchant clients with hourly follower tracking ---
    const std::size_t n_merchants =
        cfg.merchants_freemium + cfg.merchants_premium + cfg.merchants_dual;
    for (std::size_t i = 0; i < cfg.n_customers; ++i) {
        Rng rng = stream_rng(seed, "customer", i);
        AccountDossier a;
        a.account_id = "cust" + std::to_string(100 + i);
        a.created_at = cfg.base_ts - (200 + static_cast<UtcSeconds>(rand_index(rng, 800))) * kSecondsPerDay;
        out.truth.cohort_of[a.account_id] = "customer";
        out.truth.customer_ids.push_back(a.account_id);

        static const std::vector<std::string> kBioTerms = {
            "social", "media",  "marketing", "growth",       "follow", "back",
            "brand",  "online", "digital",   "entrepreneur", "promo",  "manager"};
        std::string bio;
        for (auto p : sample_without_replacement(rng, kBioTerms.size(), 4)) {
            if (!bio.empty()) bio += ' ';
            bio += kBioTerms[p];
        }
        a.bio = bio;
        if (rand_bool(rng, 0.2))
            a.bio_urls.push_back("http://" + ds.url_blacklist[rand_index(rng, ds.url_blacklist.size())]);
        else if (rand_bool(rng, 0.5))
            a.bio_urls.push_back("https://shop.example/" + a.account_id);
        a.verified = rand_bool(rng, 0.1);
        a.listed = rand_bool(rng, 0.4);
        if (!rand_bool(rng, 0.25))
            a.reputation_score = std::clamp(42.0 + rand_normal(rng) * 13.0, 0.0, 100.0);
        a.post_count = 300 + rand_index(rng, 4000);
        a.friend_count = 150 + rand_index(rng, 1200);
        for (auto m : sample_without_replacement(rng, n_merchants, 1 + rand_index(rng, 3)))
            a.subscribed_merchant_ids.push_back("mkt" + std::to_string(100 + m));
        std::sort(a.subscribed_merchant_ids.begin(), a.subscribed_merchant_ids.end());
        for (int t = 0; t < 6; ++t) {
            TweetRecord tw;
            tw.timestamp = cfg.base_ts + static_cast<UtcSeconds>(rand_range(
                                             rng, 0.0, static_cast<double>(now - cfg.base_ts - 60)));
            tw.text = detail::fill_text(rng, 70, rand_index(rng, 2));
            tw.languages = {"en"};
            a.tweets.push_back(std::move(tw));
        }
        std::sort(a.tweets.begin(), a.tweets.end(),
                  [](const TweetRecord& x, const TweetRecord& y) { return x.timestamp < y.timestamp; });

        // hourly follower sets: purchase-driven growth with short-lived dips
        const std::size_t hours = cfg.observation_days * 24;
        const std::size_t pool =
            cfg.customer_pool_min +
            rand_index(rng, cfg.customer_pool_max - cfg.customer_pool_min + 1);
        auto fid = [&](std::size_t k) { return a.account_id + "_f" + std::to_string(100 + k); };
        std::set<std::string> members;
        std::size_t grown = pool / 2;
        for (std::size_t k = 0; k < grown; ++k) members.insert(fid(k));

        std::vector<std::size_t> growth_hours;
        for (std::size_t g = 0; g < 3; ++g) growth_hours.push_back(rand_index(rng, hours - 20));
        std::map<std::size_t, std::vector<std::string>> re_add;      // hour -> ids returning
        std::map<std::size_t, std::size_t> dip_at;                   // hour -> how many leave
        const std::size_t n_dips = 1 + rand_index(rng, 8);
        for (std::size_t dpi = 0; dpi < n_dips; ++dpi)
            dip_at[24 + rand_index(rng, hours - 36)] += 3 + rand_index(rng, 8);

        SnapshotSeries series;
        series.subject_id = a.account_id;
        a.follower_count = pool;
        for (std::size_t h = 0; h < hours; ++h) {
            for (std::size_t gh : growth_hours)
                if (h >= gh && h < gh + 10 && grown < pool)
                    members.insert(fid(grown++));
            if (auto it = re_add.find(h); it != re_add.end()) {
                for (const auto& back : it->second) members.insert(back);
                re_add.erase(it);
            }
            if (auto it = dip_at.find(h); it != dip_at.end()) {
                std::vector<std::string> present(members.begin(), members.end());
                const std::size_t k = std::min(it->second, present.size() / 2);
                auto picks = sample_without_replacement(rng, present.size(), k);
                auto& back = re_add[h + 1 + rand_index(rng, 5)];
                for (auto p : picks) {
                    members.erase(present[p]);
                    back.push_back(present[p]);
                }
            }
            series.snapshots.push_back(
                {cfg.base_ts + static_cast<UtcSeconds>(h) * kSecondsPerHour + 1800, members});
        }
        ds.snapshots[a.account_id] = std::move(series);
        ds.accounts[a.account_id] = std::move(a);
    }

    // --- merchants: a handful of leaders and a long tail ---
    for (std::size_t i = 0; i < n_merchants; ++i) {
        Rng rng = stream_rng(seed, "merchant", i);
        Merchant m;
        m.merchant_id = "mkt" + std::to_string(100 + i);
        const bool leader = i < cfg.n_leaders;
        if (i < cfg.merchants_dual)
            m.schemes = {Scheme::freemium, Scheme::premium};
        else if (i < cfg.merchants_dual + cfg.merchants_freemium)
            m.schemes = {Scheme::freemium};
        else
            m.schemes = {Scheme::premium};
        if (leader) {
            m.traffic_rank = 1000 + rand_index(rng, 19001);
            m.promo_tweet_count = 600 + rand_index(rng, 401);
            m.has_twitter_profile = true;
            out.truth.leader_ids.push_back(m.merchant_id);
        } else {
            m.traffic_rank = 200000 + rand_index(rng, 3300001);
            m.promo_tweet_count = 1 + rand_index(rng, 350);
            m.has_twitter_profile = rand_bool(rng, 0.6);
        }
        m.promises.push_back({"followers_1k", 1000.0, "followers"});
        m.performances.push_back(
            {"followers_1k",
             std::round(1000.0 * (leader ? rand_range(rng, 0.95, 2.09) : rand_range(rng, 0.74, 1.35)))});
        m.promises.push_back({"retention_90d", 90.0, "days"});
        m.performances.push_back({"retention_90d", std::round(rand_range(rng, 8.0, 90.0))});
        if (m.schemes.count(Scheme::premium)) {
            m.promises.push_back({"hourly_rate", 84.0, "followers_per_hour"});
            m.performances.push_back({"hourly_rate", std::round(rand_range(rng, 30.0, 180.0))});
        }
        ds.merchants[m.merchant_id] = std::move(m);
    }

    return out;
}

// ---------------------------------------------------------------------------
// Label noise: flips exactly floor(rate * n) labels, chosen uniformly.
// ---------------------------------------------------------------------------

struct LabelPerturbation {
    std::map<std::string, Label> labels;
    std::vector<std::string> flipped;  // sorted ids
};

inline LabelPerturbation perturb_labels(const std::map<std::string, Label>& labels,
                                        double flip_rate, std::uint64_t seed) {
    if (!(flip_rate >= 0.0) || flip_rate >= 0.5)
        throw validation_error("perturb_labels: flip rate must be in [0, 0.5)");
    LabelPerturbation out;
    out.labels = labels;
    const auto k = static_cast<std::size_t>(flip_rate * static_cast<double>(labels.size()));
    if (k == 0) return out;
    std::vector<std::string> ids;
    ids.reserve(labels.size());
    for (const auto& [id, l] : labels) ids.push_back(id);
    Rng rng = stream_rng(seed, "label-noise", 0);
    for (auto p : sample_without_replacement(rng, ids.size(), k)) out.flipped.push_back(ids[p]);
    std::sort(out.flipped.begin(), out.flipped.end());
    for (const auto& id : out.flipped) {
        auto& l = out.labels.at(id);
        l = l == Label::suspicious ? Label::legitimate : Label::suspicious;
    }
    return out;
}

}  // namespace smk
