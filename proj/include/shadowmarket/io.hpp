#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "shadowmarket/model.hpp"

namespace smk {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

struct ParseError {
    std::string file;
    std::size_t line = 0;  // 1-based; 0 means file-level
    std::string reason;

    std::string to_string() const {
        return file + ":" + std::to_string(line) + ": " + reason;
    }
};

struct ParseResult {
    Dataset dataset;
    std::vector<ParseError> errors;

    bool ok() const { return errors.empty(); }
};

// ---------------------------------------------------------------------------
// JSON <-> domain types
// ---------------------------------------------------------------------------

inline ordered_json tweet_to_json(const TweetRecord& t) {
    ordered_json j;
    j["timestamp"] = format_iso8601(t.timestamp);
    j["text"] = t.text;
    j["hashtags"] = t.hashtags;
    j["mentions"] = t.mentions;
    j["is_retweet"] = t.is_retweet;
    if (t.retweeted_of) j["retweeted_of"] = *t.retweeted_of;
    j["languages"] = t.languages;
    return j;
}

inline TweetRecord tweet_from_json(const ordered_json& j) {
    TweetRecord t;
    t.timestamp = parse_iso8601(j.at("timestamp").get<std::string>());
    t.text = j.value("text", std::string());
    if (j.contains("hashtags")) t.hashtags = j.at("hashtags").get<std::vector<std::string>>();
    if (j.contains("mentions")) t.mentions = j.at("mentions").get<std::vector<std::string>>();
    t.is_retweet = j.value("is_retweet", false);
    if (j.contains("retweeted_of") && !j.at("retweeted_of").is_null())
        t.retweeted_of = j.at("retweeted_of").get<std::string>();
    if (j.contains("languages"))
        for (const auto& l : j.at("languages")) t.languages.insert(l.get<std::string>());
    if (t.is_retweet && !t.retweeted_of)
        throw validation_error("retweet without retweeted_of");
    return t;
}

inline ordered_json account_to_json(const AccountDossier& a) {
    ordered_json j;
    j["account_id"] = a.account_id;
    j["created_at"] = format_iso8601(a.created_at);
    if (a.bio) j["bio"] = *a.bio; else j["bio"] = nullptr;
    j["bio_urls"] = a.bio_urls;
    j["post_count"] = a.post_count;
    j["listed"] = a.listed;
    j["verified"] = a.verified;
    j["follower_count"] = a.follower_count;
    j["friend_count"] = a.friend_count;
    j["follower_ids"] = a.follower_ids;
    j["friend_ids"] = a.friend_ids;
    ordered_json tweets = ordered_json::array();
    for (const auto& t : a.tweets) tweets.push_back(tweet_to_json(t));
    j["tweets"] = std::move(tweets);
    if (a.reputation_score) j["reputation_score"] = *a.reputation_score;
    else j["reputation_score"] = nullptr;
    j["subscribed_merchant_ids"] = a.subscribed_merchant_ids;
    return j;
}

inline AccountDossier account_from_json(const ordered_json& j) {
    AccountDossier a;
    a.account_id = j.at("account_id").get<std::string>();
    if (a.account_id.empty()) throw validation_error("empty account_id");
    a.created_at = parse_iso8601(j.at("created_at").get<std::string>());
    if (j.contains("bio") && !j.at("bio").is_null()) a.bio = j.at("bio").get<std::string>();
    if (j.contains("bio_urls")) a.bio_urls = j.at("bio_urls").get<std::vector<std::string>>();
    a.post_count = j.value("post_count", std::uint64_t{0});
    a.listed = j.value("listed", false);
    a.verified = j.value("verified", false);
    a.follower_count = j.value("follower_count", std::uint64_t{0});
    a.friend_count = j.value("friend_count", std::uint64_t{0});
    if (j.contains("follower_ids"))
        for (const auto& id : j.at("follower_ids")) a.follower_ids.insert(id.get<std::string>());
    if (j.contains("friend_ids"))
        for (const auto& id : j.at("friend_ids")) a.friend_ids.insert(id.get<std::string>());
    if (j.contains("tweets"))
        for (const auto& t : j.at("tweets")) a.tweets.push_back(tweet_from_json(t));
    for (std::size_t i = 1; i < a.tweets.size(); ++i) {
        if (a.tweets[i].timestamp < a.tweets[i - 1].timestamp)
            throw validation_error("tweets not ordered by timestamp");
    }
    if (j.contains("reputation_score") && !j.at("reputation_score").is_null()) {
        double r = j.at("reputation_score").get<double>();
        if (r < 0.0 || r > 100.0)
            throw validation_error("reputation_score outside [0,100]");
        a.reputation_score = r;
    }
    if (j.contains("subscribed_merchant_ids"))
        a.subscribed_merchant_ids = j.at("subscribed_merchant_ids").get<std::vector<std::string>>();
    return a;
}

inline ordered_json merchant_to_json(const Merchant& m) {
    ordered_json j;
    j["merchant_id"] = m.merchant_id;
    ordered_json schemes = ordered_json::array();
    for (Scheme s : m.schemes) schemes.push_back(scheme_name(s));
    j["schemes"] = std::move(schemes);
    ordered_json promises = ordered_json::array();
    for (const auto& p : m.promises)
        promises.push_back({{"promise_id", p.promise_id}, {"expect", p.expect}, {"unit", p.unit}});
    j["promises"] = std::move(promises);
    ordered_json perfs = ordered_json::array();
    for (const auto& p : m.performances)
        perfs.push_back({{"promise_id", p.promise_id}, {"perform", p.perform}});
    j["performances"] = std::move(perfs);
    j["traffic_rank"] = m.traffic_rank;
    j["promo_tweet_count"] = m.promo_tweet_count;
    j["has_twitter_profile"] = m.has_twitter_profile;
    return j;
}

inline Merchant merchant_from_json(const ordered_json& j) {
    Merchant m;
    m.merchant_id = j.at("merchant_id").get<std::string>();
    if (m.merchant_id.empty()) throw validation_error("empty merchant_id");
    if (j.contains("schemes")) {
        for (const auto& s : j.at("schemes")) {
            auto sc = scheme_from_string(s.get<std::string>());
            if (!sc) throw validation_error("unknown scheme '" + s.get<std::string>() + "'");
            m.schemes.insert(*sc);
        }
    }
    if (j.contains("promises")) {
        for (const auto& p : j.at("promises")) {
            Promise pr;
            pr.promise_id = p.at("promise_id").get<std::string>();
            pr.expect = p.at("expect").get<double>();
            pr.unit = p.value("unit", std::string());
            m.promises.push_back(std::move(pr));
        }
    }
    if (j.contains("performances")) {
        for (const auto& p : j.at("performances")) {
            Performance pf;
            pf.promise_id = p.at("promise_id").get<std::string>();
            pf.perform = p.at("perform").get<double>();
            bool known = false;
            for (const auto& pr : m.promises) known = known || pr.promise_id == pf.promise_id;
            if (!known)
                throw validation_error("performance references unknown promise '" + pf.promise_id + "'");
            m.performances.push_back(std::move(pf));
        }
    }
    m.traffic_rank = j.value("traffic_rank", std::uint64_t{1});
    if (m.traffic_rank < 1) throw validation_error("traffic_rank must be >= 1");
    m.promo_tweet_count = j.value("promo_tweet_count", std::uint64_t{0});
    m.has_twitter_profile = j.value("has_twitter_profile", false);
    return m;
}

// ---------------------------------------------------------------------------
// Lexicon files: one entry per line, '#' starts a comment, blanks skipped.
// ---------------------------------------------------------------------------

inline std::vector<std::string> load_lexicon(const fs::path& path) {
    std::vector<std::string> entries;
    std::ifstream in(path);
    if (!in) throw validation_error("cannot open lexicon: " + path.string());
    std::string line;
    while (std::getline(in, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (!line.empty()) entries.push_back(line);
    }
    return entries;
}

// ---------------------------------------------------------------------------
// Dataset directory parsing. Collects structured errors instead of aborting on
// the first bad record; successfully parsed records are kept.
// ---------------------------------------------------------------------------

namespace detail {

template <typename Fn>
void parse_jsonl(const fs::path& path, std::vector<ParseError>& errors, Fn&& on_line) {
    std::ifstream in(path);
    if (!in) {
        errors.push_back({path.string(), 0, "cannot open file"});
        return;
    }
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        try {
            ordered_json j = ordered_json::parse(line);
            on_line(j, lineno);
        } catch (const std::exception& e) {
            errors.push_back({path.string(), lineno, e.what()});
        }
    }
}

}  // namespace detail

inline ParseResult parse_dataset(const fs::path& dir) {
    ParseResult result;
    Dataset& ds = result.dataset;
    auto& errors = result.errors;

    const fs::path accounts_path = dir / "accounts.jsonl";
    if (fs::exists(accounts_path)) {
        detail::parse_jsonl(accounts_path, errors, [&](const ordered_json& j, std::size_t lineno) {
            AccountDossier a = account_from_json(j);
            if (ds.accounts.count(a.account_id)) {
                errors.push_back({accounts_path.string(), lineno,
                                  "duplicate account_id '" + a.account_id + "'"});
                return;
            }
            ds.accounts.emplace(a.account_id, std::move(a));
        });
    }

    const fs::path merchants_path = dir / "merchants.jsonl";
    if (fs::exists(merchants_path)) {
        detail::parse_jsonl(merchants_path, errors, [&](const ordered_json& j, std::size_t lineno) {
            Merchant m = merchant_from_json(j);
            if (ds.merchants.count(m.merchant_id)) {
                errors.push_back({merchants_path.string(), lineno,
                                  "duplicate merchant_id '" + m.merchant_id + "'"});
                return;
            }
            ds.merchants.emplace(m.merchant_id, std::move(m));
        });
    }

    const fs::path snap_dir = dir / "snapshots";
    if (fs::exists(snap_dir)) {
        std::vector<fs::path> files;
        for (const auto& e : fs::directory_iterator(snap_dir))
            if (e.is_regular_file() && e.path().extension() == ".jsonl") files.push_back(e.path());
        std::sort(files.begin(), files.end());
        for (const auto& f : files) {
            SnapshotSeries series;
            series.subject_id = f.stem().string();
            bool bad_order = false;
            detail::parse_jsonl(f, errors, [&](const ordered_json& j, std::size_t lineno) {
                Snapshot s;
                s.ts = parse_iso8601(j.at("ts").get<std::string>());
                for (const auto& id : j.at("follower_ids")) s.follower_ids.insert(id.get<std::string>());
                if (!series.snapshots.empty() && s.ts <= series.snapshots.back().ts) {
                    errors.push_back({f.string(), lineno, "snapshot timestamps not strictly increasing"});
                    bad_order = true;
                    return;
                }
                series.snapshots.push_back(std::move(s));
            });
            if (!ds.accounts.count(series.subject_id)) {
                errors.push_back({f.string(), 0,
                                  "snapshot series for unknown account '" + series.subject_id + "'"});
                continue;
            }
            if (!bad_order) ds.snapshots.emplace(series.subject_id, std::move(series));
        }
    }

    const fs::path labels_path = dir / "labels.csv";
    if (fs::exists(labels_path)) {
        std::ifstream in(labels_path);
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            line = trim(line);
            if (line.empty()) continue;
            if (lineno == 1) {
                if (line != "account_id,label")
                    errors.push_back({labels_path.string(), 1, "expected header 'account_id,label'"});
                continue;
            }
            auto comma = line.find(',');
            if (comma == std::string::npos) {
                errors.push_back({labels_path.string(), lineno, "expected 'account_id,label'"});
                continue;
            }
            std::string id = trim(line.substr(0, comma));
            std::string lab = trim(line.substr(comma + 1));
            auto label = label_from_string(lab);
            if (!label) {
                errors.push_back({labels_path.string(), lineno, "unknown label '" + lab + "'"});
                continue;
            }
            if (!ds.accounts.count(id)) {
                errors.push_back({labels_path.string(), lineno, "label for unknown account '" + id + "'"});
                continue;
            }
            if (ds.labels.count(id)) {
                errors.push_back({labels_path.string(), lineno, "duplicate label for account '" + id + "'"});
                continue;
            }
            ds.labels.emplace(std::move(id), *label);
        }
    }

    const fs::path lex_dir = dir / "lexicons";
    try {
        if (fs::exists(lex_dir / "spam_words.txt"))
            for (const auto& w : load_lexicon(lex_dir / "spam_words.txt"))
                ds.spam_lexicon.insert(to_lower(w));
        if (fs::exists(lex_dir / "url_blacklist.txt"))
            ds.url_blacklist = load_lexicon(lex_dir / "url_blacklist.txt");
    } catch (const std::exception& e) {
        errors.push_back({lex_dir.string(), 0, e.what()});
    }

    return result;
}

// ---------------------------------------------------------------------------
// Serialization back to the same layout. parse(serialize(ds)) is a semantic
// identity for valid datasets.
// ---------------------------------------------------------------------------

inline void serialize_dataset(const Dataset& ds, const fs::path& dir) {
    fs::create_directories(dir);

    {
        std::string out;
        for (const auto& [id, a] : ds.accounts) {
            out += account_to_json(a).dump();
            out += '\n';
        }
        write_file_atomic(dir / "accounts.jsonl", out);
    }
    {
        std::string out;
        for (const auto& [id, m] : ds.merchants) {
            out += merchant_to_json(m).dump();
            out += '\n';
        }
        write_file_atomic(dir / "merchants.jsonl", out);
    }
    {
        fs::create_directories(dir / "snapshots");
        for (const auto& [id, series] : ds.snapshots) {
            std::string out;
            for (const auto& s : series.snapshots) {
                ordered_json j;
                j["ts"] = format_iso8601(s.ts);
                j["follower_ids"] = s.follower_ids;
                out += j.dump();
                out += '\n';
            }
            write_file_atomic(dir / "snapshots" / (id + ".jsonl"), out);
        }
    }
    {
        std::string out = "account_id,label\n";
        for (const auto& [id, label] : ds.labels) {
            out += id;
            out += ',';
            out += label_name(label);
            out += '\n';
        }
        write_file_atomic(dir / "labels.csv", out);
    }
    if (!ds.spam_lexicon.empty() || !ds.url_blacklist.empty()) {
        fs::create_directories(dir / "lexicons");
        if (!ds.spam_lexicon.empty()) {
            std::string out;
            for (const auto& w : ds.spam_lexicon) {
                out += w;
                out += '\n';
            }
            write_file_atomic(dir / "lexicons" / "spam_words.txt", out);
        }
        if (!ds.url_blacklist.empty()) {
            std::string out;
            for (const auto& u : ds.url_blacklist) {
                out += u;
                out += '\n';
            }
            write_file_atomic(dir / "lexicons" / "url_blacklist.txt", out);
        }
    }
}

}  // namespace smk
