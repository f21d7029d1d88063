#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "shadowmarket/io.hpp"
#include "shadowmarket/model.hpp"

using namespace smk;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("smk_test_" + std::to_string(std::random_device{}()));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
};

void write(const fs::path& p, const std::string& content) {
    fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    out << content;
}

Dataset make_sample() {
    Dataset ds;

    AccountDossier a;
    a.account_id = "acct_alpha";
    a.created_at = parse_iso8601("2013-02-01T08:30:00Z");
    a.bio = "Deals and discounts! visit my page";
    a.bio_urls = {"http://deals.example.com"};
    a.post_count = 412;
    a.listed = true;
    a.follower_count = 5200;
    a.friend_count = 310;
    a.follower_ids = {"f1", "f2", "f3"};
    a.friend_ids = {"g1"};
    TweetRecord t;
    t.timestamp = parse_iso8601("2013-03-05T12:00:00Z");
    t.text = "check out #deals with @shop http://x.co";
    t.hashtags = {"deals"};
    t.mentions = {"shop"};
    t.languages = {"en"};
    a.tweets.push_back(t);
    t.timestamp = parse_iso8601("2013-03-06T09:15:00Z");
    t.text = "RT @shop: new offer";
    t.is_retweet = true;
    t.retweeted_of = "shop";
    a.tweets.push_back(t);
    a.reputation_score = 12.5;
    a.subscribed_merchant_ids = {"m_fast"};
    ds.accounts.emplace(a.account_id, a);

    AccountDossier b;
    b.account_id = "acct_beta";
    b.created_at = parse_iso8601("2010-07-20T00:00:00Z");
    b.post_count = 9100;
    b.verified = true;
    b.follower_count = 880;
    b.friend_count = 790;
    ds.accounts.emplace(b.account_id, b);

    Merchant m;
    m.merchant_id = "m_fast";
    m.schemes = {Scheme::freemium, Scheme::premium};
    m.promises = {{"followers_delivered", 1000.0, "followers"},
                  {"retention_days", 90.0, "days"}};
    m.performances = {{"followers_delivered", 1430.0}, {"retention_days", 74.0}};
    m.traffic_rank = 15789;
    m.promo_tweet_count = 640;
    m.has_twitter_profile = true;
    ds.merchants.emplace(m.merchant_id, m);

    SnapshotSeries s;
    s.subject_id = "acct_alpha";
    s.snapshots.push_back({parse_iso8601("2013-03-01T00:00:00Z"), {"f1", "f2", "f3", "f4"}});
    s.snapshots.push_back({parse_iso8601("2013-03-02T00:00:00Z"), {"f1", "f2", "f5"}});
    s.snapshots.push_back({parse_iso8601("2013-03-03T00:00:00Z"), {"f1", "f5"}});
    ds.snapshots.emplace(s.subject_id, s);

    ds.labels.emplace("acct_alpha", Label::suspicious);
    ds.labels.emplace("acct_beta", Label::legitimate);

    ds.spam_lexicon = {"deals", "free", "followers"};
    ds.url_blacklist = {"spam.example.com", "http://bad.example.org/page"};
    return ds;
}

}  // namespace

TEST_CASE("iso8601 round trip") {
    for (const char* s : {"1970-01-01T00:00:00Z", "2013-03-05T12:00:00Z", "1969-12-31T23:59:59Z",
                          "2024-02-29T06:07:08Z"}) {
        CHECK(format_iso8601(parse_iso8601(s)) == s);
    }
    CHECK(parse_iso8601("1970-01-01T00:00:00Z") == 0);
    CHECK(parse_iso8601("1970-01-02T00:00:00Z") == 86400);
    CHECK_THROWS_AS(parse_iso8601("2013-03-05 12:00:00"), validation_error);
    CHECK_THROWS_AS(parse_iso8601("2013-13-05T12:00:00Z"), validation_error);
    CHECK_THROWS_AS(parse_iso8601("not a date"), validation_error);
}

TEST_CASE("dataset serialize/parse round trip") {
    TempDir tmp;
    Dataset ds = make_sample();
    serialize_dataset(ds, tmp.path);

    ParseResult res = parse_dataset(tmp.path);
    REQUIRE(res.errors.empty());
    CHECK(res.dataset.accounts == ds.accounts);
    CHECK(res.dataset.merchants == ds.merchants);
    CHECK(res.dataset.snapshots == ds.snapshots);
    CHECK(res.dataset.labels == ds.labels);
    CHECK(res.dataset.spam_lexicon == ds.spam_lexicon);
    CHECK(res.dataset.url_blacklist == ds.url_blacklist);
}

TEST_CASE("empty or missing dataset directory parses cleanly") {
    TempDir tmp;
    ParseResult res = parse_dataset(tmp.path);
    CHECK(res.errors.empty());
    CHECK(res.dataset.accounts.empty());
    CHECK(res.dataset.merchants.empty());

    ParseResult missing = parse_dataset(tmp.path / "does_not_exist");
    CHECK(missing.errors.empty());
    CHECK(missing.dataset.accounts.empty());
}

TEST_CASE("malformed jsonl line reported with file and line, good lines kept") {
    TempDir tmp;
    write(tmp.path / "accounts.jsonl",
          R"({"account_id":"ok1","created_at":"2013-01-01T00:00:00Z"})"
          "\n{not json\n"
          R"({"account_id":"ok2","created_at":"2013-01-02T00:00:00Z"})"
          "\n");
    ParseResult res = parse_dataset(tmp.path);
    REQUIRE(res.errors.size() == 1);
    CHECK(res.errors[0].file == (tmp.path / "accounts.jsonl").string());
    CHECK(res.errors[0].line == 2);
    CHECK(res.dataset.accounts.size() == 2);
    CHECK(res.dataset.accounts.count("ok1") == 1);
    CHECK(res.dataset.accounts.count("ok2") == 1);
}

TEST_CASE("duplicate account ids rejected") {
    TempDir tmp;
    write(tmp.path / "accounts.jsonl",
          R"({"account_id":"dup","created_at":"2013-01-01T00:00:00Z"})"
          "\n"
          R"({"account_id":"dup","created_at":"2013-01-02T00:00:00Z"})"
          "\n");
    ParseResult res = parse_dataset(tmp.path);
    REQUIRE(res.errors.size() == 1);
    CHECK(res.errors[0].line == 2);
    CHECK(res.errors[0].reason.find("duplicate") != std::string::npos);
    CHECK(res.dataset.accounts.size() == 1);
    CHECK(res.dataset.accounts.at("dup").created_at == parse_iso8601("2013-01-01T00:00:00Z"));
}

TEST_CASE("account validation failures") {
    // retweet flag without source
    ordered_json j = {{"account_id", "x"},
                      {"created_at", "2013-01-01T00:00:00Z"},
                      {"tweets", {{{"timestamp", "2013-01-02T00:00:00Z"}, {"is_retweet", true}}}}};
    CHECK_THROWS_AS(account_from_json(j), validation_error);

    // reputation outside [0,100]
    ordered_json k = {{"account_id", "x"},
                      {"created_at", "2013-01-01T00:00:00Z"},
                      {"reputation_score", 101.0}};
    CHECK_THROWS_AS(account_from_json(k), validation_error);

    // tweets must be time-ordered
    ordered_json o = {{"account_id", "x"},
                      {"created_at", "2013-01-01T00:00:00Z"},
                      {"tweets",
                       {{{"timestamp", "2013-01-05T00:00:00Z"}, {"text", "b"}},
                        {{"timestamp", "2013-01-02T00:00:00Z"}, {"text", "a"}}}}};
    CHECK_THROWS_AS(account_from_json(o), validation_error);
}

TEST_CASE("merchant validation failures") {
    ordered_json j = {{"merchant_id", "m"},
                      {"promises", ordered_json::array()},
                      {"performances", {{{"promise_id", "ghost"}, {"perform", 5.0}}}}};
    CHECK_THROWS_AS(merchant_from_json(j), validation_error);

    ordered_json k = {{"merchant_id", "m"}, {"schemes", {"gold"}}};
    CHECK_THROWS_AS(merchant_from_json(k), validation_error);

    ordered_json r = {{"merchant_id", "m"}, {"traffic_rank", 0}};
    CHECK_THROWS_AS(merchant_from_json(r), validation_error);
}

TEST_CASE("snapshot series with non-increasing timestamps rejected") {
    TempDir tmp;
    write(tmp.path / "accounts.jsonl",
          R"({"account_id":"a","created_at":"2013-01-01T00:00:00Z"})"
          "\n");
    write(tmp.path / "snapshots" / "a.jsonl",
          R"({"ts":"2013-03-02T00:00:00Z","follower_ids":["f1"]})"
          "\n"
          R"({"ts":"2013-03-01T00:00:00Z","follower_ids":["f1"]})"
          "\n");
    ParseResult res = parse_dataset(tmp.path);
    REQUIRE(res.errors.size() == 1);
    CHECK(res.errors[0].line == 2);
    CHECK(res.errors[0].reason.find("increasing") != std::string::npos);
    CHECK(res.dataset.snapshots.empty());
}

TEST_CASE("snapshot series for unknown account rejected") {
    TempDir tmp;
    write(tmp.path / "snapshots" / "ghost.jsonl",
          R"({"ts":"2013-03-01T00:00:00Z","follower_ids":[]})"
          "\n");
    ParseResult res = parse_dataset(tmp.path);
    REQUIRE(res.errors.size() == 1);
    CHECK(res.errors[0].reason.find("unknown account") != std::string::npos);
    CHECK(res.dataset.snapshots.empty());
}

TEST_CASE("labels csv validation") {
    TempDir tmp;
    write(tmp.path / "accounts.jsonl",
          R"({"account_id":"a","created_at":"2013-01-01T00:00:00Z"})"
          "\n");
    write(tmp.path / "labels.csv",
          "account_id,label\n"
          "a,suspicious\n"
          "ghost,legitimate\n"
          "a,banana\n");
    ParseResult res = parse_dataset(tmp.path);
    REQUIRE(res.errors.size() == 2);
    CHECK(res.errors[0].line == 3);
    CHECK(res.errors[0].reason.find("unknown account") != std::string::npos);
    CHECK(res.errors[1].line == 4);
    CHECK(res.errors[1].reason.find("unknown label") != std::string::npos);
    REQUIRE(res.dataset.labels.size() == 1);
    CHECK(res.dataset.labels.at("a") == Label::suspicious);
}

TEST_CASE("lexicon files support comments and blank lines") {
    TempDir tmp;
    write(tmp.path / "lexicons" / "spam_words.txt",
          "# spam terms\n"
          "Free\n"
          "\n"
          "followers  # trailing comment\n");
    write(tmp.path / "lexicons" / "url_blacklist.txt", "bad.example.com\n");
    ParseResult res = parse_dataset(tmp.path);
    REQUIRE(res.errors.empty());
    CHECK(res.dataset.spam_lexicon == std::set<std::string>{"free", "followers"});
    CHECK(res.dataset.url_blacklist == std::vector<std::string>{"bad.example.com"});
}

TEST_CASE("diff_snapshots computes gained and lost sets") {
    Snapshot prev{100, {"a", "b", "c"}};
    Snapshot next{200, {"b", "c", "d", "e"}};
    FollowDelta d = diff_snapshots(prev, next);
    CHECK(d.t_prev == 100);
    CHECK(d.t_next == 200);
    CHECK(d.gained == IdSet{"d", "e"});
    CHECK(d.lost == IdSet{"a"});

    FollowDelta same = diff_snapshots(prev, prev);
    CHECK(same.gained.empty());
    CHECK(same.lost.empty());
}

TEST_CASE("diff_snapshots matches symmetric difference cardinality") {
    Rng rng = stream_rng(7, "diff-fuzz");
    for (int trial = 0; trial < 50; ++trial) {
        Snapshot prev{0, {}}, next{1, {}};
        for (int i = 0; i < 40; ++i) {
            std::string id = "u" + std::to_string(i);
            if (rand_bool(rng, 0.5)) prev.follower_ids.insert(id);
            if (rand_bool(rng, 0.5)) next.follower_ids.insert(id);
        }
        FollowDelta d = diff_snapshots(prev, next);
        IdSet sym;
        std::set_symmetric_difference(prev.follower_ids.begin(), prev.follower_ids.end(),
                                      next.follower_ids.begin(), next.follower_ids.end(),
                                      std::inserter(sym, sym.end()));
        CHECK(d.gained.size() + d.lost.size() == sym.size());
        for (const auto& id : d.gained) {
            CHECK(next.follower_ids.count(id) == 1);
            CHECK(prev.follower_ids.count(id) == 0);
        }
        for (const auto& id : d.lost) {
            CHECK(prev.follower_ids.count(id) == 1);
            CHECK(next.follower_ids.count(id) == 0);
        }
    }
}

TEST_CASE("daily_unfollow_counts hand traces") {
    SECTION("constant follower set gives all zeros") {
        SnapshotSeries s;
        s.subject_id = "a";
        for (int day = 0; day < 5; ++day)
            s.snapshots.push_back({parse_iso8601("2013-03-01T00:00:00Z") + day * kSecondsPerDay,
                                   {"f1", "f2"}});
        auto counts = daily_unfollow_counts(s);
        REQUIRE(counts.size() == 5);
        for (auto c : counts) CHECK(c == 0);
    }

    SECTION("loss attributed to the day of the later snapshot") {
        SnapshotSeries s;
        s.subject_id = "a";
        UtcSeconds t0 = parse_iso8601("2013-03-01T00:00:00Z");
        s.snapshots.push_back({t0, {"f1", "f2", "f3"}});
        s.snapshots.push_back({t0 + 1 * kSecondsPerDay, {"f1", "f2", "f3"}});
        s.snapshots.push_back({t0 + 2 * kSecondsPerDay, {"f1", "f2", "f3"}});
        // two losses observed at hour 5 of day 3
        s.snapshots.push_back({t0 + 3 * kSecondsPerDay + 5 * kSecondsPerHour, {"f1"}});
        auto counts = daily_unfollow_counts(s);
        REQUIRE(counts.size() == 4);
        CHECK(counts == std::vector<std::uint64_t>{0, 0, 0, 2});
    }

    SECTION("re-follow then loss counts each observed loss") {
        SnapshotSeries s;
        s.subject_id = "a";
        UtcSeconds t0 = parse_iso8601("2013-03-01T00:00:00Z");
        s.snapshots.push_back({t0, {"f1", "f2"}});
        s.snapshots.push_back({t0 + 6 * kSecondsPerHour, {"f2"}});        // f1 lost
        s.snapshots.push_back({t0 + 12 * kSecondsPerHour, {"f1", "f2"}}); // f1 back
        s.snapshots.push_back({t0 + kSecondsPerDay, {"f2"}});             // f1 lost again
        auto counts = daily_unfollow_counts(s);
        REQUIRE(counts.size() == 2);
        CHECK(counts[0] == 1);
        CHECK(counts[1] == 1);
    }

    SECTION("totals match summed per-pair losses") {
        Rng rng = stream_rng(11, "ucount-fuzz");
        SnapshotSeries s;
        s.subject_id = "a";
        UtcSeconds t0 = parse_iso8601("2013-03-01T00:00:00Z");
        for (int i = 0; i < 20; ++i) {
            Snapshot snap;
            snap.ts = t0 + i * 7 * kSecondsPerHour;
            for (int u = 0; u < 30; ++u)
                if (rand_bool(rng, 0.7)) snap.follower_ids.insert("u" + std::to_string(u));
            s.snapshots.push_back(std::move(snap));
        }
        std::uint64_t expected = 0;
        for (std::size_t i = 1; i < s.snapshots.size(); ++i)
            expected += diff_snapshots(s.snapshots[i - 1], s.snapshots[i]).lost.size();
        auto counts = daily_unfollow_counts(s);
        std::uint64_t total = 0;
        for (auto c : counts) total += c;
        CHECK(total == expected);
    }

    SECTION("fewer than two snapshots is an error") {
        SnapshotSeries s;
        s.subject_id = "a";
        CHECK_THROWS_AS(daily_unfollow_counts(s), insufficient_data_error);
        s.snapshots.push_back({0, {"f1"}});
        CHECK_THROWS_AS(daily_unfollow_counts(s), insufficient_data_error);
    }
}
