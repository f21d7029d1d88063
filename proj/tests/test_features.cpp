#include <catch2/catch_amalgamated.hpp>

#include "shadowmarket/features.hpp"

using namespace smk;

namespace {

AccountDossier sample_account() {
    AccountDossier a;
    a.account_id = "subj";
    a.created_at = parse_iso8601("2013-01-01T00:00:00Z");
    a.bio = "deals page";
    a.bio_urls = {"http://x.example.com"};
    a.post_count = 42;
    a.follower_count = 30;
    a.friend_count = 300;
    a.friend_ids = {"p1", "p2"};
    a.reputation_score = 15.0;
    TweetRecord t;
    t.timestamp = parse_iso8601("2013-03-05T00:00:00Z");
    t.text = "free followers";
    t.hashtags = {"h1", "h2"};
    t.languages = {"es"};
    a.tweets.push_back(t);
    TweetRecord r;
    r.timestamp = parse_iso8601("2013-03-06T00:00:00Z");
    r.is_retweet = true;
    r.retweeted_of = "p1";
    r.mentions = {"p2"};
    r.languages = {"en"};
    a.tweets.push_back(r);
    return a;
}

SnapshotSeries sample_series() {
    SnapshotSeries s;
    s.subject_id = "subj";
    const UtcSeconds t0 = parse_iso8601("2013-03-01T00:00:00Z");
    s.snapshots.push_back({t0, {"f1", "f2", "f3", "f4", "f5"}});
    s.snapshots.push_back({t0 + kSecondsPerDay, {"f4", "f5"}});       // lose 3
    s.snapshots.push_back({t0 + 2 * kSecondsPerDay, {"f5"}});         // lose 1
    return s;
}

ExtractionContext sample_ctx() {
    ExtractionContext ctx;
    ctx.spam_lexicon = {"free", "followers"};
    ctx.now = parse_iso8601("2013-03-16T00:00:00Z");
    ctx.window_seconds = 15 * kSecondsPerDay;
    return ctx;
}

}  // namespace

TEST_CASE("set masks") {
    CHECK(SetMask::parse("A") == SetMask{true, false, false, false});
    CHECK(SetMask::parse("AB").dimensions() == 6);
    CHECK(SetMask::parse("abcd") == SetMask::all());
    CHECK(SetMask::parse("ABCD").to_string() == "ABCD");
    CHECK_THROWS_AS(SetMask::parse("AX"), validation_error);
    CHECK_THROWS_AS(SetMask::parse(""), validation_error);

    auto schedule = incremental_masks();
    REQUIRE(schedule.size() == 4);
    CHECK(schedule[0].dimensions() == 4);
    CHECK(schedule[1].dimensions() == 6);
    CHECK(schedule[2].dimensions() == 12);
    CHECK(schedule[3].dimensions() == 18);

    std::size_t a = 0, b = 0, c = 0, d = 0;
    for (char s : kFeatureSet) {
        a += s == 'A';
        b += s == 'B';
        c += s == 'C';
        d += s == 'D';
    }
    CHECK(a == 4);
    CHECK(b == 2);
    CHECK(c == 6);
    CHECK(d == 6);
    CHECK(kFeatureNames.size() == 18);
}

TEST_CASE("feature extraction") {
    const AccountDossier a = sample_account();
    const SnapshotSeries s = sample_series();
    const ExtractionContext ctx = sample_ctx();
    const std::vector<std::set<std::string>> peers{{"es"}, {"fr"}};

    SECTION("profile-only mask gives four values") {
        FeatureVector fv = extract_features(a, nullptr, peers, ctx, SetMask::parse("A"));
        REQUIRE(fv.values.size() == 4);
        CHECK(fv.values[0] == 1.0);   // bio present
        CHECK(fv.values[1] == 1.0);   // url in bio
        CHECK(fv.values[2] == 42.0);  // posts
        CHECK(fv.values[3] == 15.0);  // reputation
    }
    SECTION("full mask gives eighteen values wired to the metric operations") {
        FeatureVector fv = extract_features(a, &s, peers, ctx, SetMask::all());
        REQUIRE(fv.values.size() == 18);
        CHECK(fv.values[4] == Catch::Approx(0.1));   // 30/300
        CHECK(fv.values[5] == 30.0);
        CHECK(fv.values[6] == Catch::Approx(1.0));   // 2 hashtags / 2 tweets
        CHECK(fv.values[7] == Catch::Approx(1.0));   // "free"+"followers" / 2 tweets
        CHECK(fv.values[9] == 2.0);                  // es, en
        CHECK(fv.values[10] == Catch::Approx(0.5));
        CHECK(fv.values[11] == Catch::Approx(0.5));
        CHECK(fv.values[12] ==
              Catch::Approx(unfollow_entropy(daily_unfollow_counts(s))));
        CHECK(fv.values[13] == Catch::Approx(retweet_engagement(a, a.friend_ids).value));
        CHECK(fv.values[14] == Catch::Approx(mention_engagement(a, a.friend_ids).value));
        CHECK(fv.values[15] == Catch::Approx(0.5));  // one of two peers shares a language
        CHECK(fv.values[16] ==
              Catch::Approx(static_cast<double>(ctx.now - a.tweets.back().timestamp)));
        CHECK(fv.values[17] == Catch::Approx(2.0 / 15.0));
        CHECK_FALSE(fv.ratio_capped);
    }
    SECTION("behaviour set requires a snapshot series") {
        CHECK_THROWS_AS(extract_features(a, nullptr, peers, ctx, SetMask::all()),
                        computation_error);
        CHECK_NOTHROW(extract_features(a, nullptr, peers, ctx, SetMask::parse("ABC")));
    }
    SECTION("tweetless account zeroes the content rates") {
        AccountDossier quiet = a;
        quiet.tweets.clear();
        FeatureVector fv = extract_features(quiet, &s, peers, ctx, SetMask::all());
        CHECK(fv.values[6] == 0.0);
        CHECK(fv.values[10] == 0.0);
        CHECK(fv.values[16] == Catch::Approx(static_cast<double>(ctx.window_seconds)));
        CHECK(fv.values[17] == 0.0);
    }
    SECTION("infinite ratio maps to the context cap and is flagged") {
        AccountDossier lonely = a;
        lonely.friend_count = 0;
        FeatureVector fv = extract_features(lonely, nullptr, peers, ctx, SetMask::parse("B"));
        REQUIRE(fv.values.size() == 2);
        CHECK(fv.values[0] == ctx.ratio_cap);
        CHECK(fv.ratio_capped);
    }
    SECTION("no reputation falls back to zero or to the documented proxy") {
        AccountDossier unscored = a;
        unscored.reputation_score.reset();
        FeatureVector plain = extract_features(unscored, nullptr, peers, ctx, SetMask::parse("A"));
        CHECK(plain.values[3] == 0.0);
        ExtractionContext proxy_ctx = ctx;
        proxy_ctx.use_reputation_proxy = true;
        FeatureVector proxied =
            extract_features(unscored, nullptr, peers, proxy_ctx, SetMask::parse("A"));
        CHECK(proxied.values[3] == Catch::Approx(reputation_proxy(unscored)));
    }
    SECTION("extraction is deterministic") {
        FeatureVector f1 = extract_features(a, &s, peers, ctx, SetMask::all());
        FeatureVector f2 = extract_features(a, &s, peers, ctx, SetMask::all());
        CHECK(f1 == f2);
    }
}

TEST_CASE("standardization") {
    SECTION("two-point column lands on plus/minus one") {
        auto [std_m, scaler] = standardize({{0.0}, {10.0}});
        CHECK(std_m[0][0] == Catch::Approx(-1.0));
        CHECK(std_m[1][0] == Catch::Approx(1.0));
        CHECK(scaler.offset[0] == Catch::Approx(5.0));
        CHECK(scaler.scale[0] == Catch::Approx(5.0));  // population std
        CHECK_FALSE(scaler.zero_variance[0]);
    }
    SECTION("constant columns pass through with a flag") {
        auto [std_m, scaler] = standardize({{7.0, 1.0}, {7.0, 3.0}, {7.0, 5.0}});
        CHECK(std_m[0][0] == 7.0);
        CHECK(std_m[2][0] == 7.0);
        CHECK(scaler.zero_variance[0]);
        CHECK_FALSE(scaler.zero_variance[1]);
    }
    SECTION("standardizing an already standardized matrix is near-identity") {
        Rng rng = stream_rng(41, "std-fuzz");
        Matrix m(20, std::vector<double>(3));
        for (auto& row : m)
            for (auto& v : row) v = rand_range(rng, -10, 10);
        auto [once, s1] = standardize(m);
        auto [twice, s2] = standardize(once);
        for (std::size_t j = 0; j < 3; ++j) {
            CHECK(s2.offset[j] == Catch::Approx(0.0).margin(1e-9));
            CHECK(s2.scale[j] == Catch::Approx(1.0).margin(1e-9));
        }
        for (std::size_t i = 0; i < m.size(); ++i)
            for (std::size_t j = 0; j < 3; ++j)
                CHECK(twice[i][j] == Catch::Approx(once[i][j]).margin(1e-9));
    }
    SECTION("scaler application to new rows") {
        auto [std_m, scaler] = standardize({{0.0}, {10.0}});
        CHECK(scaler.apply(std::vector<double>{5.0})[0] == Catch::Approx(0.0));
        CHECK(scaler.apply(std::vector<double>{20.0})[0] == Catch::Approx(3.0));
        CHECK_THROWS_AS(scaler.apply(std::vector<double>{1.0, 2.0}), computation_error);
    }
    SECTION("degenerate matrices rejected") {
        CHECK_THROWS_AS(standardize({{1.0}}), insufficient_data_error);
        CHECK_THROWS_AS(standardize({{1.0, 2.0}, {1.0}}), computation_error);
    }
}
