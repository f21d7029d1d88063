#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <set>

#include "shadowmarket/metrics.hpp"
#include "shadowmarket/protocol.hpp"
#include "shadowmarket/simgen.hpp"

using namespace smk;
namespace fs = std::filesystem;

namespace {

bool datasets_equal(const Dataset& a, const Dataset& b) {
    return a.accounts == b.accounts && a.merchants == b.merchants && a.snapshots == b.snapshots &&
           a.labels == b.labels && a.spam_lexicon == b.spam_lexicon &&
           a.url_blacklist == b.url_blacklist;
}

GeneratorConfig small_config() {
    GeneratorConfig cfg;
    cfg.n_suspicious = 40;
    cfg.n_legitimate = 80;
    cfg.n_customers = 6;
    cfg.n_ambient = 16;
    cfg.merchants_freemium = 3;
    cfg.merchants_premium = 2;
    cfg.merchants_dual = 7;
    cfg.n_leaders = 2;
    cfg.observation_days = 8;
    cfg.snapshot_pool = 30;
    cfg.customer_pool_min = 30;
    cfg.customer_pool_max = 50;
    return cfg;
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag)
        : path(fs::temp_directory_path() / ("smk_simgen_" + tag)) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("bundled generator preset loads with documented sizes") {
    const GeneratorConfig cfg = load_generator_config(std::string(SM_DATA_DIR) + "/paper_calibrated.json");
    CHECK(cfg.n_suspicious == 650);
    CHECK(cfg.n_legitimate == 1350);
    CHECK(cfg.n_customers == 40);
    CHECK(cfg.merchants_freemium + cfg.merchants_premium + cfg.merchants_dual == 65);
    CHECK(cfg.n_leaders == 5);
    CHECK(cfg.observation_days == 15);
    CHECK(cfg.base_ts == parse_iso8601("2026-03-01T00:00:00Z"));

    // config -> json -> config is the identity
    const GeneratorConfig again = generator_config_from_json(generator_config_to_json(cfg));
    CHECK(again == cfg);
}

TEST_CASE("generated market is deterministic in the seed") {
    const GeneratorConfig cfg = small_config();
    const auto a = generate_market(cfg, 11);
    const auto b = generate_market(cfg, 11);
    CHECK(datasets_equal(a.dataset, b.dataset));
    CHECK(a.truth == b.truth);

    const auto c = generate_market(cfg, 12);
    CHECK_FALSE(datasets_equal(a.dataset, c.dataset));
}

TEST_CASE("generated market survives a serialize/parse round trip") {
    const auto gm = generate_market(small_config(), 3);
    TempDir tmp("roundtrip");
    serialize_dataset(gm.dataset, tmp.path);

    const ParseResult parsed = parse_dataset(tmp.path);
    CAPTURE(parsed.errors.size());
    REQUIRE(parsed.errors.empty());
    CHECK(datasets_equal(parsed.dataset, gm.dataset));
}

TEST_CASE("market structure matches the configuration") {
    const GeneratorConfig cfg = small_config();
    const auto gm = generate_market(cfg, 5);
    const Dataset& ds = gm.dataset;

    std::size_t n_susp = 0, n_legit = 0;
    for (const auto& [id, l] : ds.labels) {
        (l == Label::suspicious ? n_susp : n_legit) += 1;
        REQUIRE(ds.accounts.count(id) == 1);
        REQUIRE(ds.snapshots.count(id) == 1);
        CHECK(ds.snapshots.at(id).snapshots.size() == cfg.observation_days);
    }
    CHECK(n_susp == cfg.n_suspicious);
    CHECK(n_legit == cfg.n_legitimate);
    CHECK(gm.truth.labels == ds.labels);

    std::size_t dual = 0, freemium_only = 0, premium_only = 0;
    for (const auto& [id, m] : ds.merchants) {
        const bool f = m.schemes.count(Scheme::freemium) == 1;
        const bool p = m.schemes.count(Scheme::premium) == 1;
        if (f && p) ++dual;
        else if (f) ++freemium_only;
        else ++premium_only;
        REQUIRE_FALSE(m.promises.empty());
        REQUIRE(m.performances.size() == m.promises.size());
    }
    CHECK(dual == cfg.merchants_dual);
    CHECK(freemium_only == cfg.merchants_freemium);
    CHECK(premium_only == cfg.merchants_premium);

    REQUIRE(gm.truth.leader_ids.size() == cfg.n_leaders);
    for (const auto& lid : gm.truth.leader_ids) {
        const Merchant& m = ds.merchants.at(lid);
        CHECK(m.has_twitter_profile);
        CHECK(m.traffic_rank <= 20000);
        CHECK(m.promo_tweet_count >= 600);
    }

    REQUIRE(gm.truth.customer_ids.size() == cfg.n_customers);
    for (const auto& cid : gm.truth.customer_ids) {
        const AccountDossier& a = ds.accounts.at(cid);
        const auto n_subs = a.subscribed_merchant_ids.size();
        CHECK(n_subs >= 1);
        CHECK(n_subs <= 3);
        for (const auto& mid : a.subscribed_merchant_ids) CHECK(ds.merchants.count(mid) == 1);
        CHECK(ds.snapshots.at(cid).snapshots.size() == cfg.observation_days * 24);
    }

    // every friend edge points at an account that exists with posted languages
    for (const auto& [id, l] : ds.labels) {
        for (const auto& fid : ds.accounts.at(id).friend_ids) {
            REQUIRE(ds.accounts.count(fid) == 1);
            CHECK_FALSE(ds.accounts.at(fid).tweets.empty());
        }
    }

    CHECK_FALSE(ds.spam_lexicon.empty());
    CHECK_FALSE(ds.url_blacklist.empty());
}

TEST_CASE("bundled preset hits its distributional calibration") {
    const GeneratorConfig cfg = load_generator_config(std::string(SM_DATA_DIR) + "/paper_calibrated.json");
    const auto gm = generate_market(cfg, 42);
    const Dataset& ds = gm.dataset;

    std::vector<double> entropies, reputations, ratios;
    for (const auto& [id, l] : ds.labels) {
        const double e = unfollow_entropy(daily_unfollow_counts(ds.snapshots.at(id)));
        if (l == Label::legitimate) {
            CHECK(e == 0.0);
            continue;
        }
        const AccountDossier& a = ds.accounts.at(id);
        entropies.push_back(e);
        REQUIRE(a.reputation_score.has_value());
        reputations.push_back(*a.reputation_score);
        ratios.push_back(static_cast<double>(a.follower_count) /
                         static_cast<double>(a.friend_count));
    }
    REQUIRE(entropies.size() == cfg.n_suspicious);

    std::size_t high_entropy = 0, low_rep = 0;
    for (double e : entropies) high_entropy += e >= 0.76 ? 1 : 0;
    for (double r : reputations) low_rep += r < 20.0 ? 1 : 0;
    CHECK(static_cast<double>(high_entropy) >= 0.20 * static_cast<double>(entropies.size()));
    CHECK(static_cast<double>(low_rep) >= 0.85 * static_cast<double>(reputations.size()));

    const PowerLawFit fit = fit_power_law(ratios);
    CHECK(fit.alpha == Catch::Approx(1.82).margin(0.1));

    CHECK(pearson(entropies, reputations) == Catch::Approx(-0.73).margin(0.15));
}

TEST_CASE("classifier trained on the bundled preset separates the classes") {
    const GeneratorConfig cfg = load_generator_config(std::string(SM_DATA_DIR) + "/paper_calibrated.json");
    const auto gm = generate_market(cfg, 42);

    ProtocolConfig pc;  // published parameters, shortened sampling for speed
    pc.n_negative_subsets = 2;
    pc.cv_folds = 3;
    pc.mask_schedule = {SetMask::parse("A"), SetMask::all()};
    pc.seed = 9;
    pc.jobs = 2;
    const ProtocolReport report = run_protocol(gm.dataset, pc);
    REQUIRE(report.masks.size() == 2);
    const auto& profile_only = report.masks.front();
    const auto& full = report.masks.back();
    CHECK(full.test_accuracy_mean >= 0.95);
    CHECK(full.test_accuracy_mean >= profile_only.test_accuracy_mean);
    CHECK(profile_only.test_accuracy_mean >= 0.80);
}

TEST_CASE("label perturbation flips exactly the requested share") {
    const auto gm = generate_market(small_config(), 21);
    const auto& labels = gm.dataset.labels;
    const std::size_t n = labels.size();

    const LabelPerturbation p = perturb_labels(labels, 0.1, 77);
    CHECK(p.flipped.size() == n / 10);
    CHECK(std::is_sorted(p.flipped.begin(), p.flipped.end()));
    std::size_t changed = 0;
    for (const auto& [id, l] : labels) changed += p.labels.at(id) != l ? 1 : 0;
    CHECK(changed == p.flipped.size());
    for (const auto& id : p.flipped) CHECK(p.labels.at(id) != labels.at(id));

    // deterministic in the seed, sensitive to it
    CHECK(perturb_labels(labels, 0.1, 77).flipped == p.flipped);
    CHECK(perturb_labels(labels, 0.1, 78).flipped != p.flipped);

    CHECK(perturb_labels(labels, 0.0, 1).flipped.empty());
    CHECK_THROWS_AS(perturb_labels(labels, 0.5, 1), validation_error);
    CHECK_THROWS_AS(perturb_labels(labels, -0.01, 1), validation_error);
}
