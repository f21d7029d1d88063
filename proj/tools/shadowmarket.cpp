// Command-line front end for the shadow-market analytics toolkit. One verb per
// analysis stage; this translation unit owns argument parsing, the exit-code
// policy, artifact file layout, and the run manifest. All computation lives in
// the header library.
//
// Exit codes: 0 success, 2 usage error, 3 input validation failure,
// 4 computation error. Every failure prints a single machine-parseable line on
// stderr: "shadowmarket: <usage|invalid-input|computation>: <reason>".

#include <cstdio>
#include <ctime>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "shadowmarket/eval.hpp"
#include "shadowmarket/features.hpp"
#include "shadowmarket/io.hpp"
#include "shadowmarket/market.hpp"
#include "shadowmarket/metrics.hpp"
#include "shadowmarket/model.hpp"
#include "shadowmarket/protocol.hpp"
#include "shadowmarket/simgen.hpp"
#include "shadowmarket/svm.hpp"

namespace {

using namespace smk;

constexpr const char* kToolVersion = "0.1.0";

// Population-study cutoffs for the summary emitted by `metrics`/`report`:
// churn entropy at or above this marks a high-churn account, reputation below
// this marks a low-reputation one.
constexpr double kHighEntropyCut = 0.76;
constexpr double kLowReputationCut = 20.0;

// Fallback stopword list for customer-bio profiling when no --stopwords file
// is supplied.
constexpr const char* kDefaultStopwords[] = {
    "a",   "an",  "and", "are", "as",   "at",  "be",   "by",   "for", "from", "has",  "have",
    "i",   "in",  "is",  "it",  "its",  "my",  "of",   "on",   "or",  "our",  "that", "the",
    "their", "this", "to", "was", "we", "with", "you", "your"};

enum class Format { csv, json };

Format parse_format(const std::string& s) {
    return s == "json" ? Format::json : Format::csv;
}

// ---------------------------------------------------------------------------
// Options shared across subcommands. Only one subcommand parses per run, so a
// single bundle can back every verb.
// ---------------------------------------------------------------------------

struct Options {
    std::string data;
    std::string out;
    std::string config;
    std::string model;
    std::string stopwords;
    std::string subject;
    std::string sets = "ABCD";
    std::string format = "csv";
    std::uint64_t seed = 0;
    unsigned jobs = 1;
    double flip_rate = 0.0;
    double rep_threshold = 40.0;
    std::size_t top_terms = 20;
    std::size_t top_k = 5;
    double leader_threshold = -1.0;  // <0 = use top_k
    bool with_importance = false;
};

// ---------------------------------------------------------------------------
// Run manifest: one JSON document per invocation describing what ran, on which
// inputs (content digests), and which artifacts were produced. The wall-clock
// field is informational and is the only part of a run that varies between
// identically-seeded invocations.
// ---------------------------------------------------------------------------

std::uint64_t path_digest(const fs::path& p) {
    if (fs::is_directory(p)) {
        std::vector<fs::path> files;
        for (const auto& e : fs::recursive_directory_iterator(p))
            if (e.is_regular_file()) files.push_back(e.path());
        std::sort(files.begin(), files.end());
        std::uint64_t h = fnv1a64("dir");
        for (const auto& f : files) {
            h = splitmix64(h ^ fnv1a64(f.lexically_relative(p).generic_string()));
            h = splitmix64(h ^ file_digest(f));
        }
        return h;
    }
    return file_digest(p);
}

struct Emitter {
    fs::path out_dir;
    ordered_json manifest;
    std::vector<std::string> outputs;

    Emitter(const std::string& command, const std::string& out, std::uint64_t seed,
            ordered_json resolved_config) {
        out_dir = out;
        fs::create_directories(out_dir);
        manifest["format"] = "shadowmarket-run-manifest";
        manifest["version"] = 1;
        manifest["tool_version"] = kToolVersion;
        manifest["command"] = command;
        manifest["config"] = std::move(resolved_config);
        manifest["seed"] = seed;
        manifest["inputs"] = ordered_json::object();
    }

    void input(const std::string& label, const fs::path& p) {
        manifest["inputs"][label] = hex64(path_digest(p));
    }

    /// Writes one artifact atomically and records it in the manifest.
    void file(const std::string& name, std::string_view content) {
        const fs::path p = out_dir / name;
        if (p.has_parent_path()) fs::create_directories(p.parent_path());
        write_file_atomic(p, content);
        outputs.push_back(name);
        logf(LogLevel::debug, "wrote %s (%zu bytes)", p.c_str(), content.size());
    }

    void finish() {
        std::sort(outputs.begin(), outputs.end());
        manifest["outputs"] = outputs;
        manifest["wall_clock_utc"] = format_iso8601(static_cast<UtcSeconds>(std::time(nullptr)));
        write_file_atomic(out_dir / "run_manifest.json", manifest.dump(2) + "\n");
    }
};

// ---------------------------------------------------------------------------
// Small table abstraction so every tabular artifact can be emitted as CSV or
// as a JSON array of row objects.
// ---------------------------------------------------------------------------

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<ordered_json>> rows;

    std::string csv_cell(const ordered_json& v) const {
        return v.is_string() ? v.get<std::string>() : v.dump();
    }

    std::string to_csv() const {
        std::string out;
        for (std::size_t c = 0; c < columns.size(); ++c) {
            if (c) out += ',';
            out += columns[c];
        }
        out += '\n';
        for (const auto& row : rows) {
            for (std::size_t c = 0; c < row.size(); ++c) {
                if (c) out += ',';
                out += csv_cell(row[c]);
            }
            out += '\n';
        }
        return out;
    }

    ordered_json to_json() const {
        ordered_json arr = ordered_json::array();
        for (const auto& row : rows) {
            ordered_json obj;
            for (std::size_t c = 0; c < row.size(); ++c) obj[columns[c]] = row[c];
            arr.push_back(std::move(obj));
        }
        return arr;
    }
};

void emit_table(Emitter& em, const std::string& basename, const Table& t, Format f) {
    if (f == Format::csv)
        em.file(basename + ".csv", t.to_csv());
    else
        em.file(basename + ".json", t.to_json().dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Input loading.
// ---------------------------------------------------------------------------

Dataset load_dataset(const std::string& dir) {
    if (!fs::is_directory(dir))
        throw validation_error("dataset directory not found: " + dir);
    ParseResult res = parse_dataset(dir);
    if (!res.ok()) {
        std::size_t shown = 0;
        for (const auto& e : res.errors) {
            if (shown++ == 20) {
                logf(LogLevel::error, "... and %zu more", res.errors.size() - 20);
                break;
            }
            logf(LogLevel::error, "%s", e.to_string().c_str());
        }
        throw validation_error(std::to_string(res.errors.size()) + " parse errors in " + dir +
                               " (first: " + res.errors.front().to_string() + ")");
    }
    logf(LogLevel::info, "loaded %zu accounts, %zu merchants, %zu snapshot series, %zu labels",
         res.dataset.accounts.size(), res.dataset.merchants.size(), res.dataset.snapshots.size(),
         res.dataset.labels.size());
    return std::move(res.dataset);
}

/// Builds the incremental mask schedule ending at the requested set string
/// ("A" -> {A}; "ABCD" -> {A},{A,B},{A,B,C},{A,B,C,D}).
std::vector<SetMask> schedule_for(const std::string& sets) {
    const auto all = incremental_masks();
    std::vector<SetMask> out;
    for (const auto& m : all) {
        out.push_back(m);
        if (m == SetMask::parse(sets)) return out;
    }
    throw validation_error("unsupported feature-set schedule '" + sets + "'");
}

/// Protocol settings: published defaults, optionally overridden by a JSON
/// config file with any of the documented keys.
ProtocolConfig protocol_config(const Options& opt) {
    ProtocolConfig cfg;
    cfg.seed = opt.seed;
    cfg.jobs = opt.jobs;
    cfg.mask_schedule = schedule_for(opt.sets);
    cfg.with_importance = opt.with_importance;
    if (opt.config.empty()) return cfg;

    const ordered_json j = ordered_json::parse(read_file(opt.config));
    for (const auto& [key, value] : j.items()) {
        if (key == "n_negative_subsets") cfg.n_negative_subsets = value.get<std::size_t>();
        else if (key == "train_fraction") cfg.train_fraction = value.get<double>();
        else if (key == "cv_folds") cfg.cv_folds = value.get<std::size_t>();
        else if (key == "C") cfg.params.C = value.get<double>();
        else if (key == "gamma") cfg.params.gamma = value.get<double>();
        else if (key == "tolerance") cfg.params.tolerance = value.get<double>();
        else if (key == "max_passes") cfg.params.max_passes = value.get<std::size_t>();
        else if (key == "importance_shuffles") cfg.importance_shuffles = value.get<std::size_t>();
        else if (key == "with_importance") cfg.with_importance = value.get<bool>();
        else if (key == "use_reputation_proxy") cfg.use_reputation_proxy = value.get<bool>();
        else throw validation_error("unknown protocol config key '" + key + "'");
    }
    return cfg;
}

ordered_json protocol_config_to_json(const ProtocolConfig& c) {
    ordered_json j;
    j["n_negative_subsets"] = c.n_negative_subsets;
    j["train_fraction"] = c.train_fraction;
    j["cv_folds"] = c.cv_folds;
    ordered_json masks = ordered_json::array();
    for (const auto& m : c.mask_schedule) masks.push_back(m.to_string());
    j["mask_schedule"] = std::move(masks);
    j["C"] = c.params.C;
    j["gamma"] = c.params.gamma;
    j["tolerance"] = c.params.tolerance;
    j["max_passes"] = c.params.max_passes;
    j["seed"] = c.seed;
    j["jobs"] = c.jobs;
    j["with_importance"] = c.with_importance;
    j["importance_shuffles"] = c.importance_shuffles;
    j["use_reputation_proxy"] = c.use_reputation_proxy;
    return j;
}

// ---------------------------------------------------------------------------
// validate
// ---------------------------------------------------------------------------

int cmd_validate(const Options& opt) {
    if (!fs::is_directory(opt.data))
        throw validation_error("dataset directory not found: " + opt.data);
    const ParseResult res = parse_dataset(opt.data);
    const Dataset& ds = res.dataset;
    std::size_t n_susp = 0;
    for (const auto& [id, l] : ds.labels) n_susp += l == Label::suspicious ? 1 : 0;
    std::printf("accounts: %zu\n", ds.accounts.size());
    std::printf("merchants: %zu\n", ds.merchants.size());
    std::printf("snapshot-series: %zu\n", ds.snapshots.size());
    std::printf("labels: %zu (%zu suspicious, %zu legitimate)\n", ds.labels.size(), n_susp,
                ds.labels.size() - n_susp);
    std::printf("lexicons: %zu spam words, %zu blacklist entries\n", ds.spam_lexicon.size(),
                ds.url_blacklist.size());
    std::printf("errors: %zu\n", res.errors.size());
    if (!res.ok()) {
        for (const auto& e : res.errors) std::fprintf(stderr, "%s\n", e.to_string().c_str());
        throw validation_error(std::to_string(res.errors.size()) + " parse errors in " + opt.data);
    }
    return 0;
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

int cmd_simulate(const Options& opt) {
    GeneratorConfig cfg;
    if (!opt.config.empty()) cfg = load_generator_config(opt.config);

    Emitter em("simulate", opt.out, opt.seed, generator_config_to_json(cfg));
    if (!opt.config.empty()) em.input("config", opt.config);

    GeneratedMarket gm = generate_market(cfg, opt.seed);
    ordered_json truth = ground_truth_to_json(gm.truth);
    if (opt.flip_rate > 0.0) {
        const LabelPerturbation noise = perturb_labels(gm.dataset.labels, opt.flip_rate, opt.seed);
        gm.dataset.labels = noise.labels;  // observed (noisy) labels go into the dataset
        truth["label_noise"] = {{"rate", opt.flip_rate},
                                {"n_flipped", noise.flipped.size()},
                                {"flipped", noise.flipped}};
        logf(LogLevel::info, "flipped %zu labels", noise.flipped.size());
    }

    serialize_dataset(gm.dataset, em.out_dir);
    for (const char* name : {"accounts.jsonl", "merchants.jsonl", "labels.csv",
                             "lexicons/spam_words.txt", "lexicons/url_blacklist.txt"})
        em.outputs.push_back(name);
    for (const auto& [id, series] : gm.dataset.snapshots)
        em.outputs.push_back("snapshots/" + id + ".jsonl");
    em.file("ground_truth.json", truth.dump(2) + "\n");
    em.finish();

    std::printf("generated %zu accounts (%zu labeled), %zu merchants, %zu snapshot series -> %s\n",
                gm.dataset.accounts.size(), gm.dataset.labels.size(), gm.dataset.merchants.size(),
                gm.dataset.snapshots.size(), opt.out.c_str());
    return 0;
}

// ---------------------------------------------------------------------------
// qos
// ---------------------------------------------------------------------------

ordered_json qos_section(const Dataset& ds, Emitter& em, Format fmt) {
    Table t;
    t.columns = {"merchant_id", "n_terms", "qos"};
    std::size_t skipped = 0;
    double sum = 0.0;
    for (const auto& [id, m] : ds.merchants) {
        if (m.performances.empty()) {
            ++skipped;
            logf(LogLevel::debug, "merchant %s has no measured promises", id.c_str());
            continue;
        }
        const QosResult r = merchant_qos(m);
        sum += r.qos;
        t.rows.push_back({id, r.per_promise_terms.size(), r.qos});
    }
    if (t.rows.empty()) throw insufficient_data_error("qos: no merchant has measured promises");
    emit_table(em, "qos", t, fmt);
    ordered_json section;
    section["n_scored"] = t.rows.size();
    section["n_skipped"] = skipped;
    section["mean_qos"] = sum / static_cast<double>(t.rows.size());
    return section;
}

int cmd_qos(const Options& opt) {
    const Dataset ds = load_dataset(opt.data);
    Emitter em("qos", opt.out, opt.seed, nullptr);
    em.input("data", opt.data);
    const ordered_json s = qos_section(ds, em, parse_format(opt.format));
    em.finish();
    std::printf("scored %zu merchants (skipped %zu), mean qos %s\n",
                s.at("n_scored").get<std::size_t>(), s.at("n_skipped").get<std::size_t>(),
                fmt_fixed(s.at("mean_qos").get<double>(), 4).c_str());
    return 0;
}

// ---------------------------------------------------------------------------
// popularity
// ---------------------------------------------------------------------------

ordered_json popularity_section(const Dataset& ds, Emitter& em, Format fmt, std::size_t top_k,
                                std::optional<double> threshold) {
    if (ds.merchants.empty()) throw insufficient_data_error("popularity: no merchants in dataset");
    std::map<std::string, std::uint64_t> ranks, tweet_counts;
    for (const auto& [id, m] : ds.merchants) {
        ranks[id] = m.traffic_rank;
        tweet_counts[id] = m.promo_tweet_count;
    }
    const auto alexa = alexa_norm(ranks);
    const auto osn = osn_popularity(tweet_counts);
    LeaderQuery query;
    if (threshold)
        query.threshold = *threshold;
    else
        query.top_k = top_k;
    const LeaderReport report = rank_leaders(merchant_popularity(alexa, osn.scores), query);

    Table t;
    t.columns = {"merchant_id", "alexa_norm", "osn_popularity", "popularity"};
    for (const auto& r : report.ranked)
        t.rows.push_back({r.merchant_id, r.alexa_norm, r.osn_popularity, r.popularity});
    emit_table(em, "popularity", t, fmt);

    ordered_json leaders;
    leaders["leaders"] = report.leaders;
    if (report.gap) leaders["gap"] = *report.gap;
    leaders["oligopoly"] = report.oligopoly;
    if (threshold)
        leaders["query"] = {{"threshold", *threshold}};
    else
        leaders["query"] = {{"top_k", top_k}};
    if (report.ranked.size() >= 3) {
        std::vector<std::pair<double, double>> curve;
        for (std::size_t i = 0; i < report.ranked.size(); ++i)
            curve.emplace_back(static_cast<double>(i + 1), report.ranked[i].popularity);
        const KneePoint knee = knee_point(curve);
        if (knee.found) leaders["knee"] = {{"rank", knee.x}, {"popularity", knee.y}};
    }
    em.file("leaders.json", leaders.dump(2) + "\n");

    ordered_json section = leaders;
    section["n_merchants"] = report.ranked.size();
    return section;
}

int cmd_popularity(const Options& opt) {
    const Dataset ds = load_dataset(opt.data);
    Emitter em("popularity", opt.out, opt.seed, nullptr);
    em.input("data", opt.data);
    std::optional<double> threshold;
    if (opt.leader_threshold >= 0.0) threshold = opt.leader_threshold;
    const ordered_json s =
        popularity_section(ds, em, parse_format(opt.format), opt.top_k, threshold);
    em.finish();
    std::printf("ranked %zu merchants; %zu leaders, oligopoly: %s\n",
                s.at("n_merchants").get<std::size_t>(), s.at("leaders").size(),
                s.at("oligopoly").get<bool>() ? "yes" : "no");
    return 0;
}

// ---------------------------------------------------------------------------
// retention
// ---------------------------------------------------------------------------

int cmd_retention(const Options& opt) {
    const Dataset ds = load_dataset(opt.data);
    Emitter em("retention", opt.out, opt.seed, nullptr);
    em.input("data", opt.data);

    std::vector<const SnapshotSeries*> subjects;
    if (!opt.subject.empty()) {
        auto it = ds.snapshots.find(opt.subject);
        if (it == ds.snapshots.end())
            throw validation_error("retention: no snapshot series for '" + opt.subject + "'");
        subjects.push_back(&it->second);
    } else {
        for (const auto& [id, series] : ds.snapshots)
            if (series.snapshots.size() >= 24) subjects.push_back(&series);
    }
    if (subjects.empty())
        throw insufficient_data_error("retention: no snapshot series with >= 24 snapshots");

    Table summary;
    summary.columns = {"subject_id", "n_snapshots", "n_dips", "followers_lost", "pcc_vs_hour"};
    for (const SnapshotSeries* series : subjects) {
        const RetentionReport r = retention_report(*series);
        std::map<UtcSeconds, std::uint64_t> dip_at;
        std::uint64_t lost = 0;
        for (const auto& d : r.dips) {
            dip_at[d.ts] = d.drop;
            lost += d.drop;
        }
        Table t;
        t.columns = {"ts", "followers", "drop"};
        for (const auto& [ts, count] : r.counts) {
            auto it = dip_at.find(ts);
            t.rows.push_back({format_iso8601(ts), count,
                              it == dip_at.end() ? std::uint64_t{0} : it->second});
        }
        em.file("retention_" + r.subject_id + ".csv", t.to_csv());
        summary.rows.push_back({r.subject_id, r.counts.size(), r.dips.size(), lost,
                                r.pcc_vs_hour ? ordered_json(*r.pcc_vs_hour) : ordered_json()});
    }
    em.file("retention_summary.json", summary.to_json().dump(2) + "\n");
    em.finish();
    std::printf("wrote retention curves for %zu subjects\n", subjects.size());
    return 0;
}

// ---------------------------------------------------------------------------
// customers
// ---------------------------------------------------------------------------

ordered_json customers_section(const Dataset& ds, Emitter& em, const std::set<std::string>& stops,
                               double rep_threshold, std::size_t top_terms) {
    std::vector<AccountDossier> customers;
    for (const auto& [id, a] : ds.accounts)
        if (!a.subscribed_merchant_ids.empty()) customers.push_back(a);
    if (customers.empty())
        throw insufficient_data_error("customers: no account subscribes to any merchant");

    const CustomerProfileReport r =
        customer_profile_report(customers, ds.url_blacklist, stops, rep_threshold, top_terms);
    ordered_json j;
    j["n_customers"] = r.n_customers;
    j["n_with_reputation"] = r.n_with_reputation;
    j["reputation_threshold"] = rep_threshold;
    j["frac_above_threshold"] = r.frac_above_threshold;
    j["frac_with_blacklisted_url"] = r.frac_with_blacklisted_url;
    j["verified_count"] = r.verified_count;
    ordered_json terms = ordered_json::array();
    for (const auto& [term, count] : r.top_bio_terms) terms.push_back({{"term", term}, {"count", count}});
    j["top_bio_terms"] = std::move(terms);
    j["subscriptions_by_merchant"] = r.subscriptions_by_merchant;
    em.file("customers.json", j.dump(2) + "\n");
    return j;
}

std::set<std::string> load_stopwords(const std::string& path) {
    std::set<std::string> stops;
    if (path.empty()) {
        for (const char* w : kDefaultStopwords) stops.insert(w);
    } else {
        for (const auto& w : load_lexicon(path)) stops.insert(to_lower(w));
    }
    return stops;
}

int cmd_customers(const Options& opt) {
    const Dataset ds = load_dataset(opt.data);
    Emitter em("customers", opt.out, opt.seed, nullptr);
    em.input("data", opt.data);
    if (!opt.stopwords.empty()) em.input("stopwords", opt.stopwords);
    const ordered_json s = customers_section(ds, em, load_stopwords(opt.stopwords),
                                             opt.rep_threshold, opt.top_terms);
    em.finish();
    std::printf("profiled %zu customers (%zu verified, %s blacklisted-url share)\n",
                s.at("n_customers").get<std::size_t>(), s.at("verified_count").get<std::size_t>(),
                fmt_fixed(s.at("frac_with_blacklisted_url").get<double>(), 3).c_str());
    return 0;
}

// ---------------------------------------------------------------------------
// metrics (per-account panel + population summary)
// ---------------------------------------------------------------------------

Table feature_table(const Dataset& ds, const LabeledFeatures& lf, SetMask mask) {
    Table t;
    t.columns = {"account_id", "label"};
    const auto cols = mask.selected();
    for (std::size_t c : cols) t.columns.push_back(kFeatureNames[c]);
    if (mask.b) t.columns.push_back("ratio_capped");
    for (std::size_t i = 0; i < lf.ids.size(); ++i) {
        std::vector<ordered_json> row;
        row.push_back(lf.ids[i]);
        row.push_back(label_name(ds.labels.at(lf.ids[i])));
        for (std::size_t c : cols) row.push_back(lf.X[i][c]);
        if (mask.b) row.push_back(lf.ratio_capped[i] ? 1 : 0);
        t.rows.push_back(std::move(row));
    }
    return t;
}

ordered_json population_section(const Dataset& ds, const LabeledFeatures& lf, Emitter& em,
                                Format fmt) {
    if (lf.ids.empty()) throw insufficient_data_error("metrics: dataset has no labeled accounts");
    emit_table(em, "metrics", feature_table(ds, lf, SetMask::all()), fmt);

    constexpr std::size_t kEntropyCol = 12, kReputationCol = 3, kRatioCol = kRatioFeature;
    std::vector<double> s_entropy, s_rep, s_ratio, s_rep_paired, l_entropy;
    for (std::size_t i = 0; i < lf.ids.size(); ++i) {
        const double e = lf.X[i][kEntropyCol];
        if (lf.y[i] != 1) {
            l_entropy.push_back(e);
            continue;
        }
        s_entropy.push_back(e);
        if (!lf.ratio_capped[i] && lf.X[i][kRatioCol] > 0.0) s_ratio.push_back(lf.X[i][kRatioCol]);
        if (ds.accounts.at(lf.ids[i]).reputation_score) {
            s_rep.push_back(lf.X[i][kReputationCol]);
            s_rep_paired.push_back(e);
        }
    }

    ordered_json j;
    j["n_suspicious"] = s_entropy.size();
    j["n_legitimate"] = l_entropy.size();
    auto frac = [](const std::vector<double>& xs, auto pred) {
        if (xs.empty()) return 0.0;
        std::size_t n = 0;
        for (double x : xs) n += pred(x) ? 1 : 0;
        return static_cast<double>(n) / static_cast<double>(xs.size());
    };
    ordered_json susp;
    susp["entropy_mean"] = mean_of(s_entropy);
    susp["entropy_frac_high"] = frac(s_entropy, [](double e) { return e >= kHighEntropyCut; });
    susp["entropy_high_cut"] = kHighEntropyCut;
    if (!s_rep.empty()) {
        susp["reputation_mean"] = mean_of(s_rep);
        susp["reputation_frac_low"] = frac(s_rep, [](double r) { return r < kLowReputationCut; });
        susp["reputation_low_cut"] = kLowReputationCut;
    }
    try {
        const PowerLawFit fit = fit_power_law(s_ratio);
        susp["ratio_power_law"] = {
            {"alpha", fit.alpha}, {"sigma", fit.sigma}, {"x_min", fit.x_min}, {"n", fit.n}};
    } catch (const computation_error& e) {
        logf(LogLevel::debug, "ratio power-law fit skipped: %s", e.what());
    }
    try {
        if (s_rep_paired.size() >= 2)
            susp["pcc_entropy_reputation"] = pearson(s_rep_paired, s_rep);
    } catch (const computation_error& e) {
        logf(LogLevel::debug, "entropy/reputation correlation skipped: %s", e.what());
    }
    j["suspicious"] = std::move(susp);
    ordered_json legit;
    legit["entropy_mean"] = mean_of(l_entropy);
    legit["entropy_frac_zero"] = frac(l_entropy, [](double e) { return e == 0.0; });
    j["legitimate"] = std::move(legit);
    em.file("population.json", j.dump(2) + "\n");
    return j;
}

int cmd_metrics(const Options& opt) {
    const Dataset ds = load_dataset(opt.data);
    Emitter em("metrics", opt.out, opt.seed, nullptr);
    em.input("data", opt.data);
    ProtocolConfig pcfg = protocol_config(opt);
    const LabeledFeatures lf = extract_labeled_features(ds, pcfg);
    const ordered_json s = population_section(ds, lf, em, parse_format(opt.format));
    em.finish();
    std::printf("profiled %zu suspicious / %zu legitimate accounts\n",
                s.at("n_suspicious").get<std::size_t>(), s.at("n_legitimate").get<std::size_t>());
    return 0;
}

// ---------------------------------------------------------------------------
// features
// ---------------------------------------------------------------------------

int cmd_features(const Options& opt) {
    const Dataset ds = load_dataset(opt.data);
    Emitter em("features", opt.out, opt.seed, nullptr);
    em.input("data", opt.data);
    ProtocolConfig pcfg = protocol_config(opt);
    const LabeledFeatures lf = extract_labeled_features(ds, pcfg);
    if (lf.ids.empty()) throw insufficient_data_error("features: dataset has no labeled accounts");
    const SetMask mask = SetMask::parse(opt.sets);
    emit_table(em, "features", feature_table(ds, lf, mask), parse_format(opt.format));
    em.finish();
    std::printf("extracted %zu feature rows (%zu columns, sets %s)\n", lf.ids.size(),
                mask.dimensions(), mask.to_string().c_str());
    return 0;
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

void emit_protocol_artifacts(const ProtocolReport& report, Emitter& em) {
    em.file("protocol_report.json", protocol_report_to_json(report).dump(2) + "\n");
    em.file("ablation.csv", ablation_csv(report));
    for (const auto& m : report.masks)
        em.file("roc_" + m.mask + ".csv", roc_csv(m.pooled_roc));
}

TrainedModel fit_deployment_model(const LabeledFeatures& lf, const ProtocolConfig& cfg) {
    // the deployable artifact: all positives plus one seeded negative draw
    // (the same draw as the protocol's first subset), widest mask
    Rng draw_rng = stream_rng(cfg.seed, "subset-negatives", 0);
    auto chosen = sample_without_replacement(draw_rng, lf.negatives.size(), lf.positives.size());
    std::sort(chosen.begin(), chosen.end());
    std::vector<std::size_t> rows = lf.positives;
    for (std::size_t c : chosen) rows.push_back(lf.negatives[c]);
    SetMask widest = cfg.mask_schedule.front();
    for (const auto& m : cfg.mask_schedule)
        if (m.dimensions() > widest.dimensions()) widest = m;
    return detail::fit_masked(lf, rows, widest, cfg.params, cfg.seed);
}

int cmd_train(const Options& opt) {
    const Dataset ds = load_dataset(opt.data);
    const ProtocolConfig cfg = protocol_config(opt);
    Emitter em("train", opt.out, opt.seed, protocol_config_to_json(cfg));
    em.input("data", opt.data);
    if (!opt.config.empty()) em.input("config", opt.config);

    const ProtocolReport report = run_protocol(ds, cfg);
    emit_protocol_artifacts(report, em);

    const LabeledFeatures lf = extract_labeled_features(ds, cfg);
    const TrainedModel model = fit_deployment_model(lf, cfg);
    em.file("model.json", model_to_json(model).dump(2) + "\n");
    em.finish();

    for (const auto& m : report.masks)
        std::printf("sets %-4s  test accuracy %s +- %s  f1 %s  auc %s\n", m.mask.c_str(),
                    fmt_fixed(m.test_accuracy_mean, 4).c_str(),
                    fmt_fixed(m.test_accuracy_std, 4).c_str(), fmt_fixed(m.test_f1_mean, 4).c_str(),
                    fmt_fixed(m.test_auc_mean, 4).c_str());
    std::printf("model: %zu support vectors, sets %s\n", model.support_vectors.size(),
                model.mask.to_string().c_str());
    return 0;
}

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------

int cmd_evaluate(const Options& opt) {
    const Dataset ds = load_dataset(opt.data);
    const TrainedModel model = model_from_json(ordered_json::parse(read_file(opt.model)));
    Emitter em("evaluate", opt.out, opt.seed, nullptr);
    em.input("data", opt.data);
    em.input("model", opt.model);

    ProtocolConfig pcfg = protocol_config(opt);
    const LabeledFeatures lf = extract_labeled_features(ds, pcfg);
    if (lf.ids.empty()) throw insufficient_data_error("evaluate: dataset has no labeled accounts");
    const auto cols = model.mask.selected();
    std::vector<double> scores;
    scores.reserve(lf.ids.size());
    for (std::size_t i = 0; i < lf.ids.size(); ++i) {
        std::vector<double> row;
        row.reserve(cols.size());
        for (std::size_t c : cols) row.push_back(lf.X[i][c]);
        scores.push_back(predict(model, row).score);
    }
    const EvalMetrics m = evaluate_scores(scores, lf.y);

    ordered_json j;
    j["n_examples"] = lf.ids.size();
    j["accuracy"] = m.accuracy;
    j["f1"] = m.f1;
    if (m.auc) j["auc"] = *m.auc;
    j["confusion"] = confusion_to_json(m.confusion);
    em.file("evaluation.json", j.dump(2) + "\n");
    if (m.auc) em.file("roc_eval.csv", roc_csv(roc_curve(scores, lf.y)));
    em.finish();

    const std::string auc_note = m.auc ? ", auc " + fmt_fixed(*m.auc, 4) : std::string();
    std::printf("evaluated %zu examples: accuracy %s, f1 %s%s\n", lf.ids.size(),
                fmt_fixed(m.accuracy, 4).c_str(), fmt_fixed(m.f1, 4).c_str(), auc_note.c_str());
    return 0;
}

// ---------------------------------------------------------------------------
// importance
// ---------------------------------------------------------------------------

Table importance_table(const std::vector<FeatureImportance>& imp) {
    Table t;
    t.columns = {"rank", "feature", "name", "mean_accuracy_drop"};
    for (std::size_t i = 0; i < imp.size(); ++i)
        t.rows.push_back({i + 1, imp[i].feature, imp[i].name, imp[i].mean_accuracy_drop});
    return t;
}

int cmd_importance(const Options& opt) {
    const Dataset ds = load_dataset(opt.data);
    ProtocolConfig cfg = protocol_config(opt);
    cfg.with_importance = true;
    Emitter em("importance", opt.out, opt.seed, protocol_config_to_json(cfg));
    em.input("data", opt.data);
    if (!opt.config.empty()) em.input("config", opt.config);

    const std::vector<FeatureImportance> imp = feature_importance(ds, cfg);
    em.file("importance.csv", importance_table(imp).to_csv());
    em.finish();

    for (std::size_t i = 0; i < imp.size() && i < 5; ++i)
        std::printf("%zu. %-22s %s\n", i + 1, imp[i].name.c_str(),
                    fmt_fixed(imp[i].mean_accuracy_drop, 4).c_str());
    return 0;
}

// ---------------------------------------------------------------------------
// report (everything in one pass)
// ---------------------------------------------------------------------------

int cmd_report(const Options& opt) {
    const Dataset ds = load_dataset(opt.data);
    ProtocolConfig cfg = protocol_config(opt);
    cfg.with_importance = true;
    Emitter em("report", opt.out, opt.seed, protocol_config_to_json(cfg));
    em.input("data", opt.data);
    if (!opt.config.empty()) em.input("config", opt.config);
    const Format fmt = parse_format(opt.format);

    ordered_json j;
    j["format"] = "shadowmarket-report";
    j["version"] = 1;
    std::size_t n_susp = 0;
    for (const auto& [id, l] : ds.labels) n_susp += l == Label::suspicious ? 1 : 0;
    j["dataset"] = {{"accounts", ds.accounts.size()},
                    {"merchants", ds.merchants.size()},
                    {"snapshot_series", ds.snapshots.size()},
                    {"suspicious", n_susp},
                    {"legitimate", ds.labels.size() - n_susp}};

    auto section = [&](const char* name, auto&& fn) {
        try {
            j[name] = fn();
        } catch (const error& e) {
            logf(LogLevel::info, "section %s skipped: %s", name, e.what());
            j[name] = {{"skipped", e.what()}};
        }
    };
    section("qos", [&] { return qos_section(ds, em, fmt); });
    section("popularity", [&] { return popularity_section(ds, em, fmt, opt.top_k, std::nullopt); });
    section("customers", [&] {
        return customers_section(ds, em, load_stopwords(opt.stopwords), opt.rep_threshold,
                                 opt.top_terms);
    });
    section("population", [&] {
        const LabeledFeatures lf = extract_labeled_features(ds, cfg);
        return population_section(ds, lf, em, fmt);
    });
    section("protocol", [&]() -> ordered_json {
        const ProtocolReport report = run_protocol(ds, cfg);
        emit_protocol_artifacts(report, em);
        em.file("importance.csv", importance_table(report.importance).to_csv());
        ordered_json p;
        ordered_json masks = ordered_json::array();
        for (const auto& m : report.masks)
            masks.push_back({{"mask", m.mask},
                             {"test_accuracy_mean", m.test_accuracy_mean},
                             {"test_f1_mean", m.test_f1_mean},
                             {"test_auc_mean", m.test_auc_mean}});
        p["masks"] = std::move(masks);
        p["pooled_confusion"] = confusion_to_json(report.pooled_confusion);
        ordered_json imp = ordered_json::array();
        for (std::size_t i = 0; i < report.importance.size() && i < 10; ++i)
            imp.push_back({{"name", report.importance[i].name},
                           {"mean_accuracy_drop", report.importance[i].mean_accuracy_drop}});
        p["top_importance"] = std::move(imp);
        return p;
    });

    em.file("report.json", j.dump(2) + "\n");
    em.finish();
    std::printf("report written to %s\n", (em.out_dir / "report.json").c_str());
    return 0;
}

}  // namespace

// ---------------------------------------------------------------------------
// Argument wiring and the exit-code policy.
// ---------------------------------------------------------------------------

int main(int argc, char** argv) {
    CLI::App app{"shadow-market analytics toolkit"};
    app.require_subcommand(1);
    Options opt;

    const auto sets_check = CLI::IsMember({"A", "AB", "ABC", "ABCD"});
    const auto format_check = CLI::IsMember({"csv", "json"});

    auto add_data = [&](CLI::App* sub) {
        return sub->add_option("--data", opt.data, "input dataset directory")->required();
    };
    auto add_out = [&](CLI::App* sub) {
        return sub->add_option("--out", opt.out, "output directory")->required();
    };
    auto add_seed = [&](CLI::App* sub) { sub->add_option("--seed", opt.seed, "RNG seed"); };
    auto add_jobs = [&](CLI::App* sub) {
        sub->add_option("--jobs", opt.jobs, "worker threads")->check(CLI::Range(1u, 256u));
    };
    auto add_format = [&](CLI::App* sub) {
        sub->add_option("--format", opt.format, "table output format")->check(format_check);
    };
    auto add_sets = [&](CLI::App* sub) {
        sub->add_option("--sets", opt.sets, "feature sets to include")->check(sets_check);
    };
    auto add_config = [&](CLI::App* sub, const char* what) {
        sub->add_option("--config", opt.config, what);
    };

    CLI::App* validate = app.add_subcommand("validate", "parse a dataset and report problems");
    validate->add_option("dir", opt.data, "dataset directory");
    validate->add_option("--data", opt.data, "dataset directory");

    CLI::App* simulate = app.add_subcommand("simulate", "generate a synthetic market dataset");
    add_out(simulate);
    add_seed(simulate);
    add_config(simulate, "generator config JSON");
    simulate->add_option("--flip-rate", opt.flip_rate, "fraction of labels to flip");

    CLI::App* qos = app.add_subcommand("qos", "score merchant promise fulfillment");
    add_data(qos), add_out(qos), add_format(qos);

    CLI::App* popularity = app.add_subcommand("popularity", "rank merchants and extract leaders");
    add_data(popularity), add_out(popularity), add_format(popularity);
    popularity->add_option("--top", opt.top_k, "leader count");
    popularity->add_option("--threshold", opt.leader_threshold,
                           "popularity cutoff (overrides --top)");

    CLI::App* retention = app.add_subcommand("retention", "follower retention curves and dips");
    add_data(retention), add_out(retention);
    retention->add_option("--subject", opt.subject, "restrict to one monitored account");

    CLI::App* customers = app.add_subcommand("customers", "profile merchant customers");
    add_data(customers), add_out(customers);
    customers->add_option("--stopwords", opt.stopwords, "stopword list for bio terms");
    customers->add_option("--rep-threshold", opt.rep_threshold, "reputation exceedance cutoff");
    customers->add_option("--top-terms", opt.top_terms, "bio terms to keep");

    CLI::App* metrics = app.add_subcommand("metrics", "per-account metrics and population summary");
    add_data(metrics), add_out(metrics), add_format(metrics), add_jobs(metrics);
    add_config(metrics, "extraction overrides JSON");

    CLI::App* features = app.add_subcommand("features", "emit the model feature matrix");
    add_data(features), add_out(features), add_format(features), add_sets(features);
    add_jobs(features);
    add_config(features, "extraction overrides JSON");

    CLI::App* train = app.add_subcommand("train", "run the training protocol and fit a model");
    add_data(train), add_out(train), add_seed(train), add_sets(train), add_jobs(train);
    add_config(train, "protocol overrides JSON");
    train->add_flag("--importance", opt.with_importance, "also rank feature importance");

    CLI::App* evaluate = app.add_subcommand("evaluate", "score a saved model on labeled data");
    add_data(evaluate), add_out(evaluate);
    evaluate->add_option("--model", opt.model, "model JSON file")->required();
    add_config(evaluate, "extraction overrides JSON");

    CLI::App* importance = app.add_subcommand("importance", "permutation feature importance");
    add_data(importance), add_out(importance), add_seed(importance), add_sets(importance);
    add_jobs(importance);
    add_config(importance, "protocol overrides JSON");

    CLI::App* report = app.add_subcommand("report", "run every analysis and consolidate");
    add_data(report), add_out(report), add_seed(report), add_sets(report), add_jobs(report);
    add_format(report);
    add_config(report, "protocol overrides JSON");
    report->add_option("--stopwords", opt.stopwords, "stopword list for bio terms");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::fprintf(stderr, "shadowmarket: usage: %s\n", e.what());
        return 2;
    }

    try {
        if (app.got_subcommand(validate)) {
            if (opt.data.empty()) {
                std::fprintf(stderr, "shadowmarket: usage: validate needs a dataset directory\n");
                return 2;
            }
            return cmd_validate(opt);
        }
        if (app.got_subcommand(simulate)) return cmd_simulate(opt);
        if (app.got_subcommand(qos)) return cmd_qos(opt);
        if (app.got_subcommand(popularity)) return cmd_popularity(opt);
        if (app.got_subcommand(retention)) return cmd_retention(opt);
        if (app.got_subcommand(customers)) return cmd_customers(opt);
        if (app.got_subcommand(metrics)) return cmd_metrics(opt);
        if (app.got_subcommand(features)) return cmd_features(opt);
        if (app.got_subcommand(train)) return cmd_train(opt);
        if (app.got_subcommand(evaluate)) return cmd_evaluate(opt);
        if (app.got_subcommand(importance)) return cmd_importance(opt);
        if (app.got_subcommand(report)) return cmd_report(opt);
        std::fprintf(stderr, "shadowmarket: usage: unknown subcommand\n");
        return 2;
    } catch (const validation_error& e) {
        std::fprintf(stderr, "shadowmarket: invalid-input: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "shadowmarket: computation: %s\n", e.what());
        return 4;
    }
}
