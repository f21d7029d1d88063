#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "shadowmarket/eval.hpp"
#include "shadowmarket/features.hpp"
#include "shadowmarket/io.hpp"
#include "shadowmarket/svm.hpp"

namespace smk {

// ---------------------------------------------------------------------------
// The full supervised experiment: repeated class-balanced negative
// subsampling, a stratified 70/30 split, k-fold cross-validation on the
// training portion, a final fit evaluated on the held-out portion, and an
// incremental feature-set ablation. Everything is replayable from (dataset,
// config, seed).
// ---------------------------------------------------------------------------

struct ProtocolConfig {
    std::size_t n_negative_subsets = 10;
    double train_fraction = 0.7;
    std::size_t cv_folds = 10;
    std::vector<SetMask> mask_schedule = incremental_masks();
    SvmParams params;
    std::uint64_t seed = 0;
    unsigned jobs = 1;
    bool with_importance = false;
    std::size_t importance_shuffles = 5;
    bool use_reputation_proxy = false;
};

struct LabeledFeatures {
    std::vector<std::string> ids;      // row order
    Matrix X;                          // full-width rows (all 18 columns)
    std::vector<bool> ratio_capped;    // per row
    std::vector<int> y;                // +1 suspicious, -1 legitimate
    std::vector<std::size_t> positives, negatives;  // row indices by class
    ExtractionContext ctx;
};

/// Observation context derived from the data itself: "now" is the latest
/// event timestamp, the window spans from the earliest one.
inline ExtractionContext default_extraction_context(const Dataset& ds) {
    ExtractionContext ctx;
    ctx.spam_lexicon = ds.spam_lexicon;
    std::int64_t lo = std::numeric_limits<std::int64_t>::max(), hi = std::numeric_limits<std::int64_t>::min();
    auto see = [&](UtcSeconds t) {
        lo = std::min(lo, t);
        hi = std::max(hi, t);
    };
    for (const auto& [id, a] : ds.accounts)
        for (const auto& t : a.tweets) see(t.timestamp);
    for (const auto& [id, s] : ds.snapshots)
        for (const auto& snap : s.snapshots) see(snap.ts);
    if (lo <= hi) {
        ctx.now = hi;
        ctx.window_seconds = hi - lo;
    }
    return ctx;
}

/// Extracts full-width (18-column) feature rows for every labeled account,
/// in sorted account-id order.
inline LabeledFeatures extract_labeled_features(const Dataset& ds, const ProtocolConfig& cfg) {
    LabeledFeatures lf;
    lf.ctx = default_extraction_context(ds);
    lf.ctx.use_reputation_proxy = cfg.use_reputation_proxy;

    std::map<std::string, std::set<std::string>> langs_by_account;
    for (const auto& [id, a] : ds.accounts) {
        auto& langs = langs_by_account[id];
        for (const auto& t : a.tweets) langs.insert(t.languages.begin(), t.languages.end());
    }

    for (const auto& [id, label] : ds.labels) lf.ids.push_back(id);
    lf.X.resize(lf.ids.size());
    lf.ratio_capped.resize(lf.ids.size());
    lf.y.resize(lf.ids.size());

    std::vector<std::string> errors(lf.ids.size());
    parallel_for(lf.ids.size(), cfg.jobs, [&](std::size_t i) {
        const std::string& id = lf.ids[i];
        try {
            const AccountDossier& a = ds.accounts.at(id);
            auto sit = ds.snapshots.find(id);
            const SnapshotSeries* series = sit == ds.snapshots.end() ? nullptr : &sit->second;
            std::vector<std::set<std::string>> peer_langs;
            for (const auto& fid : a.friend_ids) {
                auto lit = langs_by_account.find(fid);
                if (lit != langs_by_account.end()) peer_langs.push_back(lit->second);
            }
            FeatureVector fv = extract_features(a, series, peer_langs, lf.ctx, SetMask::all());
            lf.X[i] = std::move(fv.values);
            lf.ratio_capped[i] = fv.ratio_capped;
            lf.y[i] = ds.labels.at(id) == Label::suspicious ? 1 : -1;
        } catch (const std::exception& e) {
            errors[i] = e.what();
        }
    });
    for (std::size_t i = 0; i < errors.size(); ++i)
        if (!errors[i].empty())
            throw computation_error("feature extraction failed for '" + lf.ids[i] +
                                    "': " + errors[i]);

    for (std::size_t i = 0; i < lf.y.size(); ++i)
        (lf.y[i] == 1 ? lf.positives : lf.negatives).push_back(i);
    return lf;
}

// ---------------------------------------------------------------------------
// Report types.
// ---------------------------------------------------------------------------

struct MaskReport {
    std::string mask;
    double cv_accuracy_mean = 0.0;
    double cv_f1_mean = 0.0;
    double cv_auc_mean = 0.0;
    double test_accuracy_mean = 0.0, test_accuracy_std = 0.0;
    double test_f1_mean = 0.0, test_f1_std = 0.0;
    double test_auc_mean = 0.0, test_auc_std = 0.0;
    std::vector<RocPoint> pooled_roc;
};

struct FeatureImportance {
    std::size_t feature = 0;
    std::string name;
    double mean_accuracy_drop = 0.0;
};

struct ProtocolReport {
    std::size_t n_positive = 0;
    std::size_t n_negative_pool = 0;
    std::size_t n_subsets = 0;
    std::size_t cv_folds = 0;
    double train_fraction = 0.0;
    SvmParams params;
    std::uint64_t seed = 0;
    std::vector<MaskReport> masks;
    std::string full_mask;
    ConfusionMatrix pooled_confusion;  // held-out predictions under the full mask
    std::vector<FeatureImportance> importance;  // empty unless requested
};

/// Mean accuracy drop per column when that column of the held-out rows is
/// shuffled (k independent shuffles per column).
inline std::vector<double> permutation_importance(const TrainedModel& model, const Matrix& X_raw,
                                                  const std::vector<int>& y, std::size_t shuffles,
                                                  std::uint64_t seed) {
    const double baseline = evaluate(model, X_raw, y).accuracy;
    const std::size_t cols = X_raw.empty() ? 0 : X_raw.front().size();
    std::vector<double> drops(cols, 0.0);
    for (std::size_t j = 0; j < cols; ++j) {
        double acc_sum = 0.0;
        for (std::size_t k = 0; k < shuffles; ++k) {
            Rng rng = stream_rng(seed, "permutation-importance", j * 1000003ULL + k);
            std::vector<double> column(X_raw.size());
            for (std::size_t i = 0; i < X_raw.size(); ++i) column[i] = X_raw[i][j];
            deterministic_shuffle(column, rng);
            Matrix shuffled = X_raw;
            for (std::size_t i = 0; i < X_raw.size(); ++i) shuffled[i][j] = column[i];
            acc_sum += evaluate(model, shuffled, y).accuracy;
        }
        drops[j] = baseline - acc_sum / static_cast<double>(shuffles);
    }
    return drops;
}

namespace detail {

struct SubsetMaskResult {
    double cv_accuracy = 0.0, cv_f1 = 0.0, cv_auc = 0.0;
    EvalMetrics test;
    std::vector<double> test_scores;
    std::vector<int> test_labels;
};

struct SubsetResult {
    std::vector<SubsetMaskResult> by_mask;
    // full-mask artifacts kept for the importance pass
    TrainedModel full_model;
    Matrix full_test_raw;
    std::vector<int> full_test_y;
};

/// Slices the chosen columns, caps the ratio column at the 99th percentile of
/// its finite training values, standardizes, and trains.
inline TrainedModel fit_masked(const LabeledFeatures& lf, const std::vector<std::size_t>& rows,
                               SetMask mask, const SvmParams& params, std::uint64_t seed) {
    const auto cols = mask.selected();
    double cap = 0.0;
    if (mask.b) {
        std::vector<double> finite;
        for (std::size_t r : rows)
            if (!lf.ratio_capped[r]) finite.push_back(lf.X[r][kRatioFeature]);
        std::sort(finite.begin(), finite.end());
        cap = finite.empty() ? lf.ctx.ratio_cap : percentile_sorted(finite, 0.99);
        if (cap <= 0.0) cap = lf.ctx.ratio_cap;
    }
    Matrix train(rows.size());
    std::vector<int> y(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& full = lf.X[rows[i]];
        auto& out = train[i];
        out.reserve(cols.size());
        for (std::size_t c : cols) {
            double v = full[c];
            if (cap > 0.0 && c == kRatioFeature && v > cap) v = cap;
            out.push_back(v);
        }
        y[i] = lf.y[rows[i]];
    }
    auto [std_train, scaler] = standardize(train);
    TrainedModel model = train_svm(std_train, y, params, seed);
    model.scaler = std::move(scaler);
    model.mask = mask;
    model.ratio_cap = cap;
    return model;
}

inline Matrix slice_rows(const LabeledFeatures& lf, const std::vector<std::size_t>& rows,
                         const std::vector<std::size_t>& cols) {
    Matrix out(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out[i].reserve(cols.size());
        for (std::size_t c : cols) out[i].push_back(lf.X[rows[i]][c]);
    }
    return out;
}

inline std::vector<int> slice_labels(const LabeledFeatures& lf,
                                     const std::vector<std::size_t>& rows) {
    std::vector<int> y(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) y[i] = lf.y[rows[i]];
    return y;
}

}  // namespace detail

inline ProtocolReport run_protocol(const Dataset& ds, const ProtocolConfig& cfg) {
    const LabeledFeatures lf = extract_labeled_features(ds, cfg);
    const std::size_t n_pos = lf.positives.size();
    const std::size_t n_neg = lf.negatives.size();
    if (n_pos == 0 || n_neg == 0)
        throw computation_error("run_protocol: need labeled examples of both classes");
    if (n_pos > n_neg)
        throw computation_error(
            "run_protocol: positive class larger than the negative pool; cannot subsample " +
            std::to_string(n_pos) + " from " + std::to_string(n_neg));
    if (cfg.mask_schedule.empty())
        throw computation_error("run_protocol: empty mask schedule");
    if (!(cfg.train_fraction > 0.0 && cfg.train_fraction < 1.0))
        throw computation_error("run_protocol: train fraction must be in (0,1)");

    const std::size_t full_mask_index = [&] {
        std::size_t best = 0;
        for (std::size_t m = 1; m < cfg.mask_schedule.size(); ++m)
            if (cfg.mask_schedule[m].dimensions() >
                cfg.mask_schedule[best].dimensions())
                best = m;
        return best;
    }();

    std::vector<detail::SubsetResult> results(cfg.n_negative_subsets);
    std::vector<std::string> errors(cfg.n_negative_subsets);

    parallel_for(cfg.n_negative_subsets, cfg.jobs, [&](std::size_t s) {
        try {
            detail::SubsetResult res;
            res.by_mask.resize(cfg.mask_schedule.size());

            Rng draw_rng = stream_rng(cfg.seed, "subset-negatives", s);
            auto chosen = sample_without_replacement(draw_rng, n_neg, n_pos);
            std::sort(chosen.begin(), chosen.end());

            std::vector<std::size_t> pos_rows = lf.positives;
            std::vector<std::size_t> neg_rows;
            neg_rows.reserve(n_pos);
            for (std::size_t c : chosen) neg_rows.push_back(lf.negatives[c]);

            Rng split_rng = stream_rng(cfg.seed, "subset-split", s);
            deterministic_shuffle(pos_rows, split_rng);
            deterministic_shuffle(neg_rows, split_rng);
            auto take = [&](std::size_t n) {
                auto k = static_cast<std::size_t>(
                    std::llround(cfg.train_fraction * static_cast<double>(n)));
                return std::clamp<std::size_t>(k, 1, n - 1);
            };
            const std::size_t pos_cut = take(pos_rows.size());
            const std::size_t neg_cut = take(neg_rows.size());

            std::vector<std::size_t> train_rows, test_rows;
            train_rows.insert(train_rows.end(), pos_rows.begin(), pos_rows.begin() + pos_cut);
            train_rows.insert(train_rows.end(), neg_rows.begin(), neg_rows.begin() + neg_cut);
            test_rows.insert(test_rows.end(), pos_rows.begin() + pos_cut, pos_rows.end());
            test_rows.insert(test_rows.end(), neg_rows.begin() + neg_cut, neg_rows.end());

            const std::size_t folds =
                std::max<std::size_t>(2, std::min({cfg.cv_folds, pos_cut, neg_cut}));

            for (std::size_t m = 0; m < cfg.mask_schedule.size(); ++m) {
                const SetMask mask = cfg.mask_schedule[m];
                const auto cols = mask.selected();
                auto& out = res.by_mask[m];

                // stratified k-fold CV over the training portion
                double acc_sum = 0.0, f1_sum = 0.0, auc_sum = 0.0;
                std::size_t auc_count = 0, fold_count = 0;
                for (std::size_t f = 0; f < folds; ++f) {
                    std::vector<std::size_t> fit, val;
                    for (std::size_t i = 0; i < pos_cut; ++i)
                        (i % folds == f ? val : fit).push_back(pos_rows[i]);
                    for (std::size_t i = 0; i < neg_cut; ++i)
                        (i % folds == f ? val : fit).push_back(neg_rows[i]);
                    if (val.empty() || fit.size() < 2) continue;
                    TrainedModel fold_model =
                        detail::fit_masked(lf, fit, mask, cfg.params, cfg.seed);
                    EvalMetrics fm =
                        evaluate(fold_model, detail::slice_rows(lf, val, cols),
                                 detail::slice_labels(lf, val));
                    acc_sum += fm.accuracy;
                    f1_sum += fm.f1;
                    if (fm.auc) {
                        auc_sum += *fm.auc;
                        ++auc_count;
                    }
                    ++fold_count;
                }
                if (fold_count > 0) {
                    out.cv_accuracy = acc_sum / static_cast<double>(fold_count);
                    out.cv_f1 = f1_sum / static_cast<double>(fold_count);
                }
                if (auc_count > 0) out.cv_auc = auc_sum / static_cast<double>(auc_count);

                // final fit on the whole training portion, scored on held-out
                TrainedModel model = detail::fit_masked(lf, train_rows, mask, cfg.params, cfg.seed);
                Matrix test_raw = detail::slice_rows(lf, test_rows, cols);
                std::vector<int> test_y = detail::slice_labels(lf, test_rows);
                out.test_scores.reserve(test_raw.size());
                for (const auto& row : test_raw)
                    out.test_scores.push_back(predict(model, row).score);
                out.test_labels = test_y;
                out.test = evaluate_scores(out.test_scores, test_y);

                if (m == full_mask_index) {
                    res.full_model = std::move(model);
                    res.full_test_raw = std::move(test_raw);
                    res.full_test_y = std::move(test_y);
                }
            }
            results[s] = std::move(res);
        } catch (const std::exception& e) {
            errors[s] = e.what();
        }
    });
    for (std::size_t s = 0; s < errors.size(); ++s)
        if (!errors[s].empty())
            throw computation_error("run_protocol: subset " + std::to_string(s) + ": " + errors[s]);

    ProtocolReport report;
    report.n_positive = n_pos;
    report.n_negative_pool = n_neg;
    report.n_subsets = cfg.n_negative_subsets;
    report.cv_folds = cfg.cv_folds;
    report.train_fraction = cfg.train_fraction;
    report.params = cfg.params;
    report.seed = cfg.seed;
    report.full_mask = cfg.mask_schedule[full_mask_index].to_string();

    for (std::size_t m = 0; m < cfg.mask_schedule.size(); ++m) {
        MaskReport mr;
        mr.mask = cfg.mask_schedule[m].to_string();
        std::vector<double> accs, f1s, aucs, cv_accs, cv_f1s, cv_aucs;
        std::vector<double> pooled_scores;
        std::vector<int> pooled_labels;
        for (const auto& res : results) {
            const auto& r = res.by_mask[m];
            accs.push_back(r.test.accuracy);
            f1s.push_back(r.test.f1);
            if (r.test.auc) aucs.push_back(*r.test.auc);
            cv_accs.push_back(r.cv_accuracy);
            cv_f1s.push_back(r.cv_f1);
            cv_aucs.push_back(r.cv_auc);
            pooled_scores.insert(pooled_scores.end(), r.test_scores.begin(),
                                 r.test_scores.end());
            pooled_labels.insert(pooled_labels.end(), r.test_labels.begin(),
                                 r.test_labels.end());
        }
        mr.cv_accuracy_mean = mean_of(cv_accs);
        mr.cv_f1_mean = mean_of(cv_f1s);
        mr.cv_auc_mean = mean_of(cv_aucs);
        mr.test_accuracy_mean = mean_of(accs);
        mr.test_accuracy_std = population_std(accs);
        mr.test_f1_mean = mean_of(f1s);
        mr.test_f1_std = population_std(f1s);
        mr.test_auc_mean = mean_of(aucs);
        mr.test_auc_std = population_std(aucs);
        mr.pooled_roc = roc_curve(pooled_scores, pooled_labels);
        report.masks.push_back(std::move(mr));

        if (m == full_mask_index) {
            for (const auto& res : results) {
                const auto& c = res.by_mask[m].test.confusion;
                report.pooled_confusion.tp += c.tp;
                report.pooled_confusion.fn += c.fn;
                report.pooled_confusion.fp += c.fp;
                report.pooled_confusion.tn += c.tn;
            }
        }
    }

    if (cfg.with_importance) {
        const auto cols = cfg.mask_schedule[full_mask_index].selected();
        std::vector<double> totals(cols.size(), 0.0);
        for (std::size_t s = 0; s < results.size(); ++s) {
            auto drops = permutation_importance(results[s].full_model, results[s].full_test_raw,
                                                results[s].full_test_y, cfg.importance_shuffles,
                                                splitmix64(cfg.seed ^ (s + 1)));
            for (std::size_t j = 0; j < cols.size(); ++j) totals[j] += drops[j];
        }
        for (std::size_t j = 0; j < cols.size(); ++j) {
            FeatureImportance fi;
            fi.feature = cols[j];
            fi.name = kFeatureNames[cols[j]];
            fi.mean_accuracy_drop = totals[j] / static_cast<double>(results.size());
            report.importance.push_back(std::move(fi));
        }
        std::sort(report.importance.begin(), report.importance.end(),
                  [](const FeatureImportance& a, const FeatureImportance& b) {
                      if (a.mean_accuracy_drop != b.mean_accuracy_drop)
                          return a.mean_accuracy_drop > b.mean_accuracy_drop;
                      return a.feature < b.feature;
                  });
    }
    return report;
}

/// Ranked permutation importance under the widest mask of the schedule.
inline std::vector<FeatureImportance> feature_importance(const Dataset& ds, ProtocolConfig cfg) {
    cfg.with_importance = true;
    return run_protocol(ds, cfg).importance;
}

// ---------------------------------------------------------------------------
// Report serialization.
// ---------------------------------------------------------------------------

inline ordered_json confusion_to_json(const ConfusionMatrix& c) {
    return {{"tp", c.tp},
            {"fn", c.fn},
            {"fp", c.fp},
            {"tn", c.tn},
            {"suspicious_row_pct", {c.pos_as_pos_pct(), c.pos_as_neg_pct()}},
            {"legitimate_row_pct", {c.neg_as_pos_pct(), c.neg_as_neg_pct()}}};
}

inline ordered_json protocol_report_to_json(const ProtocolReport& r) {
    ordered_json j;
    j["format"] = "shadowmarket-protocol-report";
    j["version"] = 1;
    j["n_positive"] = r.n_positive;
    j["n_negative_pool"] = r.n_negative_pool;
    j["n_subsets"] = r.n_subsets;
    j["cv_folds"] = r.cv_folds;
    j["train_fraction"] = r.train_fraction;
    j["params"] = {{"C", r.params.C},
                   {"gamma", r.params.gamma},
                   {"tolerance", r.params.tolerance},
                   {"max_passes", r.params.max_passes}};
    j["seed"] = r.seed;
    ordered_json masks = ordered_json::array();
    for (const auto& m : r.masks) {
        masks.push_back({{"mask", m.mask},
                         {"cv_accuracy_mean", m.cv_accuracy_mean},
                         {"cv_f1_mean", m.cv_f1_mean},
                         {"cv_auc_mean", m.cv_auc_mean},
                         {"test_accuracy_mean", m.test_accuracy_mean},
                         {"test_accuracy_std", m.test_accuracy_std},
                         {"test_f1_mean", m.test_f1_mean},
                         {"test_f1_std", m.test_f1_std},
                         {"test_auc_mean", m.test_auc_mean},
                         {"test_auc_std", m.test_auc_std}});
    }
    j["masks"] = std::move(masks);
    j["full_mask"] = r.full_mask;
    j["pooled_confusion"] = confusion_to_json(r.pooled_confusion);
    if (!r.importance.empty()) {
        ordered_json imp = ordered_json::array();
        for (const auto& fi : r.importance)
            imp.push_back({{"feature", fi.feature},
                           {"name", fi.name},
                           {"mean_accuracy_drop", fi.mean_accuracy_drop}});
        j["importance"] = std::move(imp);
    }
    return j;
}

inline std::string ablation_csv(const ProtocolReport& r) {
    std::string out =
        "mask,cv_accuracy_mean,cv_f1_mean,cv_auc_mean,test_accuracy_mean,test_accuracy_std,"
        "test_f1_mean,test_f1_std,test_auc_mean,test_auc_std\n";
    for (const auto& m : r.masks) {
        out += m.mask;
        for (double v : {m.cv_accuracy_mean, m.cv_f1_mean, m.cv_auc_mean, m.test_accuracy_mean,
                         m.test_accuracy_std, m.test_f1_mean, m.test_f1_std, m.test_auc_mean,
                         m.test_auc_std}) {
            out += ',';
            out += fmt_double(v);
        }
        out += '\n';
    }
    return out;
}

inline std::string roc_csv(const std::vector<RocPoint>& points) {
    std::string out = "fpr,tpr,threshold\n";
    for (const auto& p : points) {
        out += fmt_double(p.fpr);
        out += ',';
        out += fmt_double(p.tpr);
        out += ',';
        out += fmt_double(p.threshold);
        out += '\n';
    }
    return out;
}

}  // namespace smk
