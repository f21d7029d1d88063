#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "shadowmarket/svm.hpp"

namespace smk {

// ---------------------------------------------------------------------------
// Binary evaluation with "suspicious" as the positive class (+1).
// ---------------------------------------------------------------------------

struct ConfusionMatrix {
    std::uint64_t tp = 0, fn = 0, fp = 0, tn = 0;

    // Row-normalized percentages (rows = true class), so each row sums to 100.
    double pos_as_pos_pct() const { return tp + fn ? 100.0 * tp / (tp + fn) : 0.0; }
    double pos_as_neg_pct() const { return tp + fn ? 100.0 * fn / (tp + fn) : 0.0; }
    double neg_as_pos_pct() const { return fp + tn ? 100.0 * fp / (fp + tn) : 0.0; }
    double neg_as_neg_pct() const { return fp + tn ? 100.0 * tn / (fp + tn) : 0.0; }

    bool operator==(const ConfusionMatrix&) const = default;
};

struct EvalMetrics {
    ConfusionMatrix confusion;
    double accuracy = 0.0;
    double f1 = 0.0;
    std::optional<double> auc;  // empty when the test set is single-class

    bool operator==(const EvalMetrics&) const = default;
};

struct RocPoint {
    double fpr = 0.0;
    double tpr = 0.0;
    double threshold = 0.0;

    bool operator==(const RocPoint&) const = default;
};

/// ROC sweep over the distinct score values, descending; tied scores collapse
/// into a single step so the curve (and its area) treat ties symmetrically.
inline std::vector<RocPoint> roc_curve(const std::vector<double>& scores,
                                       const std::vector<int>& labels) {
    if (scores.size() != labels.size())
        throw computation_error("roc_curve: length mismatch");
    std::uint64_t n_pos = 0, n_neg = 0;
    for (int l : labels) (l == 1 ? n_pos : n_neg) += 1;
    if (n_pos == 0 || n_neg == 0)
        throw computation_error("roc_curve: need both classes");

    std::vector<std::size_t> order(scores.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return a < b;
    });

    std::vector<RocPoint> curve;
    curve.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
    std::uint64_t tp = 0, fp = 0;
    std::size_t i = 0;
    while (i < order.size()) {
        const double s = scores[order[i]];
        while (i < order.size() && scores[order[i]] == s) {
            (labels[order[i]] == 1 ? tp : fp) += 1;
            ++i;
        }
        curve.push_back({static_cast<double>(fp) / static_cast<double>(n_neg),
                         static_cast<double>(tp) / static_cast<double>(n_pos), s});
    }
    return curve;
}

/// Trapezoidal area under the ROC curve.
inline double auc_from_scores(const std::vector<double>& scores, const std::vector<int>& labels) {
    const auto curve = roc_curve(scores, labels);
    double area = 0.0;
    for (std::size_t i = 1; i < curve.size(); ++i)
        area += (curve[i].fpr - curve[i - 1].fpr) * (curve[i].tpr + curve[i - 1].tpr) / 2.0;
    return area;
}

/// Metrics from raw decision scores; labels are +1 (suspicious) / -1.
inline EvalMetrics evaluate_scores(const std::vector<double>& scores,
                                   const std::vector<int>& labels) {
    if (scores.size() != labels.size())
        throw computation_error("evaluate: length mismatch");
    if (scores.empty())
        throw insufficient_data_error("evaluate: empty test set");
    EvalMetrics m;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const bool predicted_pos = scores[i] >= 0.0;
        if (labels[i] == 1)
            (predicted_pos ? m.confusion.tp : m.confusion.fn) += 1;
        else
            (predicted_pos ? m.confusion.fp : m.confusion.tn) += 1;
    }
    const auto& c = m.confusion;
    m.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(scores.size());
    const std::uint64_t f1_denom = 2 * c.tp + c.fp + c.fn;
    m.f1 = f1_denom ? 2.0 * static_cast<double>(c.tp) / static_cast<double>(f1_denom) : 0.0;
    const bool both_classes = (c.tp + c.fn) > 0 && (c.fp + c.tn) > 0;
    if (both_classes) m.auc = auc_from_scores(scores, labels);
    return m;
}

/// Runs the model over raw feature rows and scores the predictions.
inline EvalMetrics evaluate(const TrainedModel& model, const Matrix& X_raw,
                            const std::vector<int>& y) {
    std::vector<double> scores;
    scores.reserve(X_raw.size());
    for (const auto& row : X_raw) scores.push_back(predict(model, row).score);
    return evaluate_scores(scores, y);
}

}  // namespace smk
