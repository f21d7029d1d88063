#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "shadowmarket/eval.hpp"

using namespace smk;

namespace {

double mann_whitney_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
    double u = 0.0;
    std::uint64_t n_pos = 0, n_neg = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (labels[i] != 1) continue;
        ++n_pos;
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (labels[j] == 1) continue;
            if (scores[i] > scores[j])
                u += 1.0;
            else if (scores[i] == scores[j])
                u += 0.5;
        }
    }
    for (int l : labels) n_neg += l != 1;
    return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

}  // namespace

TEST_CASE("perfect and inverted classifiers") {
    std::vector<int> labels{1, 1, 1, -1, -1, -1};
    std::vector<double> good{2.0, 1.5, 0.5, -0.5, -1.0, -2.0};
    EvalMetrics m = evaluate_scores(good, labels);
    CHECK(m.accuracy == 1.0);
    CHECK(m.f1 == 1.0);
    REQUIRE(m.auc.has_value());
    CHECK(*m.auc == 1.0);
    CHECK(m.confusion.pos_as_pos_pct() == 100.0);
    CHECK(m.confusion.neg_as_neg_pct() == 100.0);

    std::vector<double> bad{-2.0, -1.5, -0.5, 0.5, 1.0, 2.0};
    EvalMetrics inv = evaluate_scores(bad, labels);
    CHECK(inv.accuracy == 0.0);
    REQUIRE(inv.auc.has_value());
    CHECK(*inv.auc == 0.0);
}

TEST_CASE("random scores on a balanced set hover near chance") {
    Rng rng = stream_rng(61, "auc-random");
    std::vector<double> scores(1000);
    std::vector<int> labels(1000);
    for (std::size_t i = 0; i < 1000; ++i) {
        scores[i] = rand_range(rng, -1, 1);
        labels[i] = i % 2 == 0 ? 1 : -1;
    }
    EvalMetrics m = evaluate_scores(scores, labels);
    REQUIRE(m.auc.has_value());
    CHECK(*m.auc >= 0.45);
    CHECK(*m.auc <= 0.55);
}

TEST_CASE("trapezoidal auc equals the mann-whitney statistic") {
    Rng rng = stream_rng(63, "auc-oracle");
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 10 + rand_index(rng, 40);
        std::vector<double> scores(n);
        std::vector<int> labels(n);
        for (std::size_t i = 0; i < n; ++i) {
            // coarse score grid to force plenty of ties
            scores[i] = static_cast<double>(rand_index(rng, 8)) / 4.0 - 1.0;
            labels[i] = rand_bool(rng, 0.5) ? 1 : -1;
        }
        labels[0] = 1;
        labels[1] = -1;
        CHECK(auc_from_scores(scores, labels) ==
              Catch::Approx(mann_whitney_auc(scores, labels)).margin(1e-9));
    }
}

TEST_CASE("roc curve shape") {
    std::vector<int> labels{1, -1, 1, -1};
    std::vector<double> scores{0.9, 0.8, 0.7, 0.1};
    auto curve = roc_curve(scores, labels);
    REQUIRE(curve.size() == 5);
    CHECK(curve.front().fpr == 0.0);
    CHECK(curve.front().tpr == 0.0);
    CHECK(curve.back().fpr == 1.0);
    CHECK(curve.back().tpr == 1.0);
    for (std::size_t i = 1; i < curve.size(); ++i) {
        CHECK(curve[i].fpr >= curve[i - 1].fpr);
        CHECK(curve[i].tpr >= curve[i - 1].tpr);
    }
    CHECK_THROWS_AS(roc_curve({1.0, 2.0}, {1, 1}), computation_error);
}

TEST_CASE("confusion rows sum to one hundred") {
    Rng rng = stream_rng(65, "confusion-fuzz");
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 4 + rand_index(rng, 60);
        std::vector<double> scores(n);
        std::vector<int> labels(n);
        for (std::size_t i = 0; i < n; ++i) {
            scores[i] = rand_range(rng, -2, 2);
            labels[i] = rand_bool(rng, 0.5) ? 1 : -1;
        }
        labels[0] = 1;
        labels[1] = -1;
        EvalMetrics m = evaluate_scores(scores, labels);
        CHECK(m.confusion.pos_as_pos_pct() + m.confusion.pos_as_neg_pct() ==
              Catch::Approx(100.0).margin(0.1));
        CHECK(m.confusion.neg_as_pos_pct() + m.confusion.neg_as_neg_pct() ==
              Catch::Approx(100.0).margin(0.1));
        CHECK(m.accuracy >= 0.0);
        CHECK(m.accuracy <= 1.0);
        CHECK(m.f1 >= 0.0);
        CHECK(m.f1 <= 1.0);
    }
}

TEST_CASE("single-class test sets omit auc") {
    EvalMetrics m = evaluate_scores({0.5, -0.5, 1.0}, {1, 1, 1});
    CHECK_FALSE(m.auc.has_value());
    CHECK(m.accuracy == Catch::Approx(2.0 / 3.0));
    CHECK_THROWS_AS(evaluate_scores({}, {}), insufficient_data_error);
}

TEST_CASE("end-to-end evaluate on a trained model") {
    Rng rng = stream_rng(67, "eval-e2e");
    Matrix X, test;
    std::vector<int> y, y_test;
    for (int i = 0; i < 15; ++i) {
        X.push_back({2.0 + 0.3 * rand_normal(rng), 2.0 + 0.3 * rand_normal(rng)});
        y.push_back(1);
        X.push_back({-2.0 + 0.3 * rand_normal(rng), -2.0 + 0.3 * rand_normal(rng)});
        y.push_back(-1);
    }
    for (int i = 0; i < 10; ++i) {
        test.push_back({2.0 + 0.3 * rand_normal(rng), 2.0 + 0.3 * rand_normal(rng)});
        y_test.push_back(1);
        test.push_back({-2.0 + 0.3 * rand_normal(rng), -2.0 + 0.3 * rand_normal(rng)});
        y_test.push_back(-1);
    }
    auto [stdX, scaler] = standardize(X);
    SvmParams p;
    p.C = 10.0;
    p.gamma = 0.5;
    TrainedModel model = train_svm(stdX, y, p);
    model.scaler = scaler;
    EvalMetrics m = evaluate(model, test, y_test);
    CHECK(m.accuracy == 1.0);
    REQUIRE(m.auc.has_value());
    CHECK(*m.auc == 1.0);
}
