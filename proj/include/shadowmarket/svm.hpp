#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "shadowmarket/features.hpp"

namespace smk {

using ordered_json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Two-class soft-margin SVM with an RBF kernel, trained by sequential minimal
// optimization on the dual:
//
//   min_a  1/2 a'Qa - e'a   s.t.  0 <= a_i <= C,  y'a = 0
//
// with Q_ij = y_i y_j K(x_i, x_j), K(u,v) = exp(-gamma |u-v|^2). Working
// pairs are chosen by the maximal-violating-pair rule with lowest-index
// tie-breaking, so training is deterministic.
// ---------------------------------------------------------------------------

struct SvmParams {
    double C = 1000.0;
    double gamma = 20.0;
    double tolerance = 1e-3;
    std::size_t max_passes = 0;  // 0 = automatic iteration cap

    bool operator==(const SvmParams&) const = default;
};

struct TrainedModel {
    Matrix support_vectors;            // standardized feature rows
    std::vector<double> coefficients;  // alpha_i * y_i
    double bias = 0.0;
    Scaler scaler;
    SetMask mask;
    SvmParams params;
    std::uint64_t seed = 0;
    double ratio_cap = 0.0;  // raw-space cap for the ratio column; 0 = none
    double dual_objective = 0.0;
    std::size_t iterations = 0;

    bool operator==(const TrainedModel&) const = default;
};

inline double rbf_kernel(const std::vector<double>& u, const std::vector<double>& v, double gamma) {
    double d2 = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) {
        const double d = u[k] - v[k];
        d2 += d * d;
    }
    return std::exp(-gamma * d2);
}

/// Trains on already-standardized rows. `X` must contain both classes and
/// only finite values; `y` entries are +1/-1.
inline TrainedModel train_svm(const Matrix& X, const std::vector<int>& y, const SvmParams& params,
                              std::uint64_t seed = 0) {
    const std::size_t n = X.size();
    if (n < 2 || y.size() != n)
        throw insufficient_data_error("train_svm: need at least one example per class");
    bool has_pos = false, has_neg = false;
    for (int l : y) {
        if (l == 1) has_pos = true;
        else if (l == -1) has_neg = true;
        else throw computation_error("train_svm: labels must be +1/-1");
    }
    if (!has_pos || !has_neg)
        throw computation_error("train_svm: single-class input");
    for (const auto& row : X)
        for (double v : row)
            if (!std::isfinite(v)) throw computation_error("train_svm: non-finite feature value");

    const double C = params.C;
    const double tol = params.tolerance;
    const std::size_t max_iter =
        params.max_passes > 0 ? params.max_passes : std::max<std::size_t>(100000, 1000 * n);

    // Dense kernel matrix; problem sizes here stay in the low thousands.
    std::vector<double> K(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < n; ++j) {
            const double k = rbf_kernel(X[i], X[j], params.gamma);
            K[i * n + j] = k;
            K[j * n + i] = k;
        }
    }
    auto Q = [&](std::size_t i, std::size_t j) {
        return static_cast<double>(y[i] * y[j]) * K[i * n + j];
    };

    std::vector<double> alpha(n, 0.0);
    std::vector<double> G(n, -1.0);  // gradient of the dual objective
    constexpr double kTau = 1e-12;
    const double inf = std::numeric_limits<double>::infinity();

    std::size_t iter = 0;
    for (; iter < max_iter; ++iter) {
        // second-order working-set selection: i maximizes -y*G over I_up; the
        // partner j maximizes the estimated objective decrease b^2/a among
        // violating candidates in I_low (a is the curvature of the pair
        // subproblem, identical for the same- and mixed-label cases)
        double g_max = -inf, g_min = inf;
        std::size_t i = n, j = n;
        for (std::size_t t = 0; t < n; ++t) {
            const bool up = (y[t] == 1 && alpha[t] < C) || (y[t] == -1 && alpha[t] > 0);
            if (up) {
                const double v = -static_cast<double>(y[t]) * G[t];
                if (v > g_max) {
                    g_max = v;
                    i = t;
                }
            }
        }
        double best_gain = -inf;
        for (std::size_t t = 0; t < n; ++t) {
            const bool low = (y[t] == 1 && alpha[t] > 0) || (y[t] == -1 && alpha[t] < C);
            if (!low) continue;
            const double v = -static_cast<double>(y[t]) * G[t];
            g_min = std::min(g_min, v);
            const double b = g_max - v;
            if (i == n || b <= 0.0) continue;
            double a = K[i * n + i] + K[t * n + t] - 2.0 * K[i * n + t];
            if (a <= 0.0) a = kTau;
            const double gain = b * b / a;
            if (gain > best_gain) {
                best_gain = gain;
                j = t;
            }
        }
        if (i == n || j == n || g_max - g_min <= tol) break;

        const double old_ai = alpha[i], old_aj = alpha[j];
        if (y[i] != y[j]) {
            double quad = Q(i, i) + Q(j, j) + 2.0 * Q(i, j);
            if (quad <= 0.0) quad = kTau;
            const double delta = (-G[i] - G[j]) / quad;
            const double diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if (diff > 0.0) {
                if (alpha[j] < 0.0) {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else {
                if (alpha[i] < 0.0) {
                    alpha[i] = 0.0;
                    alpha[j] = -diff;
                }
            }
            if (diff > 0.0) {
                if (alpha[i] > C) {
                    alpha[i] = C;
                    alpha[j] = C - diff;
                }
            } else {
                if (alpha[j] > C) {
                    alpha[j] = C;
                    alpha[i] = C + diff;
                }
            }
        } else {
            double quad = Q(i, i) + Q(j, j) - 2.0 * Q(i, j);
            if (quad <= 0.0) quad = kTau;
            const double delta = (G[i] - G[j]) / quad;
            const double sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if (sum > C) {
                if (alpha[i] > C) {
                    alpha[i] = C;
                    alpha[j] = sum - C;
                }
            } else {
                if (alpha[j] < 0.0) {
                    alpha[j] = 0.0;
                    alpha[i] = sum;
                }
            }
            if (sum > C) {
                if (alpha[j] > C) {
                    alpha[j] = C;
                    alpha[i] = sum - C;
                }
            } else {
                if (alpha[i] < 0.0) {
                    alpha[i] = 0.0;
                    alpha[j] = sum;
                }
            }
        }

        const double di = alpha[i] - old_ai;
        const double dj = alpha[j] - old_aj;
        if (di == 0.0 && dj == 0.0) break;  // numerically stuck pair
        for (std::size_t t = 0; t < n; ++t) G[t] += Q(t, i) * di + Q(t, j) * dj;
    }
    if (iter == max_iter)
        logf(LogLevel::info, "train_svm: hit iteration cap (%zu) before tolerance", max_iter);

    // bias from the free support vectors (fall back to the violating-pair
    // midpoint when none are free)
    double upper = inf, lower = -inf, free_sum = 0.0;
    std::size_t free_count = 0;
    for (std::size_t t = 0; t < n; ++t) {
        const double yg = static_cast<double>(y[t]) * G[t];
        if (alpha[t] >= C) {
            if (y[t] == -1) upper = std::min(upper, yg);
            else lower = std::max(lower, yg);
        } else if (alpha[t] <= 0.0) {
            if (y[t] == 1) upper = std::min(upper, yg);
            else lower = std::max(lower, yg);
        } else {
            ++free_count;
            free_sum += yg;
        }
    }
    const double rho = free_count > 0 ? free_sum / static_cast<double>(free_count)
                                      : (upper + lower) / 2.0;

    TrainedModel model;
    model.params = params;
    model.seed = seed;
    model.bias = -rho;
    model.iterations = iter;
    double obj = 0.0;
    for (std::size_t t = 0; t < n; ++t) obj += alpha[t] * (G[t] - 1.0);
    model.dual_objective = obj / 2.0;
    for (std::size_t t = 0; t < n; ++t) {
        if (alpha[t] > 0.0) {
            model.support_vectors.push_back(X[t]);
            model.coefficients.push_back(alpha[t] * static_cast<double>(y[t]));
        }
    }
    return model;
}

// ---------------------------------------------------------------------------
// Prediction. `apply_model_preprocessing` takes a raw (unstandardized) row
// through the model's stored ratio cap + scaler; `decision_value` expects the
// already-standardized space the support vectors live in.
// ---------------------------------------------------------------------------

inline double decision_value(const TrainedModel& model, const std::vector<double>& standardized) {
    if (!model.support_vectors.empty() &&
        standardized.size() != model.support_vectors.front().size())
        throw computation_error("predict: expected " +
                                std::to_string(model.support_vectors.front().size()) +
                                " features, got " + std::to_string(standardized.size()));
    double score = model.bias;
    for (std::size_t s = 0; s < model.support_vectors.size(); ++s)
        score += model.coefficients[s] *
                 rbf_kernel(model.support_vectors[s], standardized, model.params.gamma);
    return score;
}

inline std::vector<double> apply_model_preprocessing(const TrainedModel& model,
                                                     std::vector<double> raw) {
    if (model.ratio_cap > 0.0 && model.mask.b) {
        // position of the ratio column within the masked layout
        std::size_t pos = 0;
        for (std::size_t i : model.mask.selected()) {
            if (i == kRatioFeature) break;
            ++pos;
        }
        if (pos < raw.size() && raw[pos] > model.ratio_cap) raw[pos] = model.ratio_cap;
    }
    return model.scaler.apply(raw);
}

struct Prediction {
    double score = 0.0;
    bool suspicious = false;
};

inline Prediction predict(const TrainedModel& model, const std::vector<double>& raw) {
    Prediction p;
    p.score = decision_value(model, apply_model_preprocessing(model, raw));
    p.suspicious = p.score >= 0.0;
    return p;
}

// ---------------------------------------------------------------------------
// Versioned JSON persistence.
// ---------------------------------------------------------------------------

inline ordered_json model_to_json(const TrainedModel& m) {
    ordered_json j;
    j["format"] = "shadowmarket-svm";
    j["version"] = 1;
    j["mask"] = m.mask.to_string();
    j["params"] = {{"C", m.params.C},
                   {"gamma", m.params.gamma},
                   {"tolerance", m.params.tolerance},
                   {"max_passes", m.params.max_passes}};
    j["seed"] = m.seed;
    j["bias"] = m.bias;
    j["ratio_cap"] = m.ratio_cap;
    j["dual_objective"] = m.dual_objective;
    j["iterations"] = m.iterations;
    j["scaler"] = {{"offset", m.scaler.offset},
                   {"scale", m.scaler.scale},
                   {"zero_variance", m.scaler.zero_variance}};
    j["coefficients"] = m.coefficients;
    j["support_vectors"] = m.support_vectors;
    return j;
}

inline TrainedModel model_from_json(const ordered_json& j) {
    if (j.value("format", std::string()) != "shadowmarket-svm")
        throw validation_error("model file: unrecognized format");
    if (j.value("version", 0) != 1)
        throw validation_error("model file: unsupported version");
    TrainedModel m;
    m.mask = SetMask::parse(j.at("mask").get<std::string>());
    const auto& p = j.at("params");
    m.params.C = p.at("C").get<double>();
    m.params.gamma = p.at("gamma").get<double>();
    m.params.tolerance = p.at("tolerance").get<double>();
    m.params.max_passes = p.at("max_passes").get<std::size_t>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.bias = j.at("bias").get<double>();
    m.ratio_cap = j.at("ratio_cap").get<double>();
    m.dual_objective = j.at("dual_objective").get<double>();
    m.iterations = j.at("iterations").get<std::size_t>();
    const auto& s = j.at("scaler");
    m.scaler.offset = s.at("offset").get<std::vector<double>>();
    m.scaler.scale = s.at("scale").get<std::vector<double>>();
    m.scaler.zero_variance = s.at("zero_variance").get<std::vector<bool>>();
    m.coefficients = j.at("coefficients").get<std::vector<double>>();
    m.support_vectors = j.at("support_vectors").get<Matrix>();
    if (m.coefficients.size() != m.support_vectors.size())
        throw validation_error("model file: coefficient/support-vector count mismatch");
    return m;
}

}  // namespace smk
