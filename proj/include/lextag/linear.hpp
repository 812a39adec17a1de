#pragma once

// One-vs-all logistic classifier over TF-IDF features with optional
// inverse-frequency label weighting. Plain mini-batch gradient descent from a
// zero initialization, so a fixed seed reproduces the model bit for bit.

#include "lextag/corpus.hpp"
#include "lextag/error.hpp"
#include "lextag/random.hpp"
#include "lextag/text.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace lextag {

enum class Weighting { none, inverse_frequency };

[[nodiscard]] inline std::string_view to_string(Weighting w) {
    return w == Weighting::none ? "none" : "inverse_frequency";
}

[[nodiscard]] inline Weighting parse_weighting(std::string_view s) {
    if (s == "none") {
        return Weighting::none;
    }
    if (s == "inverse_frequency") {
        return Weighting::inverse_frequency;
    }
    throw UsageError("unknown weighting '" + std::string(s) + "' (expected none or inverse_frequency)");
}

struct WeightClip {
    double min = 0.1;
    double max = 10.0;
};

struct TrainConfig {
    double learning_rate = 0.1;
    std::size_t epochs = 50;
    std::size_t batch_size = 32;
    double l2 = 1e-4;
    Weighting weighting = Weighting::none;
    WeightClip clip{};
    std::uint64_t seed = 42;
    double threshold = 0.5;

    void validate() const {
        if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
            throw UsageError("learning rate must be positive");
        }
        if (batch_size == 0) {
            throw UsageError("batch size must be positive");
        }
        if (!(l2 >= 0.0) || !std::isfinite(l2)) {
            throw UsageError("l2 must be non-negative");
        }
        if (!(clip.min > 0.0) || !(clip.min <= clip.max)) {
            throw UsageError("weight clip must satisfy 0 < min <= max");
        }
        if (!(threshold > 0.0 && threshold < 1.0)) {
            throw UsageError("threshold must lie in (0, 1)");
        }
    }
};

/// Per-label loss weights, indexed by label id.
struct LabelWeights {
    std::vector<double> w;
};

[[nodiscard]] inline LabelWeights uniform_weights(std::size_t n_labels) { return {std::vector<double>(n_labels, 1.0)}; }

/// raw_l = n_docs / (L count_l), rescaled to mean 1 over the labels, then clamped to the clip range.
[[nodiscard]] inline LabelWeights inverse_frequency_weights(std::span<const std::size_t> counts, std::size_t n_docs,
                                                            const WeightClip &clip = {}) {
    if (counts.empty()) {
        throw ConfigError("inverse-frequency weights need at least one label");
    }
    const auto L = static_cast<double>(counts.size());
    std::vector<double> raw;
    raw.reserve(counts.size());
    double sum = 0.0;
    for (std::size_t l = 0; l < counts.size(); ++l) {
        if (counts[l] == 0) {
            throw ConfigError("label " + std::to_string(l) + " has zero training count; inverse-frequency weight undefined");
        }
        if (counts[l] > n_docs) {
            throw ConfigError("label count exceeds the number of training documents");
        }
        raw.push_back(static_cast<double>(n_docs) / (L * static_cast<double>(counts[l])));
        sum += raw.back();
    }
    const double mean = sum / L;
    LabelWeights out;
    out.w.reserve(raw.size());
    for (double r : raw) {
        out.w.push_back(std::clamp(r / mean, clip.min, clip.max));
    }
    return out;
}

[[nodiscard]] inline double sigmoid(double z) {
    if (z >= 0.0) {
        return 1.0 / (1.0 + std::exp(-z));
    }
    const double e = std::exp(z);
    return e / (1.0 + e);
}

/// Weighted binary cross-entropy averaged over the B documents of a batch.
/// `logits` and `targets` are row-major B x L with L = weights.w.size().
[[nodiscard]] inline double weighted_bce_loss(std::span<const double> logits, std::span<const std::uint8_t> targets,
                                              const LabelWeights &weights) {
    const std::size_t L = weights.w.size();
    if (L == 0 || logits.size() != targets.size() || logits.size() % L != 0) {
        throw UsageError("weighted_bce_loss: shape mismatch");
    }
    const std::size_t B = logits.size() / L;
    if (B == 0) {
        return 0.0;
    }
    double total = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        const double z = logits[i];
        if (!std::isfinite(z)) {
            throw NumericError("non-finite logit at position " + std::to_string(i));
        }
        const double y = targets[i] ? 1.0 : 0.0;
        // -[y ln s(z) + (1-y) ln(1-s(z))] = max(z,0) - z y + ln(1 + e^-|z|)
        total += weights.w[i % L] * (std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z))));
    }
    return total / static_cast<double>(B);
}

// ---------------------------------------------------------------------------

struct LinearModel {
    std::vector<std::string> labels;
    TfidfModel tfidf;                         // vectorizer the weights were trained against
    std::vector<std::vector<double>> weights;  // [label][term]
    std::vector<double> bias;
    TrainConfig config;

    [[nodiscard]] std::size_t n_labels() const noexcept { return labels.size(); }
    [[nodiscard]] std::size_t n_terms() const noexcept { return tfidf.size(); }

    [[nodiscard]] double logit(std::size_t label, const SparseVector &x) const {
        const auto &w = weights[label];
        double z = bias[label];
        for (std::size_t i = 0; i < x.nnz(); ++i) {
            if (x.indices[i] < w.size()) {
                z += w[x.indices[i]] * x.values[i];
            }
        }
        return z;
    }

    /// Zero weights and biases over the given term space and label list.
    [[nodiscard]] static LinearModel zeros(TfidfModel tfidf, std::vector<std::string> labels, TrainConfig config = {}) {
        LinearModel m;
        m.labels = std::move(labels);
        m.tfidf = std::move(tfidf);
        m.weights.assign(m.labels.size(), std::vector<double>(m.tfidf.size(), 0.0));
        m.bias.assign(m.labels.size(), 0.0);
        m.config = config;
        return m;
    }
};

/// FNV-1a hash over the term list and label list identifying a feature/label space.
[[nodiscard]] inline std::uint64_t vocab_fingerprint(std::span<const std::string> terms, std::span<const std::string> labels) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    const auto mix = [&h](std::string_view s) {
        for (unsigned char c : s) {
            h ^= c;
            h *= 0x100000001b3ULL;
        }
        h ^= 0xFF;  // separator byte that cannot occur in UTF-8
        h *= 0x100000001b3ULL;
    };
    mix("terms");
    for (const auto &t : terms) {
        mix(t);
    }
    mix("labels");
    for (const auto &l : labels) {
        mix(l);
    }
    return h;
}

[[nodiscard]] inline std::uint64_t fingerprint(const LinearModel &m) { return vocab_fingerprint(m.tfidf.terms(), m.labels); }

struct Gradient {
    std::vector<std::vector<double>> weights;  // [label][term]
    std::vector<double> bias;
};

/// B x L target matrix (row-major) for `label_sets` over `n_labels` labels.
[[nodiscard]] inline std::vector<std::uint8_t> target_matrix(std::span<const LabelSet> label_sets, std::size_t n_labels) {
    std::vector<std::uint8_t> y(label_sets.size() * n_labels, 0);
    for (std::size_t i = 0; i < label_sets.size(); ++i) {
        for (LabelId l : label_sets[i]) {
            if (l >= n_labels) {
                throw UsageError("target label id out of range");
            }
            y[i * n_labels + l] = 1;
        }
    }
    return y;
}

[[nodiscard]] inline std::vector<double> logit_matrix(const LinearModel &model, std::span<const SparseVector> features) {
    const std::size_t L = model.n_labels();
    std::vector<double> z(features.size() * L);
    for (std::size_t i = 0; i < features.size(); ++i) {
        for (std::size_t l = 0; l < L; ++l) {
            z[i * L + l] = model.logit(l, features[i]);
        }
    }
    return z;
}

/// Weighted BCE over the batch plus (l2 / 2) * sum of squared weights (biases unregularized).
[[nodiscard]] inline double objective(std::span<const SparseVector> features, std::span<const std::uint8_t> targets,
                                      const LabelWeights &weights, const LinearModel &model, double l2) {
    double reg = 0.0;
    for (const auto &row : model.weights) {
        for (double w : row) {
            reg += w * w;
        }
    }
    return weighted_bce_loss(logit_matrix(model, features), targets, weights) + 0.5 * l2 * reg;
}

/// Gradient of objective(): dL/dz = w_l (s(z) - y) / B, accumulated over features, plus l2 * weight.
[[nodiscard]] inline Gradient loss_gradient(std::span<const SparseVector> features, std::span<const std::uint8_t> targets,
                                            const LabelWeights &weights, const LinearModel &model, double l2) {
    const std::size_t L = model.n_labels();
    const std::size_t B = features.size();
    if (weights.w.size() != L || targets.size() != B * L) {
        throw UsageError("loss_gradient: shape mismatch");
    }
    Gradient g;
    g.weights.resize(L);
    g.bias.assign(L, 0.0);
    for (std::size_t l = 0; l < L; ++l) {
        g.weights[l].resize(model.weights[l].size());
        for (std::size_t t = 0; t < g.weights[l].size(); ++t) {
            g.weights[l][t] = l2 * model.weights[l][t];
        }
    }
    if (B == 0) {
        return g;
    }
    const double inv_b = 1.0 / static_cast<double>(B);
    for (std::size_t i = 0; i < B; ++i) {
        const auto &x = features[i];
        for (std::size_t l = 0; l < L; ++l) {
            const double z = model.logit(l, x);
            if (!std::isfinite(z)) {
                throw NumericError("non-finite logit in gradient");
            }
            const double dz = weights.w[l] * (sigmoid(z) - (targets[i * L + l] ? 1.0 : 0.0)) * inv_b;
            g.bias[l] += dz;
            auto &row = g.weights[l];
            for (std::size_t k = 0; k < x.nnz(); ++k) {
                if (x.indices[k] < row.size()) {
                    row[x.indices[k]] += dz * x.values[k];
                }
            }
        }
    }
    return g;
}

struct TrainResult {
    LinearModel model;
    std::vector<double> epoch_loss;  // full-training-set objective after each epoch
};

/// Trains one sigmoid head per label of `train.vocabulary` on the TF-IDF vectors of `train`.
[[nodiscard]] inline TrainResult train_with_history(const Corpus &train, const TfidfModel &tfidf, const TrainConfig &config) {
    config.validate();
    if (train.empty()) {
        throw UsageError("training corpus is empty");
    }
    const std::size_t L = train.vocabulary.size();
    const std::size_t N = train.size();

    std::vector<SparseVector> features;
    std::vector<LabelSet> label_sets;
    features.reserve(N);
    label_sets.reserve(N);
    for (const auto &d : train.documents) {
        features.push_back(transform(tfidf, tokenize(d.text)));
        label_sets.push_back(d.labels);
    }
    const auto targets = target_matrix(label_sets, L);
    const LabelWeights weights = config.weighting == Weighting::inverse_frequency
                                     ? inverse_frequency_weights(train.vocabulary.counts(), N, config.clip)
                                     : uniform_weights(L);

    TrainResult result{LinearModel::zeros(tfidf, train.vocabulary.entries(), config), {}};
    auto &model = result.model;

    Rng rng(config.seed);
    std::vector<std::size_t> order(N);
    for (std::size_t i = 0; i < N; ++i) {
        order[i] = i;
    }
    std::vector<SparseVector> batch_x;
    std::vector<std::uint8_t> batch_y;
    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        rng.shuffle(std::span<std::size_t>(order));
        for (std::size_t start = 0; start < N; start += config.batch_size) {
            const std::size_t end = std::min(N, start + config.batch_size);
            batch_x.clear();
            batch_y.clear();
            for (std::size_t k = start; k < end; ++k) {
                batch_x.push_back(features[order[k]]);
                const auto row = std::span(targets).subspan(order[k] * L, L);
                batch_y.insert(batch_y.end(), row.begin(), row.end());
            }
            Gradient g;
            try {
                g = loss_gradient(batch_x, batch_y, weights, model, config.l2);
            } catch (const NumericError &) {
                throw TrainingError("training diverged at epoch " + std::to_string(epoch));
            }
            for (std::size_t l = 0; l < L; ++l) {
                auto &w = model.weights[l];
                for (std::size_t t = 0; t < w.size(); ++t) {
                    w[t] -= config.learning_rate * g.weights[l][t];
                }
                model.bias[l] -= config.learning_rate * g.bias[l];
            }
        }
        double loss = 0.0;
        try {
            loss = objective(features, targets, weights, model, config.l2);
        } catch (const NumericError &) {
            loss = std::numeric_limits<double>::quiet_NaN();
        }
        if (!std::isfinite(loss)) {
            throw TrainingError("training diverged at epoch " + std::to_string(epoch) + " (loss is not finite)");
        }
        result.epoch_loss.push_back(loss);
    }
    return result;
}

[[nodiscard]] inline LinearModel train(const Corpus &train, const TfidfModel &tfidf, const TrainConfig &config) {
    return train_with_history(train, tfidf, config).model;
}

[[nodiscard]] inline std::vector<double> predict_proba(const LinearModel &model, const SparseVector &x) {
    std::vector<double> p(model.n_labels());
    for (std::size_t l = 0; l < p.size(); ++l) {
        p[l] = sigmoid(model.logit(l, x));
    }
    return p;
}

/// Label indices (into model.labels) whose probability is >= threshold. `vectorizer_fingerprint`
/// must identify the term and label space `x` was built against.
[[nodiscard]] inline LabelSet predict(const LinearModel &model, const SparseVector &x, double threshold,
                                      std::uint64_t vectorizer_fingerprint) {
    if (vectorizer_fingerprint != fingerprint(model)) {
        throw ConfigError("model was trained against a different term/label space (fingerprint mismatch)");
    }
    LabelSet out;
    const auto p = predict_proba(model, x);
    for (std::size_t l = 0; l < p.size(); ++l) {
        if (p[l] >= threshold) {
            out.insert(static_cast<LabelId>(l));
        }
    }
    return out;
}

/// Uses the vectorizer embedded in the model.
[[nodiscard]] inline LabelSet predict(const LinearModel &model, const SparseVector &x, double threshold) {
    return predict(model, x, threshold, fingerprint(model));
}

// ---------------------------------------------------------------------------
// Model file

[[nodiscard]] inline nlohmann::ordered_json to_json(const LinearModel &m) {
    nlohmann::ordered_json j;
    j["version"] = 1;
    j["labels"] = m.labels;
    j["terms"] = m.tfidf.terms();
    j["weights"] = m.weights;
    j["bias"] = m.bias;
    nlohmann::ordered_json c;
    c["learning_rate"] = m.config.learning_rate;
    c["epochs"] = m.config.epochs;
    c["batch_size"] = m.config.batch_size;
    c["l2"] = m.config.l2;
    c["weighting"] = to_string(m.config.weighting);
    c["clip"] = {m.config.clip.min, m.config.clip.max};
    c["seed"] = m.config.seed;
    c["threshold"] = m.config.threshold;
    j["config"] = std::move(c);
    j["tfidf"] = {{"n_docs", m.tfidf.n_docs()}, {"df", m.tfidf.doc_freq()}};
    return j;
}

[[nodiscard]] inline LinearModel linear_model_from_json(const nlohmann::ordered_json &j) {
    try {
        if (j.at("version").get<int>() != 1) {
            throw DataError("model file: unsupported version");
        }
        LinearModel m;
        m.labels = j.at("labels").get<std::vector<std::string>>();
        m.tfidf = TfidfModel::from_table(j.at("tfidf").at("n_docs").get<std::size_t>(), j.at("terms").get<std::vector<std::string>>(),
                                         j.at("tfidf").at("df").get<std::vector<std::size_t>>());
        m.weights = j.at("weights").get<std::vector<std::vector<double>>>();
        m.bias = j.at("bias").get<std::vector<double>>();
        const auto &c = j.at("config");
        m.config.learning_rate = c.at("learning_rate").get<double>();
        m.config.epochs = c.at("epochs").get<std::size_t>();
        m.config.batch_size = c.at("batch_size").get<std::size_t>();
        m.config.l2 = c.at("l2").get<double>();
        m.config.weighting = parse_weighting(c.at("weighting").get<std::string>());
        m.config.clip.min = c.at("clip").at(0).get<double>();
        m.config.clip.max = c.at("clip").at(1).get<double>();
        m.config.seed = c.at("seed").get<std::uint64_t>();
        m.config.threshold = c.at("threshold").get<double>();
        if (m.weights.size() != m.labels.size() || m.bias.size() != m.labels.size()) {
            throw DataError("model file: weights/bias do not match the label list");
        }
        for (std::size_t l = 0; l < m.weights.size(); ++l) {
            if (m.weights[l].size() != m.tfidf.size()) {
                throw DataError("model file: weight row " + std::to_string(l) + " does not match the term list");
            }
            for (double w : m.weights[l]) {
                if (!std::isfinite(w)) {
                    throw DataError("model file: non-finite weight");
                }
            }
            if (!std::isfinite(m.bias[l])) {
                throw DataError("model file: non-finite bias");
            }
        }
        return m;
    } catch (const nlohmann::json::exception &e) {
        throw DataError(std::string("model file: ") + e.what());
    } catch (const UsageError &e) {
        throw DataError(std::string("model file: ") + e.what());
    }
}

}  // namespace lextag
