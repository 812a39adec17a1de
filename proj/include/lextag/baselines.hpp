#pragma once

// Classical retrieval baselines: label centroids (ClassTFIDF), k-nearest training
// documents (DocTFIDF) and BM25 with labels as queries. Each produces per-label scores
// that a DecisionPolicy turns into a discrete label set.

#include "lextag/corpus.hpp"
#include "lextag/error.hpp"
#include "lextag/metrics.hpp"
#include "lextag/text.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace lextag {

class DecisionPolicy {
public:
    enum class Kind { top_k, threshold };

    [[nodiscard]] static DecisionPolicy top_k(std::size_t k) {
        if (k == 0) {
            throw UsageError("top-k policy needs k >= 1");
        }
        return DecisionPolicy(Kind::top_k, k, 0.0);
    }

    [[nodiscard]] static DecisionPolicy threshold(double tau) {
        if (!std::isfinite(tau)) {
            throw UsageError("threshold policy needs a finite tau");
        }
        return DecisionPolicy(Kind::threshold, 0, tau);
    }

    /// Parses "topk:K" or "threshold:T".
    [[nodiscard]] static DecisionPolicy parse(std::string_view spec) {
        const auto colon = spec.find(':');
        if (colon == std::string_view::npos) {
            throw UsageError("bad policy '" + std::string(spec) + "' (expected topk:K or threshold:T)");
        }
        const auto kind = spec.substr(0, colon);
        const auto value = std::string(spec.substr(colon + 1));
        try {
            std::size_t used = 0;
            if (kind == "topk") {
                const long long k = std::stoll(value, &used);
                if (used != value.size() || k < 1) {
                    throw UsageError("");
                }
                return top_k(static_cast<std::size_t>(k));
            }
            if (kind == "threshold") {
                const double t = std::stod(value, &used);
                if (used != value.size()) {
                    throw UsageError("");
                }
                return threshold(t);
            }
        } catch (const std::exception &) {
        }
        throw UsageError("bad policy '" + std::string(spec) + "' (expected topk:K or threshold:T)");
    }

    [[nodiscard]] Kind kind() const noexcept { return kind_; }
    [[nodiscard]] std::size_t k() const noexcept { return k_; }
    [[nodiscard]] double tau() const noexcept { return tau_; }

    [[nodiscard]] std::string to_string() const {
        if (kind_ == Kind::top_k) {
            return "topk:" + std::to_string(k_);
        }
        char buf[64];
        const auto res = std::to_chars(buf, buf + sizeof buf, tau_);
        return "threshold:" + std::string(buf, res.ptr);
    }

    friend bool operator==(const DecisionPolicy &, const DecisionPolicy &) = default;

private:
    DecisionPolicy(Kind kind, std::size_t k, double tau) : kind_(kind), k_(k), tau_(tau) {}

    Kind kind_;
    std::size_t k_;
    double tau_;
};

/// Parses a comma-separated list of policies, e.g. "topk:1,topk:2,threshold:0.3".
[[nodiscard]] inline std::vector<DecisionPolicy> parse_policy_grid(std::string_view spec) {
    std::vector<DecisionPolicy> grid;
    while (!spec.empty()) {
        const auto comma = spec.find(',');
        grid.push_back(DecisionPolicy::parse(spec.substr(0, comma)));
        spec = comma == std::string_view::npos ? std::string_view{} : spec.substr(comma + 1);
    }
    if (grid.empty()) {
        throw UsageError("empty policy grid");
    }
    return grid;
}

struct LabelScore {
    LabelId label;
    double score;
};

/// Per-document label scores, sorted by score descending then label string ascending.
using ScoredLabels = std::vector<LabelScore>;

[[nodiscard]] inline ScoredLabels rank_scores(std::vector<LabelScore> scores, const LabelVocabulary &vocab) {
    for (const auto &s : scores) {
        if (!std::isfinite(s.score)) {
            throw NumericError("non-finite score for label '" + vocab.label(s.label) + "'");
        }
    }
    std::sort(scores.begin(), scores.end(), [&](const LabelScore &a, const LabelScore &b) {
        if (a.score != b.score) {
            return a.score > b.score;
        }
        return vocab.label(a.label) < vocab.label(b.label);
    });
    return scores;
}

[[nodiscard]] inline LabelSet apply_policy(const ScoredLabels &scored, const DecisionPolicy &policy) {
    LabelSet out;
    if (policy.kind() == DecisionPolicy::Kind::top_k) {
        for (std::size_t i = 0; i < scored.size() && i < policy.k(); ++i) {
            out.insert(scored[i].label);
        }
    } else {
        for (const auto &s : scored) {
            if (s.score >= policy.tau()) {
                out.insert(s.label);
            }
        }
    }
    return out;
}

/// Picks the grid policy with the best micro-F1 on validation documents; earlier entries win ties.
[[nodiscard]] inline DecisionPolicy calibrate_policy(const std::vector<ScoredLabels> &scored, const std::vector<LabelSet> &gold,
                                                     std::span<const DecisionPolicy> grid) {
    if (scored.empty() || scored.size() != gold.size()) {
        throw UsageError("calibration needs a non-empty validation set with one gold set per scored document");
    }
    if (grid.empty()) {
        throw UsageError("calibration needs a non-empty policy grid");
    }
    std::optional<std::size_t> best;
    double best_f1 = -1.0;
    for (std::size_t g = 0; g < grid.size(); ++g) {
        std::size_t tp = 0;
        std::size_t fp = 0;
        std::size_t fn = 0;
        for (std::size_t d = 0; d < scored.size(); ++d) {
            const auto pred = apply_policy(scored[d], grid[g]);
            for (LabelId l : pred) {
                gold[d].contains(l) ? ++tp : ++fp;
            }
            for (LabelId l : gold[d]) {
                if (!pred.contains(l)) {
                    ++fn;
                }
            }
        }
        const double f1 = f1_from_counts(tp, fp, fn);
        if (f1 > best_f1) {
            best_f1 = f1;
            best = g;
        }
    }
    return grid[*best];
}

/// Default calibration grid: top-k for k = 1..5 and thresholds 0.05, 0.10, ..., 0.95.
[[nodiscard]] inline std::vector<DecisionPolicy> default_policy_grid() {
    std::vector<DecisionPolicy> grid;
    for (std::size_t k = 1; k <= 5; ++k) {
        grid.push_back(DecisionPolicy::top_k(k));
    }
    for (int i = 1; i <= 19; ++i) {
        grid.push_back(DecisionPolicy::threshold(0.05 * i));
    }
    return grid;
}

// ---------------------------------------------------------------------------
// ClassTFIDF

struct LabelCentroids {
    std::map<LabelId, SparseVector> centroids;
};

/// Centroid per label: L2-normalized mean of the TF-IDF vectors of its training documents.
/// `vectors[i]` must be the vector of `train.documents[i]`.
[[nodiscard]] inline LabelCentroids classtfidf_fit(const Corpus &train, std::span<const SparseVector> vectors) {
    if (vectors.size() != train.size()) {
        throw UsageError("classtfidf_fit: one vector per training document is required");
    }
    std::map<LabelId, std::map<TermId, double>> sums;
    std::map<LabelId, std::size_t> n;
    for (std::size_t d = 0; d < train.size(); ++d) {
        for (LabelId l : train.documents[d].labels) {
            auto &acc = sums[l];
            const auto &v = vectors[d];
            for (std::size_t i = 0; i < v.nnz(); ++i) {
                acc[v.indices[i]] += v.values[i];
            }
            ++n[l];
        }
    }
    LabelCentroids out;
    for (LabelId l = 0; l < train.vocabulary.size(); ++l) {
        const auto it = sums.find(l);
        if (it == sums.end()) {
            warn("label '" + train.vocabulary.label(l) + "' has no training documents; ClassTFIDF cannot predict it");
            continue;
        }
        for (auto &[t, v] : it->second) {
            v /= static_cast<double>(n[l]);
        }
        auto c = SparseVector::from_entries(std::move(it->second));
        normalize(c);
        out.centroids.emplace(l, std::move(c));
    }
    return out;
}

[[nodiscard]] inline ScoredLabels classtfidf_scores(const LabelCentroids &model, const SparseVector &doc_vector,
                                                    const LabelVocabulary &vocab) {
    std::vector<LabelScore> s;
    s.reserve(model.centroids.size());
    for (const auto &[l, c] : model.centroids) {
        s.push_back({l, cosine_similarity(doc_vector, c)});
    }
    return rank_scores(std::move(s), vocab);
}

[[nodiscard]] inline LabelSet classtfidf_predict(const LabelCentroids &model, const SparseVector &doc_vector,
                                                 const DecisionPolicy &policy, const LabelVocabulary &vocab) {
    if (doc_vector.empty() && policy.kind() == DecisionPolicy::Kind::top_k) {
        warn("ClassTFIDF: document vector is empty; top-k falls back to label order");
    }
    return apply_policy(classtfidf_scores(model, doc_vector, vocab), policy);
}

// ---------------------------------------------------------------------------
// DocTFIDF

/// Similarity-weighted vote of the k most similar training documents: a label's score is
/// the summed similarity of neighbours carrying it over the summed similarity of all k.
/// Only labels of the neighbours are scored. Neighbour ties go to the earlier training document.
[[nodiscard]] inline ScoredLabels doctfidf_scores(const Corpus &train, std::span<const SparseVector> train_vectors,
                                                  const SparseVector &doc_vector, std::size_t k) {
    if (train.empty() || train_vectors.size() != train.size()) {
        throw UsageError("doctfidf: training corpus and vectors must be non-empty and aligned");
    }
    if (k == 0 || k > train.size()) {
        throw UsageError("doctfidf: k must lie in [1, |train|]");
    }
    std::vector<std::pair<double, std::size_t>> sims;
    sims.reserve(train.size());
    for (std::size_t d = 0; d < train.size(); ++d) {
        sims.emplace_back(cosine_similarity(doc_vector, train_vectors[d]), d);
    }
    std::partial_sort(sims.begin(), sims.begin() + static_cast<std::ptrdiff_t>(k), sims.end(), [](const auto &a, const auto &b) {
        if (a.first != b.first) {
            return a.first > b.first;
        }
        return a.second < b.second;
    });
    double total = 0.0;
    std::map<LabelId, double> votes;
    for (std::size_t i = 0; i < k; ++i) {
        total += sims[i].first;
        for (LabelId l : train.documents[sims[i].second].labels) {
            votes[l] += sims[i].first;
        }
    }
    if (total <= 0.0) {
        warn("DocTFIDF: document is orthogonal to all neighbours; no labels predicted");
        return {};
    }
    std::vector<LabelScore> s;
    for (const auto &[l, v] : votes) {
        s.push_back({l, std::min(v / total, 1.0)});
    }
    return rank_scores(std::move(s), train.vocabulary);
}

[[nodiscard]] inline LabelSet doctfidf_predict(const Corpus &train, std::span<const SparseVector> train_vectors,
                                               const SparseVector &doc_vector, const DecisionPolicy &policy, std::size_t k = 5) {
    return apply_policy(doctfidf_scores(train, train_vectors, doc_vector, k), policy);
}

// ---------------------------------------------------------------------------
// BM25, labels as queries

using LabelQueries = std::map<LabelId, Tokens>;

/// Query for each label = its tokenized canonical string.
[[nodiscard]] inline LabelQueries build_label_queries(const LabelVocabulary &vocab) {
    LabelQueries q;
    for (LabelId l = 0; l < vocab.size(); ++l) {
        auto toks = tokenize(vocab.label(l));
        if (toks.empty()) {
            throw ConfigError("label '" + vocab.label(l) + "' has no tokens and cannot be used as a BM25 query");
        }
        q.emplace(l, std::move(toks));
    }
    return q;
}

[[nodiscard]] inline ScoredLabels bm25_scores(const InvertedIndex &index, const LabelQueries &queries, std::size_t doc,
                                              const LabelVocabulary &vocab, const Bm25Params &params = {}) {
    std::vector<LabelScore> s;
    s.reserve(queries.size());
    for (const auto &[l, q] : queries) {
        s.push_back({l, bm25_score(index, q, doc, params)});
    }
    return rank_scores(std::move(s), vocab);
}

[[nodiscard]] inline LabelSet bm25_predict(const InvertedIndex &index, const LabelQueries &queries, std::size_t doc,
                                           const DecisionPolicy &policy, const LabelVocabulary &vocab,
                                           const Bm25Params &params = {}) {
    return apply_policy(bm25_scores(index, queries, doc, vocab, params), policy);
}

}  // namespace lextag
