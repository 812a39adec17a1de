#pragma once

#include "lextag/corpus.hpp"
#include "lextag/error.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <iterator>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace lextag {

using LabelSets = std::map<std::string, LabelSet>;

struct LabelCounts {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;

    [[nodiscard]] std::size_t support() const noexcept { return tp + fn; }
    friend bool operator==(const LabelCounts &, const LabelCounts &) = default;
};

/// Per-label confusion counts over a set of scored documents, indexed by label id.
struct ConfusionCounts {
    std::vector<LabelCounts> labels;
    std::size_t n_docs_scored = 0;
    std::size_t missing_predictions = 0;

    [[nodiscard]] LabelSet default_macro_set() const {
        LabelSet out;
        for (std::size_t l = 0; l < labels.size(); ++l) {
            if (labels[l].support() > 0) {
                out.insert(static_cast<LabelId>(l));
            }
        }
        return out;
    }
};

/// Accumulates per-label tp/fp/fn. Gold documents without a prediction are scored as
/// empty predictions and counted in `missing_predictions`; a prediction for a document
/// absent from `gold` is a data error.
[[nodiscard]] inline ConfusionCounts confusion(const LabelSets &gold, const LabelSets &pred, std::size_t n_labels) {
    for (const auto &[id, labels] : pred) {
        if (!gold.contains(id)) {
            throw DataError("prediction for unknown document '" + id + "'");
        }
        for (LabelId l : labels) {
            if (l >= n_labels) {
                throw DataError("predicted label id " + std::to_string(l) + " out of range for document '" + id + "'");
            }
        }
    }
    ConfusionCounts c;
    c.labels.resize(n_labels);
    static const LabelSet empty;
    for (const auto &[id, g] : gold) {
        for (LabelId l : g) {
            if (l >= n_labels) {
                throw DataError("gold label id " + std::to_string(l) + " out of range for document '" + id + "'");
            }
        }
        const auto it = pred.find(id);
        if (it == pred.end()) {
            ++c.missing_predictions;
        }
        const LabelSet &p = it == pred.end() ? empty : it->second;
        for (LabelId l : g) {
            if (p.contains(l)) {
                ++c.labels[l].tp;
            } else {
                ++c.labels[l].fn;
            }
        }
        for (LabelId l : p) {
            if (!g.contains(l)) {
                ++c.labels[l].fp;
            }
        }
        ++c.n_docs_scored;
    }
    if (c.missing_predictions > 0) {
        warn(std::to_string(c.missing_predictions) + " of " + std::to_string(c.n_docs_scored) +
             " documents have no prediction; scored as empty");
    }
    return c;
}

[[nodiscard]] inline double f1_from_counts(std::size_t tp, std::size_t fp, std::size_t fn) {
    const std::size_t denom = 2 * tp + fp + fn;
    return denom == 0 ? 0.0 : static_cast<double>(2 * tp) / static_cast<double>(denom);
}

/// Pooled F1 over every (document, label) decision; 0.0 when nothing is gold or predicted.
[[nodiscard]] inline double micro_f1(const ConfusionCounts &c) {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    for (const auto &l : c.labels) {
        tp += l.tp;
        fp += l.fp;
        fn += l.fn;
    }
    return f1_from_counts(tp, fp, fn);
}

/// Unweighted mean of per-label F1 over `macro_set`.
[[nodiscard]] inline double macro_f1(const ConfusionCounts &c, const LabelSet &macro_set) {
    if (macro_set.empty()) {
        throw UsageError("macro-F1 needs a non-empty label set");
    }
    double sum = 0.0;
    for (LabelId l : macro_set) {
        if (l >= c.labels.size()) {
            throw UsageError("macro label id out of range");
        }
        const auto &x = c.labels[l];
        sum += f1_from_counts(x.tp, x.fp, x.fn);
    }
    return sum / static_cast<double>(macro_set.size());
}

/// Macro-F1 over labels with gold support >= 1.
[[nodiscard]] inline double macro_f1(const ConfusionCounts &c) { return macro_f1(c, c.default_macro_set()); }

/// Macro-F1 within each frequency bucket, restricted to supported labels. Buckets with
/// no supported label are omitted.
[[nodiscard]] inline std::map<std::string, double> bucketed_macro_f1(const ConfusionCounts &c, const FrequencyBuckets &buckets) {
    const LabelSet supported = c.default_macro_set();
    std::map<std::string, double> out;
    const auto add = [&](const std::string &name, const LabelSet &bucket) {
        LabelSet restricted;
        std::set_intersection(bucket.begin(), bucket.end(), supported.begin(), supported.end(),
                              std::inserter(restricted, restricted.end()));
        if (!restricted.empty()) {
            out.emplace(name, macro_f1(c, restricted));
        }
    };
    add("high", buckets.high);
    add("medium", buckets.medium);
    add("low", buckets.low);
    return out;
}

struct BucketScores {
    std::string name;
    double micro_f1 = 0.0;
    std::optional<double> macro_f1;  // absent when no label has support in the bucket
    std::size_t n_docs = 0;
};

/// Scores each length bucket independently on its own slice of documents.
[[nodiscard]] inline std::vector<BucketScores> length_bucketed_report(const LabelSets &gold, const LabelSets &pred,
                                                                     const LengthPartition &partition, std::size_t n_labels) {
    std::vector<BucketScores> out;
    for (const auto &bucket : partition) {
        LabelSets g;
        LabelSets p;
        for (const auto &id : bucket.doc_ids) {
            const auto gi = gold.find(id);
            if (gi == gold.end()) {
                continue;
            }
            g.emplace(id, gi->second);
            if (const auto pi = pred.find(id); pi != pred.end()) {
                p.emplace(id, pi->second);
            }
        }
        BucketScores s;
        s.name = bucket.name;
        s.n_docs = g.size();
        if (!g.empty()) {
            ScopedWarningSink quiet(nullptr);  // coverage is reported once, globally
            const auto c = confusion(g, p, n_labels);
            s.micro_f1 = micro_f1(c);
            if (const auto ms = c.default_macro_set(); !ms.empty()) {
                s.macro_f1 = macro_f1(c, ms);
            }
        }
        out.push_back(std::move(s));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Human relevance judgements

struct RelevanceScore {
    std::string doc;
    std::string rater;
    std::size_t rank = 0;
    double score = 0.0;
};

/// Arithmetic mean over all (document, rater, rank) judgements on the 1..5 scale.
[[nodiscard]] inline double relevance_aggregate(const std::vector<RelevanceScore> &scores) {
    if (scores.empty()) {
        throw DataError("relevance aggregation needs at least one score");
    }
    double sum = 0.0;
    for (const auto &s : scores) {
        if (!(s.score >= 1.0 && s.score <= 5.0)) {
            throw DataError("relevance score out of range [1, 5] for document '" + s.doc + "'");
        }
        sum += s.score;
    }
    return sum / static_cast<double>(scores.size());
}

/// One decimal place, as shown in rendered tables.
[[nodiscard]] inline std::string format_relevance(double mean) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f", mean);
    return buf;
}

// ---------------------------------------------------------------------------
// Report

struct LabelScores {
    std::string label;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::size_t support = 0;
};

struct MetricsReport {
    double micro_f1 = 0.0;
    double macro_f1 = 0.0;
    std::size_t n_docs = 0;
    std::size_t missing_predictions = 0;
    std::vector<LabelScores> per_label;  // sorted by label ascending
    std::optional<std::map<std::string, double>> frequency_buckets;
    std::optional<std::vector<BucketScores>> length_buckets;
};

/// Builds the global part of a report. Labels appear in `per_label` when they have gold
/// support or were predicted at least once.
[[nodiscard]] inline MetricsReport make_report(const ConfusionCounts &c, const LabelVocabulary &vocab) {
    MetricsReport r;
    r.micro_f1 = micro_f1(c);
    const auto ms = c.default_macro_set();
    r.macro_f1 = ms.empty() ? 0.0 : macro_f1(c, ms);
    r.n_docs = c.n_docs_scored;
    r.missing_predictions = c.missing_predictions;
    for (std::size_t l = 0; l < c.labels.size(); ++l) {
        const auto &x = c.labels[l];
        if (x.tp + x.fp + x.fn == 0) {
            continue;
        }
        LabelScores s;
        s.label = vocab.label(static_cast<LabelId>(l));
        s.precision = x.tp + x.fp == 0 ? 0.0 : static_cast<double>(x.tp) / static_cast<double>(x.tp + x.fp);
        s.recall = x.support() == 0 ? 0.0 : static_cast<double>(x.tp) / static_cast<double>(x.support());
        s.f1 = f1_from_counts(x.tp, x.fp, x.fn);
        s.support = x.support();
        r.per_label.push_back(std::move(s));
    }
    std::sort(r.per_label.begin(), r.per_label.end(), [](const auto &a, const auto &b) { return a.label < b.label; });
    return r;
}

/// Fixed key order: version, micro_f1, macro_f1, n_docs, coverage, per_label,
/// then frequency_buckets (high, medium, low) and length_buckets (short, medium, long)
/// when present.
[[nodiscard]] inline nlohmann::ordered_json to_json(const MetricsReport &r) {
    nlohmann::ordered_json j;
    j["version"] = 1;
    j["micro_f1"] = r.micro_f1;
    j["macro_f1"] = r.macro_f1;
    j["n_docs"] = r.n_docs;
    j["coverage"] = {{"scored", r.n_docs}, {"missing_predictions", r.missing_predictions}};
    auto per_label = nlohmann::ordered_json::array();
    for (const auto &s : r.per_label) {
        nlohmann::ordered_json e;
        e["label"] = s.label;
        e["precision"] = s.precision;
        e["recall"] = s.recall;
        e["f1"] = s.f1;
        e["support"] = s.support;
        per_label.push_back(std::move(e));
    }
    j["per_label"] = std::move(per_label);
    if (r.frequency_buckets) {
        nlohmann::ordered_json fb = nlohmann::ordered_json::object();
        for (const char *name : {"high", "medium", "low"}) {
            if (const auto it = r.frequency_buckets->find(name); it != r.frequency_buckets->end()) {
                fb[name] = it->second;
            }
        }
        j["frequency_buckets"] = std::move(fb);
    }
    if (r.length_buckets) {
        nlohmann::ordered_json lb = nlohmann::ordered_json::object();
        for (const auto &b : *r.length_buckets) {
            nlohmann::ordered_json e;
            e["micro_f1"] = b.micro_f1;
            e["macro_f1"] = b.macro_f1 ? nlohmann::ordered_json(*b.macro_f1) : nlohmann::ordered_json(nullptr);
            e["n_docs"] = b.n_docs;
            lb[b.name] = std::move(e);
        }
        j["length_buckets"] = std::move(lb);
    }
    return j;
}

}  // namespace lextag
