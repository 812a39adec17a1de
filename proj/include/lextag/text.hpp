#pragma once

#include "lextag/error.hpp"
#include "lextag/unicode.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace lextag {

using TermId = std::uint32_t;
using Tokens = std::vector<std::string>;

/// Lowercases `text` and splits it into maximal runs of alphanumeric code points.
[[nodiscard]] inline Tokens tokenize(std::string_view text) {
    Tokens tokens;
    std::string current;
    std::size_t pos = 0;
    while (pos < text.size()) {
        const char32_t cp = unicode::decode(text, pos);
        if (unicode::is_alnum(cp)) {
            unicode::append_utf8(current, unicode::to_lower(cp));
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) {
        tokens.push_back(std::move(current));
    }
    return tokens;
}

// ---------------------------------------------------------------------------

/// Sparse real vector with strictly increasing indices and no stored zeros.
struct SparseVector {
    std::vector<TermId> indices;
    std::vector<double> values;

    [[nodiscard]] bool empty() const noexcept { return indices.empty(); }
    [[nodiscard]] std::size_t nnz() const noexcept { return indices.size(); }

    [[nodiscard]] double norm() const {
        double s = 0.0;
        for (double v : values) {
            s += v * v;
        }
        return std::sqrt(s);
    }

    /// Builds a vector from (index, value) pairs in any order; duplicates are summed, zeros dropped.
    [[nodiscard]] static SparseVector from_entries(std::map<TermId, double> entries) {
        SparseVector v;
        v.indices.reserve(entries.size());
        v.values.reserve(entries.size());
        for (const auto &[idx, val] : entries) {
            if (val != 0.0) {
                v.indices.push_back(idx);
                v.values.push_back(val);
            }
        }
        return v;
    }

    friend bool operator==(const SparseVector &, const SparseVector &) = default;
};

[[nodiscard]] inline double dot(const SparseVector &a, const SparseVector &b) {
    double s = 0.0;
    std::size_t i = 0;
    std::size_t j = 0;
    while (i < a.indices.size() && j < b.indices.size()) {
        if (a.indices[i] < b.indices[j]) {
            ++i;
        } else if (a.indices[i] > b.indices[j]) {
            ++j;
        } else {
            s += a.values[i++] * b.values[j++];
        }
    }
    return s;
}

/// Scales `v` to unit L2 norm. The zero vector stays empty.
inline void normalize(SparseVector &v) {
    const double n = v.norm();
    if (n == 0.0) {
        v.indices.clear();
        v.values.clear();
        return;
    }
    for (double &x : v.values) {
        x /= n;
    }
}

/// Cosine of the angle between `a` and `b`; 0.0 when either is empty. Clamped to [0, 1]
/// because all vectors built by this library are non-negative.
[[nodiscard]] inline double cosine_similarity(const SparseVector &a, const SparseVector &b) {
    if (a.empty() || b.empty()) {
        return 0.0;
    }
    const double denom = a.norm() * b.norm();
    if (denom == 0.0) {
        return 0.0;
    }
    return std::clamp(dot(a, b) / denom, 0.0, 1.0);
}

// ---------------------------------------------------------------------------
// TF-IDF

class TfidfModel {
public:
    TfidfModel() = default;

    [[nodiscard]] std::size_t n_docs() const noexcept { return n_docs_; }
    [[nodiscard]] std::size_t size() const noexcept { return terms_.size(); }
    [[nodiscard]] const std::vector<std::string> &terms() const noexcept { return terms_; }
    [[nodiscard]] const std::vector<std::size_t> &doc_freq() const noexcept { return doc_freq_; }
    [[nodiscard]] const std::vector<double> &idf() const noexcept { return idf_; }

    [[nodiscard]] std::optional<TermId> find(std::string_view term) const {
        const auto it = index_.find(std::string(term));
        if (it == index_.end()) {
            return std::nullopt;
        }
        return it->second;
    }

    /// Smoothed idf: ln((N + 1) / (df + 1)) + 1.
    [[nodiscard]] static double smoothed_idf(std::size_t n_docs, std::size_t df) {
        return std::log(static_cast<double>(n_docs + 1) / static_cast<double>(df + 1)) + 1.0;
    }

    /// Rebuilds a model from its persisted term table.
    [[nodiscard]] static TfidfModel from_table(std::size_t n_docs, std::vector<std::string> terms, std::vector<std::size_t> doc_freq) {
        if (n_docs == 0) {
            throw DataError("tfidf model: n_docs must be positive");
        }
        if (terms.size() != doc_freq.size()) {
            throw DataError("tfidf model: term and document-frequency tables differ in length");
        }
        TfidfModel m;
        m.n_docs_ = n_docs;
        m.terms_ = std::move(terms);
        m.doc_freq_ = std::move(doc_freq);
        m.idf_.reserve(m.terms_.size());
        for (std::size_t t = 0; t < m.terms_.size(); ++t) {
            if (m.doc_freq_[t] == 0 || m.doc_freq_[t] > n_docs) {
                throw DataError("tfidf model: document frequency out of range for term '" + m.terms_[t] + "'");
            }
            if (!m.index_.emplace(m.terms_[t], static_cast<TermId>(t)).second) {
                throw DataError("tfidf model: duplicate term '" + m.terms_[t] + "'");
            }
            m.idf_.push_back(smoothed_idf(n_docs, m.doc_freq_[t]));
        }
        return m;
    }

    friend TfidfModel fit_tfidf(std::span<const Tokens> docs);

private:
    std::size_t n_docs_ = 0;
    std::vector<std::string> terms_;
    std::unordered_map<std::string, TermId> index_;
    std::vector<std::size_t> doc_freq_;
    std::vector<double> idf_;
};

/// Fits document frequencies over `docs`; term ids are assigned in first-seen order.
[[nodiscard]] inline TfidfModel fit_tfidf(std::span<const Tokens> docs) {
    if (docs.empty()) {
        throw UsageError("fit_tfidf: at least one document is required");
    }
    TfidfModel m;
    m.n_docs_ = docs.size();
    std::vector<std::size_t> last_doc;  // last doc index (+1) that counted each term
    for (std::size_t d = 0; d < docs.size(); ++d) {
        for (const auto &tok : docs[d]) {
            auto [it, inserted] = m.index_.try_emplace(tok, static_cast<TermId>(m.terms_.size()));
            if (inserted) {
                m.terms_.push_back(tok);
                m.doc_freq_.push_back(0);
                last_doc.push_back(0);
            }
            if (last_doc[it->second] != d + 1) {
                last_doc[it->second] = d + 1;
                ++m.doc_freq_[it->second];
            }
        }
    }
    m.idf_.reserve(m.terms_.size());
    for (std::size_t df : m.doc_freq_) {
        m.idf_.push_back(TfidfModel::smoothed_idf(m.n_docs_, df));
    }
    return m;
}

/// Raw-count tf times idf, out-of-vocabulary tokens dropped, L2-normalized.
[[nodiscard]] inline SparseVector transform(const TfidfModel &model, std::span<const std::string> tokens) {
    std::map<TermId, double> counts;
    for (const auto &tok : tokens) {
        if (const auto id = model.find(tok)) {
            counts[*id] += 1.0;
        }
    }
    for (auto &[id, c] : counts) {
        c *= model.idf()[id];
    }
    auto v = SparseVector::from_entries(std::move(counts));
    normalize(v);
    return v;
}

inline nlohmann::ordered_json to_json(const TfidfModel &model) {
    nlohmann::ordered_json j;
    j["version"] = 1;
    j["n_docs"] = model.n_docs();
    auto terms = nlohmann::ordered_json::array();
    for (std::size_t t = 0; t < model.size(); ++t) {
        nlohmann::ordered_json e;
        e["term"] = model.terms()[t];
        e["df"] = model.doc_freq()[t];
        terms.push_back(std::move(e));
    }
    j["terms"] = std::move(terms);
    return j;
}

[[nodiscard]] inline TfidfModel tfidf_from_json(const nlohmann::ordered_json &j) {
    try {
        if (j.at("version").get<int>() != 1) {
            throw DataError("tfidf model: unsupported version");
        }
        std::vector<std::string> terms;
        std::vector<std::size_t> df;
        for (const auto &e : j.at("terms")) {
            terms.push_back(e.at("term").get<std::string>());
            df.push_back(e.at("df").get<std::size_t>());
        }
        return TfidfModel::from_table(j.at("n_docs").get<std::size_t>(), std::move(terms), std::move(df));
    } catch (const nlohmann::json::exception &e) {
        throw DataError(std::string("tfidf model: ") + e.what());
    }
}

// ---------------------------------------------------------------------------
// BM25

struct Bm25Params {
    double k1 = 1.2;
    double b = 0.75;
};

struct Posting {
    std::size_t doc;
    std::size_t tf;
};

/// Term → postings index over a fixed document collection. Documents are
/// addressed by their position in the collection passed to build().
class InvertedIndex {
public:
    [[nodiscard]] static InvertedIndex build(std::span<const Tokens> docs) {
        InvertedIndex ix;
        ix.doc_len_.reserve(docs.size());
        std::size_t total = 0;
        for (std::size_t d = 0; d < docs.size(); ++d) {
            std::map<std::string, std::size_t> tf;
            for (const auto &tok : docs[d]) {
                ++tf[tok];
            }
            for (const auto &[tok, n] : tf) {
                auto [it, inserted] = ix.terms_.try_emplace(tok, static_cast<TermId>(ix.postings_.size()));
                if (inserted) {
                    ix.postings_.emplace_back();
                }
                ix.postings_[it->second].push_back({d, n});
            }
            ix.doc_len_.push_back(docs[d].size());
            total += docs[d].size();
        }
        ix.avg_doc_len_ = docs.empty() ? 0.0 : static_cast<double>(total) / static_cast<double>(docs.size());
        return ix;
    }

    [[nodiscard]] std::size_t n_docs() const noexcept { return doc_len_.size(); }
    [[nodiscard]] double avg_doc_len() const noexcept { return avg_doc_len_; }
    [[nodiscard]] std::size_t doc_len(std::size_t doc) const { return doc_len_.at(doc); }

    /// Postings for `term`, sorted by document; empty if the term never occurs.
    [[nodiscard]] std::span<const Posting> postings(std::string_view term) const {
        const auto it = terms_.find(std::string(term));
        if (it == terms_.end()) {
            return {};
        }
        return postings_[it->second];
    }

    [[nodiscard]] std::size_t term_frequency(std::string_view term, std::size_t doc) const {
        const auto p = postings(term);
        const auto it = std::lower_bound(p.begin(), p.end(), doc, [](const Posting &x, std::size_t d) { return x.doc < d; });
        return (it != p.end() && it->doc == doc) ? it->tf : 0;
    }

private:
    std::unordered_map<std::string, TermId> terms_;
    std::vector<std::vector<Posting>> postings_;
    std::vector<std::size_t> doc_len_;
    double avg_doc_len_ = 0.0;
};

/// Non-negative BM25 idf: ln(1 + (N - df + 0.5) / (df + 0.5)).
[[nodiscard]] inline double bm25_idf(std::size_t n_docs, std::size_t df) {
    const auto n = static_cast<double>(n_docs);
    const auto f = static_cast<double>(df);
    return std::log(1.0 + (n - f + 0.5) / (f + 0.5));
}

/// BM25 relevance of document `doc` to `query`. Every query token occurrence
/// contributes, so a repeated query term counts repeatedly.
[[nodiscard]] inline double bm25_score(const InvertedIndex &index, std::span<const std::string> query, std::size_t doc,
                                       const Bm25Params &params = {}) {
    if (doc >= index.n_docs()) {
        throw UsageError("bm25_score: unknown document " + std::to_string(doc));
    }
    double score = 0.0;
    const double len_ratio = index.avg_doc_len() > 0.0 ? static_cast<double>(index.doc_len(doc)) / index.avg_doc_len() : 0.0;
    for (const auto &term : query) {
        const auto p = index.postings(term);
        if (p.empty()) {
            continue;
        }
        const auto tf = static_cast<double>(index.term_frequency(term, doc));
        if (tf == 0.0) {
            continue;
        }
        const double norm = tf + params.k1 * (1.0 - params.b + params.b * len_ratio);
        score += bm25_idf(index.n_docs(), p.size()) * tf * (params.k1 + 1.0) / norm;
    }
    return score;
}

}  // namespace lextag
