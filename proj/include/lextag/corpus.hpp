#pragma once

#include "lextag/error.hpp"
#include "lextag/random.hpp"
#include "lextag/text.hpp"
#include "lextag/unicode.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

namespace lextag {

using LabelId = std::uint32_t;
using LabelSet = std::set<LabelId>;

/// Lowercases, trims Unicode whitespace and collapses internal whitespace runs to one space.
/// Throws InvalidLabelError if nothing is left.
[[nodiscard]] inline std::string canonicalize_label(std::string_view raw) {
    std::string out;
    bool pending_space = false;
    std::size_t pos = 0;
    while (pos < raw.size()) {
        const char32_t cp = unicode::decode(raw, pos);
        if (unicode::is_space(cp)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        unicode::append_utf8(out, unicode::to_lower(cp));
    }
    if (out.empty()) {
        throw InvalidLabelError("label is empty after canonicalization: '" + std::string(raw) + "'");
    }
    return out;
}

/// Canonical label strings with dense ids and training-split document counts.
class LabelVocabulary {
public:
    [[nodiscard]] std::size_t size() const noexcept { return entries_.size(); }
    [[nodiscard]] bool empty() const noexcept { return entries_.empty(); }
    [[nodiscard]] const std::vector<std::string> &entries() const noexcept { return entries_; }
    [[nodiscard]] const std::string &label(LabelId id) const { return entries_.at(id); }
    [[nodiscard]] std::size_t count(LabelId id) const { return counts_.at(id); }
    [[nodiscard]] const std::vector<std::size_t> &counts() const noexcept { return counts_; }

    [[nodiscard]] std::optional<LabelId> find(std::string_view canonical) const {
        const auto it = index_.find(std::string(canonical));
        if (it == index_.end()) {
            return std::nullopt;
        }
        return it->second;
    }

    [[nodiscard]] LabelId id_of(std::string_view canonical) const {
        if (const auto id = find(canonical)) {
            return *id;
        }
        throw ConfigError("label not in vocabulary: '" + std::string(canonical) + "'");
    }

    /// Returns the id of `canonical`, appending it with count 0 if new.
    LabelId intern(const std::string &canonical) {
        auto [it, inserted] = index_.try_emplace(canonical, static_cast<LabelId>(entries_.size()));
        if (inserted) {
            entries_.push_back(canonical);
            counts_.push_back(0);
        }
        return it->second;
    }

    void set_count(LabelId id, std::size_t n) { counts_.at(id) = n; }
    void add_count(LabelId id, std::size_t n = 1) { counts_.at(id) += n; }

    /// Number of labels with count >= 1.
    [[nodiscard]] std::size_t n_counted() const {
        return static_cast<std::size_t>(std::count_if(counts_.begin(), counts_.end(), [](std::size_t c) { return c > 0; }));
    }

    friend bool operator==(const LabelVocabulary &a, const LabelVocabulary &b) {
        return a.entries_ == b.entries_ && a.counts_ == b.counts_;
    }

private:
    std::vector<std::string> entries_;
    std::unordered_map<std::string, LabelId> index_;
    std::vector<std::size_t> counts_;
};

struct Document {
    std::string id;
    std::string text;
    LabelSet labels;
    std::size_t token_count = 0;

    friend bool operator==(const Document &, const Document &) = default;
};

struct Corpus {
    std::vector<Document> documents;
    LabelVocabulary vocabulary;

    [[nodiscard]] std::size_t size() const noexcept { return documents.size(); }
    [[nodiscard]] bool empty() const noexcept { return documents.empty(); }

    [[nodiscard]] std::vector<std::string> label_strings(const Document &doc) const {
        std::vector<std::string> out;
        out.reserve(doc.labels.size());
        for (LabelId l : doc.labels) {
            out.push_back(vocabulary.label(l));
        }
        std::sort(out.begin(), out.end());
        return out;
    }

    /// Gold label sets keyed by document id.
    [[nodiscard]] std::map<std::string, LabelSet> gold() const {
        std::map<std::string, LabelSet> out;
        for (const auto &d : documents) {
            out.emplace(d.id, d.labels);
        }
        return out;
    }

    [[nodiscard]] std::vector<Tokens> tokenized() const {
        std::vector<Tokens> out;
        out.reserve(documents.size());
        for (const auto &d : documents) {
            out.push_back(tokenize(d.text));
        }
        return out;
    }

    friend bool operator==(const Corpus &, const Corpus &) = default;
};

// ---------------------------------------------------------------------------
// Ingestion

struct IngestOptions {
    bool strict = false;
    /// When false, a missing "labels" field reads as an empty label set (prediction inputs).
    bool require_labels = true;
};

/// One corpus record before canonicalization.
struct RawRecord {
    std::string id;
    std::string text;
    std::vector<std::string> labels;
};

namespace detail {

// Labels must survive the comma-separated serialization used for generation targets.
inline void check_serializable_label(const std::string &canonical, std::size_t line) {
    if (canonical.find_first_of(",;") != std::string::npos) {
        throw DataError("label contains a list separator at line " + std::to_string(line) + ": '" + canonical + "'");
    }
    for (std::string_view prefix : {"labels:", "categories:"}) {
        if (canonical.starts_with(prefix)) {
            throw DataError("label starts with reserved prefix '" + std::string(prefix) + "' at line " + std::to_string(line));
        }
    }
}

inline void recount(Corpus &corpus) {
    for (LabelId l = 0; l < corpus.vocabulary.size(); ++l) {
        corpus.vocabulary.set_count(l, 0);
    }
    for (const auto &d : corpus.documents) {
        for (LabelId l : d.labels) {
            corpus.vocabulary.add_count(l);
        }
    }
}

}  // namespace detail

/// Canonicalizes labels, assigns label ids in first-seen order and computes token counts.
/// `lines[i]` is the source line reported in diagnostics for `records[i]` (defaults to i + 1).
[[nodiscard]] inline Corpus build_corpus(const std::vector<RawRecord> &records, const std::vector<std::size_t> &lines = {}) {
    Corpus corpus;
    std::unordered_set<std::string> seen;
    corpus.documents.reserve(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto &r = records[i];
        const std::size_t line = i < lines.size() ? lines[i] : i + 1;
        if (r.id.empty()) {
            throw DataError("empty document id at line " + std::to_string(line));
        }
        if (!seen.insert(r.id).second) {
            throw DataError("duplicate document id at line " + std::to_string(line) + ": '" + r.id + "'");
        }
        Document doc;
        doc.id = r.id;
        doc.text = r.text;
        doc.token_count = tokenize(r.text).size();
        for (const auto &raw : r.labels) {
            std::string canonical;
            try {
                canonical = canonicalize_label(raw);
            } catch (const InvalidLabelError &e) {
                throw DataError(std::string(e.what()) + " at line " + std::to_string(line));
            }
            detail::check_serializable_label(canonical, line);
            doc.labels.insert(corpus.vocabulary.intern(canonical));
        }
        corpus.documents.push_back(std::move(doc));
    }
    detail::recount(corpus);
    return corpus;
}

/// Reads JSONL records {"id", "text", "labels"} from `in`. `source` names the stream in errors.
[[nodiscard]] inline Corpus read_corpus(std::istream &in, const IngestOptions &opts = {}, std::string_view source = "<corpus>") {
    std::vector<RawRecord> records;
    std::vector<std::size_t> lines;
    std::string line;
    std::size_t lineno = 0;
    const auto where = [&] { return std::string(source) + ":" + std::to_string(lineno); };
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error &) {
            throw DataError("malformed JSON at line " + std::to_string(lineno) + " (" + where() + ")");
        }
        if (!j.is_object()) {
            throw DataError("record is not a JSON object at line " + std::to_string(lineno));
        }
        RawRecord r;
        const auto id = j.find("id");
        const auto text = j.find("text");
        if (id == j.end() || !id->is_string()) {
            throw DataError("missing string field \"id\" at line " + std::to_string(lineno));
        }
        if (text == j.end() || !text->is_string()) {
            throw DataError("missing string field \"text\" at line " + std::to_string(lineno));
        }
        r.id = id->get<std::string>();
        r.text = text->get<std::string>();
        const auto labels = j.find("labels");
        if (labels == j.end()) {
            if (opts.require_labels) {
                throw DataError("missing array field \"labels\" at line " + std::to_string(lineno));
            }
        } else {
            if (!labels->is_array()) {
                throw DataError("field \"labels\" is not an array at line " + std::to_string(lineno));
            }
            for (const auto &l : *labels) {
                if (!l.is_string()) {
                    throw DataError("non-string label at line " + std::to_string(lineno));
                }
                r.labels.push_back(l.get<std::string>());
            }
            if (r.labels.empty() && opts.require_labels) {
                if (opts.strict) {
                    throw DataError("empty label array at line " + std::to_string(lineno));
                }
                warn("document '" + r.id + "' has no labels (" + where() + ")");
            }
        }
        for (const auto &[key, value] : j.items()) {
            if (key != "id" && key != "text" && key != "labels") {
                if (opts.strict) {
                    throw DataError("unknown field \"" + key + "\" at line " + std::to_string(lineno));
                }
                warn("ignoring unknown field \"" + key + "\" (" + where() + ")");
            }
        }
        records.push_back(std::move(r));
        lines.push_back(lineno);
    }
    if (in.bad()) {
        throw IoError("read error on " + std::string(source));
    }
    return build_corpus(records, lines);
}

[[nodiscard]] inline Corpus ingest_corpus(const std::string &path, const IngestOptions &opts = {}) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open corpus file: " + path);
    }
    return read_corpus(in, opts, path);
}

/// Writes `corpus` as JSONL with canonical label strings sorted ascending.
inline void write_corpus(const Corpus &corpus, std::ostream &out) {
    for (const auto &d : corpus.documents) {
        nlohmann::ordered_json j;
        j["id"] = d.id;
        j["text"] = d.text;
        j["labels"] = corpus.label_strings(d);
        out << j.dump() << '\n';
    }
}

// ---------------------------------------------------------------------------
// Buckets and splits

struct FrequencyBuckets {
    LabelSet high;
    LabelSet medium;
    LabelSet low;
};

/// Ranks labels with count >= 1 by (count desc, label asc); the first ceil(L/5) are high,
/// the last ceil(L/5) low, the rest medium. High is filled first when L is too small for both.
[[nodiscard]] inline FrequencyBuckets frequency_buckets(const LabelVocabulary &vocab) {
    std::vector<LabelId> ranked;
    for (LabelId l = 0; l < vocab.size(); ++l) {
        if (vocab.count(l) > 0) {
            ranked.push_back(l);
        }
    }
    if (ranked.empty()) {
        throw DataError("frequency buckets: no label has a training count");
    }
    std::sort(ranked.begin(), ranked.end(), [&](LabelId a, LabelId b) {
        if (vocab.count(a) != vocab.count(b)) {
            return vocab.count(a) > vocab.count(b);
        }
        return vocab.label(a) < vocab.label(b);
    });
    const std::size_t n = ranked.size();
    const std::size_t fifth = (n + 4) / 5;  // ceil(0.2 n)
    const std::size_t n_high = std::min(fifth, n);
    const std::size_t n_low = std::min(fifth, n - n_high);
    FrequencyBuckets b;
    for (std::size_t i = 0; i < n; ++i) {
        if (i < n_high) {
            b.high.insert(ranked[i]);
        } else if (i >= n - n_low) {
            b.low.insert(ranked[i]);
        } else {
            b.medium.insert(ranked[i]);
        }
    }
    return b;
}

struct LengthBucket {
    std::string name;
    std::set<std::string> doc_ids;
};

/// short / medium / long, in that order.
using LengthPartition = std::vector<LengthBucket>;

/// short: tokens < lo; medium: lo <= tokens <= hi; long: tokens > hi.
[[nodiscard]] inline LengthPartition length_buckets(const Corpus &corpus, std::pair<std::size_t, std::size_t> boundaries = {256, 512}) {
    const auto [lo, hi] = boundaries;
    if (lo == 0 || hi <= lo) {
        throw UsageError("length bucket boundaries must be positive and strictly increasing");
    }
    LengthPartition p{{"short", {}}, {"medium", {}}, {"long", {}}};
    for (const auto &d : corpus.documents) {
        const std::size_t slot = d.token_count < lo ? 0 : (d.token_count <= hi ? 1 : 2);
        p[slot].doc_ids.insert(d.id);
    }
    return p;
}

/// Deterministic seeded shuffle, then the first ceil(fraction N) documents train and the rest test.
/// The train vocabulary keeps only labels seen in train (original id order) with recomputed counts;
/// the test vocabulary is the train vocabulary plus unseen labels appended with count 0.
[[nodiscard]] inline std::pair<Corpus, Corpus> split(const Corpus &corpus, double train_fraction, std::uint64_t seed) {
    if (corpus.empty()) {
        throw UsageError("cannot split an empty corpus");
    }
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw UsageError("train fraction must lie in (0, 1)");
    }
    const std::size_t n = corpus.size();
    const auto n_train = static_cast<std::size_t>(std::ceil(train_fraction * static_cast<double>(n) - 1e-9));
    if (n_train >= n) {
        throw UsageError("empty test split");
    }
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) {
        order[i] = i;
    }
    Rng rng(seed);
    rng.shuffle(std::span<std::size_t>(order));

    const auto &old_vocab = corpus.vocabulary;
    std::vector<bool> in_train(old_vocab.size(), false);
    for (std::size_t i = 0; i < n_train; ++i) {
        for (LabelId l : corpus.documents[order[i]].labels) {
            in_train[l] = true;
        }
    }
    LabelVocabulary train_vocab;
    for (LabelId l = 0; l < old_vocab.size(); ++l) {
        if (in_train[l]) {
            train_vocab.intern(old_vocab.label(l));
        }
    }
    const auto remap = [&](const Document &d, LabelVocabulary &vocab) {
        Document out = d;
        out.labels.clear();
        for (LabelId l : d.labels) {
            out.labels.insert(vocab.intern(old_vocab.label(l)));
        }
        return out;
    };

    Corpus train;
    train.vocabulary = train_vocab;
    for (std::size_t i = 0; i < n_train; ++i) {
        train.documents.push_back(remap(corpus.documents[order[i]], train.vocabulary));
    }
    detail::recount(train);

    Corpus test;
    test.vocabulary = train.vocabulary;
    for (std::size_t i = n_train; i < n; ++i) {
        test.documents.push_back(remap(corpus.documents[order[i]], test.vocabulary));
    }
    return {std::move(train), std::move(test)};
}

}  // namespace lextag
