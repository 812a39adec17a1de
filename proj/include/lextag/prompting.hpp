#pragma once

#include "lextag/corpus.hpp"
#include "lextag/error.hpp"

#include "json.hpp"

#include <algorithm>
#include <cstddef>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

namespace lextag {

struct PromptTemplate {
    std::string name;
    std::string instruction;

    /// Model input as seen by a trainer: instruction, newline, document text.
    [[nodiscard]] std::string render(const std::string &document_text) const { return instruction + "\n" + document_text; }
};

[[nodiscard]] inline const std::vector<PromptTemplate> &builtin_templates() {
    static const std::vector<PromptTemplate> templates{
        {"p1", "Identify all applicable legal categories for the following legal text:"},
        {"p2", "Categorize the following legal document with all relevant legal categories:"},
    };
    return templates;
}

[[nodiscard]] inline const PromptTemplate &find_template(const std::string &name) {
    for (const auto &t : builtin_templates()) {
        if (t.name == name) {
            return t;
        }
    }
    throw UsageError("unknown prompt template '" + name + "' (expected p1 or p2)");
}

/// Canonical label strings in ascending order joined by ", ".
[[nodiscard]] inline std::string label_sequence(const LabelSet &labels, const LabelVocabulary &vocab) {
    std::vector<std::string> names;
    names.reserve(labels.size());
    for (LabelId l : labels) {
        if (l >= vocab.size()) {
            throw ConfigError("label id " + std::to_string(l) + " not in vocabulary");
        }
        names.push_back(vocab.label(l));
    }
    std::sort(names.begin(), names.end());
    std::string out;
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (i > 0) {
            out += ", ";
        }
        out += names[i];
    }
    return out;
}

struct FinetuneExample {
    std::string doc_id;
    std::string instruction;
    std::string input;
    std::string output;
};

[[nodiscard]] inline FinetuneExample build_example(const PromptTemplate &tmpl, const Document &doc, const LabelVocabulary &vocab) {
    return {doc.id, tmpl.instruction, doc.text, label_sequence(doc.labels, vocab)};
}

[[nodiscard]] inline nlohmann::ordered_json to_json(const FinetuneExample &e) {
    nlohmann::ordered_json j;
    j["id"] = e.doc_id;
    j["instruction"] = e.instruction;
    j["input"] = e.input;
    j["output"] = e.output;
    return j;
}

/// Writes one {"id","instruction","input","output"} record per document in corpus order.
inline std::size_t export_finetune_dataset(const Corpus &corpus, const PromptTemplate &tmpl, std::ostream &out) {
    std::size_t written = 0;
    for (const auto &doc : corpus.documents) {
        if (doc.labels.empty()) {
            warn("document '" + doc.id + "' has no labels; exported with an empty output");
        }
        out << to_json(build_example(tmpl, doc, corpus.vocabulary)).dump() << '\n';
        ++written;
    }
    return written;
}

inline std::size_t export_finetune_dataset(const Corpus &corpus, const PromptTemplate &tmpl, const std::string &path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot open output file: " + path);
    }
    const std::size_t n = export_finetune_dataset(corpus, tmpl, out);
    out.flush();
    if (!out) {
        throw IoError("write failed: " + path);
    }
    return n;
}

}  // namespace lextag
