#pragma once

// Predictions JSONL: {"id": <doc id>, "labels": [<canonical label>, ...]}, labels sorted
// ascending. Shared by the baselines, the linear classifier and generation parsing.

#include "lextag/corpus.hpp"
#include "lextag/error.hpp"
#include "lextag/metrics.hpp"

#include "json.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

namespace lextag {

struct PredictionRecord {
    std::string id;
    std::vector<std::string> labels;  // canonical, ascending
};

[[nodiscard]] inline PredictionRecord make_prediction_record(std::string id, const LabelSet &labels, const LabelVocabulary &vocab) {
    PredictionRecord r{std::move(id), {}};
    for (LabelId l : labels) {
        r.labels.push_back(vocab.label(l));
    }
    std::sort(r.labels.begin(), r.labels.end());
    return r;
}

inline void write_prediction(std::ostream &out, const PredictionRecord &r) {
    nlohmann::ordered_json j;
    j["id"] = r.id;
    j["labels"] = r.labels;
    out << j.dump() << '\n';
}

/// Reads predictions, resolving labels against `vocab`. Labels missing from `vocab` are
/// appended to it with count 0 so they still count as false positives.
[[nodiscard]] inline LabelSets read_predictions(std::istream &in, LabelVocabulary &vocab) {
    LabelSets out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error &) {
            throw DataError("malformed JSON at line " + std::to_string(lineno));
        }
        if (!j.is_object() || !j.contains("id") || !j["id"].is_string() || !j.contains("labels") || !j["labels"].is_array()) {
            throw DataError("expected {\"id\": string, \"labels\": [string]} at line " + std::to_string(lineno));
        }
        LabelSet labels;
        for (const auto &l : j["labels"]) {
            if (!l.is_string()) {
                throw DataError("non-string label at line " + std::to_string(lineno));
            }
            try {
                labels.insert(vocab.intern(canonicalize_label(l.get<std::string>())));
            } catch (const InvalidLabelError &e) {
                throw DataError(std::string(e.what()) + " at line " + std::to_string(lineno));
            }
        }
        auto id = j["id"].get<std::string>();
        if (!out.emplace(id, std::move(labels)).second) {
            throw DataError("duplicate document id at line " + std::to_string(lineno) + ": '" + id + "'");
        }
    }
    if (in.bad()) {
        throw IoError("read error on predictions stream");
    }
    return out;
}

[[nodiscard]] inline LabelSets read_predictions_file(const std::string &path, LabelVocabulary &vocab) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open predictions file: " + path);
    }
    return read_predictions(in, vocab);
}

}  // namespace lextag
