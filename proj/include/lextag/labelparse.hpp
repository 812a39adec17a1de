#pragma once

#include "lextag/corpus.hpp"
#include "lextag/error.hpp"

#include "json.hpp"

#include <cctype>
#include <cstddef>
#include <fstream>
#include <istream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace lextag {

struct ParseOptions {
    std::string separators = ",;\n";
    bool strict = false;
    /// Dropped once, case-insensitively, when the generation starts with one of them.
    std::vector<std::string> strip_prefixes{"labels:", "categories:"};
};

struct ParsedPrediction {
    std::string doc_id;
    LabelSet labels;
    std::vector<std::string> unknown;  // canonicalized fragments missing from the vocabulary
    std::size_t duplicates = 0;
};

namespace detail {

inline bool iequals_prefix(std::string_view s, std::string_view prefix) {
    if (s.size() < prefix.size()) {
        return false;
    }
    for (std::size_t i = 0; i < prefix.size(); ++i) {
        if (std::tolower(static_cast<unsigned char>(s[i])) != std::tolower(static_cast<unsigned char>(prefix[i]))) {
            return false;
        }
    }
    return true;
}

}  // namespace detail

/// Splits a free-form generation into label fragments and resolves them against `vocab`
/// by exact match after canonicalization.
[[nodiscard]] inline ParsedPrediction parse_generation(std::string_view raw, const LabelVocabulary &vocab,
                                                       const ParseOptions &opts = {}) {
    if (opts.separators.empty()) {
        throw UsageError("parse options need at least one separator");
    }
    ParsedPrediction out;
    std::string_view body = raw;
    const auto lead = body.find_first_not_of(" \t\r\n");
    if (lead != std::string_view::npos) {
        const auto rest = body.substr(lead);
        for (const auto &prefix : opts.strip_prefixes) {
            if (!prefix.empty() && detail::iequals_prefix(rest, prefix)) {
                body = rest.substr(prefix.size());
                break;
            }
        }
    }

    std::size_t start = 0;
    while (start <= body.size()) {
        const auto end = body.find_first_of(opts.separators, start);
        const auto fragment = body.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start);
        std::string canonical;
        try {
            canonical = canonicalize_label(fragment);
        } catch (const InvalidLabelError &) {
            canonical.clear();
        }
        if (!canonical.empty()) {
            if (const auto id = vocab.find(canonical)) {
                if (!out.labels.insert(*id).second) {
                    ++out.duplicates;
                }
            } else {
                if (opts.strict) {
                    throw ParseError("unknown label '" + canonical + "'");
                }
                out.unknown.push_back(std::move(canonical));
            }
        }
        if (end == std::string_view::npos) {
            break;
        }
        start = end + 1;
    }
    return out;
}

struct ParseSummary {
    std::size_t docs_parsed = 0;
    std::size_t total_unknown = 0;
    std::size_t total_duplicates = 0;
};

struct ParsedFile {
    std::vector<ParsedPrediction> predictions;  // input order
    ParseSummary summary;
};

/// Parses JSONL records {"id", "generation"}.
[[nodiscard]] inline ParsedFile parse_generations(std::istream &in, const LabelVocabulary &vocab, const ParseOptions &opts = {}) {
    ParsedFile out;
    std::unordered_set<std::string> seen;
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
        if (!j.is_object() || !j.contains("id") || !j["id"].is_string() || !j.contains("generation") ||
            !j["generation"].is_string()) {
            throw DataError("expected {\"id\": string, \"generation\": string} at line " + std::to_string(lineno));
        }
        auto id = j["id"].get<std::string>();
        if (!seen.insert(id).second) {
            throw DataError("duplicate document id at line " + std::to_string(lineno) + ": '" + id + "'");
        }
        ParsedPrediction p;
        try {
            p = parse_generation(j["generation"].get<std::string>(), vocab, opts);
        } catch (const ParseError &e) {
            throw ParseError(std::string(e.what()) + " at line " + std::to_string(lineno));
        }
        p.doc_id = std::move(id);
        out.summary.total_unknown += p.unknown.size();
        out.summary.total_duplicates += p.duplicates;
        ++out.summary.docs_parsed;
        out.predictions.push_back(std::move(p));
    }
    if (in.bad()) {
        throw IoError("read error on generations stream");
    }
    return out;
}

[[nodiscard]] inline ParsedFile parse_generation_file(const std::string &path, const LabelVocabulary &vocab,
                                                      const ParseOptions &opts = {}) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open generations file: " + path);
    }
    return parse_generations(in, vocab, opts);
}

[[nodiscard]] inline nlohmann::ordered_json to_json(const ParseSummary &s) {
    nlohmann::ordered_json j;
    j["docs_parsed"] = s.docs_parsed;
    j["total_unknown"] = s.total_unknown;
    j["total_duplicates"] = s.total_duplicates;
    return j;
}

}  // namespace lextag
