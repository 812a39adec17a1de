#pragma once

// Deterministic synthetic corpora with an imbalanced label distribution. Every
// label owns a disjoint signature vocabulary (its name plus a few derived words);
// documents contain the signatures of their labels mixed with shared filler words.

#include "lextag/corpus.hpp"
#include "lextag/error.hpp"
#include "lextag/random.hpp"

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace lextag {

struct FixtureOptions {
    std::size_t n_docs = 1000;
    std::size_t n_labels = 10;
    std::uint64_t seed = 42;
    /// Prevalence of the most and least frequent label; intermediate labels decay geometrically.
    double max_prevalence = 0.35;
    double min_prevalence = 0.02;
    std::size_t signature_size = 5;
    std::size_t min_filler = 8;
    std::size_t max_filler = 60;
};

namespace detail {

inline constexpr std::array<std::string_view, 24> fixture_label_words{
    "admiralty",   "antitrust",   "bankruptcy", "copyright",  "customs",     "employment",
    "environment", "immigration", "insurance",  "patent",     "pension",     "securities",
    "taxation",    "trademark",   "zoning",     "extradition", "fisheries",  "telecom",
    "aviation",    "agriculture", "energy",     "competition", "consumer",   "banking",
};

inline constexpr std::array<std::string_view, 30> fixture_filler_words{
    "court",    "held",     "appeal", "plaintiff", "defendant", "section",    "order",     "judgment",
    "claim",    "statute",  "motion", "party",     "evidence",  "trial",      "ruling",    "regulation",
    "article",  "member",   "state",  "commission", "decision", "provision",  "act",       "matter",
    "counsel",  "review",   "district", "record",  "filed",     "notice",
};

}  // namespace detail

/// Canonical name of fixture label `i`.
[[nodiscard]] inline std::string fixture_label_name(std::size_t i) {
    const auto &words = detail::fixture_label_words;
    std::string name(words[i % words.size()]);
    if (i >= words.size()) {
        name += "x" + std::to_string(i / words.size());
    }
    return name;
}

/// Signature words of fixture label `i`; the first one is the label name itself.
[[nodiscard]] inline std::vector<std::string> fixture_signature(std::size_t i, std::size_t size) {
    std::vector<std::string> sig{fixture_label_name(i)};
    for (std::size_t j = 1; j < size; ++j) {
        sig.push_back(fixture_label_name(i) + "v" + std::to_string(j));
    }
    return sig;
}

/// Prevalence target of fixture label `i` out of `n`.
[[nodiscard]] inline double fixture_prevalence(const FixtureOptions &opts, std::size_t i) {
    if (opts.n_labels == 1) {
        return opts.max_prevalence;
    }
    const double t = static_cast<double>(i) / static_cast<double>(opts.n_labels - 1);
    return opts.max_prevalence * std::pow(opts.min_prevalence / opts.max_prevalence, t);
}

[[nodiscard]] inline std::vector<RawRecord> make_fixture_records(const FixtureOptions &opts) {
    if (opts.n_docs == 0 || opts.n_labels == 0) {
        throw UsageError("fixture needs at least one document and one label");
    }
    if (opts.signature_size == 0 || opts.min_filler > opts.max_filler) {
        throw UsageError("invalid fixture options");
    }
    Rng rng(opts.seed);
    std::vector<std::vector<std::string>> signatures;
    std::vector<double> prevalence;
    for (std::size_t l = 0; l < opts.n_labels; ++l) {
        signatures.push_back(fixture_signature(l, opts.signature_size));
        prevalence.push_back(fixture_prevalence(opts, l));
    }
    double total = 0.0;
    for (double p : prevalence) {
        total += p;
    }

    std::vector<RawRecord> records;
    records.reserve(opts.n_docs);
    const std::size_t width = std::to_string(opts.n_docs).size();
    for (std::size_t d = 0; d < opts.n_docs; ++d) {
        std::vector<std::size_t> labels;
        for (std::size_t l = 0; l < opts.n_labels; ++l) {
            if (rng.bernoulli(prevalence[l])) {
                labels.push_back(l);
            }
        }
        if (labels.empty()) {
            // draw one label proportionally to prevalence
            double u = rng.uniform() * total;
            std::size_t pick = opts.n_labels - 1;
            for (std::size_t l = 0; l < opts.n_labels; ++l) {
                if (u < prevalence[l]) {
                    pick = l;
                    break;
                }
                u -= prevalence[l];
            }
            labels.push_back(pick);
        }

        std::vector<std::string> words;
        for (std::size_t l : labels) {
            const auto &sig = signatures[l];
            words.push_back(sig[0]);
            const auto extra = static_cast<std::size_t>(rng.between(1, static_cast<std::int64_t>(sig.size())));
            for (std::size_t k = 0; k < extra; ++k) {
                words.push_back(sig[rng.below(sig.size())]);
            }
        }
        const auto filler = static_cast<std::size_t>(
            rng.between(static_cast<std::int64_t>(opts.min_filler), static_cast<std::int64_t>(opts.max_filler)));
        for (std::size_t k = 0; k < filler; ++k) {
            words.push_back(std::string(detail::fixture_filler_words[rng.below(detail::fixture_filler_words.size())]));
        }
        rng.shuffle(std::span<std::string>(words));

        RawRecord r;
        std::string num = std::to_string(d);
        r.id = "doc" + std::string(width - num.size(), '0') + num;
        for (std::size_t k = 0; k < words.size(); ++k) {
            if (k > 0) {
                r.text += (k % 12 == 0) ? ". " : " ";
            }
            r.text += words[k];
        }
        r.text += '.';
        for (std::size_t l : labels) {
            r.labels.push_back(fixture_label_name(l));
        }
        records.push_back(std::move(r));
    }
    return records;
}

[[nodiscard]] inline Corpus make_fixture(const FixtureOptions &opts) { return build_corpus(make_fixture_records(opts)); }

}  // namespace lextag
