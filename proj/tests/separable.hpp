#pragma once

// A small corpus whose label groups use disjoint vocabularies, so every scorer can rank perfectly.

#include "lextag/corpus.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace separable {

/// Four label groups with disjoint vocabularies; "criminal" and "evidence" always co-occur.
inline std::vector<lextag::RawRecord> records(std::size_t per_type, std::uint64_t seed, const std::string &id_prefix = "s") {
    const std::vector<std::pair<std::vector<std::string>, std::string>> types{
        {{"tax"}, "tax levy duty revenue"},
        {{"contract"}, "breach offer acceptance consideration"},
        {{"criminal", "evidence"}, "murder verdict testimony witness"},
        {{"maritime"}, "vessel cargo salvage harbour"},
    };
    std::mt19937 gen(static_cast<std::uint32_t>(seed));
    std::vector<lextag::RawRecord> out;
    for (std::size_t i = 0; i < per_type * types.size(); ++i) {
        const auto &[labels, words] = types[i % types.size()];
        // the label names themselves are always present, plus a random repetition
        std::string text;
        for (const auto &l : labels) text += l + " ";
        text += words;
        for (std::size_t r = gen() % 3; r > 0; --r) text += " " + labels[0];
        out.push_back({id_prefix + std::to_string(i), text, labels});
    }
    return out;
}

}  // namespace separable
