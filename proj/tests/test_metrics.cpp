#include "lextag/metrics.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>
#include <vector>

using namespace lextag;

namespace {

// A=0, B=1, C=2
const LabelSets kGold{{"d1", {0, 1}}, {"d2", {2}}};
const LabelSets kPred{{"d1", {0}}, {"d2", {1, 2}}};

struct Quiet {
    ScopedWarningSink guard{nullptr};
};

oracle::Matrix to_matrix(const LabelSets &sets, const std::vector<std::string> &ids, std::size_t n_labels) {
    oracle::Matrix m(ids.size(), std::vector<bool>(n_labels, false));
    for (std::size_t d = 0; d < ids.size(); ++d) {
        if (const auto it = sets.find(ids[d]); it != sets.end()) {
            for (auto l : it->second) {
                m[d][l] = true;
            }
        }
    }
    return m;
}

struct Instance {
    LabelSets gold, pred;
    std::vector<std::string> ids;
    std::size_t n_labels = 0;
};

Instance random_instance(std::mt19937 &gen) {
    Instance in;
    const std::size_t n_docs = 1 + gen() % 10;
    in.n_labels = 1 + gen() % 8;
    const double pg = std::uniform_real_distribution<double>(0.0, 1.0)(gen);
    const double pp = std::uniform_real_distribution<double>(0.0, 1.0)(gen);
    for (std::size_t d = 0; d < n_docs; ++d) {
        const auto id = "d" + std::to_string(d);
        in.ids.push_back(id);
        LabelSet g, p;
        for (std::size_t l = 0; l < in.n_labels; ++l) {
            if (std::bernoulli_distribution(pg)(gen)) g.insert(static_cast<LabelId>(l));
            if (std::bernoulli_distribution(pp)(gen)) p.insert(static_cast<LabelId>(l));
        }
        in.gold[id] = g;
        in.pred[id] = p;
    }
    return in;
}

}  // namespace

TEST(Confusion, HandExample) {
    const auto c = confusion(kGold, kPred, 3);
    EXPECT_EQ(c.labels[0], (LabelCounts{1, 0, 0}));
    EXPECT_EQ(c.labels[1], (LabelCounts{0, 1, 1}));
    EXPECT_EQ(c.labels[2], (LabelCounts{1, 0, 0}));
    EXPECT_EQ(c.n_docs_scored, 2u);
    const auto o = oracle::enumerate_f1(to_matrix(kGold, {"d1", "d2"}, 3), to_matrix(kPred, {"d1", "d2"}, 3), 3);
    for (std::size_t l = 0; l < 3; ++l) {
        EXPECT_EQ(static_cast<long>(c.labels[l].tp), o.tp[l]);
        EXPECT_EQ(static_cast<long>(c.labels[l].fp), o.fp[l]);
        EXPECT_EQ(static_cast<long>(c.labels[l].fn), o.fn[l]);
    }
}

TEST(Confusion, PerfectAndEmpty) {
    const auto perfect = confusion(kGold, kGold, 3);
    for (const auto &x : perfect.labels) {
        EXPECT_EQ(x.fp, 0u);
        EXPECT_EQ(x.fn, 0u);
    }
    const LabelSets none{{"d1", {}}, {"d2", {}}};
    const auto empty = confusion(kGold, none, 3);
    EXPECT_EQ(empty.labels[0], (LabelCounts{0, 0, 1}));
    EXPECT_EQ(empty.labels[1], (LabelCounts{0, 0, 1}));
    EXPECT_EQ(empty.labels[2], (LabelCounts{0, 0, 1}));
}

TEST(Confusion, MissingPredictionsCountedAndWarned) {
    std::vector<std::string> warnings;
    ScopedWarningSink sink([&](std::string_view m) { warnings.emplace_back(m); });
    const auto c = confusion(kGold, LabelSets{{"d1", {0, 1}}}, 3);
    EXPECT_EQ(c.missing_predictions, 1u);
    EXPECT_EQ(c.n_docs_scored, 2u);
    EXPECT_EQ(c.labels[2], (LabelCounts{0, 0, 1}));
    EXPECT_EQ(warnings.size(), 1u);
}

TEST(Confusion, UnknownDocumentOrLabelIsDataError) {
    EXPECT_THROW((void)confusion(kGold, LabelSets{{"d9", {0}}}, 3), DataError);
    EXPECT_THROW((void)confusion(kGold, LabelSets{{"d1", {7}}, {"d2", {}}}, 3), DataError);
}

TEST(MicroF1, Examples) {
    EXPECT_NEAR(micro_f1(confusion(kGold, kPred, 3)), 4.0 / 6.0, 1e-12);
    EXPECT_DOUBLE_EQ(micro_f1(confusion(kGold, kGold, 3)), 1.0);
    EXPECT_DOUBLE_EQ(micro_f1(confusion({}, {}, 3)), 0.0);
    const LabelSets no_labels{{"d1", {}}};
    EXPECT_DOUBLE_EQ(micro_f1(confusion(no_labels, no_labels, 3)), 0.0);
}

TEST(MacroF1, Examples) {
    const auto c = confusion(kGold, kPred, 3);
    EXPECT_NEAR(macro_f1(c), (1.0 + 0.0 + 1.0) / 3.0, 1e-12);
    EXPECT_NEAR(macro_f1(c), 0.6667, 1e-4);
    EXPECT_DOUBLE_EQ(macro_f1(confusion(kGold, kGold, 3), {0}), 1.0);
    Quiet q;
    const auto missed = confusion(LabelSets{{"d", {0}}}, LabelSets{{"d", {}}}, 1);
    EXPECT_DOUBLE_EQ(macro_f1(missed, {0}), 0.0);
    EXPECT_THROW((void)macro_f1(c, LabelSet{}), UsageError);
}

TEST(MacroF1, PredictedButUnsupportedLabelsOnlyHurtMicro) {
    const LabelSets gold{{"d1", {0}}};
    const LabelSets pred{{"d1", {0, 1}}};
    const auto c = confusion(gold, pred, 2);
    EXPECT_EQ(c.default_macro_set(), (LabelSet{0}));
    EXPECT_DOUBLE_EQ(macro_f1(c), 1.0);
    EXPECT_NEAR(micro_f1(c), 2.0 / 3.0, 1e-12);
}

TEST(F1, OracleEquivalenceRandomized) {
    std::mt19937 gen(1);
    for (int trial = 0; trial < 2000; ++trial) {
        const auto in = random_instance(gen);
        const auto c = confusion(in.gold, in.pred, in.n_labels);
        const auto o = oracle::enumerate_f1(to_matrix(in.gold, in.ids, in.n_labels), to_matrix(in.pred, in.ids, in.n_labels),
                                            in.n_labels);
        EXPECT_NEAR(micro_f1(c), o.micro, 1e-12);
        if (std::isnan(o.macro)) {
            EXPECT_TRUE(c.default_macro_set().empty());
        } else {
            EXPECT_NEAR(macro_f1(c), o.macro, 1e-12);
        }
    }
}

TEST(F1, PermutationInvariance) {
    std::mt19937 gen(2);
    for (int trial = 0; trial < 200; ++trial) {
        const auto in = random_instance(gen);
        std::vector<LabelId> perm(in.n_labels);
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), gen);
        const auto relabel = [&](const LabelSets &s) {
            // renaming documents reorders the map as well
            LabelSets out;
            for (const auto &[id, labels] : s) {
                LabelSet m;
                for (auto l : labels) m.insert(perm[l]);
                out["z" + std::to_string(1000 - std::stoi(id.substr(1)))] = m;
            }
            return out;
        };
        const auto a = confusion(in.gold, in.pred, in.n_labels);
        const auto b = confusion(relabel(in.gold), relabel(in.pred), in.n_labels);
        EXPECT_NEAR(micro_f1(a), micro_f1(b), 1e-12);
        if (!a.default_macro_set().empty()) {
            EXPECT_NEAR(macro_f1(a), macro_f1(b), 1e-12);
        }
    }
}

TEST(F1, AddingCorrectPairNeverDecreasesMicro) {
    std::mt19937 gen(3);
    for (int trial = 0; trial < 300; ++trial) {
        auto in = random_instance(gen);
        const double before = micro_f1(confusion(in.gold, in.pred, in.n_labels));
        for (auto &[id, g] : in.gold) {
            for (auto l : g) {
                if (!in.pred[id].contains(l)) {
                    in.pred[id].insert(l);
                    const double after = micro_f1(confusion(in.gold, in.pred, in.n_labels));
                    EXPECT_GE(after + 1e-15, before);
                    goto next;
                }
            }
        }
    next:;
    }
}

TEST(F1, SymmetricFixtureMacroEqualsMicro) {
    // each of 4 labels: support 3, tp 2, fp 1
    LabelSets gold, pred;
    for (LabelId l = 0; l < 4; ++l) {
        for (int k = 0; k < 3; ++k) {
            gold["g" + std::to_string(l) + "_" + std::to_string(k)].insert(l);
        }
    }
    pred = gold;
    for (LabelId l = 0; l < 4; ++l) {
        pred["g" + std::to_string(l) + "_0"].erase(l);
        pred["g" + std::to_string((l + 1) % 4) + "_1"].insert(l);
    }
    const auto c = confusion(gold, pred, 4);
    for (const auto &x : c.labels) {
        EXPECT_EQ(x, (LabelCounts{2, 1, 1}));
    }
    EXPECT_NEAR(macro_f1(c), micro_f1(c), 1e-15);
}

// ---------------------------------------------------------------------------

TEST(BucketedMacro, PerfectAndHighOnly) {
    FrequencyBuckets b{{0, 1}, {2}, {3}};
    const LabelSets gold{{"d1", {0, 2}}, {"d2", {1, 3}}};
    const auto perfect = bucketed_macro_f1(confusion(gold, gold, 4), b);
    ASSERT_EQ(perfect.size(), 3u);
    for (const auto &[name, v] : perfect) {
        EXPECT_DOUBLE_EQ(v, 1.0) << name;
    }
    const LabelSets high_only{{"d1", {0}}, {"d2", {1}}};
    const auto r = bucketed_macro_f1(confusion(gold, high_only, 4), b);
    EXPECT_DOUBLE_EQ(r.at("high"), 1.0);
    EXPECT_DOUBLE_EQ(r.at("low"), 0.0);
}

TEST(BucketedMacro, UnsupportedBucketOmitted) {
    FrequencyBuckets b{{0}, {}, {1}};
    const LabelSets gold{{"d1", {0}}};
    const auto r = bucketed_macro_f1(confusion(gold, gold, 2), b);
    EXPECT_TRUE(r.contains("high"));
    EXPECT_FALSE(r.contains("medium"));
    EXPECT_FALSE(r.contains("low"));
}

TEST(BucketedMacro, RandomizedMatchesRestrictedOracle) {
    std::mt19937 gen(4);
    for (int trial = 0; trial < 300; ++trial) {
        auto in = random_instance(gen);
        in.n_labels = 8;
        for (auto &[id, s] : in.pred) {
            if (gen() % 3 == 0) s.insert(static_cast<LabelId>(gen() % 8));
        }
        for (auto &[id, s] : in.gold) {
            if (gen() % 3 == 0) s.insert(static_cast<LabelId>(gen() % 8));
        }
        FrequencyBuckets b;
        std::vector<std::size_t> order(8);
        std::iota(order.begin(), order.end(), 0);
        std::shuffle(order.begin(), order.end(), gen);
        std::set<std::size_t> hs, ms, ls;
        for (std::size_t i = 0; i < 8; ++i) {
            const auto l = static_cast<LabelId>(order[i]);
            (i < 2 ? b.high : i < 6 ? b.medium : b.low).insert(l);
            (i < 2 ? hs : i < 6 ? ms : ls).insert(order[i]);
        }
        const auto r = bucketed_macro_f1(confusion(in.gold, in.pred, 8), b);
        const auto o = oracle::enumerate_f1(to_matrix(in.gold, in.ids, 8), to_matrix(in.pred, in.ids, 8), 8);
        const auto check = [&](const char *name, const std::set<std::size_t> &s) {
            const double expect = oracle::restricted_macro(o, s);
            if (std::isnan(expect)) {
                EXPECT_FALSE(r.contains(name));
            } else {
                ASSERT_TRUE(r.contains(name));
                EXPECT_NEAR(r.at(name), expect, 1e-12);
            }
        };
        check("high", hs);
        check("medium", ms);
        check("low", ls);
    }
}

TEST(LengthReport, SingleBucketEqualsGlobal) {
    const LengthPartition p{{"short", {}}, {"medium", {"d1", "d2"}}, {"long", {}}};
    const auto r = length_bucketed_report(kGold, kPred, p, 3);
    ASSERT_EQ(r.size(), 3u);
    const auto c = confusion(kGold, kPred, 3);
    EXPECT_DOUBLE_EQ(r[1].micro_f1, micro_f1(c));
    EXPECT_DOUBLE_EQ(*r[1].macro_f1, macro_f1(c));
    EXPECT_EQ(r[1].n_docs, 2u);
    EXPECT_EQ(r[0].n_docs, 0u);
    EXPECT_DOUBLE_EQ(r[0].micro_f1, 0.0);
    EXPECT_FALSE(r[0].macro_f1.has_value());
}

TEST(LengthReport, RandomizedSliceOracle) {
    std::mt19937 gen(5);
    for (int trial = 0; trial < 200; ++trial) {
        const auto in = random_instance(gen);
        LengthPartition p{{"short", {}}, {"medium", {}}, {"long", {}}};
        std::vector<std::vector<std::string>> slices(3);
        for (const auto &id : in.ids) {
            const auto k = gen() % 3;
            p[k].doc_ids.insert(id);
        }
        for (std::size_t k = 0; k < 3; ++k) {
            slices[k].assign(p[k].doc_ids.begin(), p[k].doc_ids.end());
        }
        const auto r = length_bucketed_report(in.gold, in.pred, p, in.n_labels);
        for (std::size_t k = 0; k < 3; ++k) {
            EXPECT_EQ(r[k].n_docs, slices[k].size());
            if (slices[k].empty()) {
                EXPECT_EQ(r[k].micro_f1, 0.0);
                EXPECT_FALSE(r[k].macro_f1);
                continue;
            }
            const auto o = oracle::enumerate_f1(to_matrix(in.gold, slices[k], in.n_labels),
                                                to_matrix(in.pred, slices[k], in.n_labels), in.n_labels);
            EXPECT_NEAR(r[k].micro_f1, o.micro, 1e-12);
            if (std::isnan(o.macro)) {
                EXPECT_FALSE(r[k].macro_f1);
            } else {
                ASSERT_TRUE(r[k].macro_f1);
                EXPECT_NEAR(*r[k].macro_f1, o.macro, 1e-12);
            }
        }
    }
}

// ---------------------------------------------------------------------------

TEST(Relevance, Examples) {
    std::vector<RelevanceScore> fives(6, {"d", "r", 1, 5.0});
    EXPECT_DOUBLE_EQ(relevance_aggregate(fives), 5.0);
    const std::vector<RelevanceScore> s{{"d1", "r1", 1, 4}, {"d1", "r2", 1, 5}, {"d2", "r1", 1, 4}, {"d2", "r2", 1, 5}};
    EXPECT_DOUBLE_EQ(relevance_aggregate(s), 4.5);
    EXPECT_EQ(format_relevance(4.5), "4.5");
    EXPECT_EQ(format_relevance(4.0 + 1.0 / 3.0), "4.3");
}

TEST(Relevance, SummationOracleAndErrors) {
    std::mt19937 gen(6);
    std::vector<RelevanceScore> s;
    long sum = 0;
    for (int d = 0; d < 50; ++d) {
        for (int r = 0; r < 3; ++r) {
            for (std::size_t k = 1; k <= 5; ++k) {
                const int v = 1 + static_cast<int>(gen() % 5);
                sum += v;
                s.push_back({"d" + std::to_string(d), "r" + std::to_string(r), k, static_cast<double>(v)});
            }
        }
    }
    EXPECT_NEAR(relevance_aggregate(s), static_cast<double>(sum) / 750.0, 1e-12);
    EXPECT_THROW((void)relevance_aggregate({}), DataError);
    EXPECT_THROW((void)relevance_aggregate({{"d", "r", 1, 0.5}}), DataError);
    EXPECT_THROW((void)relevance_aggregate({{"d", "r", 1, 5.5}}), DataError);
}

TEST(Report, KeyOrderAndContents) {
    LabelVocabulary v;
    v.intern("b label");
    v.intern("a label");
    v.intern("c label");
    auto r = make_report(confusion(kGold, kPred, 3), v);
    r.frequency_buckets = std::map<std::string, double>{{"low", 0.5}, {"high", 1.0}};
    r.length_buckets = std::vector<BucketScores>{{"short", 0.0, std::nullopt, 0}, {"medium", 1.0, 1.0, 2}, {"long", 0.0, std::nullopt, 0}};
    const auto j = to_json(r);
    std::vector<std::string> keys;
    for (const auto &[k, _] : j.items()) keys.push_back(k);
    EXPECT_EQ(keys, (std::vector<std::string>{"version", "micro_f1", "macro_f1", "n_docs", "coverage", "per_label",
                                              "frequency_buckets", "length_buckets"}));
    ASSERT_EQ(j["per_label"].size(), 3u);
    EXPECT_EQ(j["per_label"][0]["label"], "a label");
    EXPECT_EQ(j["per_label"][1]["label"], "b label");
    EXPECT_EQ(j["per_label"][1]["support"], 1);
    std::vector<std::string> fb;
    for (const auto &[k, _] : j["frequency_buckets"].items()) fb.push_back(k);
    EXPECT_EQ(fb, (std::vector<std::string>{"high", "low"}));
    EXPECT_TRUE(j["length_buckets"]["short"]["macro_f1"].is_null());
    EXPECT_EQ(j.dump(), to_json(r).dump());
}

TEST(Report, OptionalSectionsAbsentByDefault) {
    LabelVocabulary v;
    v.intern("a");
    const LabelSets g{{"d", {0}}};
    const auto j = to_json(make_report(confusion(g, g, 1), v));
    EXPECT_FALSE(j.contains("frequency_buckets"));
    EXPECT_FALSE(j.contains("length_buckets"));
    EXPECT_EQ(j["micro_f1"], 1.0);
}
