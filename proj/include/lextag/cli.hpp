#pragma once

// Command-line front end. run() is the whole program minus main(), so tests drive it
// in-process with captured streams.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 I/O error.

#include "lextag/baselines.hpp"
#include "lextag/corpus.hpp"
#include "lextag/error.hpp"
#include "lextag/fixture.hpp"
#include "lextag/labelparse.hpp"
#include "lextag/linear.hpp"
#include "lextag/metrics.hpp"
#include "lextag/predictions.hpp"
#include "lextag/prompting.hpp"
#include "lextag/text.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <cstdint>
#include <fstream>
#include <functional>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace lextag::cli {

namespace detail {

class OutputFile {
public:
    explicit OutputFile(const std::string &path) : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
        if (!out_) {
            throw IoError("cannot open output file: " + path);
        }
    }

    std::ostream &stream() { return out_; }

    void close() {
        out_.flush();
        if (!out_) {
            throw IoError("write failed: " + path_);
        }
        out_.close();
    }

private:
    std::string path_;
    std::ofstream out_;
};

inline void write_json_file(const std::string &path, const nlohmann::ordered_json &j) {
    OutputFile f(path);
    f.stream() << j.dump(2) << '\n';
    f.close();
}

inline nlohmann::ordered_json read_json_file(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open file: " + path);
    }
    try {
        return nlohmann::ordered_json::parse(in);
    } catch (const nlohmann::json::parse_error &e) {
        throw DataError("malformed JSON in " + path + ": " + e.what());
    }
}

inline std::pair<std::size_t, std::size_t> parse_boundaries(const std::string &spec) {
    const auto comma = spec.find(',');
    try {
        if (comma != std::string::npos) {
            std::size_t u1 = 0;
            std::size_t u2 = 0;
            const auto a = std::stoull(spec.substr(0, comma), &u1);
            const auto b = std::stoull(spec.substr(comma + 1), &u2);
            if (u1 == comma && u2 == spec.size() - comma - 1 && a > 0 && b > a) {
                return {a, b};
            }
        }
    } catch (const std::exception &) {
    }
    throw UsageError("bad --length-buckets '" + spec + "' (expected two increasing positive integers, e.g. 256,512)");
}

// Vectorized view of a corpus under a fitted TF-IDF model.
inline std::vector<SparseVector> vectorize(const TfidfModel &tfidf, const std::vector<Tokens> &tokens) {
    std::vector<SparseVector> out;
    out.reserve(tokens.size());
    for (const auto &t : tokens) {
        out.push_back(transform(tfidf, t));
    }
    return out;
}

// ---------------------------------------------------------------------------

struct StatsArgs {
    std::string corpus;
    std::vector<std::uint64_t> fixture;
    std::string out;
};

inline void cmd_stats(const StatsArgs &a, std::ostream &out) {
    if (!a.fixture.empty()) {
        if (a.out.empty()) {
            throw UsageError("--make-fixture requires --out");
        }
        FixtureOptions opts;
        opts.n_docs = a.fixture[0];
        opts.n_labels = a.fixture[1];
        opts.seed = a.fixture[2];
        const auto corpus = make_fixture(opts);
        OutputFile f(a.out);
        write_corpus(corpus, f.stream());
        f.close();
        return;
    }
    if (a.corpus.empty()) {
        throw UsageError("stats requires --corpus or --make-fixture");
    }
    const auto corpus = ingest_corpus(a.corpus);
    const auto &vocab = corpus.vocabulary;
    out << "documents: " << corpus.size() << '\n';
    out << "labels: " << vocab.size() << '\n';
    std::size_t tokens = 0;
    for (const auto &d : corpus.documents) {
        tokens += d.token_count;
    }
    out << "tokens: " << tokens << '\n';
    if (vocab.n_counted() == 0) {
        return;
    }
    const auto buckets = frequency_buckets(vocab);
    std::vector<LabelId> ranked;
    for (LabelId l = 0; l < vocab.size(); ++l) {
        ranked.push_back(l);
    }
    std::sort(ranked.begin(), ranked.end(), [&](LabelId x, LabelId y) {
        return vocab.count(x) != vocab.count(y) ? vocab.count(x) > vocab.count(y) : vocab.label(x) < vocab.label(y);
    });
    out << "\nfrequency:\n";
    for (LabelId l : ranked) {
        const char *bucket = buckets.high.contains(l) ? "high" : buckets.medium.contains(l) ? "medium" : buckets.low.contains(l) ? "low" : "-";
        out << std::setw(8) << vocab.count(l) << "  " << std::left << std::setw(7) << bucket << std::right << vocab.label(l) << '\n';
    }
    const auto print = [&](const char *name, const LabelSet &set) {
        std::vector<std::string> names;
        for (LabelId l : set) {
            names.push_back(vocab.label(l));
        }
        std::sort(names.begin(), names.end());
        out << name << " (" << names.size() << "):";
        for (const auto &n : names) {
            out << ' ' << n << ';';
        }
        out << '\n';
    };
    out << "\nbuckets:\n";
    print("high", buckets.high);
    print("medium", buckets.medium);
    print("low", buckets.low);
    const auto lengths = length_buckets(corpus);
    out << "\nlength:\n";
    for (const auto &b : lengths) {
        out << b.name << ": " << b.doc_ids.size() << '\n';
    }
}

struct SplitArgs {
    std::string corpus;
    std::string train_out;
    std::string test_out;
    double fraction = 0.8;
};

inline void cmd_split(const SplitArgs &a, std::uint64_t seed) {
    if (!(a.fraction > 0.0 && a.fraction < 1.0)) {
        throw UsageError("--fraction must lie in (0, 1)");
    }
    const auto corpus = ingest_corpus(a.corpus);
    const auto [train, test] = split(corpus, a.fraction, seed);
    OutputFile tr(a.train_out);
    write_corpus(train, tr.stream());
    tr.close();
    OutputFile te(a.test_out);
    write_corpus(test, te.stream());
    te.close();
}

struct BaselineArgs {
    std::string method;
    std::string train;
    std::string test;
    std::string policy;
    std::string calibrate;
    std::string grid;
    std::size_t k = 5;
    std::string out;
};

inline std::vector<DecisionPolicy> cli_default_grid() {
    auto grid = default_policy_grid();
    for (double t : {1.0, 2.0, 3.0, 5.0}) {
        grid.push_back(DecisionPolicy::threshold(t));
    }
    return grid;
}

inline void cmd_baseline(const BaselineArgs &a, std::ostream &err) {
    // validate flags before touching any file
    std::optional<DecisionPolicy> policy;
    if (!a.policy.empty()) {
        policy = DecisionPolicy::parse(a.policy);
    }
    std::vector<DecisionPolicy> grid;
    if (!a.calibrate.empty()) {
        grid = a.grid.empty() ? cli_default_grid() : parse_policy_grid(a.grid);
    } else if (!a.grid.empty()) {
        throw UsageError("--grid requires --calibrate");
    }
    if (!policy && a.calibrate.empty()) {
        throw UsageError("baseline requires --policy or --calibrate");
    }
    if (a.k == 0) {
        throw UsageError("--k must be positive");
    }

    const auto train = ingest_corpus(a.train);
    const auto test = ingest_corpus(a.test, {.strict = false, .require_labels = false});
    std::optional<Corpus> calib;
    if (!a.calibrate.empty()) {
        calib = ingest_corpus(a.calibrate);
    }
    if (train.empty()) {
        throw DataError("training corpus is empty");
    }
    const auto &vocab = train.vocabulary;
    const auto train_tokens = train.tokenized();

    // scorer(doc tokens, position in the BM25 collection) -> ranked scores
    std::function<ScoredLabels(const Tokens &, std::size_t)> scorer;
    TfidfModel tfidf;
    std::vector<SparseVector> train_vectors;
    LabelCentroids centroids;
    InvertedIndex index;
    LabelQueries queries;
    std::size_t calib_offset = train.size();
    std::size_t test_offset = calib_offset + (calib ? calib->size() : 0);

    if (a.method == "classtfidf" || a.method == "doctfidf") {
        tfidf = fit_tfidf(train_tokens);
        train_vectors = vectorize(tfidf, train_tokens);
        if (a.method == "classtfidf") {
            centroids = classtfidf_fit(train, train_vectors);
            scorer = [&](const Tokens &toks, std::size_t) { return classtfidf_scores(centroids, transform(tfidf, toks), vocab); };
        } else {
            if (a.k > train.size()) {
                throw UsageError("--k exceeds the number of training documents");
            }
            scorer = [&](const Tokens &toks, std::size_t) { return doctfidf_scores(train, train_vectors, transform(tfidf, toks), a.k); };
        }
    } else if (a.method == "bm25") {
        std::vector<Tokens> collection = train_tokens;
        if (calib) {
            for (auto &t : calib->tokenized()) {
                collection.push_back(std::move(t));
            }
        }
        for (auto &t : test.tokenized()) {
            collection.push_back(std::move(t));
        }
        index = InvertedIndex::build(collection);
        queries = build_label_queries(vocab);
        scorer = [&](const Tokens &, std::size_t pos) { return bm25_scores(index, queries, pos, vocab); };
    } else {
        throw UsageError("unknown --method '" + a.method + "' (expected classtfidf, doctfidf or bm25)");
    }

    if (calib) {
        LabelVocabulary merged = vocab;
        std::vector<ScoredLabels> scored;
        std::vector<LabelSet> gold;
        const auto tokens = calib->tokenized();
        for (std::size_t i = 0; i < calib->size(); ++i) {
            scored.push_back(scorer(tokens[i], calib_offset + i));
            LabelSet g;
            for (LabelId l : calib->documents[i].labels) {
                g.insert(merged.intern(calib->vocabulary.label(l)));
            }
            gold.push_back(std::move(g));
        }
        policy = calibrate_policy(scored, gold, grid);
        err << "calibrated policy: " << policy->to_string() << '\n';
    }

    OutputFile f(a.out);
    const auto tokens = test.tokenized();
    for (std::size_t i = 0; i < test.size(); ++i) {
        const auto scored = scorer(tokens[i], test_offset + i);
        write_prediction(f.stream(), make_prediction_record(test.documents[i].id, apply_policy(scored, *policy), vocab));
    }
    f.close();
}

struct TrainArgs {
    std::string train;
    std::string out_model;
    std::string weighting = "none";
    double lr = 0.1;
    std::size_t epochs = 50;
    std::size_t batch = 32;
    double l2 = 1e-4;
    double threshold = 0.5;
};

inline void cmd_train(const TrainArgs &a, std::uint64_t seed) {
    TrainConfig config;
    config.weighting = parse_weighting(a.weighting);
    config.learning_rate = a.lr;
    config.epochs = a.epochs;
    config.batch_size = a.batch;
    config.l2 = a.l2;
    config.seed = seed;
    config.threshold = a.threshold;
    config.validate();
    const auto corpus = ingest_corpus(a.train);
    if (corpus.empty()) {
        throw DataError("training corpus is empty");
    }
    const auto tfidf = fit_tfidf(corpus.tokenized());
    write_json_file(a.out_model, to_json(train(corpus, tfidf, config)));
}

struct PredictArgs {
    std::string model;
    std::string input;
    std::optional<double> threshold;
    std::string out;
};

inline void cmd_predict(const PredictArgs &a) {
    if (a.threshold && !(*a.threshold > 0.0 && *a.threshold < 1.0)) {
        throw UsageError("--threshold must lie in (0, 1)");
    }
    const auto model = linear_model_from_json(read_json_file(a.model));
    const double threshold = a.threshold.value_or(model.config.threshold);
    const auto input = ingest_corpus(a.input, {.strict = false, .require_labels = false});
    LabelVocabulary labels;
    for (const auto &l : model.labels) {
        labels.intern(l);
    }
    OutputFile f(a.out);
    for (const auto &d : input.documents) {
        const auto x = transform(model.tfidf, tokenize(d.text));
        write_prediction(f.stream(), make_prediction_record(d.id, predict(model, x, threshold), labels));
    }
    f.close();
}

struct PromptsArgs {
    std::string corpus;
    std::string tmpl = "p1";
    std::string out;
};

inline void cmd_prompts(const PromptsArgs &a) {
    const auto &tmpl = find_template(a.tmpl);
    const auto corpus = ingest_corpus(a.corpus);
    export_finetune_dataset(corpus, tmpl, a.out);
}

struct ParseArgs {
    std::string generations;
    std::string vocab_from;
    bool strict = false;
    std::string out;
    std::string summary;
};

inline void cmd_parse(const ParseArgs &a) {
    const auto corpus = ingest_corpus(a.vocab_from);
    ParseOptions opts;
    opts.strict = a.strict;
    const auto parsed = parse_generation_file(a.generations, corpus.vocabulary, opts);
    OutputFile f(a.out);
    for (const auto &p : parsed.predictions) {
        write_prediction(f.stream(), make_prediction_record(p.doc_id, p.labels, corpus.vocabulary));
    }
    f.close();
    write_json_file(a.summary, to_json(parsed.summary));
}

struct EvaluateArgs {
    std::string gold;
    std::string pred;
    bool freq_buckets = false;
    std::string train;
    std::string length_buckets;
    std::string report;
};

inline void cmd_evaluate(const EvaluateArgs &a) {
    std::optional<std::pair<std::size_t, std::size_t>> bounds;
    if (!a.length_buckets.empty()) {
        bounds = parse_boundaries(a.length_buckets);
    }
    if (!a.train.empty() && !a.freq_buckets) {
        throw UsageError("--train is only used with --freq-buckets");
    }
    const auto gold_corpus = ingest_corpus(a.gold);
    LabelVocabulary vocab = gold_corpus.vocabulary;
    const auto pred = read_predictions_file(a.pred, vocab);
    const auto gold = gold_corpus.gold();
    const auto counts = confusion(gold, pred, vocab.size());
    auto report = make_report(counts, vocab);

    if (a.freq_buckets) {
        LabelVocabulary ranked = vocab;
        if (!a.train.empty()) {
            const auto train = ingest_corpus(a.train);
            for (LabelId l = 0; l < ranked.size(); ++l) {
                const auto t = train.vocabulary.find(ranked.label(l));
                ranked.set_count(l, t ? train.vocabulary.count(*t) : 0);
            }
        }
        report.frequency_buckets = bucketed_macro_f1(counts, frequency_buckets(ranked));
    }
    if (bounds) {
        report.length_buckets = length_bucketed_report(gold, pred, length_buckets(gold_corpus, *bounds), vocab.size());
    }
    write_json_file(a.report, to_json(report));
}

}  // namespace detail

[[nodiscard]] inline int run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
    ScopedWarningSink sink([&err](std::string_view msg) { err << "warning: " << msg << '\n'; });

    CLI::App app{"Multi-label legal document tagging toolkit", "lextag"};
    app.require_subcommand(1, 1);
    std::uint64_t seed = 42;
    app.add_option("--seed", seed, "Random seed (default 42)");

    detail::StatsArgs stats;
    auto *s_stats = app.add_subcommand("stats", "Corpus statistics, or generate a synthetic fixture");
    s_stats->add_option("--corpus", stats.corpus, "Corpus JSONL");
    s_stats->add_option("--make-fixture", stats.fixture, "N_DOCS N_LABELS SEED")->expected(3);
    s_stats->add_option("--out", stats.out, "Fixture output path");

    detail::SplitArgs split_args;
    auto *s_split = app.add_subcommand("split", "Seeded train/test split");
    s_split->add_option("--corpus", split_args.corpus)->required();
    s_split->add_option("--train-out", split_args.train_out)->required();
    s_split->add_option("--test-out", split_args.test_out)->required();
    s_split->add_option("--fraction", split_args.fraction, "Train fraction in (0,1)");

    detail::BaselineArgs base;
    auto *s_base = app.add_subcommand("baseline", "ClassTFIDF, DocTFIDF or BM25 predictions");
    s_base->add_option("--method", base.method)->required()->check(CLI::IsMember({"classtfidf", "doctfidf", "bm25"}));
    s_base->add_option("--train", base.train)->required();
    s_base->add_option("--test", base.test)->required();
    s_base->add_option("--policy", base.policy, "topk:K or threshold:T");
    s_base->add_option("--calibrate", base.calibrate, "Validation corpus for policy calibration");
    s_base->add_option("--grid", base.grid, "Comma-separated candidate policies");
    s_base->add_option("--k", base.k, "DocTFIDF neighbours (default 5)");
    s_base->add_option("--out", base.out)->required();

    detail::TrainArgs tr;
    auto *s_train = app.add_subcommand("train", "Train the one-vs-all logistic classifier");
    s_train->add_option("--train", tr.train)->required();
    s_train->add_option("--out-model", tr.out_model)->required();
    s_train->add_option("--weighting", tr.weighting)->check(CLI::IsMember({"none", "inverse_frequency"}));
    s_train->add_option("--lr", tr.lr);
    s_train->add_option("--epochs", tr.epochs);
    s_train->add_option("--batch", tr.batch);
    s_train->add_option("--l2", tr.l2);
    s_train->add_option("--threshold", tr.threshold, "Decision threshold stored in the model");

    detail::PredictArgs pr;
    auto *s_pred = app.add_subcommand("predict", "Predict with a trained model");
    s_pred->add_option("--model", pr.model)->required();
    s_pred->add_option("--input", pr.input)->required();
    s_pred->add_option("--threshold", pr.threshold);
    s_pred->add_option("--out", pr.out)->required();

    detail::PromptsArgs pa;
    auto *s_prompts = app.add_subcommand("prompts", "Export an instruction-tuning dataset");
    s_prompts->add_option("--corpus", pa.corpus)->required();
    s_prompts->add_option("--template", pa.tmpl)->check(CLI::IsMember({"p1", "p2"}));
    s_prompts->add_option("--out", pa.out)->required();

    detail::ParseArgs pp;
    auto *s_parse = app.add_subcommand("parse", "Parse model generations into predictions");
    s_parse->add_option("--generations", pp.generations)->required();
    s_parse->add_option("--vocab-from", pp.vocab_from)->required();
    s_parse->add_flag("--strict", pp.strict);
    s_parse->add_option("--out", pp.out)->required();
    s_parse->add_option("--summary", pp.summary)->required();

    detail::EvaluateArgs ev;
    auto *s_eval = app.add_subcommand("evaluate", "Score predictions against gold labels");
    s_eval->add_option("--gold", ev.gold)->required();
    s_eval->add_option("--pred", ev.pred)->required();
    s_eval->add_flag("--freq-buckets", ev.freq_buckets);
    s_eval->add_option("--train", ev.train, "Corpus whose label counts rank the frequency buckets");
    s_eval->add_option("--length-buckets", ev.length_buckets, "Token boundaries, e.g. 256,512");
    s_eval->add_option("--report", ev.report)->required();

    for (auto *sub : app.get_subcommands({})) {
        sub->fallthrough();
    }

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp &) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError &e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return exit_code(ErrorKind::usage);
    }

    try {
        if (*s_stats) {
            detail::cmd_stats(stats, out);
        } else if (*s_split) {
            detail::cmd_split(split_args, seed);
        } else if (*s_base) {
            detail::cmd_baseline(base, err);
        } else if (*s_train) {
            detail::cmd_train(tr, seed);
        } else if (*s_pred) {
            detail::cmd_predict(pr);
        } else if (*s_prompts) {
            detail::cmd_prompts(pa);
        } else if (*s_parse) {
            detail::cmd_parse(pp);
        } else if (*s_eval) {
            detail::cmd_evaluate(ev);
        }
    } catch (const Error &e) {
        err << "error: " << e.what() << '\n';
        return exit_code(e.kind());
    } catch (const std::bad_alloc &) {
        err << "error: out of memory\n";
        return exit_code(ErrorKind::data);
    }
    return 0;
}

}  // namespace lextag::cli
