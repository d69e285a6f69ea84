// Command-line front end: wires the library modules into reproducible
// pipeline runs. Every command writes its artifacts to configured paths and
// prints a one-line JSON summary to standard output. Exit codes: 0 success,
// 2 usage/config, 3 data validation, 4 backend failure.

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dialogkit/analytics.hpp"
#include "dialogkit/backends.hpp"
#include "dialogkit/corpus.hpp"
#include "dialogkit/data_prep.hpp"
#include "dialogkit/errors.hpp"
#include "dialogkit/evaluation.hpp"
#include "dialogkit/retrieval.hpp"
#include "dialogkit/synthesis.hpp"

namespace {

using namespace dialogkit;
using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out << content;
    if (!out) throw IoError("write failed for " + path);
}

// The --config file is one JSON document with a section per command;
// values fill in options the command line left at their defaults.
json load_config_file(const std::string& path) {
    try {
        return json::parse(read_text_file(path));
    } catch (const json::exception& e) {
        throw ConfigError("bad config file " + path + ": " + e.what());
    }
}

template <typename T>
void apply_config(const json* section, const CLI::Option* option, const char* key,
                  T& value) {
    if (!section || option->count() > 0 || !section->contains(key)) return;
    try {
        value = section->at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config key \"") + key + "\": " + e.what());
    }
}

struct IngestArgs {
    std::string input, format = "qrecc", output;
    CLI::Option *input_opt, *format_opt, *output_opt;
};

struct FilterArgs {
    std::string input, output, report;
    CLI::Option *input_opt, *output_opt, *report_opt;
};

struct StatsArgs {
    std::string input, output, text;
    CLI::Option *input_opt, *output_opt, *text_opt;
};

struct RougeArgs {
    std::string input, output, text;
    CLI::Option *input_opt, *output_opt, *text_opt;
};

struct BuildTrainArgs {
    std::string input, output, prep_config, policy;
    std::size_t window = 0;
    double title_keep = -1.0;
    std::uint64_t seed = 0;
    CLI::Option *input_opt, *output_opt, *prep_opt, *policy_opt, *window_opt,
        *title_opt, *seed_opt;
};

struct SynthesizeArgs {
    std::string input, output, trace, backend = "stub", script, url, sentinel_format,
                question_type = "raw";
    std::size_t window = 3, retries = 2, workers = 1;
    bool no_title = false, strict = false;
    CLI::Option *input_opt, *output_opt, *trace_opt, *backend_opt, *script_opt,
        *url_opt, *sentinel_opt, *qtype_opt, *window_opt, *retries_opt, *workers_opt,
        *no_title_opt, *strict_opt;
};

struct JudgeArgs {
    std::string input, output, consensus, backend = "stub", script, url, rubrics;
    std::size_t raters = 1, workers = 1;
    bool resume = false;
    CLI::Option *input_opt, *output_opt, *consensus_opt, *backend_opt, *script_opt,
        *url_opt, *rubrics_opt, *raters_opt, *workers_opt, *resume_opt;
};

struct ZTestArgs {
    std::size_t x1 = 0, n1 = 0, x2 = 0, n2 = 0;
    CLI::Option *x1_opt, *n1_opt, *x2_opt, *n2_opt;
};

struct RetrievalEvalArgs {
    std::string queries, passages, relevance, ranks_out;
    std::size_t k = 0;  // 0 = unlimited
    CLI::Option *queries_opt, *passages_opt, *relevance_opt, *ranks_opt, *k_opt;
};

ordered_json run_ingest(IngestArgs& args, const json* section) {
    apply_config(section, args.input_opt, "input", args.input);
    apply_config(section, args.format_opt, "format", args.format);
    apply_config(section, args.output_opt, "output", args.output);
    if (args.input.empty() || args.output.empty()) {
        throw ConfigError("ingest needs --input and --output");
    }

    IngestResult result = ingest_corpus(args.input, source_format_from_string(args.format));
    save_dialogs(result.dialogs, args.output);

    ordered_json summary;
    summary["command"] = "ingest";
    summary["dialogs"] = result.dialogs.size();
    summary["records_total"] = result.records_total;
    summary["records_skipped"] = result.records_skipped;
    summary["output"] = args.output;
    return summary;
}

ordered_json run_filter(FilterArgs& args, const json* section) {
    apply_config(section, args.input_opt, "input", args.input);
    apply_config(section, args.output_opt, "output", args.output);
    apply_config(section, args.report_opt, "report", args.report);
    if (args.input.empty() || args.output.empty()) {
        throw ConfigError("filter needs --input and --output");
    }

    std::vector<Dialog> dialogs = load_dialogs(args.input);
    auto [kept, report] = filter_other_interesting(dialogs);
    save_dialogs(kept, args.output);
    if (!args.report.empty()) {
        write_text_file(args.report, filter_report_to_json(report) + "\n");
    }

    ordered_json summary;
    summary["command"] = "filter";
    summary["dialogs_in"] = dialogs.size();
    summary["dialogs_out"] = kept.size();
    summary["removed_pairs"] = report.removed_pairs;
    summary["pair_fraction"] = report.pair_fraction;
    summary["dialog_fraction"] = report.dialog_fraction;
    summary["output"] = args.output;
    return summary;
}

ordered_json run_stats(StatsArgs& args, const json* section) {
    apply_config(section, args.input_opt, "input", args.input);
    apply_config(section, args.output_opt, "output", args.output);
    apply_config(section, args.text_opt, "text", args.text);
    if (args.input.empty()) throw ConfigError("stats needs --input");

    std::vector<Dialog> dialogs = load_dialogs(args.input);
    CorpusStats stats = corpus_stats(dialogs);
    if (!args.output.empty()) {
        write_text_file(args.output, corpus_stats_to_json(stats) + "\n");
    }
    if (!args.text.empty()) write_text_file(args.text, format_corpus_stats(stats));

    ordered_json summary;
    summary["command"] = "stats";
    ordered_json fields = ordered_json::parse(corpus_stats_to_json(stats));
    for (const auto& [key, value] : fields.items()) summary[key] = value;
    return summary;
}

ordered_json run_rouge(RougeArgs& args, const json* section) {
    apply_config(section, args.input_opt, "input", args.input);
    apply_config(section, args.output_opt, "output", args.output);
    apply_config(section, args.text_opt, "text", args.text);
    if (args.input.empty()) throw ConfigError("rouge needs --input");

    std::vector<Dialog> dialogs = load_dialogs(args.input);
    std::size_t pairs = 0;
    for (const Dialog& dialog : dialogs) pairs += dialog.turns.size();
    RougeScores scores = qa_overlap_report(dialogs);
    if (!args.output.empty()) {
        write_text_file(args.output, rouge_scores_to_json(scores, pairs) + "\n");
    }
    if (!args.text.empty()) write_text_file(args.text, format_rouge_scores(scores, pairs));

    ordered_json summary;
    summary["command"] = "rouge";
    ordered_json fields = ordered_json::parse(rouge_scores_to_json(scores, pairs));
    for (const auto& [key, value] : fields.items()) summary[key] = value;
    return summary;
}

ordered_json run_build_train(BuildTrainArgs& args, const json* section) {
    apply_config(section, args.input_opt, "input", args.input);
    apply_config(section, args.output_opt, "output", args.output);
    apply_config(section, args.prep_opt, "prep_config", args.prep_config);
    apply_config(section, args.policy_opt, "policy", args.policy);
    apply_config(section, args.window_opt, "mask_window", args.window);
    apply_config(section, args.title_opt, "title_keep_probability", args.title_keep);
    apply_config(section, args.seed_opt, "seed", args.seed);
    if (args.input.empty() || args.output.empty()) {
        throw ConfigError("build-train needs --input and --output");
    }

    PrepConfig config;
    if (!args.prep_config.empty()) {
        config = prep_config_from_json(read_text_file(args.prep_config));
    }
    if (args.window_opt->count() > 0 || (section && section->contains("mask_window"))) {
        if (args.window < 1) throw ConfigError("mask window must be >= 1");
        config.max_masked_run = args.window;
    }
    if (args.title_keep >= 0.0) {
        if (args.title_keep > 1.0) {
            throw ConfigError("title keep probability must be in [0, 1]");
        }
        config.title_keep_probability = args.title_keep;
    }
    if (!args.policy.empty()) {
        config.question_type_policy = question_type_policy_from_string(args.policy);
    }
    if (args.seed_opt->count() > 0 || (section && section->contains("seed"))) {
        config.rng_seed = args.seed;
    }

    std::vector<Dialog> dialogs = load_dialogs(args.input);
    std::vector<TrainingExample> examples = build_training_set(dialogs, config);

    std::ofstream out(args.output, std::ios::binary);
    if (!out) throw IoError("cannot write " + args.output);
    for (const TrainingExample& example : examples) {
        ordered_json j;
        j["input"] = example.input_text;
        j["target"] = example.target_text;
        j["num_masked_slots"] = example.num_masked_slots;
        out << j.dump() << '\n';
    }
    if (!out) throw IoError("write failed for " + args.output);

    ordered_json summary;
    summary["command"] = "build-train";
    summary["dialogs"] = dialogs.size();
    summary["examples"] = examples.size();
    summary["seed"] = config.rng_seed;
    summary["output"] = args.output;
    return summary;
}

ordered_json run_synthesize(SynthesizeArgs& args, const json* section) {
    apply_config(section, args.input_opt, "input", args.input);
    apply_config(section, args.output_opt, "output", args.output);
    apply_config(section, args.trace_opt, "trace", args.trace);
    apply_config(section, args.backend_opt, "backend", args.backend);
    apply_config(section, args.script_opt, "script", args.script);
    apply_config(section, args.url_opt, "url", args.url);
    apply_config(section, args.sentinel_opt, "sentinel_format", args.sentinel_format);
    apply_config(section, args.qtype_opt, "question_type", args.question_type);
    apply_config(section, args.window_opt, "window", args.window);
    apply_config(section, args.retries_opt, "retries", args.retries);
    apply_config(section, args.workers_opt, "workers", args.workers);
    apply_config(section, args.no_title_opt, "no_title", args.no_title);
    apply_config(section, args.strict_opt, "strict", args.strict);
    if (args.input.empty() || args.output.empty()) {
        throw ConfigError("synthesize needs --input and --output");
    }

    SynthesisConfig config;
    config.window_sentences = args.window;
    if (config.window_sentences < 1) throw ConfigError("window must be >= 1");
    if (args.question_type == "none") {
        config.question_type = std::nullopt;
    } else if (args.question_type == "raw") {
        config.question_type = QuestionStyle::raw;
    } else if (args.question_type == "rewritten") {
        config.question_type = QuestionStyle::rewritten;
    } else {
        throw ConfigError("question type must be raw, rewritten, or none");
    }
    config.include_title = !args.no_title;
    config.max_retries_on_malformed = args.retries;
    config.malformed_fallback = !args.strict;

    std::vector<Document> documents = load_documents(args.input);

    // Backend wiring. The scripted stub replays a script file; a shared
    // (flat-array) script must be consumed in document order, so it forces a
    // single worker.
    GeneratorScript script;
    std::unique_ptr<ScriptedGenerator> shared_stub;
    std::unique_ptr<HttpGenerator> http;
    std::size_t workers = std::max<std::size_t>(1, args.workers);
    if (args.backend == "stub") {
        if (args.script.empty()) throw ConfigError("stub backend needs --script");
        script = load_generator_script(args.script);
        if (script.per_document.empty()) {
            shared_stub = std::make_unique<ScriptedGenerator>(script.shared);
            if (workers > 1) {
                std::cerr << "note: shared script queue forces --workers 1\n";
                workers = 1;
            }
        }
    } else if (args.backend == "http") {
        EndpointConfig endpoint;
        if (!args.url.empty()) {
            endpoint.base_url = args.url;
            if (const char* key = std::getenv("DIALOGKIT_API_KEY"); key && *key) {
                endpoint.api_key = key;
            }
        } else if (auto from_env = endpoint_from_env("generator")) {
            endpoint = *from_env;
        } else {
            throw ConfigError("http backend needs --url or DIALOGKIT_GENERATOR_URL");
        }
        std::optional<std::string> native;
        if (!args.sentinel_format.empty()) native = args.sentinel_format;
        http = std::make_unique<HttpGenerator>(endpoint, native);
    } else {
        throw ConfigError("backend must be stub or http");
    }

    std::vector<std::pair<Dialog, SynthesisTrace>> results(documents.size());
    auto synthesize_one = [&](std::size_t i) {
        const Document& document = documents[i];
        if (http) {
            results[i] = inpaint_document(document, *http, config);
        } else if (shared_stub) {
            results[i] = inpaint_document(document, *shared_stub, config);
        } else {
            ScriptedGenerator generator(script.outputs_for(document.id));
            results[i] = inpaint_document(document, generator, config);
        }
    };

    if (workers <= 1 || documents.size() <= 1) {
        for (std::size_t i = 0; i < documents.size(); ++i) synthesize_one(i);
    } else {
        std::atomic<std::size_t> cursor{0};
        std::exception_ptr failure;
        std::mutex failure_mutex;
        auto worker = [&] {
            for (;;) {
                std::size_t i = cursor.fetch_add(1);
                if (i >= documents.size()) return;
                try {
                    synthesize_one(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                    return;
                }
            }
        };
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < std::min(workers, documents.size()); ++w) {
            pool.emplace_back(worker);
        }
        for (std::thread& thread : pool) thread.join();
        if (failure) std::rethrow_exception(failure);
    }

    std::vector<Dialog> dialogs;
    dialogs.reserve(results.size());
    std::size_t fallback_windows = 0;
    for (auto& [dialog, trace] : results) {
        fallback_windows += trace.fallback_count();
        dialogs.push_back(std::move(dialog));
    }
    save_dialogs(dialogs, args.output);
    if (!args.trace.empty()) {
        std::ofstream out(args.trace, std::ios::binary);
        if (!out) throw IoError("cannot write " + args.trace);
        for (const auto& [dialog, trace] : results) out << trace.to_json() << '\n';
        if (!out) throw IoError("write failed for " + args.trace);
    }

    ordered_json summary;
    summary["command"] = "synthesize";
    summary["documents"] = documents.size();
    summary["dialogs"] = dialogs.size();
    summary["fallback_windows"] = fallback_windows;
    summary["output"] = args.output;
    return summary;
}

ordered_json run_judge(JudgeArgs& args, const json* section) {
    apply_config(section, args.input_opt, "input", args.input);
    apply_config(section, args.output_opt, "output", args.output);
    apply_config(section, args.consensus_opt, "consensus", args.consensus);
    apply_config(section, args.backend_opt, "backend", args.backend);
    apply_config(section, args.script_opt, "script", args.script);
    apply_config(section, args.url_opt, "url", args.url);
    apply_config(section, args.rubrics_opt, "rubrics", args.rubrics);
    apply_config(section, args.raters_opt, "raters", args.raters);
    apply_config(section, args.workers_opt, "workers", args.workers);
    apply_config(section, args.resume_opt, "resume", args.resume);
    if (args.input.empty() || args.output.empty()) {
        throw ConfigError("judge needs --input and --output");
    }

    std::vector<RubricKind> kinds;
    if (args.rubrics.empty()) {
        kinds = {RubricKind::info_seeking, RubricKind::relevance,
                 RubricKind::specificity, RubricKind::answeredness};
    } else {
        std::istringstream list(args.rubrics);
        std::string name;
        while (std::getline(list, name, ',')) {
            if (!name.empty()) kinds.push_back(rubric_kind_from_string(name));
        }
        if (kinds.empty()) throw ConfigError("no rubrics named");
    }

    std::unique_ptr<JudgeBackend> backend;
    std::size_t workers = std::max<std::size_t>(1, args.workers);
    if (args.backend == "stub") {
        if (args.script.empty()) throw ConfigError("stub backend needs --script");
        json j;
        try {
            j = json::parse(read_text_file(args.script));
        } catch (const json::exception& e) {
            throw ParseError(std::string("bad judge script: ") + e.what());
        }
        if (!j.is_array()) throw ParseError("judge script must be a JSON array");
        backend = std::make_unique<ScriptedJudge>(j.get<std::vector<std::string>>());
        if (workers > 1) {
            std::cerr << "note: scripted judge forces --workers 1\n";
            workers = 1;
        }
    } else if (args.backend == "http") {
        EndpointConfig endpoint;
        if (!args.url.empty()) {
            endpoint.base_url = args.url;
            if (const char* key = std::getenv("DIALOGKIT_API_KEY"); key && *key) {
                endpoint.api_key = key;
            }
        } else if (auto from_env = endpoint_from_env("judge")) {
            endpoint = *from_env;
        } else {
            throw ConfigError("http backend needs --url or DIALOGKIT_JUDGE_URL");
        }
        backend = std::make_unique<HttpJudge>(endpoint);
    } else {
        throw ConfigError("backend must be stub or http");
    }

    std::vector<Dialog> dialogs = load_dialogs(args.input);
    std::vector<RubricJudgment> judgments;
    if (args.resume && std::ifstream(args.output).good()) {
        judgments = load_judgments(args.output);
    }

    JudgeReport report;
    try {
        report = judge_corpus(dialogs, *backend, kinds, args.raters, judgments, workers);
    } catch (...) {
        // Keep what finished so a rerun with --resume picks up from here.
        save_judgments(judgments, args.output);
        throw;
    }
    save_judgments(judgments, args.output);

    std::vector<ConsensusEntry> consensus = aggregate_majority(judgments);
    std::size_t no_consensus = 0;
    for (const ConsensusEntry& entry : consensus) {
        if (!entry.label) ++no_consensus;
    }
    if (!args.consensus.empty()) {
        std::ofstream out(args.consensus, std::ios::binary);
        if (!out) throw IoError("cannot write " + args.consensus);
        for (const ConsensusEntry& entry : consensus) {
            ordered_json j;
            j["dialog_id"] = entry.dialog_id;
            j["turn"] = entry.turn_index;
            j["rubric"] = to_string(entry.kind);
            if (entry.label) {
                j["label"] = *entry.label;
            } else {
                j["label"] = nullptr;
            }
            j["votes"] = entry.votes;
            out << j.dump() << '\n';
        }
        if (!out) throw IoError("write failed for " + args.consensus);
    }

    ordered_json summary;
    summary["command"] = "judge";
    summary["judgments"] = judgments.size();
    summary["new"] = report.judgments_made;
    summary["reused"] = report.judgments_reused;
    summary["unparseable"] = report.unparseable;
    summary["groups"] = consensus.size();
    summary["no_consensus"] = no_consensus;
    summary["output"] = args.output;
    return summary;
}

ordered_json run_ztest(ZTestArgs& args, const json* section) {
    apply_config(section, args.x1_opt, "x1", args.x1);
    apply_config(section, args.n1_opt, "n1", args.n1);
    apply_config(section, args.x2_opt, "x2", args.x2);
    apply_config(section, args.n2_opt, "n2", args.n2);

    ZTestResult result = two_proportion_z_test(args.x1, args.n1, args.x2, args.n2);
    ordered_json summary;
    summary["command"] = "ztest";
    summary["z"] = result.z;
    summary["p_two_sided"] = result.p_two_sided;
    return summary;
}

ordered_json run_retrieval_eval(RetrievalEvalArgs& args, const json* section) {
    apply_config(section, args.queries_opt, "queries", args.queries);
    apply_config(section, args.passages_opt, "passages", args.passages);
    apply_config(section, args.relevance_opt, "relevance", args.relevance);
    apply_config(section, args.ranks_opt, "ranks", args.ranks_out);
    apply_config(section, args.k_opt, "k", args.k);
    if (args.queries.empty() || args.passages.empty() || args.relevance.empty()) {
        throw ConfigError("retrieval-eval needs --queries, --passages, --relevance");
    }

    std::vector<EmbeddingRecord> queries = load_embedding_file(args.queries);
    std::vector<EmbeddingRecord> passages = load_embedding_file(args.passages);
    std::vector<RelevanceRecord> relevance = load_relevance_file(args.relevance);
    std::vector<std::optional<std::size_t>> ranks =
        compute_gold_ranks(queries, passages, relevance);

    std::optional<std::size_t> cutoff;
    if (args.k > 0) cutoff = args.k;
    double mrr = mrr_at_k(ranks, cutoff);

    if (!args.ranks_out.empty()) {
        std::ofstream out(args.ranks_out, std::ios::binary);
        if (!out) throw IoError("cannot write " + args.ranks_out);
        for (std::size_t i = 0; i < relevance.size(); ++i) {
            ordered_json j;
            j["query_id"] = relevance[i].query_id;
            if (ranks[i]) {
                j["rank"] = *ranks[i];
            } else {
                j["rank"] = nullptr;
            }
            out << j.dump() << '\n';
        }
        if (!out) throw IoError("write failed for " + args.ranks_out);
    }

    ordered_json summary;
    summary["command"] = "retrieval-eval";
    summary["queries"] = relevance.size();
    if (cutoff) {
        summary["k"] = *cutoff;
    } else {
        summary["k"] = nullptr;
    }
    summary["mrr"] = mrr;
    return summary;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"document-to-dialog synthesis and evaluation toolkit"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "0.1.0");

    std::string config_path;
    app.add_option("--config", config_path,
                   "JSON config file with one section per command");

    IngestArgs ingest;
    CLI::App* ingest_cmd =
        app.add_subcommand("ingest", "convert a source corpus into dialog records");
    ingest_cmd->fallthrough();
    ingest.input_opt = ingest_cmd->add_option("--input", ingest.input, "source file");
    ingest.format_opt = ingest_cmd->add_option("--format", ingest.format,
                                               "source format: orquac, qrecc, dolly");
    ingest.output_opt = ingest_cmd->add_option("--output", ingest.output, "dialogs file");

    FilterArgs filter;
    CLI::App* filter_cmd =
        app.add_subcommand("filter", "drop boilerplate suggestion questions");
    filter_cmd->fallthrough();
    filter.input_opt = filter_cmd->add_option("--input", filter.input, "dialogs file");
    filter.output_opt = filter_cmd->add_option("--output", filter.output, "dialogs file");
    filter.report_opt =
        filter_cmd->add_option("--report", filter.report, "filter report JSON path");

    StatsArgs stats;
    CLI::App* stats_cmd = app.add_subcommand("stats", "corpus statistics");
    stats_cmd->fallthrough();
    stats.input_opt = stats_cmd->add_option("--input", stats.input, "dialogs file");
    stats.output_opt = stats_cmd->add_option("--output", stats.output, "JSON report path");
    stats.text_opt = stats_cmd->add_option("--text", stats.text, "text table path");

    RougeArgs rouge;
    CLI::App* rouge_cmd =
        app.add_subcommand("rouge", "question-answer overlap (ROUGE-1/2/L)");
    rouge_cmd->fallthrough();
    rouge.input_opt = rouge_cmd->add_option("--input", rouge.input, "dialogs file");
    rouge.output_opt = rouge_cmd->add_option("--output", rouge.output, "JSON report path");
    rouge.text_opt = rouge_cmd->add_option("--text", rouge.text, "text table path");

    BuildTrainArgs build_train;
    CLI::App* build_train_cmd = app.add_subcommand(
        "build-train", "serialize dialogs into masked training examples");
    build_train_cmd->fallthrough();
    build_train.input_opt =
        build_train_cmd->add_option("--input", build_train.input, "dialogs file");
    build_train.output_opt =
        build_train_cmd->add_option("--output", build_train.output, "examples file");
    build_train.prep_opt = build_train_cmd->add_option(
        "--prep-config", build_train.prep_config, "preparation config JSON path");
    build_train.policy_opt = build_train_cmd->add_option(
        "--policy", build_train.policy,
        "question style policy: raw_only, rewritten_only, both_uniform");
    build_train.window_opt = build_train_cmd->add_option(
        "--mask-window", build_train.window, "max consecutive masked questions");
    build_train.title_opt = build_train_cmd->add_option(
        "--title-keep-probability", build_train.title_keep,
        "probability a title is kept");
    build_train.seed_opt =
        build_train_cmd->add_option("--seed", build_train.seed, "RNG seed");

    SynthesizeArgs synthesize;
    CLI::App* synthesize_cmd =
        app.add_subcommand("synthesize", "convert documents into dialogs");
    synthesize_cmd->fallthrough();
    synthesize.input_opt =
        synthesize_cmd->add_option("--input", synthesize.input, "documents file");
    synthesize.output_opt =
        synthesize_cmd->add_option("--output", synthesize.output, "dialogs file");
    synthesize.trace_opt =
        synthesize_cmd->add_option("--trace", synthesize.trace, "trace file path");
    synthesize.backend_opt = synthesize_cmd->add_option(
        "--backend", synthesize.backend, "generator backend: stub or http");
    synthesize.script_opt = synthesize_cmd->add_option(
        "--script", synthesize.script, "stub script JSON (array or per-document map)");
    synthesize.url_opt =
        synthesize_cmd->add_option("--url", synthesize.url, "generator endpoint URL");
    synthesize.sentinel_opt = synthesize_cmd->add_option(
        "--sentinel-format", synthesize.sentinel_format,
        "native sentinel pattern with {} for the index, e.g. <extra_id_{}>");
    synthesize.qtype_opt = synthesize_cmd->add_option(
        "--question-type", synthesize.question_type,
        "prefix style: raw, rewritten, or none");
    synthesize.window_opt = synthesize_cmd->add_option(
        "--window", synthesize.window, "sentences per generator call");
    synthesize.retries_opt = synthesize_cmd->add_option(
        "--retries", synthesize.retries, "extra calls after a malformed completion");
    synthesize.workers_opt = synthesize_cmd->add_option(
        "--workers", synthesize.workers, "parallel documents");
    synthesize.no_title_opt = synthesize_cmd->add_flag(
        "--no-title", synthesize.no_title, "omit document titles from inputs");
    synthesize.strict_opt = synthesize_cmd->add_flag(
        "--strict", synthesize.strict,
        "fail a document instead of emitting a degenerate turn");

    JudgeArgs judge;
    CLI::App* judge_cmd = app.add_subcommand("judge", "rubric-judge dialog turns");
    judge_cmd->fallthrough();
    judge.input_opt = judge_cmd->add_option("--input", judge.input, "dialogs file");
    judge.output_opt = judge_cmd->add_option("--output", judge.output, "judgments file");
    judge.consensus_opt = judge_cmd->add_option("--consensus", judge.consensus,
                                                "majority-vote output path");
    judge.backend_opt =
        judge_cmd->add_option("--backend", judge.backend, "judge backend: stub or http");
    judge.script_opt = judge_cmd->add_option("--script", judge.script,
                                             "stub script JSON array of completions");
    judge.url_opt = judge_cmd->add_option("--url", judge.url, "judge endpoint URL");
    judge.rubrics_opt = judge_cmd->add_option(
        "--rubrics", judge.rubrics,
        "comma list: info_seeking,relevance,specificity,answeredness (default all)");
    judge.raters_opt = judge_cmd->add_option("--raters", judge.raters, "votes per turn");
    judge.workers_opt = judge_cmd->add_option("--workers", judge.workers,
                                              "parallel judge calls (http backend)");
    judge.resume_opt = judge_cmd->add_flag("--resume", judge.resume,
                                           "reuse judgments already in --output");

    ZTestArgs ztest;
    CLI::App* ztest_cmd =
        app.add_subcommand("ztest", "two-proportion z-test on consensus counts");
    ztest_cmd->fallthrough();
    ztest.x1_opt = ztest_cmd->add_option("--x1", ztest.x1, "successes, group 1");
    ztest.n1_opt = ztest_cmd->add_option("--n1", ztest.n1, "trials, group 1");
    ztest.x2_opt = ztest_cmd->add_option("--x2", ztest.x2, "successes, group 2");
    ztest.n2_opt = ztest_cmd->add_option("--n2", ztest.n2, "trials, group 2");

    RetrievalEvalArgs retrieval_eval;
    CLI::App* retrieval_cmd =
        app.add_subcommand("retrieval-eval", "mean reciprocal rank over embeddings");
    retrieval_cmd->fallthrough();
    retrieval_eval.queries_opt = retrieval_cmd->add_option(
        "--queries", retrieval_eval.queries, "query embeddings file");
    retrieval_eval.passages_opt = retrieval_cmd->add_option(
        "--passages", retrieval_eval.passages, "passage embeddings file");
    retrieval_eval.relevance_opt = retrieval_cmd->add_option(
        "--relevance", retrieval_eval.relevance, "gold relevance file");
    retrieval_eval.ranks_opt = retrieval_cmd->add_option(
        "--ranks", retrieval_eval.ranks_out, "per-query rank output path");
    retrieval_eval.k_opt = retrieval_cmd->add_option(
        "--k", retrieval_eval.k, "rank cutoff (0 = unlimited)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    auto started = std::chrono::steady_clock::now();
    try {
        json config;
        if (!config_path.empty()) config = load_config_file(config_path);
        auto section_for = [&](const std::string& name) -> const json* {
            if (config.is_object() && config.contains(name)) return &config.at(name);
            return nullptr;
        };

        ordered_json summary;
        if (app.got_subcommand(ingest_cmd)) {
            summary = run_ingest(ingest, section_for("ingest"));
        } else if (app.got_subcommand(filter_cmd)) {
            summary = run_filter(filter, section_for("filter"));
        } else if (app.got_subcommand(stats_cmd)) {
            summary = run_stats(stats, section_for("stats"));
        } else if (app.got_subcommand(rouge_cmd)) {
            summary = run_rouge(rouge, section_for("rouge"));
        } else if (app.got_subcommand(build_train_cmd)) {
            summary = run_build_train(build_train, section_for("build-train"));
        } else if (app.got_subcommand(synthesize_cmd)) {
            summary = run_synthesize(synthesize, section_for("synthesize"));
        } else if (app.got_subcommand(judge_cmd)) {
            summary = run_judge(judge, section_for("judge"));
        } else if (app.got_subcommand(ztest_cmd)) {
            summary = run_ztest(ztest, section_for("ztest"));
        } else if (app.got_subcommand(retrieval_cmd)) {
            summary = run_retrieval_eval(retrieval_eval, section_for("retrieval-eval"));
        }

        auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
            std::chrono::steady_clock::now() - started);
        summary["elapsed_ms"] = elapsed.count();
        std::cout << summary.dump() << std::endl;
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const BackendError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 4;
    } catch (const StubExhausted& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 4;
    } catch (const TrainingError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 4;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
