#include "dialogkit/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>

#include <json.hpp>

namespace dialogkit {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

StageConfig stage_one_defaults() { return StageConfig{8, 1e-4, 500, 32, 0.05}; }

StageConfig stage_two_defaults() { return StageConfig{16, 1e-4, 250, 1, 0.05}; }

StageConfig stage_config_from_json(const std::string& json_text,
                                   const StageConfig& defaults) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad stage config: ") + e.what());
    }
    StageConfig config = defaults;
    if (j.contains("batch_size")) config.batch_size = j.at("batch_size").get<std::size_t>();
    if (j.contains("learning_rate")) config.learning_rate = j.at("learning_rate").get<double>();
    if (j.contains("iterations")) config.iterations = j.at("iterations").get<std::size_t>();
    if (j.contains("gradient_accumulation")) {
        config.gradient_accumulation = j.at("gradient_accumulation").get<std::size_t>();
    }
    if (j.contains("temperature")) config.temperature = j.at("temperature").get<double>();
    if (config.batch_size < 1 || config.iterations < 1 || config.gradient_accumulation < 1) {
        throw ConfigError("stage config counts must be >= 1");
    }
    if (config.learning_rate <= 0.0 || config.temperature <= 0.0) {
        throw ConfigError("stage config rates must be positive");
    }
    return config;
}

std::string stage_config_to_json(const StageConfig& config) {
    ordered_json j;
    j["batch_size"] = config.batch_size;
    j["learning_rate"] = config.learning_rate;
    j["iterations"] = config.iterations;
    j["gradient_accumulation"] = config.gradient_accumulation;
    j["temperature"] = config.temperature;
    return j.dump();
}

NegativeMode negative_mode_from_string(const std::string& s) {
    if (s == "in_batch") return NegativeMode::in_batch;
    if (s == "annotated") return NegativeMode::annotated;
    throw ConfigError("unknown negative mode: " + s);
}

namespace {

void check_finite(const Embedding& e) {
    for (double v : e) {
        if (!std::isfinite(v)) {
            throw DegenerateEmbedding("embedding contains a non-finite entry");
        }
    }
}

double norm(const Embedding& e) {
    return std::sqrt(std::inner_product(e.begin(), e.end(), e.begin(), 0.0));
}

}  // namespace

double cosine_similarity(const Embedding& q, const Embedding& p) {
    if (q.size() != p.size()) {
        throw ValidationError("embedding dimensions differ: " + std::to_string(q.size()) +
                              " vs " + std::to_string(p.size()));
    }
    if (q.empty()) throw ValidationError("empty embedding");
    check_finite(q);
    check_finite(p);
    double nq = norm(q);
    double np = norm(p);
    if (nq == 0.0 || np == 0.0) {
        throw DegenerateEmbedding("cosine similarity of a zero vector");
    }
    return std::inner_product(q.begin(), q.end(), p.begin(), 0.0) / (nq * np);
}

LossResult in_batch_contrastive_loss(const std::vector<Embedding>& query_embs,
                                     const std::vector<Embedding>& passage_embs,
                                     double tau) {
    if (tau <= 0.0) throw ConfigError("temperature must be positive");
    if (query_embs.empty() || query_embs.size() != passage_embs.size()) {
        throw ValidationError("loss needs equal nonzero counts of queries and passages");
    }

    std::size_t B = query_embs.size();
    LossResult result;
    result.per_example.reserve(B);
    for (std::size_t i = 0; i < B; ++i) {
        std::vector<double> logits(B);
        for (std::size_t j = 0; j < B; ++j) {
            logits[j] = cosine_similarity(query_embs[i], passage_embs[j]) / tau;
        }
        double top = *std::max_element(logits.begin(), logits.end());
        double sum = 0.0;
        for (double logit : logits) sum += std::exp(logit - top);
        double loss = -(logits[i] - top) + std::log(sum);
        result.per_example.push_back(loss);
        result.mean_loss += loss;
    }
    result.mean_loss /= static_cast<double>(B);
    return result;
}

std::vector<std::size_t> rank_passages(const Embedding& query_emb,
                                       const std::vector<Embedding>& passage_embs) {
    if (passage_embs.empty()) throw ValidationError("no candidate passages to rank");
    std::vector<double> sims(passage_embs.size());
    for (std::size_t i = 0; i < passage_embs.size(); ++i) {
        sims[i] = cosine_similarity(query_emb, passage_embs[i]);
    }
    std::vector<std::size_t> order(passage_embs.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return sims[a] > sims[b]; });
    return order;
}

double mrr_at_k(const std::vector<std::optional<std::size_t>>& gold_ranks,
                std::optional<std::size_t> k) {
    if (gold_ranks.empty()) throw ValidationError("MRR over an empty query set");
    double total = 0.0;
    for (const auto& rank : gold_ranks) {
        if (!rank) continue;
        if (*rank < 1) throw InvalidInput("ranks are 1-based");
        if (!k || *rank <= *k) total += 1.0 / static_cast<double>(*rank);
    }
    return total / static_cast<double>(gold_ranks.size());
}

std::string build_query_text(const std::vector<Turn>& dialog_history,
                             const std::string& current_question) {
    if (current_question.empty()) throw InvalidInput("current question is empty");
    std::string text;
    for (const Turn& turn : dialog_history) {
        text += turn.question;
        text += ' ';
        std::string answer = turn.answer.text();
        if (!answer.empty()) {
            text += answer;
            text += ' ';
        }
    }
    text += current_question;
    return text;
}

TrainingReport run_stage(const std::vector<RetrievalExample>& examples,
                         EncoderBackend& backend, const StageConfig& config,
                         NegativeMode negative_mode) {
    if (examples.empty()) throw ValidationError("run_stage needs at least one example");
    for (const RetrievalExample& example : examples) {
        if (example.query.empty() || example.positive_passage.empty()) {
            throw ValidationError("retrieval example with empty query or positive");
        }
    }

    TrainingReport report;
    report.iteration_losses.reserve(config.iterations);
    std::size_t next_example = 0;

    for (std::size_t iteration = 0; iteration < config.iterations; ++iteration) {
        std::vector<const RetrievalExample*> batch;
        batch.reserve(config.batch_size);
        for (std::size_t j = 0; j < config.batch_size; ++j) {
            batch.push_back(&examples[next_example]);
            next_example = (next_example + 1) % examples.size();
        }

        try {
            LossBatch loss_batch;
            loss_batch.iteration = iteration;
            loss_batch.learning_rate = config.learning_rate;
            loss_batch.apply_update = (iteration + 1) % config.gradient_accumulation == 0;

            for (const RetrievalExample* example : batch) {
                loss_batch.query_texts.push_back(example->query);
                loss_batch.passage_texts.push_back(example->positive_passage);
            }

            if (negative_mode == NegativeMode::in_batch) {
                std::vector<Embedding> query_embs = backend.embed(loss_batch.query_texts);
                std::vector<Embedding> passage_embs =
                    backend.embed(loss_batch.passage_texts);
                LossResult loss = in_batch_contrastive_loss(query_embs, passage_embs,
                                                            config.temperature);
                loss_batch.per_example_losses = loss.per_example;
                loss_batch.mean_loss = loss.mean_loss;
            } else {
                // Softmax over {positive, annotated negatives} per example.
                double mean = 0.0;
                for (const RetrievalExample* example : batch) {
                    std::vector<std::string> texts;
                    texts.push_back(example->query);
                    texts.push_back(example->positive_passage);
                    for (const std::string& negative : example->negative_passages) {
                        texts.push_back(negative);
                    }
                    std::vector<Embedding> embs = backend.embed(texts);
                    std::vector<double> logits;
                    for (std::size_t c = 1; c < embs.size(); ++c) {
                        logits.push_back(cosine_similarity(embs[0], embs[c]) /
                                         config.temperature);
                    }
                    double top = *std::max_element(logits.begin(), logits.end());
                    double sum = 0.0;
                    for (double logit : logits) sum += std::exp(logit - top);
                    double loss = -(logits[0] - top) + std::log(sum);
                    loss_batch.per_example_losses.push_back(loss);
                    mean += loss;
                }
                loss_batch.mean_loss = mean / static_cast<double>(batch.size());
            }

            report.iteration_losses.push_back(loss_batch.mean_loss);
            backend.train_step(loss_batch);
        } catch (const TrainingError&) {
            throw;
        } catch (const std::exception& e) {
            throw TrainingError(iteration, e.what());
        }
    }
    return report;
}

std::vector<EmbeddingRecord> load_embedding_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::vector<EmbeddingRecord> records;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (normalize_whitespace(line).empty()) continue;
        try {
            json j = json::parse(line);
            EmbeddingRecord record;
            record.passage_id = j.at("passage_id").get<std::string>();
            record.values = j.at("values").get<std::vector<double>>();
            records.push_back(std::move(record));
        } catch (const json::exception& e) {
            throw ParseError(line_no, std::string("bad embedding record: ") + e.what());
        }
    }
    return records;
}

void save_embedding_file(const std::vector<EmbeddingRecord>& records,
                         const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    for (const EmbeddingRecord& record : records) {
        ordered_json j;
        j["passage_id"] = record.passage_id;
        j["values"] = record.values;
        out << j.dump() << '\n';
    }
    if (!out) throw IoError("write failed for " + path);
}

std::vector<RelevanceRecord> load_relevance_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::vector<RelevanceRecord> records;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (normalize_whitespace(line).empty()) continue;
        try {
            json j = json::parse(line);
            RelevanceRecord record;
            record.query_id = j.at("query_id").get<std::string>();
            record.gold_passage_id = j.at("gold_passage_id").get<std::string>();
            records.push_back(std::move(record));
        } catch (const json::exception& e) {
            throw ParseError(line_no, std::string("bad relevance record: ") + e.what());
        }
    }
    return records;
}

std::vector<std::optional<std::size_t>> compute_gold_ranks(
    const std::vector<EmbeddingRecord>& queries,
    const std::vector<EmbeddingRecord>& passages,
    const std::vector<RelevanceRecord>& relevance) {
    std::map<std::string, std::size_t> query_index;
    for (std::size_t i = 0; i < queries.size(); ++i) {
        query_index.emplace(queries[i].passage_id, i);
    }
    std::map<std::string, std::size_t> passage_index;
    for (std::size_t i = 0; i < passages.size(); ++i) {
        passage_index.emplace(passages[i].passage_id, i);
    }
    std::vector<Embedding> passage_embs;
    passage_embs.reserve(passages.size());
    for (const EmbeddingRecord& record : passages) passage_embs.push_back(record.values);

    std::vector<std::optional<std::size_t>> ranks;
    ranks.reserve(relevance.size());
    for (const RelevanceRecord& record : relevance) {
        auto q = query_index.find(record.query_id);
        if (q == query_index.end()) {
            throw ValidationError("relevance references unknown query \"" +
                                  record.query_id + "\"");
        }
        auto g = passage_index.find(record.gold_passage_id);
        if (g == passage_index.end()) {
            throw ValidationError("relevance references unknown passage \"" +
                                  record.gold_passage_id + "\"");
        }
        std::vector<std::size_t> order =
            rank_passages(queries[q->second].values, passage_embs);
        auto position = std::find(order.begin(), order.end(), g->second);
        ranks.push_back(static_cast<std::size_t>(position - order.begin()) + 1);
    }
    return ranks;
}

}  // namespace dialogkit
