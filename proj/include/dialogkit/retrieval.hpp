#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "dialogkit/corpus.hpp"
#include "dialogkit/errors.hpp"

namespace dialogkit {

// Fixed-dimension text embedding. Similarity math requires finite entries
// and a nonzero norm.
using Embedding = std::vector<double>;

struct LossResult {
    double mean_loss = 0.0;
    std::vector<double> per_example;
};

// One optimizer step's worth of work, handed to the backend after the loss
// is computed. apply_update marks accumulation boundaries.
struct LossBatch {
    std::size_t iteration = 0;
    std::vector<std::string> query_texts;
    std::vector<std::string> passage_texts;
    std::vector<double> per_example_losses;
    double mean_loss = 0.0;
    double learning_rate = 0.0;
    bool apply_update = true;
};

// Trainable text encoder. embed() must be deterministic between train_step
// calls so evaluation is reproducible.
class EncoderBackend {
public:
    virtual ~EncoderBackend() = default;

    virtual std::vector<Embedding> embed(const std::vector<std::string>& texts) = 0;
    virtual void train_step(const LossBatch& batch) = 0;
};

struct StageConfig {
    std::size_t batch_size = 8;
    double learning_rate = 1e-4;
    std::size_t iterations = 500;
    std::size_t gradient_accumulation = 32;
    double temperature = 0.05;
};

// Contrastive pre-training over synthesized dialogs: in-batch negatives.
StageConfig stage_one_defaults();
// Fine-tuning over annotated data: per-example negatives only.
StageConfig stage_two_defaults();

StageConfig stage_config_from_json(const std::string& json_text,
                                   const StageConfig& defaults);
std::string stage_config_to_json(const StageConfig& config);

struct RetrievalExample {
    std::string query;
    std::string positive_passage;
    std::vector<std::string> negative_passages;  // empty for in-batch training
};

enum class NegativeMode { in_batch, annotated };

NegativeMode negative_mode_from_string(const std::string& s);

struct TrainingReport {
    std::vector<double> iteration_losses;  // mean loss per iteration
};

double cosine_similarity(const Embedding& q, const Embedding& p);

// Per-example loss_i = -log softmax_i over similarities s(q_i, p_j)/tau,
// computed with log-sum-exp stabilization.
LossResult in_batch_contrastive_loss(const std::vector<Embedding>& query_embs,
                                     const std::vector<Embedding>& passage_embs,
                                     double tau);

// Candidate indices sorted by descending similarity to the query; exact ties
// keep ascending index order.
std::vector<std::size_t> rank_passages(const Embedding& query_emb,
                                       const std::vector<Embedding>& passage_embs);

// Mean reciprocal rank. Ranks are 1-based; nullopt marks a miss. A nullopt
// cutoff means unlimited.
double mrr_at_k(const std::vector<std::optional<std::size_t>>& gold_ranks,
                std::optional<std::size_t> k);

// Linearizes the full history (questions and answers in order) followed by
// the current question, space-joined.
std::string build_query_text(const std::vector<Turn>& dialog_history,
                             const std::string& current_question);

TrainingReport run_stage(const std::vector<RetrievalExample>& examples,
                         EncoderBackend& backend, const StageConfig& config,
                         NegativeMode negative_mode);

// --- evaluation file formats -------------------------------------------------

struct EmbeddingRecord {
    std::string passage_id;
    Embedding values;
};

struct RelevanceRecord {
    std::string query_id;
    std::string gold_passage_id;
};

std::vector<EmbeddingRecord> load_embedding_file(const std::string& path);
void save_embedding_file(const std::vector<EmbeddingRecord>& records,
                         const std::string& path);
std::vector<RelevanceRecord> load_relevance_file(const std::string& path);

// For each relevance record: rank of the gold passage among all candidates
// when ranked against that query's embedding. Order follows the relevance
// file. Unknown query or passage ids are validation errors.
std::vector<std::optional<std::size_t>> compute_gold_ranks(
    const std::vector<EmbeddingRecord>& queries,
    const std::vector<EmbeddingRecord>& passages,
    const std::vector<RelevanceRecord>& relevance);

}  // namespace dialogkit
