#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "dialogkit/corpus.hpp"
#include "dialogkit/errors.hpp"

namespace dialogkit {

struct CorpusStats {
    std::size_t dialog_count = 0;
    std::size_t turn_count = 0;
    double avg_turns_per_dialog = 0.0;
    double avg_sentences_per_answer = 0.0;
    // Fractions of answers with exactly 1, exactly 2, and 3-or-more
    // sentences; they sum to 1.
    double frac_one_sentence = 0.0;
    double frac_two_sentences = 0.0;
    double frac_three_plus_sentences = 0.0;
};

struct RougeScores {
    double rouge1 = 0.0;
    double rouge2 = 0.0;
    double rougeL = 0.0;
};

CorpusStats corpus_stats(const std::vector<Dialog>& dialogs);

std::string corpus_stats_to_json(const CorpusStats& stats);
std::string format_corpus_stats(const CorpusStats& stats);

// Lowercased tokens split on any non-alphanumeric byte.
std::vector<std::string> rouge_tokenize(const std::string& text);

// F1 of clipped n-gram overlap, n in {1, 2}. An empty hypothesis scores 0.
double rouge_n(const std::string& reference, const std::string& hypothesis, int n);

// F1 from the longest common subsequence of the token sequences.
double rouge_l(const std::string& reference, const std::string& hypothesis);

// Unweighted per-pair means over every turn: the question is the hypothesis,
// the joined answer text the reference.
RougeScores qa_overlap_report(const std::vector<Dialog>& dialogs);

std::string rouge_scores_to_json(const RougeScores& scores, std::size_t pair_count);
std::string format_rouge_scores(const RougeScores& scores, std::size_t pair_count);

}  // namespace dialogkit
