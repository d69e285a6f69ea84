#include "dialogkit/analytics.hpp"

#include <algorithm>
#include <cctype>
#include <iomanip>
#include <map>
#include <sstream>

#include <json.hpp>

namespace dialogkit {

using ordered_json = nlohmann::ordered_json;

CorpusStats corpus_stats(const std::vector<Dialog>& dialogs) {
    if (dialogs.empty()) throw ValidationError("corpus_stats over an empty corpus");

    CorpusStats stats;
    stats.dialog_count = dialogs.size();
    std::size_t sentence_total = 0;
    std::size_t one = 0, two = 0, three_plus = 0;
    for (const Dialog& dialog : dialogs) {
        stats.turn_count += dialog.turns.size();
        for (const Turn& turn : dialog.turns) {
            std::size_t sentences = turn.answer.sentences.size();
            sentence_total += sentences;
            if (sentences == 1) {
                ++one;
            } else if (sentences == 2) {
                ++two;
            } else {
                ++three_plus;
            }
        }
    }
    if (stats.turn_count == 0) throw ValidationError("corpus has no turns");

    stats.avg_turns_per_dialog =
        static_cast<double>(stats.turn_count) / static_cast<double>(stats.dialog_count);
    stats.avg_sentences_per_answer =
        static_cast<double>(sentence_total) / static_cast<double>(stats.turn_count);
    stats.frac_one_sentence =
        static_cast<double>(one) / static_cast<double>(stats.turn_count);
    stats.frac_two_sentences =
        static_cast<double>(two) / static_cast<double>(stats.turn_count);
    stats.frac_three_plus_sentences =
        static_cast<double>(three_plus) / static_cast<double>(stats.turn_count);
    return stats;
}

std::string corpus_stats_to_json(const CorpusStats& stats) {
    ordered_json j;
    j["dialog_count"] = stats.dialog_count;
    j["turn_count"] = stats.turn_count;
    j["avg_turns_per_dialog"] = stats.avg_turns_per_dialog;
    j["avg_sentences_per_answer"] = stats.avg_sentences_per_answer;
    j["frac_one_sentence"] = stats.frac_one_sentence;
    j["frac_two_sentences"] = stats.frac_two_sentences;
    j["frac_three_plus_sentences"] = stats.frac_three_plus_sentences;
    return j.dump();
}

std::string format_corpus_stats(const CorpusStats& stats) {
    std::ostringstream out;
    out << std::fixed << std::setprecision(2);
    out << "dialogs                  " << std::setw(10) << stats.dialog_count << '\n';
    out << "turns                    " << std::setw(10) << stats.turn_count << '\n';
    out << "avg turns per dialog     " << std::setw(10) << stats.avg_turns_per_dialog
        << '\n';
    out << "avg sentences per answer " << std::setw(10)
        << stats.avg_sentences_per_answer << '\n';
    out << "answers with 1 sentence  " << std::setw(9)
        << 100.0 * stats.frac_one_sentence << "%\n";
    out << "answers with 2 sentences " << std::setw(9)
        << 100.0 * stats.frac_two_sentences << "%\n";
    out << "answers with 3+ sentences" << std::setw(9)
        << 100.0 * stats.frac_three_plus_sentences << "%\n";
    return out.str();
}

std::vector<std::string> rouge_tokenize(const std::string& text) {
    std::vector<std::string> tokens;
    std::string current;
    for (unsigned char c : text) {
        if (std::isalnum(c)) {
            current += static_cast<char>(std::tolower(c));
        } else if (!current.empty()) {
            tokens.push_back(current);
            current.clear();
        }
    }
    if (!current.empty()) tokens.push_back(current);
    return tokens;
}

namespace {

double f1(double precision, double recall) {
    if (precision + recall == 0.0) return 0.0;
    return 2.0 * precision * recall / (precision + recall);
}

std::map<std::vector<std::string>, std::size_t> ngram_counts(
    const std::vector<std::string>& tokens, std::size_t n) {
    std::map<std::vector<std::string>, std::size_t> counts;
    if (tokens.size() < n) return counts;
    for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
        std::vector<std::string> gram(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                                      tokens.begin() + static_cast<std::ptrdiff_t>(i + n));
        ++counts[gram];
    }
    return counts;
}

}  // namespace

double rouge_n(const std::string& reference, const std::string& hypothesis, int n) {
    if (n != 1 && n != 2) throw ConfigError("rouge_n supports n = 1 or 2");

    auto ref_counts = ngram_counts(rouge_tokenize(reference), static_cast<std::size_t>(n));
    auto hyp_counts = ngram_counts(rouge_tokenize(hypothesis), static_cast<std::size_t>(n));

    std::size_t ref_total = 0;
    for (const auto& [gram, count] : ref_counts) ref_total += count;
    std::size_t hyp_total = 0;
    for (const auto& [gram, count] : hyp_counts) hyp_total += count;
    if (ref_total == 0 || hyp_total == 0) return 0.0;

    std::size_t overlap = 0;
    for (const auto& [gram, count] : hyp_counts) {
        auto it = ref_counts.find(gram);
        if (it != ref_counts.end()) overlap += std::min(count, it->second);
    }
    double precision = static_cast<double>(overlap) / static_cast<double>(hyp_total);
    double recall = static_cast<double>(overlap) / static_cast<double>(ref_total);
    return f1(precision, recall);
}

double rouge_l(const std::string& reference, const std::string& hypothesis) {
    std::vector<std::string> ref = rouge_tokenize(reference);
    std::vector<std::string> hyp = rouge_tokenize(hypothesis);
    if (ref.empty() || hyp.empty()) return 0.0;

    // Classic LCS dynamic program over two token rows.
    std::vector<std::size_t> prev(hyp.size() + 1, 0);
    std::vector<std::size_t> curr(hyp.size() + 1, 0);
    for (std::size_t i = 1; i <= ref.size(); ++i) {
        for (std::size_t j = 1; j <= hyp.size(); ++j) {
            curr[j] = ref[i - 1] == hyp[j - 1] ? prev[j - 1] + 1
                                               : std::max(prev[j], curr[j - 1]);
        }
        std::swap(prev, curr);
    }
    double lcs = static_cast<double>(prev[hyp.size()]);
    return f1(lcs / static_cast<double>(hyp.size()), lcs / static_cast<double>(ref.size()));
}

RougeScores qa_overlap_report(const std::vector<Dialog>& dialogs) {
    RougeScores means;
    std::size_t pairs = 0;
    for (const Dialog& dialog : dialogs) {
        for (const Turn& turn : dialog.turns) {
            std::string answer = turn.answer.text();
            means.rouge1 += rouge_n(answer, turn.question, 1);
            means.rouge2 += rouge_n(answer, turn.question, 2);
            means.rougeL += rouge_l(answer, turn.question);
            ++pairs;
        }
    }
    if (pairs == 0) throw ValidationError("qa_overlap_report over an empty corpus");
    means.rouge1 /= static_cast<double>(pairs);
    means.rouge2 /= static_cast<double>(pairs);
    means.rougeL /= static_cast<double>(pairs);
    return means;
}

std::string rouge_scores_to_json(const RougeScores& scores, std::size_t pair_count) {
    ordered_json j;
    j["pairs"] = pair_count;
    j["rouge1"] = scores.rouge1;
    j["rouge2"] = scores.rouge2;
    j["rougeL"] = scores.rougeL;
    return j.dump();
}

std::string format_rouge_scores(const RougeScores& scores, std::size_t pair_count) {
    std::ostringstream out;
    out << "question-answer overlap, per-pair mean over " << pair_count << " pairs\n";
    out << std::fixed << std::setprecision(3);
    out << "ROUGE-1 " << std::setw(8) << scores.rouge1 << '\n';
    out << "ROUGE-2 " << std::setw(8) << scores.rouge2 << '\n';
    out << "ROUGE-L " << std::setw(8) << scores.rougeL << '\n';
    return out.str();
}

}  // namespace dialogkit
