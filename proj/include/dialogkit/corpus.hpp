#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dialogkit/errors.hpp"

namespace dialogkit {

// Identifier of the rule set used by split_sentences. Recorded in run
// summaries so a dataset can name the exact splitter that produced it.
inline constexpr const char* kSentenceSplitterId = "period_rules_v1";

enum class DialogSource { orquac, qrecc, dolly, synthesized };

enum class QuestionType { raw, rewritten, generated };

std::string to_string(DialogSource source);
DialogSource dialog_source_from_string(const std::string& s);
std::string to_string(QuestionType type);
QuestionType question_type_from_string(const std::string& s);

// A source passage: ordered sentences plus a title used as dialog context.
struct Document {
    std::string id;
    std::string title;
    std::vector<std::string> sentences;

    bool operator==(const Document&) const = default;
};

// An answer held as the ordered sentences it is made of. The boundary
// between two consecutive sentences is a placeholder slot; placeholders are
// positional and never stored.
struct SegmentedAnswer {
    std::vector<std::string> sentences;

    // Full answer text: sentences joined with single spaces.
    std::string text() const;

    bool operator==(const SegmentedAnswer&) const = default;
};

struct Turn {
    std::string question;
    QuestionType question_type = QuestionType::raw;
    SegmentedAnswer answer;

    bool operator==(const Turn&) const = default;
};

struct Dialog {
    std::string id;
    std::optional<std::string> title;
    std::vector<Turn> turns;
    DialogSource source = DialogSource::synthesized;

    bool operator==(const Dialog&) const = default;
};

// Which question slots of a dialog are masked: one contiguous run.
struct MaskSpec {
    std::size_t first_masked_turn = 0;
    std::size_t run_length = 1;

    bool operator==(const MaskSpec&) const = default;
};

// Collapses whitespace runs to single spaces and trims the ends.
std::string normalize_whitespace(const std::string& text);

// Rule-based sentence splitter: terminal '.', '!' or '?' (optionally
// followed by a closing quote/bracket) ends a sentence when the next token
// starts with an uppercase letter, digit or opening quote, and the word
// before a period is not a known abbreviation. Operates on
// whitespace-normalized text, so joining the results with single spaces
// reproduces the normalized input exactly.
//
// Throws InvalidInput on empty or whitespace-only text.
std::vector<std::string> split_sentences(const std::string& text);

// Returns human-readable descriptions of every violated invariant; an empty
// result means the dialog is well formed.
std::vector<std::string> validate_dialog(const Dialog& dialog);

// Line-oriented dialog files: one JSON object per line, UTF-8, fields in a
// fixed order so save/load round-trips byte-identically.
//   {"id": str, "title": str|null, "source": str,
//    "turns": [{"q": str, "q_type": str, "a_sents": [str, ...]}]}
std::vector<Dialog> load_dialogs(const std::string& path);
void save_dialogs(const std::vector<Dialog>& dialogs, const std::string& path);

std::string dialog_to_json_line(const Dialog& dialog);
Dialog dialog_from_json_line(const std::string& line, std::size_t line_number);

// Document files: {"id": str, "title": str, "sentences": [str, ...]} per line.
std::vector<Document> load_documents(const std::string& path);
void save_documents(const std::vector<Document>& documents, const std::string& path);

}  // namespace dialogkit
