#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "dialogkit/corpus.hpp"
#include "dialogkit/rng.hpp"

namespace dialogkit {

// Question style selectable through the "Type:" input prefix. Distinct from
// QuestionType because generated questions have no style of their own.
enum class QuestionStyle { raw, rewritten };

std::string to_string(QuestionStyle style);

enum class QuestionTypePolicy { raw_only, rewritten_only, both_uniform };

std::string to_string(QuestionTypePolicy policy);
QuestionTypePolicy question_type_policy_from_string(const std::string& s);

struct PrepConfig {
    std::size_t max_masked_run = 3;  // N: cap on consecutive masked questions
    double title_keep_probability = 0.5;
    QuestionTypePolicy question_type_policy = QuestionTypePolicy::both_uniform;
    std::uint64_t rng_seed = 0;
};

PrepConfig prep_config_from_json(const std::string& json_text);
std::string prep_config_to_json(const PrepConfig& config);

// One sentence-infilling example. input_text holds sentinels <S0>..<Sk-1>
// in order of appearance; target_text pairs every sentinel with its gold
// fill and ends with the terminator sentinel <Sk>.
struct TrainingExample {
    std::string input_text;
    std::string target_text;
    std::size_t num_masked_slots = 0;

    bool operator==(const TrainingExample&) const = default;
};

struct FilterReport {
    std::size_t removed_pairs = 0;
    double pair_fraction = 0.0;    // removed pairs / pairs before filtering
    double dialog_fraction = 0.0;  // dialogs that had >=1 matching question
};

std::string filter_report_to_json(const FilterReport& report);

struct IngestResult {
    std::vector<Dialog> dialogs;
    std::size_t records_total = 0;
    std::size_t records_skipped = 0;
};

enum class SourceFormat { orquac, qrecc, dolly };

SourceFormat source_format_from_string(const std::string& s);

// Normalizes a source corpus file into Dialog records. Answers are split
// into sentences with split_sentences. Sources that carry both a raw and a
// rewritten question per turn yield two sibling dialogs, ids suffixed
// "::raw" and "::rewritten". Malformed records are skipped and counted;
// more than 1% skipped raises ParseError.
IngestResult ingest_corpus(const std::string& path, SourceFormat format);

// Sibling-variant id helpers: "conv7::raw" -> base "conv7".
std::string make_variant_id(const std::string& base_id, QuestionStyle style);
std::string variant_base_id(const std::string& id);

// Removes every question-answer pair whose question contains the
// case-insensitive substring "other interesting", splicing the dialog and
// dropping it only when no turns remain.
std::pair<std::vector<Dialog>, FilterReport> filter_other_interesting(
    const std::vector<Dialog>& dialogs);

// Samples a contiguous mask: run length uniform on [1, min(N, turns)], then
// start uniform over valid positions.
MaskSpec sample_mask(const Dialog& dialog, const PrepConfig& config, Rng& rng);

// The sentinel surface form used throughout the toolkit: <S0>, <S1>, ...
// Backend adapters translate these to a model's native sentinel vocabulary.
std::string sentinel(std::size_t index);

// Linearizes a dialog into a masked (input, target) pair:
//   [Type: {style}] [Title: {title}] then per turn the question (a sentinel
//   when the turn lies in the mask run, inline text otherwise) followed by
//   the answer sentences with a sentinel at every internal boundary.
// Placeholder slots are always masked; their gold fill is the empty string.
// Throws ValidationError when the mask does not fit the dialog.
TrainingExample serialize_training_example(const Dialog& dialog, const MaskSpec& mask,
                                           const PrepConfig& config, bool include_title,
                                           std::optional<QuestionStyle> style);

// Inverse of the target layout: returns exactly num_slots fills, fill k
// being the text strictly between sentinel k and sentinel k+1 (or the end
// of text), trimmed. Missing terminator is tolerated; a missing or
// out-of-order sentinel raises MalformedGeneration.
std::vector<std::string> parse_sentinel_output(const std::string& output_text,
                                               std::size_t num_slots);

// One example per dialog variant group: the policy picks the question style,
// a fresh mask is sampled, and the title is kept with the configured
// probability. Every random draw comes from a stream seeded by
// (config.rng_seed, base dialog id), so output is deterministic and
// independent of worker fan-out.
std::vector<TrainingExample> build_training_set(const std::vector<Dialog>& dialogs,
                                                const PrepConfig& config);

}  // namespace dialogkit
