#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dialogkit/corpus.hpp"
#include "dialogkit/errors.hpp"

namespace dialogkit {

enum class RubricKind { info_seeking, relevance, specificity, answeredness };

std::string to_string(RubricKind kind);
RubricKind rubric_kind_from_string(const std::string& s);

// Canonical option labels for one rubric, in prompt order.
const std::vector<std::string>& rubric_options(RubricKind kind);

// The raw prompt template with {conversation}/{query}/{answer} placeholders.
const std::string& prompt_template(RubricKind kind);

// Model or API that turns a prompt into a completion.
class JudgeBackend {
public:
    virtual ~JudgeBackend() = default;

    virtual std::string complete(const std::string& prompt_text) = 0;
};

// Deterministic judge that replays scripted completions in order.
class ScriptedJudge : public JudgeBackend {
public:
    explicit ScriptedJudge(std::vector<std::string> script)
        : script_(std::move(script)) {}

    std::string complete(const std::string& prompt_text) override;

private:
    std::vector<std::string> script_;
    std::size_t next_ = 0;
};

struct RubricJudgment {
    std::string dialog_id;
    std::size_t turn_index = 0;
    RubricKind kind = RubricKind::info_seeking;
    std::size_t rater_id = 0;
    std::string raw_response;
    std::optional<std::string> label;  // nullopt = unparseable (abstention)
};

// One (dialog, turn, rubric) group resolved by majority vote.
struct ConsensusEntry {
    std::string dialog_id;
    std::size_t turn_index = 0;
    RubricKind kind = RubricKind::info_seeking;
    std::optional<std::string> label;  // nullopt = no consensus
    std::size_t votes = 0;             // votes for the winning label
};

struct RubricTable {
    RubricKind kind = RubricKind::info_seeking;
    std::vector<std::string> options;
    std::vector<std::string> systems;
    // percent[option][system]; denominator = that system's consensus turns.
    std::vector<std::vector<double>> percent;
    std::vector<std::size_t> consensus_counts;
    std::vector<std::size_t> no_consensus_counts;
};

struct ZTestResult {
    double z = 0.0;
    double p_two_sided = 1.0;
};

struct JudgeReport {
    std::size_t judgments_made = 0;    // new backend calls this run
    std::size_t judgments_reused = 0;  // already present, skipped
    std::size_t unparseable = 0;       // responses with no unique option
};

// Instantiates the rubric's template. The conversation becomes alternating
// "Q: ..." / "A: ..." lines; the turn under evaluation is never included.
std::string render_prompt(RubricKind kind, const std::vector<Turn>& conversation,
                          const std::string& query, const std::string& answer);

// Maps a completion onto one canonical option: exact match after trimming,
// then case-insensitive, then unique substring; A/B/C alias the relevance
// labels.
std::string parse_judgment(RubricKind kind, const std::string& response_text);

// Majority vote per (dialog, turn, rubric) group: a label with at least two
// votes wins; otherwise no consensus. Groups keep first-seen order.
std::vector<ConsensusEntry> aggregate_majority(
    const std::vector<RubricJudgment>& judgments);

// Per-rubric percentage breakdown across systems. Only consensus entries
// count toward the denominators.
std::vector<RubricTable> tabulate(
    const std::vector<std::pair<std::string, std::vector<ConsensusEntry>>>& systems);

std::string format_rubric_tables(const std::vector<RubricTable>& tables);

// Pooled two-proportion z statistic and its two-sided normal p-value.
ZTestResult two_proportion_z_test(std::size_t x1, std::size_t n1, std::size_t x2,
                                  std::size_t n2);

// Judges every (turn, rubric, rater) triple not already present in
// `existing`, appending new judgments to it. Unparseable responses are
// stored with a null label and counted, not fatal. With workers > 1 the
// backend is called from that many threads (it must tolerate concurrent
// complete() calls); completed judgments are appended in task order either
// way, so results stay deterministic for a deterministic backend. On a
// backend failure, judgments finished before the failure are kept in
// `existing` so the run can resume.
JudgeReport judge_corpus(const std::vector<Dialog>& dialogs, JudgeBackend& backend,
                         const std::vector<RubricKind>& kinds, std::size_t raters,
                         std::vector<RubricJudgment>& existing,
                         std::size_t workers = 1);

std::vector<RubricJudgment> load_judgments(const std::string& path);
void save_judgments(const std::vector<RubricJudgment>& judgments,
                    const std::string& path);

}  // namespace dialogkit
