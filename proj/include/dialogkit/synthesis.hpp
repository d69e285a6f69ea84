#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dialogkit/corpus.hpp"
#include "dialogkit/data_prep.hpp"
#include "dialogkit/errors.hpp"

namespace dialogkit {

// Text-completion model used to fill sentinel slots. Implementations must
// return sentinel-format output ("<S0> ... <S1> ...") for the given input;
// how they produce it (scripted list, HTTP endpoint) is their concern.
class GeneratorBackend {
public:
    virtual ~GeneratorBackend() = default;

    virtual std::string generate(const std::string& input_text) = 0;
};

// Deterministic backend that replays a fixed list of outputs in order.
// Primarily a test oracle; also drives offline pipeline rehearsals.
class ScriptedGenerator : public GeneratorBackend {
public:
    explicit ScriptedGenerator(std::vector<std::string> script)
        : script_(std::move(script)) {}

    std::string generate(const std::string& input_text) override;

    std::size_t calls() const { return next_; }

private:
    std::vector<std::string> script_;
    std::size_t next_ = 0;
};

struct SynthesisConfig {
    // Window size: at most this many document sentences per generator call.
    std::size_t window_sentences = 3;
    // Question style announced in the "Type:" prefix; nullopt drops the prefix.
    std::optional<QuestionStyle> question_type = QuestionStyle::raw;
    bool include_title = true;
    // Extra generator calls allowed per window after a malformed completion.
    std::size_t max_retries_on_malformed = 2;
    // After retries: true emits a degenerate one-sentence turn whose question
    // is the raw completion text; false fails the whole document.
    bool malformed_fallback = true;
};

struct WindowRecord {
    std::string input_text;
    std::string output_text;           // last completion received
    std::vector<std::string> fills;    // empty when never parseable
    std::size_t consumed = 0;          // sentences claimed by this window
    std::size_t attempts = 1;          // generator calls made
    bool fallback = false;             // degenerate turn emitted
};

struct SynthesisTrace {
    std::string document_id;
    std::vector<WindowRecord> windows;

    std::size_t fallback_count() const;
    std::string to_json() const;
};

struct InferenceWindow {
    std::string input_text;
    std::size_t num_slots = 0;
    std::vector<std::string> window_sentences;
};

struct SegmentResult {
    std::string question;
    std::vector<std::string> answer_sentences;
    std::size_t consumed = 0;
};

// Lays out the generator input for the sentences starting at `cursor`:
// optional "Type:"/"Title:" prefixes, the confirmed history inline, then a
// sentinel slot before each of the next min(window, remaining) sentences.
InferenceWindow build_inference_window(const std::vector<Turn>& history,
                                       const Document& document, std::size_t cursor,
                                       const SynthesisConfig& config);

// Interprets parsed fills for one window: the first fill is the question and
// the answer extends over each following sentence whose slot came back empty.
SegmentResult segment_from_fills(const std::vector<std::string>& fills,
                                 const std::vector<std::string>& window_sentences);

// Runs the iterative loop over a whole document. The resulting dialog's
// answer sentences, concatenated in order, are exactly document.sentences.
std::pair<Dialog, SynthesisTrace> inpaint_document(const Document& document,
                                                   GeneratorBackend& backend,
                                                   const SynthesisConfig& config);

}  // namespace dialogkit
