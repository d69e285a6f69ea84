#include "dialogkit/synthesis.hpp"

#include <algorithm>

#include <json.hpp>

namespace dialogkit {

using ordered_json = nlohmann::ordered_json;

std::string ScriptedGenerator::generate(const std::string& input_text) {
    (void)input_text;
    if (next_ >= script_.size()) {
        throw StubExhausted("scripted generator exhausted after " +
                            std::to_string(script_.size()) + " outputs");
    }
    return script_[next_++];
}

std::size_t SynthesisTrace::fallback_count() const {
    return static_cast<std::size_t>(
        std::count_if(windows.begin(), windows.end(),
                      [](const WindowRecord& w) { return w.fallback; }));
}

std::string SynthesisTrace::to_json() const {
    ordered_json j;
    j["document_id"] = document_id;
    j["windows"] = ordered_json::array();
    for (const WindowRecord& w : windows) {
        ordered_json record;
        record["input"] = w.input_text;
        record["output"] = w.output_text;
        record["fills"] = w.fills;
        record["consumed"] = w.consumed;
        record["attempts"] = w.attempts;
        record["fallback"] = w.fallback;
        j["windows"].push_back(std::move(record));
    }
    return j.dump();
}

InferenceWindow build_inference_window(const std::vector<Turn>& history,
                                       const Document& document, std::size_t cursor,
                                       const SynthesisConfig& config) {
    if (cursor >= document.sentences.size()) {
        throw ValidationError("inference window cursor " + std::to_string(cursor) +
                              " out of range for " +
                              std::to_string(document.sentences.size()) + " sentences");
    }
    if (config.window_sentences < 1) throw ConfigError("window size must be >= 1");

    std::vector<std::string> parts;
    if (config.question_type) {
        parts.push_back("Type: " + to_string(*config.question_type));
    }
    if (config.include_title && !document.title.empty()) {
        parts.push_back("Title: " + document.title);
    }
    for (const Turn& turn : history) {
        parts.push_back(turn.question);
        for (const std::string& sentence : turn.answer.sentences) {
            parts.push_back(sentence);
        }
    }

    InferenceWindow window;
    std::size_t remaining = document.sentences.size() - cursor;
    window.num_slots = std::min(config.window_sentences, remaining);
    for (std::size_t k = 0; k < window.num_slots; ++k) {
        parts.push_back(sentinel(k));
        parts.push_back(document.sentences[cursor + k]);
        window.window_sentences.push_back(document.sentences[cursor + k]);
    }

    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i > 0) window.input_text += ' ';
        window.input_text += parts[i];
    }
    return window;
}

SegmentResult segment_from_fills(const std::vector<std::string>& fills,
                                 const std::vector<std::string>& window_sentences) {
    if (fills.empty() || fills.size() != window_sentences.size()) {
        throw ValidationError("segment_from_fills: " + std::to_string(fills.size()) +
                              " fills for " + std::to_string(window_sentences.size()) +
                              " sentences");
    }
    if (fills.front().empty()) {
        throw MalformedGeneration("first slot must be a question, got an empty fill");
    }

    SegmentResult result;
    result.question = fills.front();
    result.consumed = 1;
    while (result.consumed < fills.size() && fills[result.consumed].empty()) {
        ++result.consumed;
    }
    result.answer_sentences.assign(window_sentences.begin(),
                                   window_sentences.begin() +
                                       static_cast<std::ptrdiff_t>(result.consumed));
    return result;
}

std::pair<Dialog, SynthesisTrace> inpaint_document(const Document& document,
                                                   GeneratorBackend& backend,
                                                   const SynthesisConfig& config) {
    if (document.sentences.empty()) {
        throw ValidationError("document \"" + document.id + "\" has no sentences");
    }

    Dialog dialog;
    dialog.id = document.id;
    if (!document.title.empty()) dialog.title = document.title;
    dialog.source = DialogSource::synthesized;

    SynthesisTrace trace;
    trace.document_id = document.id;

    std::size_t cursor = 0;
    while (cursor < document.sentences.size()) {
        InferenceWindow window =
            build_inference_window(dialog.turns, document, cursor, config);

        WindowRecord record;
        record.input_text = window.input_text;

        std::optional<SegmentResult> segment;
        std::vector<std::string> fills;
        std::string last_error;
        for (std::size_t attempt = 0;
             attempt <= config.max_retries_on_malformed && !segment; ++attempt) {
            record.attempts = attempt + 1;
            record.output_text = backend.generate(window.input_text);
            fills.clear();
            record.fills.clear();
            try {
                fills = parse_sentinel_output(record.output_text, window.num_slots);
                record.fills = fills;
                segment = segment_from_fills(fills, window.window_sentences);
            } catch (const MalformedGeneration& e) {
                last_error = e.what();
            }
        }

        if (!segment) {
            // Retries exhausted: salvage a degenerate one-sentence turn, or
            // give up on the document when fallback is disabled.
            std::string question =
                !fills.empty() && !fills.front().empty()
                    ? fills.front()
                    : normalize_whitespace(record.output_text);
            if (!config.malformed_fallback || question.empty()) {
                trace.windows.push_back(std::move(record));
                throw SynthesisError("document \"" + document.id +
                                         "\" window at sentence " +
                                         std::to_string(cursor) +
                                         " stayed malformed after " +
                                         std::to_string(record.attempts) +
                                         " attempts: " + last_error,
                                     trace.to_json());
            }
            segment = SegmentResult{question, {document.sentences[cursor]}, 1};
            record.fallback = true;
        }

        record.consumed = segment->consumed;
        trace.windows.push_back(std::move(record));

        Turn turn;
        turn.question = segment->question;
        turn.question_type = QuestionType::generated;
        turn.answer.sentences = std::move(segment->answer_sentences);
        dialog.turns.push_back(std::move(turn));
        cursor += segment->consumed;
    }

    // The loop advances exactly through the sentence list, so the answers
    // must partition it; anything else is a logic fault worth failing loudly.
    std::vector<std::string> flattened;
    for (const Turn& turn : dialog.turns) {
        flattened.insert(flattened.end(), turn.answer.sentences.begin(),
                         turn.answer.sentences.end());
    }
    if (flattened != document.sentences) {
        throw SynthesisError("document \"" + document.id +
                                 "\" answers do not partition its sentences",
                             trace.to_json());
    }
    return {std::move(dialog), std::move(trace)};
}

}  // namespace dialogkit
