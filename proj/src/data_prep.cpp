#include "dialogkit/data_prep.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

namespace dialogkit {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::string to_string(QuestionStyle style) {
    return style == QuestionStyle::raw ? "raw" : "rewritten";
}

std::string to_string(QuestionTypePolicy policy) {
    switch (policy) {
        case QuestionTypePolicy::raw_only: return "raw_only";
        case QuestionTypePolicy::rewritten_only: return "rewritten_only";
        case QuestionTypePolicy::both_uniform: return "both_uniform";
    }
    throw ConfigError("unknown question type policy");
}

QuestionTypePolicy question_type_policy_from_string(const std::string& s) {
    if (s == "raw_only") return QuestionTypePolicy::raw_only;
    if (s == "rewritten_only") return QuestionTypePolicy::rewritten_only;
    if (s == "both_uniform") return QuestionTypePolicy::both_uniform;
    throw ConfigError("unknown question type policy: " + s);
}

PrepConfig prep_config_from_json(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad prep config: ") + e.what());
    }
    PrepConfig config;
    if (j.contains("N")) config.max_masked_run = j.at("N").get<std::size_t>();
    if (j.contains("title_keep_probability")) {
        config.title_keep_probability = j.at("title_keep_probability").get<double>();
    }
    if (j.contains("question_type_policy")) {
        config.question_type_policy =
            question_type_policy_from_string(j.at("question_type_policy").get<std::string>());
    }
    if (j.contains("rng_seed")) config.rng_seed = j.at("rng_seed").get<std::uint64_t>();
    if (config.max_masked_run < 1) throw ConfigError("N must be >= 1");
    if (config.title_keep_probability < 0.0 || config.title_keep_probability > 1.0) {
        throw ConfigError("title_keep_probability must be in [0, 1]");
    }
    return config;
}

std::string prep_config_to_json(const PrepConfig& config) {
    ordered_json j;
    j["N"] = config.max_masked_run;
    j["title_keep_probability"] = config.title_keep_probability;
    j["question_type_policy"] = to_string(config.question_type_policy);
    j["rng_seed"] = config.rng_seed;
    return j.dump();
}

std::string filter_report_to_json(const FilterReport& report) {
    ordered_json j;
    j["removed_pairs"] = report.removed_pairs;
    j["pair_fraction"] = report.pair_fraction;
    j["dialog_fraction"] = report.dialog_fraction;
    return j.dump();
}

SourceFormat source_format_from_string(const std::string& s) {
    if (s == "orquac") return SourceFormat::orquac;
    if (s == "qrecc") return SourceFormat::qrecc;
    if (s == "dolly") return SourceFormat::dolly;
    throw ConfigError("unknown source format: " + s);
}

std::string make_variant_id(const std::string& base_id, QuestionStyle style) {
    return base_id + "::" + to_string(style);
}

std::string variant_base_id(const std::string& id) {
    for (const char* suffix : {"::raw", "::rewritten"}) {
        std::string s(suffix);
        if (id.size() > s.size() && id.compare(id.size() - s.size(), s.size(), s) == 0) {
            return id.substr(0, id.size() - s.size());
        }
    }
    return id;
}

namespace {

struct SourceTurn {
    std::string question;   // raw form
    std::string rewrite;    // empty when the source has none
    std::string answer;
};

struct SourceConversation {
    std::string base_id;
    std::optional<std::string> title;
    DialogSource source = DialogSource::qrecc;
    std::vector<std::pair<long long, SourceTurn>> turns;  // (order key, turn)
};

// Emits the raw-question dialog, plus the rewritten sibling when every turn
// carries a rewrite.
void emit_variants(const SourceConversation& conv, std::vector<Dialog>& out) {
    if (conv.turns.empty()) return;
    auto turns = conv.turns;
    std::stable_sort(turns.begin(), turns.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });

    bool all_rewritten = std::all_of(turns.begin(), turns.end(), [](const auto& t) {
        return !t.second.rewrite.empty();
    });

    auto build = [&](QuestionStyle style) {
        Dialog d;
        d.id = make_variant_id(conv.base_id, style);
        d.title = conv.title;
        d.source = conv.source;
        for (const auto& [order, turn] : turns) {
            Turn t;
            t.question = style == QuestionStyle::raw ? turn.question : turn.rewrite;
            t.question_type =
                style == QuestionStyle::raw ? QuestionType::raw : QuestionType::rewritten;
            t.answer.sentences = split_sentences(turn.answer);
            d.turns.push_back(std::move(t));
        }
        return d;
    };

    out.push_back(build(QuestionStyle::raw));
    if (all_rewritten) out.push_back(build(QuestionStyle::rewritten));
}

std::vector<json> read_records(const std::string& path, std::size_t& bad_records) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    std::string content = buffer.str();

    std::vector<json> records;
    std::size_t first = content.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return records;  // empty file

    if (content[first] == '[') {
        // Whole-file JSON array.
        json root;
        try {
            root = json::parse(content);
        } catch (const json::exception& e) {
            throw ParseError(1, std::string("invalid JSON array: ") + e.what());
        }
        for (auto& element : root) records.push_back(std::move(element));
        return records;
    }

    // JSONL: one record per line; undecodable lines are counted, not fatal.
    std::istringstream lines(content);
    std::string line;
    while (std::getline(lines, line)) {
        if (normalize_whitespace(line).empty()) continue;
        try {
            records.push_back(json::parse(line));
        } catch (const json::exception&) {
            records.push_back(json());  // placeholder keeps the total honest
            records.back() = nullptr;
            ++bad_records;
        }
    }
    return records;
}

std::string string_field(const json& j, const char* key) {
    if (!j.contains(key) || !j.at(key).is_string()) return {};
    return j.at(key).get<std::string>();
}

}  // namespace

IngestResult ingest_corpus(const std::string& path, SourceFormat format) {
    IngestResult result;
    std::size_t undecodable = 0;
    std::vector<json> records = read_records(path, undecodable);
    result.records_total = records.size();
    result.records_skipped = undecodable;

    // Conversations keyed by id, kept in first-seen order.
    std::vector<SourceConversation> conversations;
    std::map<std::string, std::size_t> conv_index;

    auto conversation_for = [&](const std::string& base_id, DialogSource source,
                                std::optional<std::string> title) -> SourceConversation& {
        auto it = conv_index.find(base_id);
        if (it == conv_index.end()) {
            SourceConversation conv;
            conv.base_id = base_id;
            conv.source = source;
            conv.title = std::move(title);
            conversations.push_back(std::move(conv));
            it = conv_index.emplace(base_id, conversations.size() - 1).first;
        }
        return conversations[it->second];
    };

    std::size_t dolly_index = 0;
    for (const json& record : records) {
        if (record.is_null()) continue;  // undecodable line already counted
        try {
            switch (format) {
                case SourceFormat::qrecc: {
                    std::string question = normalize_whitespace(string_field(record, "Question"));
                    std::string answer = normalize_whitespace(string_field(record, "Answer"));
                    if (question.empty() || answer.empty() ||
                        !record.contains("Conversation_no")) {
                        ++result.records_skipped;
                        continue;
                    }
                    SourceTurn turn;
                    turn.question = question;
                    turn.rewrite = normalize_whitespace(string_field(record, "Rewrite"));
                    turn.answer = answer;
                    long long turn_no =
                        record.contains("Turn_no") ? record.at("Turn_no").get<long long>() : 0;
                    std::string base_id =
                        "qrecc-" + std::to_string(record.at("Conversation_no").get<long long>());
                    conversation_for(base_id, DialogSource::qrecc, std::nullopt)
                        .turns.emplace_back(turn_no, std::move(turn));
                    break;
                }
                case SourceFormat::orquac: {
                    // qid is "<conversation>#<turn>".
                    std::string qid = string_field(record, "qid");
                    std::string question = normalize_whitespace(string_field(record, "question"));
                    std::string answer_text;
                    if (record.contains("answer") && record.at("answer").is_object()) {
                        answer_text = normalize_whitespace(string_field(record.at("answer"), "text"));
                    }
                    std::size_t hash_pos = qid.rfind('#');
                    if (qid.empty() || hash_pos == std::string::npos || question.empty() ||
                        answer_text.empty()) {
                        ++result.records_skipped;
                        continue;
                    }
                    SourceTurn turn;
                    turn.question = question;
                    turn.rewrite = normalize_whitespace(string_field(record, "rewrite"));
                    turn.answer = answer_text;
                    long long turn_no = 0;
                    try {
                        turn_no = std::stoll(qid.substr(hash_pos + 1));
                    } catch (const std::exception&) {
                        ++result.records_skipped;
                        continue;
                    }
                    std::string base_id = "orquac-" + qid.substr(0, hash_pos);
                    std::optional<std::string> title;
                    std::string t = normalize_whitespace(string_field(record, "title"));
                    if (!t.empty()) title = t;
                    SourceConversation& conv =
                        conversation_for(base_id, DialogSource::orquac, title);
                    if (!conv.title && title) conv.title = title;
                    conv.turns.emplace_back(turn_no, std::move(turn));
                    break;
                }
                case SourceFormat::dolly: {
                    ++dolly_index;
                    std::string question =
                        normalize_whitespace(string_field(record, "instruction"));
                    std::string answer = normalize_whitespace(string_field(record, "response"));
                    if (question.empty() || answer.empty()) {
                        ++result.records_skipped;
                        continue;
                    }
                    Dialog d;
                    d.id = "dolly-" + std::to_string(dolly_index);
                    d.source = DialogSource::dolly;
                    Turn turn;
                    turn.question = question;
                    turn.question_type = QuestionType::raw;
                    turn.answer.sentences = split_sentences(answer);
                    d.turns.push_back(std::move(turn));
                    result.dialogs.push_back(std::move(d));
                    break;
                }
            }
        } catch (const json::exception&) {
            ++result.records_skipped;
        } catch (const InvalidInput&) {
            ++result.records_skipped;
        }
    }

    for (const SourceConversation& conv : conversations) {
        emit_variants(conv, result.dialogs);
    }

    for (const Dialog& d : result.dialogs) {
        std::vector<std::string> violations = validate_dialog(d);
        if (!violations.empty()) {
            throw ValidationError("ingested dialog \"" + d.id + "\": " + violations.front());
        }
    }

    if (result.records_total > 0 &&
        result.records_skipped * 100 > result.records_total) {
        throw ParseError("skipped " + std::to_string(result.records_skipped) + " of " +
                         std::to_string(result.records_total) +
                         " records (over the 1% threshold)");
    }
    return result;
}

namespace {

bool contains_other_interesting(const std::string& question) {
    static const std::string needle = "other interesting";
    std::string lowered(question.size(), '\0');
    std::transform(question.begin(), question.end(), lowered.begin(), [](unsigned char c) {
        return static_cast<char>(std::tolower(c));
    });
    return lowered.find(needle) != std::string::npos;
}

}  // namespace

std::pair<std::vector<Dialog>, FilterReport> filter_other_interesting(
    const std::vector<Dialog>& dialogs) {
    FilterReport report;
    std::size_t pairs_before = 0;
    std::size_t dialogs_with_match = 0;
    std::vector<Dialog> kept;
    kept.reserve(dialogs.size());

    for (const Dialog& dialog : dialogs) {
        pairs_before += dialog.turns.size();
        Dialog spliced = dialog;
        spliced.turns.clear();
        bool matched = false;
        for (const Turn& turn : dialog.turns) {
            if (contains_other_interesting(turn.question)) {
                matched = true;
                ++report.removed_pairs;
            } else {
                spliced.turns.push_back(turn);
            }
        }
        if (matched) ++dialogs_with_match;
        if (!spliced.turns.empty()) kept.push_back(std::move(spliced));
    }

    if (pairs_before > 0) {
        report.pair_fraction =
            static_cast<double>(report.removed_pairs) / static_cast<double>(pairs_before);
    }
    if (!dialogs.empty()) {
        report.dialog_fraction =
            static_cast<double>(dialogs_with_match) / static_cast<double>(dialogs.size());
    }
    return {std::move(kept), report};
}

MaskSpec sample_mask(const Dialog& dialog, const PrepConfig& config, Rng& rng) {
    if (dialog.turns.empty()) throw ValidationError("sample_mask: dialog has no turns");
    std::size_t turns = dialog.turns.size();
    std::size_t max_run = std::min(config.max_masked_run, turns);
    MaskSpec mask;
    mask.run_length = 1 + static_cast<std::size_t>(rng.uniform_below(max_run));
    mask.first_masked_turn =
        static_cast<std::size_t>(rng.uniform_below(turns - mask.run_length + 1));
    return mask;
}

std::string sentinel(std::size_t index) { return "<S" + std::to_string(index) + ">"; }

TrainingExample serialize_training_example(const Dialog& dialog, const MaskSpec& mask,
                                           const PrepConfig& config, bool include_title,
                                           std::optional<QuestionStyle> style) {
    (void)config;
    if (dialog.turns.empty()) throw ValidationError("serialize: dialog has no turns");
    if (mask.run_length < 1 ||
        mask.first_masked_turn + mask.run_length > dialog.turns.size()) {
        throw ValidationError("serialize: mask out of range");
    }

    std::vector<std::string> input_parts;
    std::vector<std::string> fills;  // gold fill per slot, in slot order

    if (style) input_parts.push_back("Type: " + to_string(*style));
    if (include_title && dialog.title && !dialog.title->empty()) {
        input_parts.push_back("Title: " + *dialog.title);
    }

    std::size_t slot = 0;
    for (std::size_t t = 0; t < dialog.turns.size(); ++t) {
        const Turn& turn = dialog.turns[t];
        bool masked =
            t >= mask.first_masked_turn && t < mask.first_masked_turn + mask.run_length;
        if (masked) {
            input_parts.push_back(sentinel(slot++));
            fills.push_back(turn.question);
        } else {
            input_parts.push_back(turn.question);
        }
        for (std::size_t m = 0; m < turn.answer.sentences.size(); ++m) {
            if (m > 0) {
                input_parts.push_back(sentinel(slot++));
                fills.push_back("");
            }
            input_parts.push_back(turn.answer.sentences[m]);
        }
    }

    auto join = [](const std::vector<std::string>& parts) {
        std::string out;
        for (std::size_t i = 0; i < parts.size(); ++i) {
            if (i > 0) out += ' ';
            out += parts[i];
        }
        return out;
    };

    std::vector<std::string> target_parts;
    for (std::size_t k = 0; k < fills.size(); ++k) {
        target_parts.push_back(sentinel(k));
        if (!fills[k].empty()) target_parts.push_back(fills[k]);
    }
    target_parts.push_back(sentinel(fills.size()));

    TrainingExample example;
    example.input_text = join(input_parts);
    example.target_text = join(target_parts);
    example.num_masked_slots = fills.size();
    return example;
}

namespace {

std::string trim(const std::string& s) {
    std::size_t begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return {};
    std::size_t end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

}  // namespace

std::vector<std::string> parse_sentinel_output(const std::string& output_text,
                                               std::size_t num_slots) {
    if (num_slots < 1) throw InvalidInput("parse_sentinel_output: num_slots must be >= 1");

    std::vector<std::size_t> positions(num_slots);
    for (std::size_t k = 0; k < num_slots; ++k) {
        positions[k] = output_text.find(sentinel(k));
        if (positions[k] == std::string::npos) {
            throw MalformedGeneration("sentinel " + sentinel(k) + " missing");
        }
        if (k > 0 && positions[k] <= positions[k - 1]) {
            throw MalformedGeneration("sentinel " + sentinel(k) + " out of order");
        }
    }

    // Terminator is optional; when present it bounds the last fill.
    std::size_t last_end = output_text.size();
    std::size_t term =
        output_text.find(sentinel(num_slots), positions[num_slots - 1]);
    if (term != std::string::npos) last_end = term;

    std::vector<std::string> fills;
    fills.reserve(num_slots);
    for (std::size_t k = 0; k < num_slots; ++k) {
        std::size_t begin = positions[k] + sentinel(k).size();
        std::size_t end = k + 1 < num_slots ? positions[k + 1] : last_end;
        fills.push_back(trim(output_text.substr(begin, end - begin)));
    }
    return fills;
}

namespace {

struct VariantGroup {
    std::string base_id;
    const Dialog* raw = nullptr;
    const Dialog* rewritten = nullptr;
};

QuestionStyle dialog_style(const Dialog& dialog) {
    // Generated questions count as raw: they target the natural style.
    return !dialog.turns.empty() &&
                   dialog.turns.front().question_type == QuestionType::rewritten
               ? QuestionStyle::rewritten
               : QuestionStyle::raw;
}

}  // namespace

std::vector<TrainingExample> build_training_set(const std::vector<Dialog>& dialogs,
                                                const PrepConfig& config) {
    std::vector<VariantGroup> groups;
    std::map<std::string, std::size_t> group_index;
    for (const Dialog& dialog : dialogs) {
        std::string base = variant_base_id(dialog.id);
        auto it = group_index.find(base);
        if (it == group_index.end()) {
            groups.push_back(VariantGroup{base, nullptr, nullptr});
            it = group_index.emplace(base, groups.size() - 1).first;
        }
        VariantGroup& group = groups[it->second];
        if (dialog_style(dialog) == QuestionStyle::rewritten) {
            if (!group.rewritten) group.rewritten = &dialog;
        } else {
            if (!group.raw) group.raw = &dialog;
        }
    }

    std::vector<TrainingExample> examples;
    examples.reserve(groups.size());
    for (const VariantGroup& group : groups) {
        Rng rng(hash_key(config.rng_seed, group.base_id));
        const Dialog* chosen = nullptr;
        switch (config.question_type_policy) {
            case QuestionTypePolicy::raw_only:
                chosen = group.raw;
                break;
            case QuestionTypePolicy::rewritten_only:
                chosen = group.rewritten;
                break;
            case QuestionTypePolicy::both_uniform:
                if (group.raw && group.rewritten) {
                    chosen = rng.uniform_below(2) == 0 ? group.raw : group.rewritten;
                } else {
                    chosen = group.raw ? group.raw : group.rewritten;
                }
                break;
        }
        if (!chosen) continue;  // policy selects a variant the group lacks

        MaskSpec mask = sample_mask(*chosen, config, rng);
        bool include_title = rng.bernoulli(config.title_keep_probability);
        examples.push_back(serialize_training_example(*chosen, mask, config, include_title,
                                                      dialog_style(*chosen)));
    }
    return examples;
}

}  // namespace dialogkit
