#include "dialogkit/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>
#include <tuple>

#include <json.hpp>

namespace dialogkit {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::string to_string(RubricKind kind) {
    switch (kind) {
        case RubricKind::info_seeking: return "info_seeking";
        case RubricKind::relevance: return "relevance";
        case RubricKind::specificity: return "specificity";
        case RubricKind::answeredness: return "answeredness";
    }
    throw ConfigError("unknown rubric kind");
}

RubricKind rubric_kind_from_string(const std::string& s) {
    if (s == "info_seeking") return RubricKind::info_seeking;
    if (s == "relevance") return RubricKind::relevance;
    if (s == "specificity") return RubricKind::specificity;
    if (s == "answeredness") return RubricKind::answeredness;
    throw ConfigError("unknown rubric kind: " + s);
}

const std::vector<std::string>& rubric_options(RubricKind kind) {
    static const std::vector<std::string> info_seeking = {"Yes", "No"};
    static const std::vector<std::string> relevance = {"Follows up", "Topic only",
                                                       "Not relevant"};
    static const std::vector<std::string> specificity = {"Very", "Somewhat",
                                                         "Not at all"};
    static const std::vector<std::string> answeredness = {"Perfectly", "Sufficiently",
                                                          "Incompletely", "Not at all"};
    switch (kind) {
        case RubricKind::info_seeking: return info_seeking;
        case RubricKind::relevance: return relevance;
        case RubricKind::specificity: return specificity;
        case RubricKind::answeredness: return answeredness;
    }
    throw ConfigError("unknown rubric kind");
}

const std::string& prompt_template(RubricKind kind) {
    static const std::string info_seeking =
        R"(Is the QUERY information-seeking based on RUBRIC? Output option only
option:
* Yes
* No
RUBRIC:
* Yes. The user is looking to learn some information from the system. Note: Information-seeking queries don't have to be phrased as questions.
* No. The query is unclear, difficult to understand or not seeking information. Note: Not all questions are information seeking, e.g. questions directed at the system ("how are you", "what do you think") or ones that are nonsensical in the context ("Brian, how is Jill doing?").
CONVERSATION: {conversation}
QUERY: {query}
ANSWER: {answer})";

    static const std::string relevance =
        R"(How is the QUERY relevant to a CONVERSATION based on RUBRIC? Output option only.
option
* A
* B
* C
RUBRIC:
* A. Follows up on a previous query or response. It is difficult to correctly understand the query without reading the conversation history.
* B. It is difficult to correctly understand the query without reading the conversation history. Only related to the topic of the conversation. The query is topically similar to previous queries or responses, but can be understood without reading them.
* C. Not relevant. The query doesn't appear to be relevant to the topic or a previous query or response. Rule of thumb: if you are surprised by a query, it is probably not relevant.
CONVERSATION: {conversation}
QUERY: {query}
ANSWER: {answer})";

    static const std::string specificity =
        R"(How specific is the QUERY based on RUBIC? CONVERSATION is the history context. Only output option text.
option
* Very
* Somewhat
* Not at all
RUBRIC:
* Very. Only a specific answer would satisfy the user. Example: "Why did she make the news in 1999?" likely requires a very specific answer.
* Somewhat. A variety of answers of a specific kind would satisfy the user. Example: While there are many possible answers to "What else does she do?", they are all likely to be a job or activity.
* Not at all. Many topically different answers would satisfy the user. Example: "Tell me something interesting about her." can be answered in many different ways.
CONVERSATION: {conversation}
QUERY: {query}
ANSWER: {answer})";

    static const std::string answeredness =
        R"(How well does the response ANSWER the QUERY based on RUBRIC? CONVERSATION is history context. Only output option text.
option:
* Perfectly
* Sufficiently
* Incompletely
* Not at all
RUBRIC:
* Perfectly. The response completely satisfies the user's information need.
* Sufficiently. The response mostly answers the user's information need, though some additional information could be provided.
* Incompletely. The response provides some information relevant to the user, but doesn't adequately answer the question.
* Not at all. The response does not provide any relevant information for the user's query or is not intelligible.
CONVERSATION: {conversation}
QUERY: {query}
ANSWER: {answer})";

    switch (kind) {
        case RubricKind::info_seeking: return info_seeking;
        case RubricKind::relevance: return relevance;
        case RubricKind::specificity: return specificity;
        case RubricKind::answeredness: return answeredness;
    }
    throw ConfigError("unknown rubric kind");
}

std::string ScriptedJudge::complete(const std::string& prompt_text) {
    (void)prompt_text;
    if (next_ >= script_.size()) {
        throw StubExhausted("scripted judge exhausted after " +
                            std::to_string(script_.size()) + " completions");
    }
    return script_[next_++];
}

namespace {

std::string replace_all(std::string text, const std::string& from,
                        const std::string& to) {
    std::size_t pos = 0;
    while ((pos = text.find(from, pos)) != std::string::npos) {
        text.replace(pos, from.size(), to);
        pos += to.size();
    }
    return text;
}

std::string lower(const std::string& s) {
    std::string out(s.size(), '\0');
    std::transform(s.begin(), s.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::string trim_copy(const std::string& s) {
    std::size_t begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return {};
    std::size_t end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

// Option aliases: text to look for -> canonical label.
std::vector<std::pair<std::string, std::string>> option_aliases(RubricKind kind) {
    std::vector<std::pair<std::string, std::string>> aliases;
    for (const std::string& option : rubric_options(kind)) {
        aliases.emplace_back(option, option);
    }
    if (kind == RubricKind::relevance) {
        aliases.emplace_back("A", "Follows up");
        aliases.emplace_back("B", "Topic only");
        aliases.emplace_back("C", "Not relevant");
    }
    return aliases;
}

}  // namespace

std::string render_prompt(RubricKind kind, const std::vector<Turn>& conversation,
                          const std::string& query, const std::string& answer) {
    std::string serialized;
    for (std::size_t i = 0; i < conversation.size(); ++i) {
        if (i > 0) serialized += '\n';
        serialized += "Q: " + conversation[i].question;
        serialized += "\nA: " + conversation[i].answer.text();
    }
    std::string prompt = prompt_template(kind);
    prompt = replace_all(prompt, "{conversation}", serialized);
    prompt = replace_all(prompt, "{query}", query);
    prompt = replace_all(prompt, "{answer}", answer);
    return prompt;
}

std::string parse_judgment(RubricKind kind, const std::string& response_text) {
    const auto aliases = option_aliases(kind);
    std::string trimmed = trim_copy(response_text);

    for (const auto& [alias, label] : aliases) {
        if (trimmed == alias) return label;
    }
    std::string lowered = lower(trimmed);
    for (const auto& [alias, label] : aliases) {
        if (lowered == lower(alias)) return label;
    }

    // Substring pass: accept when every matching alias names one label.
    // Single-letter aliases only count as standalone words ("* B", "B."),
    // otherwise any response containing that letter would match.
    auto contains_alias = [&](const std::string& alias) {
        std::string needle = lower(alias);
        if (needle.size() > 1) return lowered.find(needle) != std::string::npos;
        for (std::size_t pos = lowered.find(needle); pos != std::string::npos;
             pos = lowered.find(needle, pos + 1)) {
            bool left_ok = pos == 0 || !std::isalnum(static_cast<unsigned char>(
                                           lowered[pos - 1]));
            bool right_ok = pos + 1 >= lowered.size() ||
                            !std::isalnum(static_cast<unsigned char>(lowered[pos + 1]));
            if (left_ok && right_ok) return true;
        }
        return false;
    };
    std::set<std::string> labels;
    for (const auto& [alias, label] : aliases) {
        if (contains_alias(alias)) labels.insert(label);
    }
    if (labels.size() == 1) return *labels.begin();
    throw UnparseableJudgment("response \"" + trimmed + "\" matches " +
                              std::to_string(labels.size()) + " options for rubric " +
                              to_string(kind));
}

std::vector<ConsensusEntry> aggregate_majority(
    const std::vector<RubricJudgment>& judgments) {
    // Group by (dialog, turn, rubric) in first-seen order.
    std::vector<ConsensusEntry> entries;
    std::map<std::tuple<std::string, std::size_t, RubricKind>, std::size_t> index;
    std::vector<std::map<std::string, std::size_t>> votes;

    for (const RubricJudgment& judgment : judgments) {
        auto key = std::make_tuple(judgment.dialog_id, judgment.turn_index, judgment.kind);
        auto it = index.find(key);
        if (it == index.end()) {
            ConsensusEntry entry;
            entry.dialog_id = judgment.dialog_id;
            entry.turn_index = judgment.turn_index;
            entry.kind = judgment.kind;
            entries.push_back(std::move(entry));
            votes.emplace_back();
            it = index.emplace(key, entries.size() - 1).first;
        }
        if (judgment.label) ++votes[it->second][*judgment.label];
    }

    for (std::size_t i = 0; i < entries.size(); ++i) {
        const auto& tally = votes[i];
        if (tally.empty()) continue;  // only abstentions: no consensus
        std::size_t total = 0;
        for (const auto& [label, count] : tally) total += count;
        auto best = std::max_element(tally.begin(), tally.end(),
                                     [](const auto& a, const auto& b) {
                                         return a.second < b.second;
                                     });
        bool tied = std::count_if(tally.begin(), tally.end(), [&](const auto& v) {
                        return v.second == best->second;
                    }) > 1;
        bool majority = total == 1 ? true : best->second >= 2;
        if (majority && !tied) {
            entries[i].label = best->first;
            entries[i].votes = best->second;
        }
    }
    return entries;
}

std::vector<RubricTable> tabulate(
    const std::vector<std::pair<std::string, std::vector<ConsensusEntry>>>& systems) {
    if (systems.empty()) throw ValidationError("tabulate needs at least one system");

    static const RubricKind kinds[] = {RubricKind::info_seeking, RubricKind::relevance,
                                       RubricKind::specificity,
                                       RubricKind::answeredness};
    std::vector<RubricTable> tables;
    for (RubricKind kind : kinds) {
        RubricTable table;
        table.kind = kind;
        table.options = rubric_options(kind);
        bool any = false;
        for (const auto& [name, entries] : systems) {
            table.systems.push_back(name);
            std::size_t consensus = 0;
            std::size_t no_consensus = 0;
            std::map<std::string, std::size_t> counts;
            for (const ConsensusEntry& entry : entries) {
                if (entry.kind != kind) continue;
                if (entry.label) {
                    ++consensus;
                    ++counts[*entry.label];
                } else {
                    ++no_consensus;
                }
            }
            table.consensus_counts.push_back(consensus);
            table.no_consensus_counts.push_back(no_consensus);
            if (consensus + no_consensus > 0) any = true;
        }
        if (!any) continue;

        table.percent.assign(table.options.size(),
                             std::vector<double>(table.systems.size(), 0.0));
        for (std::size_t s = 0; s < systems.size(); ++s) {
            std::map<std::string, std::size_t> counts;
            for (const ConsensusEntry& entry : systems[s].second) {
                if (entry.kind == kind && entry.label) ++counts[*entry.label];
            }
            if (table.consensus_counts[s] == 0) continue;
            for (std::size_t o = 0; o < table.options.size(); ++o) {
                auto it = counts.find(table.options[o]);
                std::size_t count = it == counts.end() ? 0 : it->second;
                table.percent[o][s] = 100.0 * static_cast<double>(count) /
                                      static_cast<double>(table.consensus_counts[s]);
            }
        }
        tables.push_back(std::move(table));
    }
    return tables;
}

std::string format_rubric_tables(const std::vector<RubricTable>& tables) {
    std::ostringstream out;
    out << std::fixed << std::setprecision(1);
    for (const RubricTable& table : tables) {
        out << to_string(table.kind) << " (% of consensus turns)\n";
        std::size_t label_width = 12;
        for (const std::string& option : table.options) {
            label_width = std::max(label_width, option.size() + 2);
        }
        out << std::left << std::setw(static_cast<int>(label_width)) << "option";
        for (const std::string& system : table.systems) {
            out << std::right << std::setw(12) << system;
        }
        out << '\n';
        for (std::size_t o = 0; o < table.options.size(); ++o) {
            out << std::left << std::setw(static_cast<int>(label_width))
                << table.options[o];
            for (std::size_t s = 0; s < table.systems.size(); ++s) {
                out << std::right << std::setw(12) << table.percent[o][s];
            }
            out << '\n';
        }
        out << std::left << std::setw(static_cast<int>(label_width)) << "consensus n";
        for (std::size_t s = 0; s < table.systems.size(); ++s) {
            out << std::right << std::setw(12) << table.consensus_counts[s];
        }
        out << '\n';
        out << std::left << std::setw(static_cast<int>(label_width)) << "no consensus";
        for (std::size_t s = 0; s < table.systems.size(); ++s) {
            out << std::right << std::setw(12) << table.no_consensus_counts[s];
        }
        out << "\n\n";
    }
    return out.str();
}

ZTestResult two_proportion_z_test(std::size_t x1, std::size_t n1, std::size_t x2,
                                  std::size_t n2) {
    if (n1 < 1 || n2 < 1) throw InvalidInput("z-test needs at least one trial per group");
    if (x1 > n1 || x2 > n2) throw InvalidInput("successes exceed trials");

    double pooled = static_cast<double>(x1 + x2) / static_cast<double>(n1 + n2);
    if (pooled == 0.0 || pooled == 1.0) {
        throw DegenerateTest("pooled proportion is " + std::to_string(pooled) +
                             ": zero variance");
    }
    double p1 = static_cast<double>(x1) / static_cast<double>(n1);
    double p2 = static_cast<double>(x2) / static_cast<double>(n2);
    double variance =
        pooled * (1.0 - pooled) * (1.0 / static_cast<double>(n1) + 1.0 / static_cast<double>(n2));

    ZTestResult result;
    result.z = (p1 - p2) / std::sqrt(variance);
    result.p_two_sided = std::erfc(std::abs(result.z) / std::sqrt(2.0));
    return result;
}

namespace {

struct JudgeTask {
    RubricJudgment judgment;  // label/raw_response filled in later
    std::string prompt;
};

}  // namespace

JudgeReport judge_corpus(const std::vector<Dialog>& dialogs, JudgeBackend& backend,
                         const std::vector<RubricKind>& kinds, std::size_t raters,
                         std::vector<RubricJudgment>& existing, std::size_t workers) {
    if (raters < 1) throw ConfigError("raters must be >= 1");

    std::set<std::tuple<std::string, std::size_t, RubricKind, std::size_t>> seen;
    for (const RubricJudgment& judgment : existing) {
        seen.insert(std::make_tuple(judgment.dialog_id, judgment.turn_index,
                                    judgment.kind, judgment.rater_id));
    }

    JudgeReport report;
    std::vector<JudgeTask> tasks;
    for (const Dialog& dialog : dialogs) {
        for (std::size_t t = 0; t < dialog.turns.size(); ++t) {
            std::vector<Turn> history(dialog.turns.begin(),
                                      dialog.turns.begin() + static_cast<std::ptrdiff_t>(t));
            for (RubricKind kind : kinds) {
                for (std::size_t rater = 0; rater < raters; ++rater) {
                    auto key = std::make_tuple(dialog.id, t, kind, rater);
                    if (seen.count(key)) {
                        ++report.judgments_reused;
                        continue;
                    }
                    seen.insert(key);
                    JudgeTask task;
                    task.judgment.dialog_id = dialog.id;
                    task.judgment.turn_index = t;
                    task.judgment.kind = kind;
                    task.judgment.rater_id = rater;
                    task.prompt = render_prompt(kind, history, dialog.turns[t].question,
                                                dialog.turns[t].answer.text());
                    tasks.push_back(std::move(task));
                }
            }
        }
    }

    std::vector<char> done(tasks.size(), 0);
    auto run_task = [&](std::size_t i) {
        tasks[i].judgment.raw_response = backend.complete(tasks[i].prompt);
        try {
            tasks[i].judgment.label =
                parse_judgment(tasks[i].judgment.kind, tasks[i].judgment.raw_response);
        } catch (const UnparseableJudgment&) {
        }
        done[i] = 1;
    };

    std::exception_ptr failure;
    if (workers <= 1) {
        for (std::size_t i = 0; i < tasks.size() && !failure; ++i) {
            try {
                run_task(i);
            } catch (...) {
                failure = std::current_exception();
            }
        }
    } else {
        std::atomic<std::size_t> cursor{0};
        std::mutex failure_mutex;
        auto worker = [&] {
            for (;;) {
                std::size_t i = cursor.fetch_add(1);
                if (i >= tasks.size()) return;
                try {
                    run_task(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                    return;
                }
            }
        };
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (std::thread& thread : pool) thread.join();
    }

    // Keep whatever finished, in task order, so interrupted runs resume.
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        if (!done[i]) continue;
        if (!tasks[i].judgment.label) ++report.unparseable;
        existing.push_back(std::move(tasks[i].judgment));
        ++report.judgments_made;
    }
    if (failure) std::rethrow_exception(failure);
    return report;
}

std::vector<RubricJudgment> load_judgments(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::vector<RubricJudgment> judgments;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (normalize_whitespace(line).empty()) continue;
        try {
            json j = json::parse(line);
            RubricJudgment judgment;
            judgment.dialog_id = j.at("dialog_id").get<std::string>();
            judgment.turn_index = j.at("turn").get<std::size_t>();
            judgment.kind = rubric_kind_from_string(j.at("rubric").get<std::string>());
            judgment.rater_id = j.at("rater").get<std::size_t>();
            judgment.raw_response = j.at("raw_response").get<std::string>();
            if (j.contains("label") && !j.at("label").is_null()) {
                judgment.label = j.at("label").get<std::string>();
            }
            judgments.push_back(std::move(judgment));
        } catch (const json::exception& e) {
            throw ParseError(line_no, std::string("bad judgment record: ") + e.what());
        }
    }
    return judgments;
}

void save_judgments(const std::vector<RubricJudgment>& judgments,
                    const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    for (const RubricJudgment& judgment : judgments) {
        ordered_json j;
        j["dialog_id"] = judgment.dialog_id;
        j["turn"] = judgment.turn_index;
        j["rubric"] = to_string(judgment.kind);
        j["rater"] = judgment.rater_id;
        j["raw_response"] = judgment.raw_response;
        if (judgment.label) {
            j["label"] = *judgment.label;
        } else {
            j["label"] = nullptr;
        }
        out << j.dump() << '\n';
    }
    if (!out) throw IoError("write failed for " + path);
}

}  // namespace dialogkit
