#include "dialogkit/corpus.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace dialogkit {

using ordered_json = nlohmann::ordered_json;

std::string to_string(DialogSource source) {
    switch (source) {
        case DialogSource::orquac: return "orquac";
        case DialogSource::qrecc: return "qrecc";
        case DialogSource::dolly: return "dolly";
        case DialogSource::synthesized: return "synthesized";
    }
    throw ConfigError("unknown dialog source");
}

DialogSource dialog_source_from_string(const std::string& s) {
    if (s == "orquac") return DialogSource::orquac;
    if (s == "qrecc") return DialogSource::qrecc;
    if (s == "dolly") return DialogSource::dolly;
    if (s == "synthesized") return DialogSource::synthesized;
    throw ConfigError("unknown dialog source: " + s);
}

std::string to_string(QuestionType type) {
    switch (type) {
        case QuestionType::raw: return "raw";
        case QuestionType::rewritten: return "rewritten";
        case QuestionType::generated: return "generated";
    }
    throw ConfigError("unknown question type");
}

QuestionType question_type_from_string(const std::string& s) {
    if (s == "raw") return QuestionType::raw;
    if (s == "rewritten") return QuestionType::rewritten;
    if (s == "generated") return QuestionType::generated;
    throw ConfigError("unknown question type: " + s);
}

std::string SegmentedAnswer::text() const {
    std::string out;
    for (std::size_t i = 0; i < sentences.size(); ++i) {
        if (i > 0) out += ' ';
        out += sentences[i];
    }
    return out;
}

std::string normalize_whitespace(const std::string& text) {
    std::string out;
    out.reserve(text.size());
    bool pending_space = false;
    for (char c : text) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            pending_space = !out.empty();
        } else {
            if (pending_space) out += ' ';
            pending_space = false;
            out += c;
        }
    }
    return out;
}

namespace {

bool is_terminal(char c) { return c == '.' || c == '!' || c == '?'; }

bool is_closing(char c) { return c == '"' || c == '\'' || c == ')' || c == ']'; }

bool is_opening(char c) { return c == '"' || c == '\'' || c == '(' || c == '['; }

// Words whose trailing period does not end a sentence. Compared lowercase,
// period stripped ("e.g." -> "e.g").
const std::array<const char*, 22> kAbbreviations = {
    "mr", "mrs", "ms", "dr", "prof", "sr",  "jr",  "st",   "vs",  "etc", "al",
    "e.g", "i.e", "fig", "inc", "ltd", "co", "dept", "approx", "mt", "gen", "capt"};

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

bool is_abbreviation(const std::string& word) {
    std::string w = lower(word);
    return std::find_if(kAbbreviations.begin(), kAbbreviations.end(),
                        [&](const char* a) { return w == a; }) != kAbbreviations.end();
}

// Does this token close a sentence, assuming a suitable token follows?
bool token_ends_sentence(const std::string& token) {
    std::size_t end = token.size();
    while (end > 0 && is_closing(token[end - 1])) --end;
    if (end == 0 || !is_terminal(token[end - 1])) return false;
    if (token[end - 1] == '.') {
        // Strip the terminal period and check the abbreviation list.
        std::size_t word_begin = 0;
        while (word_begin < end && is_opening(token[word_begin])) ++word_begin;
        if (word_begin >= end - 1) return false;  // bare "." token
        std::string word = token.substr(word_begin, end - 1 - word_begin);
        if (is_abbreviation(word)) return false;
    }
    return true;
}

bool token_starts_sentence(const std::string& token) {
    char c = token.front();
    return std::isupper(static_cast<unsigned char>(c)) ||
           std::isdigit(static_cast<unsigned char>(c)) || is_opening(c);
}

}  // namespace

std::vector<std::string> split_sentences(const std::string& text) {
    std::string normalized = normalize_whitespace(text);
    if (normalized.empty()) {
        throw InvalidInput("split_sentences: empty or whitespace-only text");
    }

    std::vector<std::string> tokens;
    {
        std::istringstream in(normalized);
        std::string token;
        while (in >> token) tokens.push_back(token);
    }

    std::vector<std::string> sentences;
    std::string current;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (!current.empty()) current += ' ';
        current += tokens[i];
        bool boundary = i + 1 < tokens.size() && token_ends_sentence(tokens[i]) &&
                        token_starts_sentence(tokens[i + 1]);
        if (boundary) {
            sentences.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) sentences.push_back(std::move(current));
    return sentences;
}

std::vector<std::string> validate_dialog(const Dialog& dialog) {
    std::vector<std::string> violations;
    if (dialog.id.empty()) violations.push_back("dialog id is empty");
    if (dialog.turns.empty()) violations.push_back("dialog has no turns");
    for (std::size_t t = 0; t < dialog.turns.size(); ++t) {
        const Turn& turn = dialog.turns[t];
        std::string where = "turn " + std::to_string(t + 1);
        if (normalize_whitespace(turn.question).empty()) {
            violations.push_back(where + ": question is empty");
        }
        if (turn.answer.sentences.empty()) {
            violations.push_back(where + ": answer has no sentences");
        }
        for (std::size_t s = 0; s < turn.answer.sentences.size(); ++s) {
            if (normalize_whitespace(turn.answer.sentences[s]).empty()) {
                violations.push_back(where + ": answer sentence " + std::to_string(s + 1) +
                                     " is empty");
            }
        }
    }
    return violations;
}

std::string dialog_to_json_line(const Dialog& dialog) {
    ordered_json j;
    j["id"] = dialog.id;
    if (dialog.title.has_value()) {
        j["title"] = *dialog.title;
    } else {
        j["title"] = nullptr;
    }
    j["source"] = to_string(dialog.source);
    j["turns"] = ordered_json::array();
    for (const Turn& turn : dialog.turns) {
        ordered_json jt;
        jt["q"] = turn.question;
        jt["q_type"] = to_string(turn.question_type);
        jt["a_sents"] = turn.answer.sentences;
        j["turns"].push_back(std::move(jt));
    }
    return j.dump();
}

Dialog dialog_from_json_line(const std::string& line, std::size_t line_number) {
    ordered_json j;
    try {
        j = ordered_json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(line_number, std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ParseError(line_number, "record is not an object");
    for (const char* key : {"id", "source", "turns"}) {
        if (!j.contains(key)) {
            throw ParseError(line_number, std::string("missing \"") + key + "\"");
        }
    }
    Dialog d;
    try {
        d.id = j.at("id").get<std::string>();
        if (j.contains("title") && !j.at("title").is_null()) {
            d.title = j.at("title").get<std::string>();
        }
        d.source = dialog_source_from_string(j.at("source").get<std::string>());
        if (!j.at("turns").is_array()) throw ParseError(line_number, "\"turns\" is not an array");
        for (const auto& jt : j.at("turns")) {
            Turn turn;
            turn.question = jt.at("q").get<std::string>();
            turn.question_type = question_type_from_string(jt.at("q_type").get<std::string>());
            turn.answer.sentences = jt.at("a_sents").get<std::vector<std::string>>();
            d.turns.push_back(std::move(turn));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(line_number, std::string("bad record: ") + e.what());
    } catch (const ConfigError& e) {
        throw ParseError(line_number, e.what());
    }
    std::vector<std::string> violations = validate_dialog(d);
    if (!violations.empty()) {
        throw ValidationError("dialog \"" + d.id + "\" (line " + std::to_string(line_number) +
                              "): " + violations.front());
    }
    return d;
}

std::vector<Dialog> load_dialogs(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::vector<Dialog> dialogs;
    std::string line;
    std::size_t line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (line.empty()) continue;
        dialogs.push_back(dialog_from_json_line(line, line_number));
    }
    return dialogs;
}

void save_dialogs(const std::vector<Dialog>& dialogs, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    for (const Dialog& d : dialogs) {
        out << dialog_to_json_line(d) << '\n';
    }
    if (!out) throw IoError("write failed: " + path);
}

std::vector<Document> load_documents(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::vector<Document> documents;
    std::string line;
    std::size_t line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (line.empty()) continue;
        ordered_json j;
        try {
            j = ordered_json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(line_number, std::string("invalid JSON: ") + e.what());
        }
        Document doc;
        try {
            doc.id = j.at("id").get<std::string>();
            doc.title = j.at("title").get<std::string>();
            doc.sentences = j.at("sentences").get<std::vector<std::string>>();
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(line_number, std::string("bad record: ") + e.what());
        }
        if (doc.sentences.empty()) {
            throw ValidationError("document \"" + doc.id + "\" (line " +
                                  std::to_string(line_number) + "): no sentences");
        }
        for (const std::string& s : doc.sentences) {
            if (normalize_whitespace(s).empty()) {
                throw ValidationError("document \"" + doc.id + "\" (line " +
                                      std::to_string(line_number) + "): empty sentence");
            }
        }
        documents.push_back(std::move(doc));
    }
    return documents;
}

void save_documents(const std::vector<Document>& documents, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    for (const Document& doc : documents) {
        ordered_json j;
        j["id"] = doc.id;
        j["title"] = doc.title;
        j["sentences"] = doc.sentences;
        out << j.dump() << '\n';
    }
    if (!out) throw IoError("write failed: " + path);
}

}  // namespace dialogkit
