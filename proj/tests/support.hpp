#pragma once

// Shared helpers for the test binaries: fixture construction, file helpers,
// and a tiny process runner for CLI-level tests.

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "dialogkit/corpus.hpp"

namespace testsupport {

inline dialogkit::Turn make_turn(std::string question, std::vector<std::string> sentences,
                                 dialogkit::QuestionType type = dialogkit::QuestionType::raw) {
    dialogkit::Turn turn;
    turn.question = std::move(question);
    turn.question_type = type;
    turn.answer.sentences = std::move(sentences);
    return turn;
}

inline dialogkit::Dialog make_dialog(std::string id, std::vector<dialogkit::Turn> turns,
                                     std::optional<std::string> title = std::nullopt) {
    dialogkit::Dialog dialog;
    dialog.id = std::move(id);
    dialog.title = std::move(title);
    dialog.source = dialogkit::DialogSource::synthesized;
    dialog.turns = std::move(turns);
    return dialog;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("test support: cannot open " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
}

// Scratch directory cleaned up on destruction. Unique per instantiation so
// tests can run in parallel.
class TempDir {
public:
    TempDir() {
        static std::atomic<unsigned> counter{0};
        std::random_device rd;
        std::ostringstream name;
        name << "dialogkit-test-" << rd() << "-" << counter.fetch_add(1);
        path_ = std::filesystem::temp_directory_path() / name.str();
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    std::string file(const std::string& name) const { return (path_ / name).string(); }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

struct CliResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

// Runs the CLI binary with the given argument string, capturing both streams.
inline CliResult run_cli(const std::string& binary, const std::string& args,
                         const TempDir& dir) {
    CliResult result;
    std::string out_path = dir.file("cli-stdout.txt");
    std::string err_path = dir.file("cli-stderr.txt");
    std::string command =
        binary + " " + args + " > " + out_path + " 2> " + err_path;
    int status = std::system(command.c_str());
#ifdef _WIN32
    result.exit_code = status;
#else
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
#endif
    result.out = read_file(out_path);
    result.err = read_file(err_path);
    return result;
}

}  // namespace testsupport
