#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace dialogkit {

// Base class for all toolkit errors so callers can catch one type at the
// CLI boundary and map it to an exit code.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad user-supplied value (empty text, out-of-range argument).
class InvalidInput : public Error {
public:
    using Error::Error;
};

// Unusable configuration: unknown enum value, bad path, tau <= 0, ...
class ConfigError : public Error {
public:
    using Error::Error;
};

// A record could not be decoded. Carries the 1-based line number of the
// offending record when the source is line-oriented.
class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& msg)
        : Error("line " + std::to_string(line) + ": " + msg), line_(line) {}
    explicit ParseError(const std::string& msg) : Error(msg), line_(0) {}

    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

// A structural invariant does not hold (empty question, mask out of range).
class ValidationError : public Error {
public:
    using Error::Error;
};

// Generator output that cannot be decoded into sentinel fills.
class MalformedGeneration : public Error {
public:
    using Error::Error;
};

// A scripted backend ran out of scripted outputs.
class StubExhausted : public Error {
public:
    using Error::Error;
};

// A document could not be converted into a dialog (retries exhausted).
// Carries the JSON-encoded trace of every window attempted so far.
class SynthesisError : public Error {
public:
    explicit SynthesisError(const std::string& msg) : Error(msg) {}
    SynthesisError(const std::string& msg, std::string trace_json)
        : Error(msg), trace_json_(std::move(trace_json)) {}

    const std::string& trace_json() const { return trace_json_; }

private:
    std::string trace_json_;
};

// Zero-norm or non-finite embedding fed into similarity math.
class DegenerateEmbedding : public Error {
public:
    using Error::Error;
};

// Encoder training failed. Carries the 0-based iteration index.
class TrainingError : public Error {
public:
    TrainingError(std::size_t iteration, const std::string& msg)
        : Error("iteration " + std::to_string(iteration) + ": " + msg),
          iteration_(iteration) {}

    std::size_t iteration() const { return iteration_; }

private:
    std::size_t iteration_;
};

// Remote or local model backend failed (transport error, bad status).
class BackendError : public Error {
public:
    using Error::Error;
};

// Pooled proportion is 0 or 1: the z statistic has zero variance.
class DegenerateTest : public Error {
public:
    using Error::Error;
};

// Judge response that maps to no unique rubric option.
class UnparseableJudgment : public Error {
public:
    using Error::Error;
};

// File could not be opened or written.
class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace dialogkit
