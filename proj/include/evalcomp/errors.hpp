#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace evalcomp {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : Error {
    using Error::Error;
};

// mqm_corpus
struct EncodingError : Error {
    using Error::Error;
};

// compressor
struct EmptyTextError : Error {
    EmptyTextError() : Error("cannot compress empty text (0 tokens)") {}
};

struct GrammarError : Error {
    std::size_t offset;
    GrammarError(std::size_t off, const std::string& what)
        : Error("completion grammar error at byte " + std::to_string(off) + ": " + what),
          offset(off) {}
};

// prompt_kit
struct MissingFieldError : Error {
    using Error::Error;
};

struct VocabError : Error {
    using Error::Error;
};

// judge_client
struct AuthError : Error {
    using Error::Error;
};

struct BadRequestError : Error {
    using Error::Error;
};

struct ExhaustedRetriesError : Error {
    using Error::Error;
};

struct BackendUnavailableError : Error {
    using Error::Error;
};

// preference_builder
struct MissingReferenceRateError : Error {
    MissingReferenceRateError() : Error("rate scores do not contain the reference rate 1.0") {}
};

// orpo_loss
struct DomainError : Error {
    using Error::Error;
};

// eval_stats
struct DegenerateInputError : Error {
    using Error::Error;
};

struct TooFewSystemsError : Error {
    TooFewSystemsError() : Error("pairwise accuracy needs at least 2 systems") {}
};

struct MissingBaselineError : Error {
    MissingBaselineError() : Error("no baseline token total available for reduction rate") {}
};

}  // namespace evalcomp
