#pragma once

// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tokenprobe Authors

/**
 * @file errors.hpp
 * @brief Exception types raised across the engine.
 *
 * Every error derives from tokenprobe::Error so callers that only care about
 * "something went wrong with the input" can catch one type. Errors tied to
 * a line of a record stream carry the 1-based line number.
 */

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace tokenprobe {

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what,
                   std::optional<std::size_t> line = std::nullopt)
        : std::runtime_error(line ? "line " + std::to_string(*line) + ": " + what : what),
          message_(what),
          line_(line) {}

    std::optional<std::size_t> line() const noexcept { return line_; }
    /// what() without the line prefix.
    const std::string& message() const noexcept { return message_; }

private:
    std::string message_;
    std::optional<std::size_t> line_;
};

#define TOKENPROBE_ERROR(Name)        \
    class Name : public Error {       \
    public:                           \
        using Error::Error;           \
    }

// metrics-core
TOKENPROBE_ERROR(InvalidLogits);
TOKENPROBE_ERROR(EmptySupport);
TOKENPROBE_ERROR(EmptySequence);
TOKENPROBE_ERROR(InvalidDistribution);

// ingestion
TOKENPROBE_ERROR(ParseError);
TOKENPROBE_ERROR(SequenceGapError);
TOKENPROBE_ERROR(SelectionMissingError);
TOKENPROBE_ERROR(MassOverflowError);
TOKENPROBE_ERROR(BackendTimeout);
TOKENPROBE_ERROR(UnsupportedBackend);

// session
TOKENPROBE_ERROR(AlignmentError);

// monitor
TOKENPROBE_ERROR(NoData);
TOKENPROBE_ERROR(NoBaseline);

#undef TOKENPROBE_ERROR

/// Non-2xx answer (or transport failure, status 0) from a scoring backend.
class BackendError : public Error {
public:
    BackendError(int status, const std::string& what, std::string fragment = {})
        : Error("backend error (status " + std::to_string(status) + "): " + what +
                (fragment.empty() ? std::string{} : " [payload: " + fragment + "]")),
          status_(status),
          fragment_(std::move(fragment)) {}

    int status() const noexcept { return status_; }
    const std::string& fragment() const noexcept { return fragment_; }

private:
    int status_;
    std::string fragment_;
};

}  // namespace tokenprobe
