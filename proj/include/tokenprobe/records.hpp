#pragma once

// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tokenprobe Authors

/**
 * @file records.hpp
 * @brief Line-delimited logit records and top-k lumping.
 *
 * One JSON object per line, one line per token position:
 *
 *   {"pos": 0, "token_id": 17, "token": " We", "logits": [..full vocabulary..]}
 *   {"pos": 1, "token_id": 9,  "token": " hold", "top_logprobs": [[9, -0.1], [4, -2.7]]}
 *   {"pos": 2, "token_id": 3,  "token": " these", "logits_ref": {"offset": 0, "count": 49152}}
 *
 * `logits_ref` points into a side buffer of little-endian float64 values so
 * that full-vocabulary records stay small; the buffer is memory-mapped and
 * the resulting distributions reference it without copying.
 */

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tokenprobe/distribution.hpp"

namespace tokenprobe {

struct TopKEntry {
    std::int64_t token_id;
    double logprob;
    std::string text;  // optional
};

/**
 * Top-k log-probabilities plus one synthetic entry holding the residual mass.
 *
 * Entropy of the result is a lower bound on the entropy of any distribution
 * that agrees with the top-k and splits the tail further. When the residual
 * is below 1e-12 the tail is dropped and the result has Full coverage.
 *
 * @throws SelectionMissingError if `selected` is not among the entries
 * @throws MassOverflowError     if the entries carry more than 1 + 1e-6 mass
 */
TokenDistribution lump_tail(std::span<const TopKEntry> topk, std::int64_t selected,
                            std::size_t position = 0);

/// Read-only memory map of a float64 side buffer.
class LogitBuffer : public std::enable_shared_from_this<LogitBuffer> {
public:
    static std::shared_ptr<const LogitBuffer> open(const std::filesystem::path& path);
    ~LogitBuffer();

    LogitBuffer(const LogitBuffer&) = delete;
    LogitBuffer& operator=(const LogitBuffer&) = delete;

    std::size_t size_bytes() const noexcept { return size_; }

    /// View of `count` doubles at byte `offset`, sharing ownership of the map.
    ScoreView slice(std::size_t offset, std::size_t count) const;

private:
    LogitBuffer() = default;
    const void* data_ = nullptr;
    std::size_t size_ = 0;
};

struct ParseOptions {
    std::shared_ptr<const LogitBuffer> side_buffer;
    /// Require positions 0,1,2,... Monitors reading mixed streams turn this off.
    bool contiguous_positions = true;
};

struct ParsedRecord {
    TokenDistribution distribution;
    std::string token_text;
};

struct ParsedSequence {
    std::vector<TokenDistribution> distributions;
    std::vector<std::string> token_texts;
};

/// Parses one record. `line_number` is 1-based and only used for errors.
ParsedRecord parse_record(std::string_view line, std::size_t line_number,
                          const ParseOptions& options = {});

/**
 * Parses a whole record stream. Blank lines are ignored.
 *
 * @throws ParseError, SequenceGapError, SelectionMissingError,
 *         MassOverflowError, InvalidLogits; all carry the offending line.
 */
ParsedSequence parse_records(std::istream& in, const ParseOptions& options = {});
ParsedSequence parse_records(std::string_view text, const ParseOptions& options = {});

/// Inverse of parse_records for inline payloads (no side buffer).
void write_records(std::ostream& out, std::span<const TokenDistribution> distributions,
                   std::span<const std::string> token_texts);

}  // namespace tokenprobe
