#pragma once

// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tokenprobe Authors

/**
 * @file session.hpp
 * @brief Analyzed sequences and everything derived from them.
 *
 * An AnalysisSession is immutable once built apart from its MetricCache,
 * which fills on first access per metric kind. Aggregates, scatter points,
 * flags and color intensities are all derived from the cached vectors, so
 * they agree with get_metric() bit for bit.
 */

#include <array>
#include <chrono>
#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tokenprobe/distribution.hpp"
#include "tokenprobe/metric_cache.hpp"
#include "tokenprobe/metrics.hpp"

namespace tokenprobe {

class AnalysisSession {
public:
    /**
     * @param source_text text the tokens were scored from; when absent the
     *        concatenated token texts stand in for it.
     * @throws EmptySequence  if there are no distributions
     * @throws AlignmentError if texts and distributions differ in length
     */
    AnalysisSession(std::string label, std::vector<TokenDistribution> distributions,
                    std::vector<std::string> token_texts,
                    std::optional<std::string> source_text = std::nullopt);

    AnalysisSession(const AnalysisSession&) = delete;
    AnalysisSession& operator=(const AnalysisSession&) = delete;

    const std::string& id() const noexcept { return id_; }
    const std::string& label() const noexcept { return label_; }
    std::chrono::system_clock::time_point created() const noexcept { return created_; }

    std::size_t size() const noexcept { return distributions_.size(); }
    std::span<const TokenDistribution> distributions() const noexcept { return distributions_; }
    std::span<const std::string> token_texts() const noexcept { return token_texts_; }
    const std::string& source_text() const noexcept { return source_text_; }
    bool approximate() const noexcept;

    /// Per-position values for `kind`, computed on first call.
    std::span<const double> metric(MetricKind kind) const {
        return cache_.get(kind, distributions_);
    }
    const MetricCache& cache() const noexcept { return cache_; }

private:
    std::string id_;
    std::string label_;
    std::chrono::system_clock::time_point created_;
    std::vector<TokenDistribution> distributions_;
    std::vector<std::string> token_texts_;
    std::string source_text_;
    MetricCache cache_;
};

std::shared_ptr<const AnalysisSession> build_session(
    std::string label, std::vector<TokenDistribution> distributions,
    std::vector<std::string> token_texts, std::optional<std::string> source_text = std::nullopt);

/// Random 128-bit identifier as 32 lowercase hex digits.
std::string new_session_id();

struct SummaryStats {
    double mean = 0.0;
    double median = 0.0;
    double min = 0.0;
    double max = 0.0;
};

/// Mean, median (mean of the central pair for even counts), min, max.
SummaryStats summarize(std::span<const double> values);

struct AggregateStats {
    std::string label;
    std::size_t tokens = 0;
    std::size_t characters = 0;
    std::array<SummaryStats, kAllMetricKinds.size()> metrics{};
    double perplexity = 0.0;
    /// Mean natural-log probability of the selected tokens (= -mean surprisal).
    double mean_log_probability = 0.0;
    bool approximate = false;

    const SummaryStats& of(MetricKind kind) const {
        return metrics[static_cast<std::size_t>(kind)];
    }
};

AggregateStats aggregate(const AnalysisSession& session);

/// Unicode scalar values in UTF-8 text; invalid bytes count one each.
std::size_t count_characters(std::string_view utf8);

/// Whitespace-delimited words in reverse order, joined by single spaces.
std::string reverse_words(std::string_view text);

struct ComparisonReport {
    AggregateStats left;
    AggregateStats right;

    /// right - left for each statistic of each metric.
    SummaryStats delta(MetricKind kind) const;
    /// right / left; nullopt where left is 0.
    std::array<std::optional<double>, 4> ratio(MetricKind kind) const;
};

ComparisonReport compare(const AnalysisSession& left, const AnalysisSession& right);

struct ScatterPoint {
    double entropy;
    double varentropy;
    std::size_t position;
    std::string token;
};

std::vector<ScatterPoint> scatter_export(const AnalysisSession& session);

struct FlagThresholds {
    double entropy = 3.0;     // nats
    double varentropy = 6.0;  // nats^2
    double surprisal = 6.0;   // nats

    void validate() const;
};

struct TokenFlag {
    std::size_t position;
    std::vector<MetricKind> triggered;
};

/// Positions where entropy, varentropy or surprisal strictly exceed their threshold.
std::vector<TokenFlag> flag_tokens(const AnalysisSession& session, const FlagThresholds& thresholds);

/**
 * Min-max scaling to [0, 1] over the given vector; constant vectors map to 0.
 * Every kind, probability included, uses the direct scale: 1 marks the
 * largest value of the session.
 */
std::vector<double> color_map(std::span<const double> values, MetricKind kind);

}  // namespace tokenprobe
