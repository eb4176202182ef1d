#pragma once

// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tokenprobe Authors

/**
 * @file monitor.hpp
 * @brief Rolling-window drift detection over streamed token metrics.
 *
 * The window keeps the last `capacity` TokenMetrics. Means and population
 * standard deviations per metric are maintained incrementally (Welford
 * add/remove) and rebuilt from the ring once per full turnover so rounding
 * cannot accumulate.
 *
 * After freeze_baseline() every drift_score() call compares the window mean
 * with the frozen mean in units of the frozen standard deviation (floored at
 * epsilon_std) and logs an alarm when the score exceeds alarm_k.
 *
 * Tracked signals: the mean of each per-token metric (probability,
 * surprisal, entropy, varentropy, skewentropy) plus the surprisal median.
 */

#include <array>
#include <chrono>
#include <cstddef>
#include <deque>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tokenprobe/metrics.hpp"

namespace tokenprobe {

enum class MonitorSignal {
    ProbabilityMean,
    SurprisalMean,
    EntropyMean,
    VarentropyMean,
    SkewentropyMean,
    SurprisalMedian,
};

inline constexpr std::array<MonitorSignal, 6> kAllMonitorSignals = {
    MonitorSignal::ProbabilityMean, MonitorSignal::SurprisalMean,   MonitorSignal::EntropyMean,
    MonitorSignal::VarentropyMean,  MonitorSignal::SkewentropyMean, MonitorSignal::SurprisalMedian,
};

std::string_view to_string(MonitorSignal signal) noexcept;
std::optional<MonitorSignal> parse_monitor_signal(std::string_view name) noexcept;

/// The five per-token metrics a window stores, in TokenMetrics field order.
inline constexpr std::array<MetricKind, 5> kWindowMetrics = {
    MetricKind::Probability, MetricKind::Surprisal, MetricKind::Entropy,
    MetricKind::Varentropy,  MetricKind::Skewentropy,
};

struct MonitorConfig {
    std::size_t capacity = 512;
    double alarm_k = 3.0;
    double epsilon_std = 1e-6;

    void validate() const;
};

struct WindowStats {
    double mean = 0.0;
    double stddev = 0.0;  // population
};

struct Baseline {
    std::array<WindowStats, kWindowMetrics.size()> metrics{};
    double surprisal_median = 0.0;
};

struct AlarmEntry {
    std::size_t observation;  ///< 0-based index of the observation that raised it
    std::vector<MonitorSignal> signals;
    std::chrono::system_clock::time_point time;
    std::vector<double> scores;  ///< aligned with `signals`
};

class MonitorState {
public:
    explicit MonitorState(MonitorConfig config = {});

    const MonitorConfig& config() const noexcept { return config_; }

    void observe(const TokenMetrics& metrics);

    /// @throws NoData when the window is empty.
    void freeze_baseline();

    /**
     * |window - baseline| / max(baseline std, epsilon_std) for one signal.
     * Appends an alarm entry when the score exceeds alarm_k.
     * @throws NoBaseline before freeze_baseline(); NoData on an empty window.
     */
    double drift_score(MonitorSignal signal);

    /// Scores every signal and logs at most one alarm entry covering all
    /// signals above alarm_k. Returns the scores in kAllMonitorSignals order.
    std::array<double, kAllMonitorSignals.size()> score_all();

    /// Current scores without touching the alarm log; empty before a
    /// baseline exists or while the window is empty.
    std::optional<std::array<double, kAllMonitorSignals.size()>> peek_scores() const;

    WindowStats window_stats(MetricKind kind) const;
    double window_median_surprisal() const;
    /// exp(window mean surprisal).
    double window_perplexity() const;

    std::size_t size() const noexcept { return ring_.size(); }
    std::size_t observations() const noexcept { return observed_; }
    const std::optional<Baseline>& baseline() const noexcept { return baseline_; }
    const std::vector<AlarmEntry>& alarms() const noexcept { return alarms_; }
    std::size_t scored() const noexcept { return scored_; }

private:
    using Row = std::array<double, kWindowMetrics.size()>;

    static std::size_t slot(MetricKind kind);
    double raw_score(MonitorSignal signal) const;
    void rebuild();

    MonitorConfig config_;
    std::deque<Row> ring_;
    std::array<double, kWindowMetrics.size()> mean_{};
    std::array<double, kWindowMetrics.size()> m2_{};  // sum of squared deviations
    std::size_t evictions_since_rebuild_ = 0;
    std::size_t observed_ = 0;
    std::size_t scored_ = 0;
    std::optional<Baseline> baseline_;
    std::vector<AlarmEntry> alarms_;
};

}  // namespace tokenprobe
