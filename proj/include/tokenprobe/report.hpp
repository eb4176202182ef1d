#pragma once

// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tokenprobe Authors

/**
 * @file report.hpp
 * @brief JSON views of sessions and comparisons.
 *
 * Session report layout (keys sorted, so output is stable and diff-able):
 *
 *   {"approximate": false, "characters": 1628,
 *    "flags": [[pos, ["entropy", ...]], ...],
 *    "label": "...",
 *    "metrics": {"entropy": {"max":..,"mean":..,"median":..,"min":..}, ...},
 *    "perplexity": 11.75,
 *    "scatter": [[entropy, varentropy, pos, "token"], ...],
 *    "tokens": 320}
 *
 * Nothing time- or id-dependent goes into a report, so identical inputs
 * produce identical bytes.
 */

#include <string>

#include "json.hpp"
#include "tokenprobe/monitor.hpp"
#include "tokenprobe/session.hpp"

namespace tokenprobe {

using json = nlohmann::json;

json summary_json(const SummaryStats& s);
json aggregate_json(const AggregateStats& a);

json session_report(const AnalysisSession& session, const FlagThresholds& thresholds);
json comparison_json(const ComparisonReport& report);

/// Values, color intensities and cache counter for one metric.
json metric_json(const AnalysisSession& session, MetricKind kind);
json scatter_json(const AnalysisSession& session);

/// Top-k alternatives at one position, most probable first; the synthetic
/// tail is reported separately as "tail_mass".
json topk_json(const AnalysisSession& session, std::size_t index, std::size_t k);

/// [observation, [signals], "UTC timestamp", [scores]]
json alarm_json(const AlarmEntry& alarm);
/// Window statistics, baseline, current scores and the alarm log.
json monitor_status_json(const MonitorState& monitor);

/// Canonical text form written by the CLI and served by the API.
std::string render(const json& doc);

/// Plain-text table in the row order Tokens, Characters, Entropy,
/// Varentropy, Skewentropy, Perplexity, Probability, Log Probability.
std::string comparison_table(const ComparisonReport& report);

}  // namespace tokenprobe
