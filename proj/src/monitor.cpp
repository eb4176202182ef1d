// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tokenprobe Authors

#include "tokenprobe/monitor.hpp"

#include <algorithm>
#include <cmath>

#include "tokenprobe/errors.hpp"

namespace tokenprobe {

std::string_view to_string(MonitorSignal signal) noexcept {
    switch (signal) {
        case MonitorSignal::ProbabilityMean: return "probability_mean";
        case MonitorSignal::SurprisalMean: return "surprisal_mean";
        case MonitorSignal::EntropyMean: return "entropy_mean";
        case MonitorSignal::VarentropyMean: return "varentropy_mean";
        case MonitorSignal::SkewentropyMean: return "skewentropy_mean";
        case MonitorSignal::SurprisalMedian: return "surprisal_median";
    }
    return "unknown";
}

std::optional<MonitorSignal> parse_monitor_signal(std::string_view name) noexcept {
    for (auto s : kAllMonitorSignals)
        if (to_string(s) == name) return s;
    return std::nullopt;
}

void MonitorConfig::validate() const {
    if (capacity < 1) throw Error("monitor window capacity must be >= 1");
    if (!(alarm_k > 0.0)) throw Error("alarm multiplier must be positive");
    if (!(epsilon_std > 0.0)) throw Error("epsilon_std must be positive");
}

MonitorState::MonitorState(MonitorConfig config) : config_(config) { config_.validate(); }

std::size_t MonitorState::slot(MetricKind kind) {
    for (std::size_t i = 0; i < kWindowMetrics.size(); ++i)
        if (kWindowMetrics[i] == kind) return i;
    throw Error("metric " + std::string(to_string(kind)) + " is not tracked per token");
}

void MonitorState::observe(const TokenMetrics& metrics) {
    Row row;
    for (std::size_t i = 0; i < kWindowMetrics.size(); ++i) row[i] = metrics.value(kWindowMetrics[i]);

    if (ring_.size() == config_.capacity) {
        const Row old = ring_.front();
        ring_.pop_front();
        const double n = static_cast<double>(ring_.size());
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (n == 0) {
                mean_[i] = 0.0;
                m2_[i] = 0.0;
                continue;
            }
            const double prev_mean = mean_[i];
            mean_[i] = (prev_mean * (n + 1) - old[i]) / n;
            m2_[i] -= (old[i] - prev_mean) * (old[i] - mean_[i]);
        }
        ++evictions_since_rebuild_;
    }

    ring_.push_back(row);
    const double n = static_cast<double>(ring_.size());
    for (std::size_t i = 0; i < row.size(); ++i) {
        const double delta = row[i] - mean_[i];
        mean_[i] += delta / n;
        m2_[i] += delta * (row[i] - mean_[i]);
    }
    ++observed_;

    if (evictions_since_rebuild_ >= config_.capacity) rebuild();
}

void MonitorState::rebuild() {
    mean_.fill(0.0);
    m2_.fill(0.0);
    double n = 0.0;
    for (const auto& row : ring_) {
        n += 1.0;
        for (std::size_t i = 0; i < row.size(); ++i) {
            const double delta = row[i] - mean_[i];
            mean_[i] += delta / n;
            m2_[i] += delta * (row[i] - mean_[i]);
        }
    }
    evictions_since_rebuild_ = 0;
}

WindowStats MonitorState::window_stats(MetricKind kind) const {
    if (ring_.empty()) throw NoData("monitor window is empty");
    const std::size_t i = slot(kind);
    const double var = m2_[i] / static_cast<double>(ring_.size());
    return {mean_[i], var > 0.0 ? std::sqrt(var) : 0.0};
}

double MonitorState::window_median_surprisal() const {
    if (ring_.empty()) throw NoData("monitor window is empty");
    const std::size_t i = slot(MetricKind::Surprisal);
    std::vector<double> v;
    v.reserve(ring_.size());
    for (const auto& row : ring_) v.push_back(row[i]);
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

double MonitorState::window_perplexity() const {
    return std::exp(window_stats(MetricKind::Surprisal).mean);
}

void MonitorState::freeze_baseline() {
    if (ring_.empty()) throw NoData("cannot freeze a baseline from an empty window");
    Baseline b;
    for (std::size_t i = 0; i < kWindowMetrics.size(); ++i) b.metrics[i] = window_stats(kWindowMetrics[i]);
    b.surprisal_median = window_median_surprisal();
    baseline_ = b;
}

double MonitorState::raw_score(MonitorSignal signal) const {
    if (!baseline_) throw NoBaseline("no baseline frozen");
    if (ring_.empty()) throw NoData("monitor window is empty");
    auto score = [&](double current, double base_mean, double base_std) {
        return std::abs(current - base_mean) / std::max(base_std, config_.epsilon_std);
    };
    const auto& b = *baseline_;
    switch (signal) {
        case MonitorSignal::SurprisalMedian: {
            const auto& s = b.metrics[slot(MetricKind::Surprisal)];
            return score(window_median_surprisal(), b.surprisal_median, s.stddev);
        }
        default: {
            const auto idx = static_cast<std::size_t>(signal);  // mean signals follow kWindowMetrics
            const auto& s = b.metrics[idx];
            return score(mean_[idx], s.mean, s.stddev);
        }
    }
}

double MonitorState::drift_score(MonitorSignal signal) {
    const double s = raw_score(signal);
    ++scored_;
    if (s > config_.alarm_k)
        alarms_.push_back({observed_ ? observed_ - 1 : 0, {signal}, std::chrono::system_clock::now(), {s}});
    return s;
}

std::array<double, kAllMonitorSignals.size()> MonitorState::score_all() {
    std::array<double, kAllMonitorSignals.size()> out{};
    AlarmEntry entry{observed_ ? observed_ - 1 : 0, {}, std::chrono::system_clock::now(), {}};
    for (std::size_t i = 0; i < kAllMonitorSignals.size(); ++i) {
        out[i] = raw_score(kAllMonitorSignals[i]);
        if (out[i] > config_.alarm_k) {
            entry.signals.push_back(kAllMonitorSignals[i]);
            entry.scores.push_back(out[i]);
        }
    }
    ++scored_;
    if (!entry.signals.empty()) alarms_.push_back(std::move(entry));
    return out;
}

std::optional<std::array<double, kAllMonitorSignals.size()>> MonitorState::peek_scores() const {
    if (!baseline_ || ring_.empty()) return std::nullopt;
    std::array<double, kAllMonitorSignals.size()> out{};
    for (std::size_t i = 0; i < kAllMonitorSignals.size(); ++i) out[i] = raw_score(kAllMonitorSignals[i]);
    return out;
}

}  // namespace tokenprobe
