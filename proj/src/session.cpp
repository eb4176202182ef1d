// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tokenprobe Authors

#include "tokenprobe/session.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include "tokenprobe/errors.hpp"

namespace tokenprobe {

AnalysisSession::AnalysisSession(std::string label, std::vector<TokenDistribution> distributions,
                                 std::vector<std::string> token_texts,
                                 std::optional<std::string> source_text)
    : id_(new_session_id()),
      label_(std::move(label)),
      created_(std::chrono::system_clock::now()),
      distributions_(std::move(distributions)),
      token_texts_(std::move(token_texts)) {
    if (distributions_.empty()) throw EmptySequence("session needs at least one token");
    if (token_texts_.size() != distributions_.size())
        throw AlignmentError("got " + std::to_string(distributions_.size()) +
                             " distributions but " + std::to_string(token_texts_.size()) +
                             " token texts");
    if (source_text) {
        source_text_ = std::move(*source_text);
    } else {
        for (const auto& t : token_texts_) source_text_ += t;
    }
}

bool AnalysisSession::approximate() const noexcept {
    return std::any_of(distributions_.begin(), distributions_.end(),
                       [](const TokenDistribution& d) { return d.approximate(); });
}

std::shared_ptr<const AnalysisSession> build_session(std::string label,
                                                     std::vector<TokenDistribution> distributions,
                                                     std::vector<std::string> token_texts,
                                                     std::optional<std::string> source_text) {
    return std::make_shared<const AnalysisSession>(std::move(label), std::move(distributions),
                                                   std::move(token_texts), std::move(source_text));
}

std::string new_session_id() {
    thread_local std::mt19937_64 rng{[] {
        std::random_device rd;
        std::seed_seq seq{rd(), rd(), rd(), rd(), rd(), rd(), rd(), rd()};
        return std::mt19937_64(seq);
    }()};
    char buf[33];
    std::snprintf(buf, sizeof buf, "%016llx%016llx", static_cast<unsigned long long>(rng()),
                  static_cast<unsigned long long>(rng()));
    return buf;
}

SummaryStats summarize(std::span<const double> values) {
    if (values.empty()) throw EmptySequence("cannot summarize an empty vector");
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();

    SummaryStats s;
    s.min = sorted.front();
    s.max = sorted.back();
    s.median = n % 2 ? sorted[n / 2] : (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0;
    double total = 0.0;
    for (double v : values) total += v;
    // Rounding can push the mean of identical values just outside [min, max].
    s.mean = std::clamp(total / static_cast<double>(n), s.min, s.max);
    return s;
}

AggregateStats aggregate(const AnalysisSession& session) {
    AggregateStats a;
    a.label = session.label();
    a.tokens = session.size();
    a.characters = count_characters(session.source_text());
    for (auto kind : kAllMetricKinds)
        a.metrics[static_cast<std::size_t>(kind)] = summarize(session.metric(kind));
    const auto surprisal = session.metric(MetricKind::Surprisal);
    a.perplexity = sequence_perplexity(surprisal);
    double total = 0.0;
    for (double s : surprisal) total += s;
    a.mean_log_probability = -total / static_cast<double>(surprisal.size());
    a.approximate = session.approximate();
    return a;
}

std::size_t count_characters(std::string_view utf8) {
    std::size_t n = 0;
    for (unsigned char c : utf8)
        if ((c & 0xC0) != 0x80) ++n;
    return n;
}

std::string reverse_words(std::string_view text) {
    std::vector<std::string_view> words;
    std::size_t i = 0;
    auto space = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; };
    while (i < text.size()) {
        while (i < text.size() && space(text[i])) ++i;
        const std::size_t start = i;
        while (i < text.size() && !space(text[i])) ++i;
        if (i > start) words.push_back(text.substr(start, i - start));
    }
    std::string out;
    out.reserve(text.size());
    for (auto it = words.rbegin(); it != words.rend(); ++it) {
        if (!out.empty()) out += ' ';
        out += *it;
    }
    return out;
}

SummaryStats ComparisonReport::delta(MetricKind kind) const {
    const auto& l = left.of(kind);
    const auto& r = right.of(kind);
    return {r.mean - l.mean, r.median - l.median, r.min - l.min, r.max - l.max};
}

std::array<std::optional<double>, 4> ComparisonReport::ratio(MetricKind kind) const {
    const auto& l = left.of(kind);
    const auto& r = right.of(kind);
    auto div = [](double a, double b) -> std::optional<double> {
        if (b == 0.0) return std::nullopt;
        return a / b;
    };
    return {div(r.mean, l.mean), div(r.median, l.median), div(r.min, l.min), div(r.max, l.max)};
}

ComparisonReport compare(const AnalysisSession& left, const AnalysisSession& right) {
    return {aggregate(left), aggregate(right)};
}

std::vector<ScatterPoint> scatter_export(const AnalysisSession& session) {
    const auto h = session.metric(MetricKind::Entropy);
    const auto v = session.metric(MetricKind::Varentropy);
    std::vector<ScatterPoint> points;
    points.reserve(session.size());
    for (std::size_t i = 0; i < session.size(); ++i)
        points.push_back({h[i], v[i], session.distributions()[i].position(), session.token_texts()[i]});
    return points;
}

void FlagThresholds::validate() const {
    if (!(entropy >= 0.0) || !(varentropy >= 0.0) || !(surprisal >= 0.0))
        throw Error("flag thresholds must be non-negative");
}

std::vector<TokenFlag> flag_tokens(const AnalysisSession& session, const FlagThresholds& thresholds) {
    thresholds.validate();
    const auto h = session.metric(MetricKind::Entropy);
    const auto v = session.metric(MetricKind::Varentropy);
    const auto s = session.metric(MetricKind::Surprisal);
    std::vector<TokenFlag> flags;
    for (std::size_t i = 0; i < session.size(); ++i) {
        TokenFlag f{session.distributions()[i].position(), {}};
        if (h[i] > thresholds.entropy) f.triggered.push_back(MetricKind::Entropy);
        if (v[i] > thresholds.varentropy) f.triggered.push_back(MetricKind::Varentropy);
        if (s[i] > thresholds.surprisal) f.triggered.push_back(MetricKind::Surprisal);
        if (!f.triggered.empty()) flags.push_back(std::move(f));
    }
    return flags;
}

std::vector<double> color_map(std::span<const double> values, [[maybe_unused]] MetricKind kind) {
    if (values.empty()) return {};
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    const double min = *lo, range = *hi - *lo;
    std::vector<double> out(values.size(), 0.0);
    if (range > 0.0) {
        for (std::size_t i = 0; i < values.size(); ++i)
            out[i] = std::clamp((values[i] - min) / range, 0.0, 1.0);
    }
    return out;
}

}  // namespace tokenprobe
