// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tokenprobe Authors

#include "tokenprobe/metrics.hpp"

#include <cmath>

#include "tokenprobe/errors.hpp"

namespace tokenprobe {

namespace {

struct Moments {
    double entropy = 0.0;
    double varentropy = 0.0;
    double central_third = 0.0;  // sum p * (lp + H)^3
};

double entropy_pass(std::span<const double> log_probs) noexcept {
    double h = 0.0;
    for (double lp : log_probs) {
        const double p = std::exp(lp);
        if (p > 0.0) h -= p * lp;  // 0 * ln 0 := 0
    }
    return h;
}

// Second pass works on d = lp + H. The raw form sum p*lp^2 - H^2 cancels
// badly for near-uniform supports; the centered sums are the same quantity.
// s1 is zero in exact arithmetic and absorbs rounding in H.
Moments moments(std::span<const double> log_probs, bool want_third) noexcept {
    Moments m;
    m.entropy = entropy_pass(log_probs);
    double s1 = 0.0, s2 = 0.0, s3 = 0.0;
    for (double lp : log_probs) {
        const double p = std::exp(lp);
        if (p == 0.0) continue;
        const double d = lp + m.entropy;
        const double pd = p * d;
        s1 += pd;
        s2 += pd * d;
        if (want_third) s3 += pd * d * d;
    }
    const double var = s2 - s1 * s1;
    m.varentropy = var > 0.0 ? var : 0.0;
    if (want_third) m.central_third = s3 - 3.0 * s1 * s2 + 2.0 * s1 * s1 * s1;
    return m;
}

double skew_from(const Moments& m) noexcept {
    if (m.varentropy < kDegenerateVariance) return 0.0;
    return m.central_third / (m.varentropy * std::sqrt(m.varentropy));
}

}  // namespace

std::string_view to_string(MetricKind kind) noexcept {
    switch (kind) {
        case MetricKind::Probability: return "probability";
        case MetricKind::Surprisal: return "surprisal";
        case MetricKind::Entropy: return "entropy";
        case MetricKind::Varentropy: return "varentropy";
        case MetricKind::Skewentropy: return "skewentropy";
        case MetricKind::Perplexity: return "perplexity";
    }
    return "unknown";
}

std::optional<MetricKind> parse_metric_kind(std::string_view name) noexcept {
    for (auto kind : kAllMetricKinds) {
        if (to_string(kind) == name) return kind;
    }
    return std::nullopt;
}

double TokenMetrics::value(MetricKind kind) const noexcept {
    switch (kind) {
        case MetricKind::Probability: return probability;
        case MetricKind::Surprisal: return surprisal;
        case MetricKind::Entropy: return entropy;
        case MetricKind::Varentropy: return varentropy;
        case MetricKind::Skewentropy: return skewentropy;
        case MetricKind::Perplexity: return std::exp(surprisal);  // single-token perplexity
    }
    return 0.0;
}

double token_probability(const TokenDistribution& d) noexcept {
    return std::exp(d.log_probs()[d.selected_index()]);
}

double token_surprisal(const TokenDistribution& d) noexcept {
    // -0.0 would print as "-0" in reports.
    const double lp = d.log_probs()[d.selected_index()];
    return lp == 0.0 ? 0.0 : -lp;
}

double distribution_entropy(const TokenDistribution& d) noexcept {
    return entropy_pass(d.log_probs());
}

double distribution_varentropy(const TokenDistribution& d) noexcept {
    return moments(d.log_probs(), false).varentropy;
}

double distribution_skewentropy(const TokenDistribution& d) noexcept {
    return skew_from(moments(d.log_probs(), true));
}

TokenMetrics compute_metrics(const TokenDistribution& d) noexcept {
    const Moments m = moments(d.log_probs(), true);
    TokenMetrics out;
    out.probability = token_probability(d);
    out.surprisal = token_surprisal(d);
    out.entropy = m.entropy;
    out.varentropy = m.varentropy;
    out.skewentropy = skew_from(m);
    out.approximate = d.approximate();
    return out;
}

double sequence_perplexity(std::span<const double> surprisals) {
    if (surprisals.empty()) throw EmptySequence("perplexity of an empty sequence");
    double total = 0.0;
    for (double s : surprisals) total += s;
    return std::exp(total / static_cast<double>(surprisals.size()));
}

std::vector<double> running_perplexity(std::span<const double> surprisals) {
    std::vector<double> out;
    out.reserve(surprisals.size());
    double total = 0.0;
    for (std::size_t t = 0; t < surprisals.size(); ++t) {
        total += surprisals[t];
        out.push_back(std::exp(total / static_cast<double>(t + 1)));
    }
    return out;
}

std::vector<double> compute_metric_vector(MetricKind kind,
                                          std::span<const TokenDistribution> sequence) {
    std::vector<double> out;
    out.reserve(sequence.size());
    switch (kind) {
        case MetricKind::Probability:
            for (const auto& d : sequence) out.push_back(token_probability(d));
            break;
        case MetricKind::Surprisal:
            for (const auto& d : sequence) out.push_back(token_surprisal(d));
            break;
        case MetricKind::Entropy:
            for (const auto& d : sequence) out.push_back(distribution_entropy(d));
            break;
        case MetricKind::Varentropy:
            for (const auto& d : sequence) out.push_back(distribution_varentropy(d));
            break;
        case MetricKind::Skewentropy:
            for (const auto& d : sequence) out.push_back(distribution_skewentropy(d));
            break;
        case MetricKind::Perplexity: {
            for (const auto& d : sequence) out.push_back(token_surprisal(d));
            out = running_perplexity(out);
            break;
        }
    }
    return out;
}

}  // namespace tokenprobe
