#pragma once

// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tokenprobe Authors

/**
 * @file metrics.hpp
 * @brief Token-level information metrics, all in nats.
 *
 * Every metric is evaluated from log-probabilities. p*ln(p) terms are formed
 * as exp(lp)*lp and terms whose probability underflows contribute 0.
 *
 * Skewentropy follows the centered form sum p*(ln p + H)^3 / Var^{3/2}.
 * Note the sign: ln p + H = H - I, so this is the negative of the usual
 * third standardized moment of surprisal.
 */

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tokenprobe/distribution.hpp"

namespace tokenprobe {

enum class MetricKind { Probability, Surprisal, Entropy, Varentropy, Skewentropy, Perplexity };

inline constexpr std::array<MetricKind, 6> kAllMetricKinds = {
    MetricKind::Probability, MetricKind::Surprisal,   MetricKind::Entropy,
    MetricKind::Varentropy,  MetricKind::Skewentropy, MetricKind::Perplexity,
};

std::string_view to_string(MetricKind kind) noexcept;
std::optional<MetricKind> parse_metric_kind(std::string_view name) noexcept;

/// Below this variance (nats^2) skewentropy is reported as 0.
inline constexpr double kDegenerateVariance = 1e-12;

struct TokenMetrics {
    double probability = 0.0;
    double surprisal = 0.0;
    double entropy = 0.0;
    double varentropy = 0.0;
    double skewentropy = 0.0;
    bool approximate = false;

    double value(MetricKind kind) const noexcept;
};

double token_probability(const TokenDistribution& d) noexcept;
double token_surprisal(const TokenDistribution& d) noexcept;
double distribution_entropy(const TokenDistribution& d) noexcept;
double distribution_varentropy(const TokenDistribution& d) noexcept;
double distribution_skewentropy(const TokenDistribution& d) noexcept;

/// All per-token metrics in two passes over the support.
TokenMetrics compute_metrics(const TokenDistribution& d) noexcept;

/// exp(mean surprisal). @throws EmptySequence on empty input.
double sequence_perplexity(std::span<const double> surprisals);

/// Cumulative perplexity: entry t is the perplexity of positions 0..t, so
/// the last entry equals sequence_perplexity of the whole vector.
std::vector<double> running_perplexity(std::span<const double> surprisals);

/// One value per position for `kind`. Perplexity uses running_perplexity.
std::vector<double> compute_metric_vector(MetricKind kind,
                                          std::span<const TokenDistribution> sequence);

}  // namespace tokenprobe
