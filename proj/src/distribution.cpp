// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tokenprobe Authors

#include "tokenprobe/distribution.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_set>

#include "tokenprobe/errors.hpp"

namespace tokenprobe {

namespace {

constexpr double kNormalizationTolerance = 1e-9;
constexpr double kPositiveLogProbSlack = 1e-12;

}  // namespace

ScoreView ScoreView::adopt(std::vector<double> values) {
    auto owner = std::make_shared<const std::vector<double>>(std::move(values));
    std::span<const double> view(*owner);
    return ScoreView(std::move(owner), view);
}

TokenDistribution::TokenDistribution(std::size_t position,
                                     std::vector<double> log_probs,
                                     std::vector<std::int64_t> token_ids,
                                     std::size_t selected_index,
                                     Coverage coverage,
                                     std::optional<std::size_t> tail_index,
                                     std::vector<std::string> texts,
                                     ScoreView raw_logits)
    : position_(position),
      log_probs_(std::move(log_probs)),
      token_ids_(std::move(token_ids)),
      selected_index_(selected_index),
      coverage_(coverage),
      tail_index_(tail_index),
      texts_(std::move(texts)),
      raw_(std::move(raw_logits)) {
    const std::size_t n = log_probs_.size();
    if (n == 0) throw EmptySupport("distribution has empty support");
    if (!token_ids_.empty() && token_ids_.size() != n)
        throw InvalidDistribution("token_ids not aligned with log_probs");
    if (!texts_.empty() && texts_.size() != n)
        throw InvalidDistribution("texts not aligned with log_probs");
    if (selected_index_ >= n)
        throw InvalidDistribution("selected index " + std::to_string(selected_index_) +
                                  " out of range for support " + std::to_string(n));

    if (coverage_ == Coverage::TopKLumped) {
        if (!tail_index_ || *tail_index_ >= n)
            throw InvalidDistribution("lumped distribution requires a valid tail index");
        if (*tail_index_ == selected_index_)
            throw InvalidDistribution("selected token cannot be the lumped tail");
    } else if (tail_index_) {
        throw InvalidDistribution("full-coverage distribution cannot have a tail");
    }

    for (double lp : log_probs_) {
        if (std::isnan(lp) || lp > kPositiveLogProbSlack)
            throw InvalidDistribution("log-probability entry out of range: " + std::to_string(lp));
    }
    const double total = logsumexp(log_probs_);
    if (!(std::abs(total) <= kNormalizationTolerance))
        throw InvalidDistribution("probabilities do not sum to 1 (logsumexp = " +
                                  std::to_string(total) + ")");

    if (!token_ids_.empty()) {
        std::unordered_set<std::int64_t> seen;
        seen.reserve(n);
        for (auto id : token_ids_) {
            if (!seen.insert(id).second)
                throw InvalidDistribution("duplicate token id " + std::to_string(id));
        }
    }
}

std::int64_t TokenDistribution::token_id(std::size_t index) const noexcept {
    return token_ids_.empty() ? static_cast<std::int64_t>(index) : token_ids_[index];
}

TokenDistribution TokenDistribution::with_position(std::size_t position) const {
    TokenDistribution copy = *this;
    copy.position_ = position;
    return copy;
}

double logsumexp(std::span<const double> values) {
    if (values.empty()) return -std::numeric_limits<double>::infinity();
    const auto top = std::max_element(values.begin(), values.end());
    const double m = *top;
    if (!std::isfinite(m)) return m;
    double rest = 0.0;
    for (auto it = values.begin(); it != values.end(); ++it) {
        if (it != top) rest += std::exp(*it - m);
    }
    return m + std::log1p(rest);
}

TokenDistribution normalize_logits(ScoreView logits, std::size_t selected, std::size_t position) {
    const auto z = logits.values();
    if (z.empty()) throw EmptySupport("empty logit vector");
    for (std::size_t i = 0; i < z.size(); ++i) {
        if (!std::isfinite(z[i]))
            throw InvalidLogits("non-finite logit at index " + std::to_string(i));
    }
    if (selected >= z.size())
        throw InvalidLogits("selected index " + std::to_string(selected) +
                            " out of range for " + std::to_string(z.size()) + " logits");

    // The maximum contributes exp(0) = 1 exactly; log1p keeps the residual
    // sum accurate when the distribution is nearly one-hot.
    const auto top = std::max_element(z.begin(), z.end());
    const double m = *top;
    double rest = 0.0;
    for (auto it = z.begin(); it != z.end(); ++it) {
        if (it != top) rest += std::exp(*it - m);
    }
    const double log_norm = std::log1p(rest);

    std::vector<double> log_probs(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) log_probs[i] = (z[i] - m) - log_norm;

    return TokenDistribution(position, std::move(log_probs), {}, selected, Coverage::Full,
                             std::nullopt, {}, std::move(logits));
}

}  // namespace tokenprobe
