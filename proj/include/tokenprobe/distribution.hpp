#pragma once

// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tokenprobe Authors

/**
 * @file distribution.hpp
 * @brief One generation step's next-token distribution.
 *
 * A TokenDistribution stores natural-log probabilities over its support and
 * the index of the token that was actually selected at that step. The
 * support is either the whole vocabulary (Coverage::Full) or an observed
 * top-k list plus one synthetic "tail" entry that carries the residual mass
 * (Coverage::TopKLumped).
 *
 * RAW SCORES:
 * When the distribution was built from raw logits, those logits stay
 * reachable through raw_logits() without being copied. ScoreView shares
 * ownership of whatever storage backs them (a moved-in vector or a mapped
 * side buffer), so the span stays valid for the lifetime of the view.
 */

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace tokenprobe {

enum class Coverage { Full, TopKLumped };

/// Token id used for the synthetic residual-mass entry.
inline constexpr std::int64_t kTailTokenId = -1;

/// Shared, read-only view of a score buffer.
class ScoreView {
public:
    ScoreView() = default;
    ScoreView(std::shared_ptr<const void> owner, std::span<const double> values)
        : owner_(std::move(owner)), values_(values) {}

    /// Takes ownership of `values` by move; no element is copied.
    static ScoreView adopt(std::vector<double> values);

    std::span<const double> values() const noexcept { return values_; }
    std::size_t size() const noexcept { return values_.size(); }
    bool empty() const noexcept { return values_.empty(); }

private:
    std::shared_ptr<const void> owner_;
    std::span<const double> values_;
};

class TokenDistribution {
public:
    /**
     * Validating constructor.
     *
     * `token_ids` may be empty, meaning the support is indexed by vocabulary
     * id directly (entry i is token i). `texts` is optional and, when given,
     * aligned with the support.
     *
     * @throws InvalidDistribution if any invariant fails: probabilities must
     *         sum to 1 within 1e-9, entries must be <= 1e-12, the selected
     *         index must be in range and not the tail, ids must be distinct.
     */
    TokenDistribution(std::size_t position,
                      std::vector<double> log_probs,
                      std::vector<std::int64_t> token_ids,
                      std::size_t selected_index,
                      Coverage coverage,
                      std::optional<std::size_t> tail_index = std::nullopt,
                      std::vector<std::string> texts = {},
                      ScoreView raw_logits = {});

    std::size_t position() const noexcept { return position_; }
    std::span<const double> log_probs() const noexcept { return log_probs_; }
    std::size_t support_size() const noexcept { return log_probs_.size(); }
    std::size_t selected_index() const noexcept { return selected_index_; }
    Coverage coverage() const noexcept { return coverage_; }
    std::optional<std::size_t> tail_index() const noexcept { return tail_index_; }
    bool approximate() const noexcept { return coverage_ == Coverage::TopKLumped; }

    std::int64_t token_id(std::size_t index) const noexcept;
    std::int64_t selected_token_id() const noexcept { return token_id(selected_index_); }
    bool has_explicit_ids() const noexcept { return !token_ids_.empty(); }

    /// Alternative token texts aligned with the support; empty if unknown.
    std::span<const std::string> texts() const noexcept { return texts_; }

    /// Raw scores this distribution was normalized from; empty if it was
    /// built from log-probabilities directly.
    std::span<const double> raw_logits() const noexcept { return raw_.values(); }

    TokenDistribution with_position(std::size_t position) const;

private:
    std::size_t position_;
    std::vector<double> log_probs_;
    std::vector<std::int64_t> token_ids_;
    std::size_t selected_index_;
    Coverage coverage_;
    std::optional<std::size_t> tail_index_;
    std::vector<std::string> texts_;
    ScoreView raw_;
};

/// Max-shifted log-sum-exp. Returns -inf for an empty span.
double logsumexp(std::span<const double> values);

/**
 * Log-softmax of raw scores into a Full-coverage distribution over token ids
 * 0..n-1.
 *
 * @throws EmptySupport  for an empty score vector
 * @throws InvalidLogits for any non-finite score or an out-of-range selection
 */
TokenDistribution normalize_logits(ScoreView logits, std::size_t selected,
                                   std::size_t position = 0);

inline TokenDistribution normalize_logits(std::vector<double> logits, std::size_t selected,
                                          std::size_t position = 0) {
    return normalize_logits(ScoreView::adopt(std::move(logits)), selected, position);
}

}  // namespace tokenprobe
