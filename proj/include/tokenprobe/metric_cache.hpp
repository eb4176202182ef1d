#pragma once

// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tokenprobe Authors

/**
 * @file metric_cache.hpp
 * @brief Lazily filled per-sequence metric vectors.
 *
 * Each metric kind owns one slot. The first get() for a kind computes the
 * whole per-position vector and publishes it; every later get() returns a
 * view of the same storage. Slots are never reset, so returned spans stay
 * valid for the lifetime of the cache.
 *
 * Fills are serialized per slot, which makes compute_count() exact even
 * under concurrent first reads.
 */

#include <array>
#include <cstddef>
#include <mutex>
#include <optional>
#include <span>
#include <vector>

#include "tokenprobe/distribution.hpp"
#include "tokenprobe/metrics.hpp"

namespace tokenprobe {

class MetricCache {
public:
    MetricCache() = default;
    MetricCache(const MetricCache&) = delete;
    MetricCache& operator=(const MetricCache&) = delete;

    std::span<const double> get(MetricKind kind,
                                std::span<const TokenDistribution> sequence) const;

    std::size_t compute_count(MetricKind kind) const;
    bool is_cached(MetricKind kind) const;

private:
    struct Slot {
        mutable std::mutex mutex;
        std::optional<std::vector<double>> values;
        std::size_t computed = 0;
    };

    Slot& slot(MetricKind kind) const { return slots_[static_cast<std::size_t>(kind)]; }

    mutable std::array<Slot, kAllMetricKinds.size()> slots_;
};

}  // namespace tokenprobe
