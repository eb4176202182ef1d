// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tokenprobe Authors

#include "tokenprobe/metric_cache.hpp"

namespace tokenprobe {

std::span<const double> MetricCache::get(MetricKind kind,
                                         std::span<const TokenDistribution> sequence) const {
    Slot& s = slot(kind);
    std::lock_guard lock(s.mutex);
    if (!s.values) {
        s.values = compute_metric_vector(kind, sequence);
        ++s.computed;
    }
    return *s.values;
}

std::size_t MetricCache::compute_count(MetricKind kind) const {
    Slot& s = slot(kind);
    std::lock_guard lock(s.mutex);
    return s.computed;
}

bool MetricCache::is_cached(MetricKind kind) const {
    Slot& s = slot(kind);
    std::lock_guard lock(s.mutex);
    return s.values.has_value();
}

}  // namespace tokenprobe
