#pragma once

// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tokenprobe Authors

/**
 * @file service.hpp
 * @brief HTTP API over analysis sessions and a shared stream monitor.
 *
 * Endpoints:
 *   POST /sessions                       record payload, or {"prompt": ..} scored by the backend
 *   GET  /sessions/{id}/report           same bytes as `tokenprobe analyze`
 *   GET  /sessions/{id}/metrics/{kind}   values, color intensities, compute counter
 *   GET  /sessions/{id}/scatter
 *   GET  /sessions/{id}/tokens/{pos}/topk?k=10
 *   GET  /monitor/status
 *   POST /monitor/observe                record lines fed into the monitor
 *   POST /monitor/baseline               freeze the current window as baseline
 *
 * Unknown session ids answer 404; ids that were evicted answer 410.
 */

#include <cstddef>
#include <list>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <deque>

#include "tokenprobe/backend.hpp"
#include "tokenprobe/monitor.hpp"
#include "tokenprobe/session.hpp"

namespace tokenprobe {

struct ServiceConfig {
    std::string host = "127.0.0.1";
    int port = 8080;  ///< 0 picks a free port
    std::size_t capacity = 64;
    std::optional<BackendDescriptor> backend;
    std::optional<std::string> assets;
    FlagThresholds thresholds;
    MonitorConfig monitor;

    void validate() const;
};

/// Bounded LRU map of sessions that remembers what it evicted.
class SessionStore {
public:
    enum class Lookup { Found, Evicted, Unknown };

    explicit SessionStore(std::size_t capacity);

    void insert(std::shared_ptr<const AnalysisSession> session);
    std::pair<Lookup, std::shared_ptr<const AnalysisSession>> find(const std::string& id);

    std::size_t size() const;
    std::size_t capacity() const noexcept { return capacity_; }

private:
    struct Entry {
        std::shared_ptr<const AnalysisSession> session;
        std::list<std::string>::iterator order;
    };

    mutable std::mutex mutex_;
    std::size_t capacity_;
    std::list<std::string> order_;  // most recent first
    std::unordered_map<std::string, Entry> entries_;
    std::unordered_set<std::string> evicted_;
    std::deque<std::string> evicted_order_;
};

class Service {
public:
    explicit Service(ServiceConfig config);
    ~Service();

    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    /// Binds the listening socket and returns the bound port.
    /// @throws Error if the address cannot be bound.
    int bind();

    /// Serves on the bound socket until stop(); blocks.
    void run();

    /// bind() + run() on a background thread.
    int start();
    void stop();

    SessionStore& store() noexcept;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace tokenprobe
