#pragma once

// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tokenprobe Authors

/**
 * @file backend.hpp
 * @brief Teacher-forced scoring through a completions-style HTTP API.
 *
 * The client sends the prompt with echo enabled and asks for top-k
 * log-probabilities of every prompt token. Each scored token becomes a
 * lumped TokenDistribution (see lump_tail). Servers that return no
 * distribution for the first token (nothing to condition on) simply yield
 * one distribution fewer.
 *
 * The API key, when needed, is read from the environment variable named in
 * the descriptor at request time; it is never stored.
 */

#include <chrono>
#include <string>
#include <string_view>
#include <vector>

#include "tokenprobe/distribution.hpp"

namespace tokenprobe {

struct BackendDescriptor {
    std::string base_url;  ///< e.g. http://127.0.0.1:8000 or http://host/v1
    std::string model;
    int top_k = 20;
    double timeout_seconds = 30.0;
    std::string auth_env;  ///< name of the env var holding a bearer token
    int retries = 2;
    std::chrono::milliseconds backoff{500};  ///< doubled after each retry

    /// @throws Error if top_k < 1, timeout <= 0 or the URL is unusable.
    void validate() const;
};

struct ScoredText {
    std::vector<TokenDistribution> distributions;
    std::vector<std::string> token_texts;
};

/**
 * @throws BackendTimeout     when every attempt timed out
 * @throws BackendError       for non-2xx answers or unparseable bodies
 * @throws UnsupportedBackend when the answer carries no logprobs
 */
ScoredText fetch_logprobs(const BackendDescriptor& backend, std::string_view prompt);

/// Request body sent by fetch_logprobs.
std::string completion_request_body(const BackendDescriptor& backend, std::string_view prompt);

/**
 * Converts a completions response body into distributions. Token ids are
 * assigned by interning token texts in order of first appearance.
 * Tokens whose text offset lies beyond the prompt are dropped.
 */
ScoredText parse_completion_response(std::string_view body, std::size_t prompt_bytes,
                                     int http_status = 200);

}  // namespace tokenprobe
