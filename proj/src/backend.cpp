// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tokenprobe Authors

#include "tokenprobe/backend.hpp"

#include <algorithm>
#include <cstdlib>
#include <thread>
#include <unordered_map>

#include "httplib.h"
#include "json.hpp"
#include "tokenprobe/errors.hpp"
#include "tokenprobe/records.hpp"

namespace tokenprobe {

namespace {

using json = nlohmann::json;

constexpr std::size_t kFragmentLimit = 200;

std::string fragment(std::string_view body) {
    if (body.size() <= kFragmentLimit) return std::string(body);
    return std::string(body.substr(0, kFragmentLimit)) + "...";
}

struct Endpoint {
    std::string origin;  // scheme://host[:port]
    std::string path;
};

Endpoint split_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw Error("backend URL needs a scheme: " + url);
    // Built without TLS.
    if (url.compare(0, scheme_end, "http") != 0) throw Error("only http:// backends are supported: " + url);
    const auto path_start = url.find('/', scheme_end + 3);
    Endpoint ep;
    ep.origin = url.substr(0, path_start);
    std::string prefix = path_start == std::string::npos ? "" : url.substr(path_start);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    const bool has_version = prefix.size() >= 3 && prefix.compare(prefix.size() - 3, 3, "/v1") == 0;
    ep.path = prefix + (has_version ? "/completions" : "/v1/completions");
    return ep;
}

bool retryable_status(int status) { return status == 429 || status >= 500; }

}  // namespace

void BackendDescriptor::validate() const {
    if (top_k < 1) throw Error("top-k request size must be >= 1");
    if (!(timeout_seconds > 0.0)) throw Error("backend timeout must be positive");
    if (retries < 0) throw Error("retry count must be non-negative");
    split_url(base_url);
}

std::string completion_request_body(const BackendDescriptor& backend, std::string_view prompt) {
    json body;
    if (!backend.model.empty()) body["model"] = backend.model;
    body["prompt"] = std::string(prompt);
    body["echo"] = true;
    body["logprobs"] = backend.top_k;
    body["max_tokens"] = 0;
    body["temperature"] = 0;
    return body.dump();
}

ScoredText parse_completion_response(std::string_view body, std::size_t prompt_bytes,
                                     int http_status) {
    json doc;
    try {
        doc = json::parse(body);
    } catch (const json::exception&) {
        throw BackendError(http_status, "unparseable response body", fragment(body));
    }
    const json* logprobs = nullptr;
    if (doc.is_object()) {
        auto choices = doc.find("choices");
        if (choices != doc.end() && choices->is_array() && !choices->empty() &&
            (*choices)[0].is_object()) {
            auto it = (*choices)[0].find("logprobs");
            if (it != (*choices)[0].end() && it->is_object()) logprobs = &*it;
        }
    }
    if (!logprobs || !logprobs->contains("tokens") || !logprobs->contains("top_logprobs"))
        throw UnsupportedBackend("response carries no per-token logprobs: " + fragment(body));

    const auto& tokens = (*logprobs)["tokens"];
    const auto& top = (*logprobs)["top_logprobs"];
    const json empty_array = json::array();
    const auto& chosen = logprobs->contains("token_logprobs") ? (*logprobs)["token_logprobs"]
                                                              : empty_array;
    const auto& offsets = logprobs->contains("text_offset") ? (*logprobs)["text_offset"]
                                                            : empty_array;
    if (!tokens.is_array() || !top.is_array() || top.size() != tokens.size())
        throw BackendError(http_status, "tokens and top_logprobs are not aligned", fragment(body));

    std::unordered_map<std::string, std::int64_t> vocabulary;
    auto intern = [&](const std::string& text) {
        auto [it, inserted] = vocabulary.emplace(text, static_cast<std::int64_t>(vocabulary.size()));
        return it->second;
    };

    ScoredText out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (offsets.is_array() && i < offsets.size() && offsets[i].is_number_integer() &&
            offsets[i].get<std::size_t>() >= prompt_bytes)
            break;
        if (top[i].is_null()) continue;
        if (!tokens[i].is_string() || !top[i].is_object())
            throw BackendError(http_status, "malformed logprobs entry " + std::to_string(i),
                               fragment(top[i].dump()));

        const auto token_text = tokens[i].get<std::string>();
        std::vector<TopKEntry> entries;
        entries.reserve(top[i].size() + 1);
        bool have_selected = false;
        for (const auto& [text, lp] : top[i].items()) {
            if (!lp.is_number())
                throw BackendError(http_status, "non-numeric logprob", fragment(top[i].dump()));
            entries.push_back({intern(text), lp.get<double>(), text});
            have_selected = have_selected || text == token_text;
        }
        // Some servers omit the chosen token when it falls outside the top-k
        // but still report its own logprob; keep it as an explicit entry.
        if (!have_selected && i < chosen.size() && chosen[i].is_number())
            entries.push_back({intern(token_text), chosen[i].get<double>(), token_text});

        std::stable_sort(entries.begin(), entries.end(),
                         [](const TopKEntry& a, const TopKEntry& b) {
                             return a.logprob > b.logprob ||
                                    (a.logprob == b.logprob && a.text < b.text);
                         });
        out.distributions.push_back(lump_tail(entries, intern(token_text), out.distributions.size()));
        out.token_texts.push_back(token_text);
    }
    return out;
}

ScoredText fetch_logprobs(const BackendDescriptor& backend, std::string_view prompt) {
    backend.validate();
    const auto ep = split_url(backend.base_url);

    httplib::Client client(ep.origin);
    const auto timeout = std::chrono::duration<double>(backend.timeout_seconds);
    const auto micros = std::chrono::duration_cast<std::chrono::microseconds>(timeout);
    client.set_connection_timeout(micros);
    client.set_read_timeout(micros);
    client.set_write_timeout(micros);

    httplib::Headers headers;
    if (!backend.auth_env.empty()) {
        if (const char* token = std::getenv(backend.auth_env.c_str()); token && *token)
            headers.emplace("Authorization", std::string("Bearer ") + token);
    }
    const auto body = completion_request_body(backend, prompt);

    auto delay = backend.backoff;
    for (int attempt = 0;; ++attempt) {
        const bool last = attempt >= backend.retries;
        auto res = client.Post(ep.path, headers, body, "application/json");
        if (!res) {
            const auto err = res.error();
            if (!last) {
                std::this_thread::sleep_for(delay);
                delay *= 2;
                continue;
            }
            if (err == httplib::Error::Read || err == httplib::Error::ConnectionTimeout ||
                err == httplib::Error::Write)
                throw BackendTimeout("backend did not answer within " +
                                     std::to_string(backend.timeout_seconds) + " s (" +
                                     httplib::to_string(err) + ")");
            throw BackendError(0, "transport failure: " + httplib::to_string(err));
        }
        if (res->status < 200 || res->status >= 300) {
            if (!last && retryable_status(res->status)) {
                std::this_thread::sleep_for(delay);
                delay *= 2;
                continue;
            }
            throw BackendError(res->status, "request rejected", fragment(res->body));
        }
        return parse_completion_response(res->body, prompt.size(), res->status);
    }
}

}  // namespace tokenprobe
