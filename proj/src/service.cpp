// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tokenprobe Authors

#include "tokenprobe/service.hpp"

#include <charconv>
#include <sstream>
#include <thread>

#include "httplib.h"
#include "tokenprobe/errors.hpp"
#include "tokenprobe/records.hpp"
#include "tokenprobe/report.hpp"

namespace tokenprobe {

namespace {

constexpr std::size_t kEvictedMemory = 4096;
constexpr const char* kJson = "application/json";

void send_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(render(body), kJson);
}

void send_error(httplib::Response& res, int status, const std::string& message,
                std::optional<std::size_t> line = std::nullopt) {
    json body = {{"error", message}};
    if (line) body["line"] = *line;
    send_json(res, status, body);
}

/// Maps library exceptions onto HTTP statuses.
void send_exception(httplib::Response& res, std::exception_ptr eptr) {
    try {
        std::rethrow_exception(eptr);
    } catch (const BackendTimeout& e) {
        send_error(res, 504, e.what());
    } catch (const BackendError& e) {
        json body = {{"error", e.what()}, {"upstream_status", e.status()}};
        send_json(res, 502, body);
    } catch (const UnsupportedBackend& e) {
        send_error(res, 502, e.what());
    } catch (const NoBaseline& e) {
        send_error(res, 409, e.what());
    } catch (const NoData& e) {
        send_error(res, 409, e.what());
    } catch (const Error& e) {
        send_error(res, 400, e.message(), e.line());
    } catch (const json::exception& e) {
        send_error(res, 400, std::string("malformed request body: ") + e.what());
    } catch (const std::exception& e) {
        send_error(res, 500, e.what());
    }
}

std::optional<std::size_t> parse_index(const std::string& text) {
    std::size_t v = 0;
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || ptr != end) return std::nullopt;
    return v;
}

}  // namespace

void ServiceConfig::validate() const {
    if (port < 0 || port > 65535) throw Error("port must be in [0, 65535]");
    if (capacity < 1) throw Error("session store capacity must be >= 1");
    if (backend) backend->validate();
    thresholds.validate();
    monitor.validate();
}

SessionStore::SessionStore(std::size_t capacity) : capacity_(capacity) {
    if (capacity_ < 1) throw Error("session store capacity must be >= 1");
}

void SessionStore::insert(std::shared_ptr<const AnalysisSession> session) {
    std::lock_guard lock(mutex_);
    const auto id = session->id();
    if (auto it = entries_.find(id); it != entries_.end()) {
        order_.erase(it->second.order);
        entries_.erase(it);
    }
    order_.push_front(id);
    entries_.emplace(id, Entry{std::move(session), order_.begin()});
    while (entries_.size() > capacity_) {
        const auto victim = order_.back();
        order_.pop_back();
        entries_.erase(victim);
        evicted_.insert(victim);
        evicted_order_.push_back(victim);
        if (evicted_order_.size() > kEvictedMemory) {
            evicted_.erase(evicted_order_.front());
            evicted_order_.pop_front();
        }
    }
}

std::pair<SessionStore::Lookup, std::shared_ptr<const AnalysisSession>> SessionStore::find(
    const std::string& id) {
    std::lock_guard lock(mutex_);
    if (auto it = entries_.find(id); it != entries_.end()) {
        order_.splice(order_.begin(), order_, it->second.order);
        return {Lookup::Found, it->second.session};
    }
    if (evicted_.count(id)) return {Lookup::Evicted, nullptr};
    return {Lookup::Unknown, nullptr};
}

std::size_t SessionStore::size() const {
    std::lock_guard lock(mutex_);
    return entries_.size();
}

struct Service::Impl {
    explicit Impl(ServiceConfig cfg)
        : config(std::move(cfg)), store(config.capacity), monitor(config.monitor) {
        // The library default adds SO_REUSEPORT, which would let a second
        // instance share the port instead of failing to bind.
        server.set_socket_options([](socket_t sock) {
            int yes = 1;
            ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof yes);
        });
        routes();
    }

    ServiceConfig config;
    SessionStore store;
    httplib::Server server;
    std::mutex monitor_mutex;
    MonitorState monitor;
    std::thread worker;
    int port = -1;

    /// Resolves the {id} path parameter or writes the 404/410 answer.
    std::shared_ptr<const AnalysisSession> lookup(const httplib::Request& req, httplib::Response& res) {
        const auto [status, session] = store.find(req.path_params.at("id"));
        switch (status) {
            case SessionStore::Lookup::Found: return session;
            case SessionStore::Lookup::Evicted:
                send_error(res, 410, "session was evicted");
                return nullptr;
            case SessionStore::Lookup::Unknown: break;
        }
        send_error(res, 404, "unknown session");
        return nullptr;
    }

    std::shared_ptr<const AnalysisSession> create_session(const httplib::Request& req) {
        std::string label = req.has_param("label") ? req.get_param_value("label") : "";

        // A JSON object with "prompt" or "records" is a request envelope;
        // anything else is taken as a raw record stream.
        std::optional<json> envelope;
        if (!req.body.empty()) {
            auto doc = json::parse(req.body, nullptr, false);
            if (doc.is_object() && (doc.contains("prompt") || doc.contains("records"))) envelope = std::move(doc);
        }

        if (!envelope) {
            auto parsed = parse_records(req.body);
            return build_session(label.empty() ? "records" : label, std::move(parsed.distributions),
                                 std::move(parsed.token_texts));
        }

        const json& env = *envelope;
        if (env.contains("label")) label = env.at("label").get<std::string>();
        if (env.contains("prompt") && env.contains("records"))
            throw Error("give either \"prompt\" or \"records\", not both");

        if (env.contains("records")) {
            const auto& records = env.at("records");
            std::string text;
            if (records.is_string()) {
                text = records.get<std::string>();
            } else if (records.is_array()) {
                for (const auto& r : records) text += r.dump() + "\n";
            } else {
                throw Error("\"records\" must be a string or an array");
            }
            auto parsed = parse_records(text);
            return build_session(label.empty() ? "records" : label, std::move(parsed.distributions),
                                 std::move(parsed.token_texts));
        }

        const auto prompt = env.at("prompt").get<std::string>();
        std::optional<BackendDescriptor> backend = config.backend;
        if (env.contains("backend")) {
            const auto& b = env.at("backend");
            BackendDescriptor d = backend.value_or(BackendDescriptor{});
            if (b.is_string()) {
                d.base_url = b.get<std::string>();
            } else {
                d.base_url = b.value("url", d.base_url);
                d.model = b.value("model", d.model);
                d.top_k = b.value("top_k", d.top_k);
            }
            backend = d;
        }
        if (!backend) throw Error("no backend configured for prompt scoring");
        backend->validate();
        auto scored = fetch_logprobs(*backend, prompt);
        return build_session(label.empty() ? "prompt" : label, std::move(scored.distributions),
                             std::move(scored.token_texts), prompt);
    }

    template <class F>
    static httplib::Server::Handler guarded(F f) {
        return [f](const httplib::Request& req, httplib::Response& res) {
            try {
                f(req, res);
            } catch (...) {
                send_exception(res, std::current_exception());
            }
        };
    }

    void routes() {
        server.Post("/sessions", guarded([this](const httplib::Request& req, httplib::Response& res) {
            auto session = create_session(req);
            json body = {{"id", session->id()}, {"tokens", session->size()}, {"label", session->label()}};
            store.insert(std::move(session));
            send_json(res, 201, body);
        }));

        server.Get("/sessions/:id/report", guarded([this](const httplib::Request& req, httplib::Response& res) {
            if (auto s = lookup(req, res)) send_json(res, 200, session_report(*s, config.thresholds));
        }));

        server.Get("/sessions/:id/metrics/:kind",
                   guarded([this](const httplib::Request& req, httplib::Response& res) {
                       auto s = lookup(req, res);
                       if (!s) return;
                       const auto kind = parse_metric_kind(req.path_params.at("kind"));
                       if (!kind) return send_error(res, 404, "unknown metric");
                       send_json(res, 200, metric_json(*s, *kind));
                   }));

        server.Get("/sessions/:id/scatter", guarded([this](const httplib::Request& req, httplib::Response& res) {
            if (auto s = lookup(req, res)) send_json(res, 200, scatter_json(*s));
        }));

        server.Get("/sessions/:id/tokens/:pos/topk",
                   guarded([this](const httplib::Request& req, httplib::Response& res) {
                       auto s = lookup(req, res);
                       if (!s) return;
                       const auto pos = parse_index(req.path_params.at("pos"));
                       if (!pos || *pos >= s->size()) return send_error(res, 404, "position out of range");
                       std::size_t k = 10;
                       if (req.has_param("k")) {
                           const auto parsed = parse_index(req.get_param_value("k"));
                           if (!parsed || *parsed < 1) return send_error(res, 400, "k must be a positive integer");
                           k = *parsed;
                       }
                       send_json(res, 200, topk_json(*s, *pos, k));
                   }));

        server.Get("/monitor/status", guarded([this](const httplib::Request&, httplib::Response& res) {
            std::lock_guard lock(monitor_mutex);
            send_json(res, 200, monitor_status_json(monitor));
        }));

        server.Post("/monitor/observe", guarded([this](const httplib::Request& req, httplib::Response& res) {
            ParseOptions opts;
            opts.contiguous_positions = false;
            std::istringstream in(req.body);
            std::string line;
            std::size_t line_no = 0, observed = 0, skipped = 0;
            json errors = json::array();
            std::lock_guard lock(monitor_mutex);
            const auto alarms_before = monitor.alarms().size();
            while (std::getline(in, line)) {
                ++line_no;
                if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
                try {
                    const auto rec = parse_record(line, line_no, opts);
                    monitor.observe(compute_metrics(rec.distribution));
                    if (monitor.baseline()) monitor.score_all();
                    ++observed;
                } catch (const Error& e) {
                    ++skipped;
                    errors.push_back({{"line", line_no}, {"error", e.message()}});
                }
            }
            json alarms = json::array();
            for (auto i = alarms_before; i < monitor.alarms().size(); ++i)
                alarms.push_back(alarm_json(monitor.alarms()[i]));
            send_json(res, 200,
                      {{"observed", observed}, {"skipped", skipped}, {"errors", errors}, {"alarms", alarms}});
        }));

        server.Post("/monitor/baseline", guarded([this](const httplib::Request&, httplib::Response& res) {
            std::lock_guard lock(monitor_mutex);
            monitor.freeze_baseline();
            send_json(res, 200, monitor_status_json(monitor));
        }));

        if (config.assets && !server.set_mount_point("/", *config.assets))
            throw Error("asset directory not found: " + *config.assets);
    }
};

Service::Service(ServiceConfig config) {
    config.validate();
    impl_ = std::make_unique<Impl>(std::move(config));
}

Service::~Service() { stop(); }

int Service::bind() {
    auto& s = impl_->server;
    const auto& cfg = impl_->config;
    if (cfg.port == 0) {
        impl_->port = s.bind_to_any_port(cfg.host);
    } else {
        impl_->port = s.bind_to_port(cfg.host, cfg.port) ? cfg.port : -1;
    }
    if (impl_->port < 0)
        throw Error("cannot bind " + cfg.host + ":" + std::to_string(cfg.port));
    return impl_->port;
}

void Service::run() {
    if (!impl_->server.listen_after_bind()) throw Error("server stopped with an error");
}

int Service::start() {
    const int port = bind();
    impl_->worker = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
    return port;
}

void Service::stop() {
    if (!impl_) return;
    impl_->server.stop();
    if (impl_->worker.joinable()) impl_->worker.join();
}

SessionStore& Service::store() noexcept { return impl_->store; }

}  // namespace tokenprobe
