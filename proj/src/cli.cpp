// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tokenprobe Authors

#include "tokenprobe/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "tokenprobe/backend.hpp"
#include "tokenprobe/errors.hpp"
#include "tokenprobe/monitor.hpp"
#include "tokenprobe/records.hpp"
#include "tokenprobe/report.hpp"
#include "tokenprobe/service.hpp"
#include "tokenprobe/session.hpp"

namespace tokenprobe {

namespace {

/// Input the user pointed us at could not be read; maps to exit 2.
class InputError : public Error {
public:
    using Error::Error;
};

struct BackendOptions {
    std::string url;
    std::string model;
    int top_k = 20;
    double timeout = 30.0;
    std::string auth_env;

    void add_to(CLI::App& app, bool required) {
        auto* opt = app.add_option("--backend", url, "Completions endpoint base URL");
        if (required) opt->required();
        app.add_option("--model", model, "Model name sent to the backend");
        app.add_option("--topk", top_k, "Alternatives requested per position")->check(CLI::PositiveNumber);
        app.add_option("--timeout", timeout, "Per-request timeout in seconds")->check(CLI::PositiveNumber);
        app.add_option("--api-key-env", auth_env, "Environment variable holding a bearer token");
    }

    BackendDescriptor descriptor() const {
        BackendDescriptor d;
        d.base_url = url;
        d.model = model;
        d.top_k = top_k;
        d.timeout_seconds = timeout;
        d.auth_env = auth_env;
        d.validate();
        return d;
    }
};

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw InputError("cannot read " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    if (f.bad()) throw InputError("cannot read " + path);
    return ss.str();
}

/// Prompt files conventionally end in a newline that is not part of the text.
std::string read_prompt(const std::string& path) {
    auto text = read_file(path);
    if (!text.empty() && text.back() == '\n') {
        text.pop_back();
        if (!text.empty() && text.back() == '\r') text.pop_back();
    }
    return text;
}

std::shared_ptr<const AnalysisSession> session_from_records(const std::string& path, const std::string& label,
                                                            const ParseOptions& opts = {}) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw InputError("cannot read " + path);
    auto parsed = parse_records(f, opts);
    return build_session(label, std::move(parsed.distributions), std::move(parsed.token_texts));
}

std::shared_ptr<const AnalysisSession> session_from_backend(const BackendDescriptor& backend,
                                                            const std::string& prompt, const std::string& label) {
    auto scored = fetch_logprobs(backend, prompt);
    return build_session(label, std::move(scored.distributions), std::move(scored.token_texts), prompt);
}

void emit(const std::string& text, const std::string& path, std::ostream& out) {
    if (path.empty() || path == "-") {
        out << text;
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw InputError("cannot write " + path);
    f << text;
    if (!f) throw InputError("cannot write " + path);
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

struct MonitorOptions {
    std::string records = "-";
    std::size_t window = MonitorConfig{}.capacity;
    double alarm_k = MonitorConfig{}.alarm_k;
    std::size_t baseline = 0;  // 0: one full window
    std::size_t interval = 0;  // 0: no periodic lines
};

int run_monitor(const MonitorOptions& o, std::istream& in, std::ostream& out, std::ostream& err) {
    MonitorConfig cfg;
    cfg.capacity = o.window;
    cfg.alarm_k = o.alarm_k;
    MonitorState monitor(cfg);
    const std::size_t baseline_after = o.baseline ? o.baseline : o.window;

    std::ifstream file;
    std::istream* src = &in;
    if (o.records != "-") {
        file.open(o.records, std::ios::binary);
        if (!file) throw InputError("cannot read " + o.records);
        src = &file;
    }

    out << "# monitor window=" << cfg.capacity << " alarm_k=" << cfg.alarm_k << " baseline=" << baseline_after
        << " interval=" << o.interval << "\n";

    ParseOptions opts;
    opts.contiguous_positions = false;
    std::string line;
    std::size_t line_no = 0, skipped = 0, alarm_lines = 0;
    std::set<MonitorSignal> active;
    while (std::getline(*src, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const auto rec = parse_record(line, line_no, opts);
            monitor.observe(compute_metrics(rec.distribution));
        } catch (const Error& e) {
            ++skipped;
            err << "skipped: " << e.what() << "\n";
            continue;
        }

        const auto n = monitor.observations();
        if (!monitor.baseline() && n >= baseline_after) {
            monitor.freeze_baseline();
            out << "# baseline frozen at observation " << n - 1 << "\n";
        }
        if (monitor.baseline()) {
            const auto scores = monitor.score_all();
            std::set<MonitorSignal> now;
            for (std::size_t i = 0; i < scores.size(); ++i)
                if (scores[i] > cfg.alarm_k) now.insert(kAllMonitorSignals[i]);
            for (auto s : now) {
                if (active.count(s)) continue;
                out << "ALARM observation=" << n - 1 << " signal=" << to_string(s)
                    << " score=" << format_double(scores[static_cast<std::size_t>(s)]) << "\n";
                ++alarm_lines;
            }
            for (auto s : active)
                if (!now.count(s)) out << "CLEAR observation=" << n - 1 << " signal=" << to_string(s) << "\n";
            active = std::move(now);
        }
        if (o.interval && n % o.interval == 0) {
            out << "observation=" << n - 1;
            for (auto kind : kWindowMetrics)
                out << " " << to_string(kind) << "_mean=" << format_double(monitor.window_stats(kind).mean);
            out << " perplexity=" << format_double(monitor.window_perplexity()) << "\n";
        }
    }
    if (src->bad()) throw InputError("read error on " + o.records);
    out << "# done observations=" << monitor.observations() << " skipped=" << skipped << " alarms=" << alarm_lines
        << "\n";
    return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err) {
    CLI::App app{"Token-level uncertainty metrics for language model outputs", "tokenprobe"};
    app.require_subcommand(1);

    // analyze
    auto* analyze = app.add_subcommand("analyze", "Score one input and write its session report");
    std::string a_records, a_prompt, a_out, a_label, a_buffer;
    BackendOptions a_backend;
    FlagThresholds a_flags;
    analyze->add_option("--records", a_records, "Record file (one JSON record per line)");
    a_backend.add_to(*analyze, false);
    analyze->add_option("--prompt-file", a_prompt, "Text to score with --backend");
    analyze->add_option("--out", a_out, "Report path (default: stdout)");
    analyze->add_option("--label", a_label, "Session label");
    analyze->add_option("--logits-buffer", a_buffer, "float64 side buffer referenced by logits_ref");
    analyze->add_option("--flag-entropy", a_flags.entropy, "Entropy flag threshold (nats)");
    analyze->add_option("--flag-varentropy", a_flags.varentropy, "Varentropy flag threshold");
    analyze->add_option("--flag-surprisal", a_flags.surprisal, "Surprisal flag threshold (nats)");

    // reversal
    auto* reversal = app.add_subcommand("reversal", "Compare a text with its word-reversed form");
    std::string r_prompt, r_out;
    BackendOptions r_backend;
    reversal->add_option("--prompt-file", r_prompt, "Text file")->required();
    r_backend.add_to(*reversal, true);
    reversal->add_option("--out", r_out, "Comparison JSON path");

    // compare
    auto* comparison = app.add_subcommand("compare", "Compare two record files");
    std::string c_left, c_right, c_out;
    comparison->add_option("--left", c_left, "Left record file")->required();
    comparison->add_option("--right", c_right, "Right record file")->required();
    comparison->add_option("--out", c_out, "Comparison JSON path");

    // serve
    auto* serve = app.add_subcommand("serve", "Run the HTTP API");
    ServiceConfig s_cfg;
    BackendOptions s_backend;
    std::string s_assets;
    serve->add_option("--host", s_cfg.host, "Listen address");
    serve->add_option("--port", s_cfg.port, "Listen port (0 picks one)")->check(CLI::Range(0, 65535));
    serve->add_option("--capacity", s_cfg.capacity, "Sessions kept in memory")->check(CLI::PositiveNumber);
    serve->add_option("--assets", s_assets, "Directory of static UI files");
    serve->add_option("--window", s_cfg.monitor.capacity, "Monitor window size")->check(CLI::PositiveNumber);
    serve->add_option("--alarm-k", s_cfg.monitor.alarm_k, "Monitor alarm multiplier")->check(CLI::PositiveNumber);
    s_backend.add_to(*serve, false);

    // monitor
    auto* monitor = app.add_subcommand("monitor", "Watch a record stream for drift");
    MonitorOptions m;
    monitor->add_option("--records", m.records, "Record stream, '-' for stdin");
    monitor->add_option("--window", m.window, "Window size")->check(CLI::PositiveNumber);
    monitor->add_option("--alarm-k", m.alarm_k, "Alarm multiplier")->check(CLI::PositiveNumber);
    monitor->add_option("--baseline", m.baseline, "Freeze the baseline after N observations (default: window)");
    monitor->add_option("--interval", m.interval, "Print rolling means every N observations (0: never)");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (analyze->parsed()) {
            const bool have_records = !a_records.empty();
            const bool have_backend = !a_backend.url.empty();
            if (have_records == have_backend || (have_backend && a_prompt.empty()) ||
                (have_records && !a_prompt.empty())) {
                err << "analyze needs exactly one source: --records FILE, or --backend URL with --prompt-file FILE\n"
                    << analyze->help();
                return kExitUsage;
            }
            a_flags.validate();
            std::shared_ptr<const AnalysisSession> session;
            if (have_records) {
                ParseOptions opts;
                if (!a_buffer.empty()) {
                    try {
                        opts.side_buffer = LogitBuffer::open(a_buffer);
                    } catch (const Error& e) {
                        throw InputError(e.what());
                    }
                }
                session = session_from_records(a_records, a_label.empty() ? "records" : a_label, opts);
            } else {
                session = session_from_backend(a_backend.descriptor(), read_prompt(a_prompt),
                                               a_label.empty() ? "prompt" : a_label);
            }
            emit(render(session_report(*session, a_flags)), a_out, out);
            return kExitOk;
        }

        if (reversal->parsed()) {
            const auto backend = r_backend.descriptor();
            const auto text = read_prompt(r_prompt);
            const auto original = session_from_backend(backend, text, "original");
            const auto reversed = session_from_backend(backend, reverse_words(text), "reversed");
            const auto report = compare(*original, *reversed);
            out << comparison_table(report);
            if (!r_out.empty()) emit(render(comparison_json(report)), r_out, out);
            return kExitOk;
        }

        if (comparison->parsed()) {
            const auto left = session_from_records(c_left, "left");
            const auto right = session_from_records(c_right, "right");
            const auto report = compare(*left, *right);
            out << comparison_table(report);
            if (!c_out.empty()) emit(render(comparison_json(report)), c_out, out);
            return kExitOk;
        }

        if (serve->parsed()) {
            if (!s_backend.url.empty()) s_cfg.backend = s_backend.descriptor();
            if (!s_assets.empty()) s_cfg.assets = s_assets;
            Service service(s_cfg);
            const int port = service.bind();
            out << "listening on http://" << s_cfg.host << ":" << port << "\n" << std::flush;
            service.run();
            return kExitOk;
        }

        if (monitor->parsed()) return run_monitor(m, in, out, err);
    } catch (const InputError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const BackendTimeout& e) {
        err << "backend timeout: " << e.what() << "\n";
        return kExitBackend;
    } catch (const BackendError& e) {
        err << "backend error: " << e.what() << "\n";
        return kExitBackend;
    } catch (const UnsupportedBackend& e) {
        err << "backend error: " << e.what() << "\n";
        return kExitBackend;
    } catch (const Error& e) {
        // Malformed records and invalid settings are input problems.
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitFailure;
    }
    return kExitFailure;
}

}  // namespace tokenprobe
