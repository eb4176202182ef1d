// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tokenprobe Authors

#include "tokenprobe/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ctime>

#include "tokenprobe/errors.hpp"

namespace tokenprobe {

namespace {

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> safe_ratio(double num, double den) {
    if (den == 0.0) return std::nullopt;
    return num / den;
}

}  // namespace

json summary_json(const SummaryStats& s) {
    return {{"mean", s.mean}, {"median", s.median}, {"min", s.min}, {"max", s.max}};
}

json aggregate_json(const AggregateStats& a) {
    json metrics = json::object();
    for (auto kind : kAllMetricKinds) metrics[std::string(to_string(kind))] = summary_json(a.of(kind));
    return {
        {"label", a.label},
        {"tokens", a.tokens},
        {"characters", a.characters},
        {"metrics", std::move(metrics)},
        {"perplexity", a.perplexity},
        {"mean_log_probability", a.mean_log_probability},
        {"approximate", a.approximate},
    };
}

json session_report(const AnalysisSession& session, const FlagThresholds& thresholds) {
    const auto agg = aggregate(session);
    json metrics = json::object();
    for (auto kind : kAllMetricKinds)
        metrics[std::string(to_string(kind))] = summary_json(agg.of(kind));

    json scatter = json::array();
    for (const auto& p : scatter_export(session))
        scatter.push_back({p.entropy, p.varentropy, p.position, p.token});

    json flags = json::array();
    for (const auto& f : flag_tokens(session, thresholds)) {
        json kinds = json::array();
        for (auto k : f.triggered) kinds.push_back(std::string(to_string(k)));
        flags.push_back({f.position, std::move(kinds)});
    }

    return {
        {"label", session.label()},
        {"tokens", agg.tokens},
        {"characters", agg.characters},
        {"metrics", std::move(metrics)},
        {"perplexity", agg.perplexity},
        {"scatter", std::move(scatter)},
        {"flags", std::move(flags)},
        {"approximate", agg.approximate},
    };
}

json comparison_json(const ComparisonReport& report) {
    json delta = json::object();
    json ratio = json::object();
    for (auto kind : kAllMetricKinds) {
        const auto name = std::string(to_string(kind));
        delta[name] = summary_json(report.delta(kind));
        const auto r = report.ratio(kind);
        ratio[name] = {{"mean", optional_number(r[0])},
                       {"median", optional_number(r[1])},
                       {"min", optional_number(r[2])},
                       {"max", optional_number(r[3])}};
    }
    const auto& l = report.left;
    const auto& r = report.right;
    delta["sequence_perplexity"] = r.perplexity - l.perplexity;
    delta["mean_log_probability"] = r.mean_log_probability - l.mean_log_probability;
    delta["tokens"] = static_cast<long long>(r.tokens) - static_cast<long long>(l.tokens);
    delta["characters"] = static_cast<long long>(r.characters) - static_cast<long long>(l.characters);
    ratio["sequence_perplexity"] = optional_number(safe_ratio(r.perplexity, l.perplexity));
    ratio["mean_log_probability"] =
        optional_number(safe_ratio(r.mean_log_probability, l.mean_log_probability));
    return {{"left", aggregate_json(l)}, {"right", aggregate_json(r)}, {"delta", delta}, {"ratio", ratio}};
}

json metric_json(const AnalysisSession& session, MetricKind kind) {
    const auto values = session.metric(kind);
    return {
        {"kind", std::string(to_string(kind))},
        {"values", json(std::vector<double>(values.begin(), values.end()))},
        {"intensities", color_map(values, kind)},
        {"stats", summary_json(summarize(values))},
        {"compute_count", session.cache().compute_count(kind)},
    };
}

json scatter_json(const AnalysisSession& session) {
    json points = json::array();
    for (const auto& p : scatter_export(session))
        points.push_back({p.entropy, p.varentropy, p.position, p.token});
    return {{"label", session.label()}, {"scatter", std::move(points)}};
}

json topk_json(const AnalysisSession& session, std::size_t index, std::size_t k) {
    if (index >= session.size()) throw Error("position out of range");
    const auto& d = session.distributions()[index];
    const auto lp = d.log_probs();
    std::vector<std::size_t> order;
    order.reserve(lp.size());
    for (std::size_t i = 0; i < lp.size(); ++i)
        if (d.tail_index() != i) order.push_back(i);
    const std::size_t take = std::min(k, order.size());
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end(),
                      [&](std::size_t a, std::size_t b) {
                          return lp[a] > lp[b] || (lp[a] == lp[b] && a < b);
                      });
    order.resize(take);

    json rows = json::array();
    for (auto i : order) {
        json row = {{"token_id", d.token_id(i)},
                    {"logprob", std::isfinite(lp[i]) ? json(lp[i]) : json(nullptr)},
                    {"probability", std::exp(lp[i])},
                    {"selected", i == d.selected_index()}};
        if (!d.texts().empty()) row["token"] = d.texts()[i];
        else if (i == d.selected_index()) row["token"] = session.token_texts()[index];
        rows.push_back(std::move(row));
    }
    return {
        {"position", d.position()},
        {"token", session.token_texts()[index]},
        {"k", k},
        {"alternatives", std::move(rows)},
        {"tail_mass", d.tail_index() ? std::exp(lp[*d.tail_index()]) : 0.0},
        {"approximate", d.approximate()},
    };
}

json alarm_json(const AlarmEntry& alarm) {
    const std::time_t t = std::chrono::system_clock::to_time_t(alarm.time);
    std::tm utc{};
    gmtime_r(&t, &utc);
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", &utc);
    json signals = json::array();
    for (auto s : alarm.signals) signals.push_back(std::string(to_string(s)));
    return json::array({alarm.observation, std::move(signals), stamp, alarm.scores});
}

json monitor_status_json(const MonitorState& monitor) {
    json out = {
        {"capacity", monitor.config().capacity},
        {"alarm_k", monitor.config().alarm_k},
        {"window_size", monitor.size()},
        {"observations", monitor.observations()},
    };
    json window = json::object();
    if (monitor.size() > 0) {
        for (auto kind : kWindowMetrics) {
            const auto s = monitor.window_stats(kind);
            window[std::string(to_string(kind))] = {{"mean", s.mean}, {"std", s.stddev}};
        }
        window["surprisal_median"] = monitor.window_median_surprisal();
        window["perplexity"] = monitor.window_perplexity();
    }
    out["window"] = std::move(window);

    if (const auto& b = monitor.baseline()) {
        json base = json::object();
        for (std::size_t i = 0; i < kWindowMetrics.size(); ++i)
            base[std::string(to_string(kWindowMetrics[i]))] = {{"mean", b->metrics[i].mean},
                                                              {"std", b->metrics[i].stddev}};
        base["surprisal_median"] = b->surprisal_median;
        out["baseline"] = std::move(base);
    } else {
        out["baseline"] = nullptr;
    }

    if (const auto scores = monitor.peek_scores()) {
        json js = json::object();
        for (std::size_t i = 0; i < kAllMonitorSignals.size(); ++i)
            js[std::string(to_string(kAllMonitorSignals[i]))] = (*scores)[i];
        out["scores"] = std::move(js);
    } else {
        out["scores"] = nullptr;
    }

    json alarms = json::array();
    for (const auto& a : monitor.alarms()) alarms.push_back(alarm_json(a));
    out["alarms"] = std::move(alarms);
    return out;
}

std::string render(const json& doc) { return doc.dump(2) + "\n"; }

std::string comparison_table(const ComparisonReport& report) {
    const auto& l = report.left;
    const auto& r = report.right;
    std::string out;
    char line[256];
    auto row_text = [&](const char* name, const std::string& a, const std::string& b) {
        std::snprintf(line, sizeof line, "%-26s %16s %16s\n", name, a.c_str(), b.c_str());
        out += line;
    };
    auto num = [](double v) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.4f", v);
        return std::string(buf);
    };
    row_text("Metric", l.label, r.label);
    row_text("Tokens", std::to_string(l.tokens), std::to_string(r.tokens));
    row_text("Characters", std::to_string(l.characters), std::to_string(r.characters));
    row_text("Entropy", num(l.of(MetricKind::Entropy).mean), num(r.of(MetricKind::Entropy).mean));
    row_text("Varentropy", num(l.of(MetricKind::Varentropy).mean), num(r.of(MetricKind::Varentropy).mean));
    row_text("Skewentropy", num(l.of(MetricKind::Skewentropy).mean),
             num(r.of(MetricKind::Skewentropy).mean));
    row_text("Perplexity", num(l.perplexity), num(r.perplexity));
    row_text("Probability", num(l.of(MetricKind::Probability).mean),
             num(r.of(MetricKind::Probability).mean));
    row_text("Log Probability (mean ln)", num(l.mean_log_probability), num(r.mean_log_probability));
    return out;
}

}  // namespace tokenprobe
