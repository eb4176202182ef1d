// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tokenprobe Authors

#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "tokenprobe/records.hpp"
#include "tokenprobe/report.hpp"

using namespace tokenprobe;

namespace {

std::string sample_records() {
    std::mt19937_64 rng(21);
    std::normal_distribution<double> g(0.0, 2.5);
    std::vector<TokenDistribution> d;
    std::vector<std::string> texts;
    for (std::size_t i = 0; i < 30; ++i) {
        std::vector<double> z(3 + rng() % 30);
        for (auto& v : z) v = g(rng);
        if (i % 3 == 2) {
            std::vector<TopKEntry> top;
            auto full = normalize_logits(z, 0, i);
            std::vector<std::size_t> order(z.size());
            for (std::size_t j = 0; j < order.size(); ++j) order[j] = j;
            std::sort(order.begin(), order.end(), [&](auto a, auto b) { return z[a] > z[b]; });
            for (std::size_t j = 0; j < 3; ++j)
                top.push_back({static_cast<std::int64_t>(order[j]), full.log_probs()[order[j]], {}});
            d.push_back(lump_tail(top, top[1].token_id, i));
        } else {
            d.push_back(normalize_logits(z, rng() % z.size(), i));
        }
        texts.push_back(i % 5 ? " tok" + std::to_string(i) : "\"q\"\n");
    }
    std::ostringstream out;
    write_records(out, d, texts);
    return out.str();
}

std::shared_ptr<const AnalysisSession> load(const std::string& label = "records") {
    auto p = parse_records(sample_records());
    return build_session(label, std::move(p.distributions), std::move(p.token_texts));
}

}  // namespace

TEST_CASE("session report follows the report schema") {
    const auto s = load();
    const auto doc = session_report(*s, FlagThresholds{});
    for (const char* key : {"label", "tokens", "characters", "metrics", "perplexity", "scatter", "flags", "approximate"})
        CHECK(doc.contains(key));
    CHECK(doc["tokens"] == 30);
    CHECK(doc["approximate"] == true);
    for (auto kind : kAllMetricKinds) {
        const auto& m = doc["metrics"][std::string(to_string(kind))];
        for (const char* stat : {"mean", "median", "min", "max"}) CHECK(m.contains(stat));
    }
    REQUIRE(doc["scatter"].size() == 30);
    const auto& p = doc["scatter"][4];
    CHECK(p[0].get<double>() == s->metric(MetricKind::Entropy)[4]);
    CHECK(p[1].get<double>() == s->metric(MetricKind::Varentropy)[4]);
    CHECK(p[2] == 4);
    CHECK(p[3] == s->token_texts()[4]);

    const auto flagged = session_report(*s, FlagThresholds{0.0, 0.0, 0.0});
    CHECK(flagged["flags"].size() == 30);
    CHECK(flagged["flags"][0][0] == 0);
    CHECK(flagged["flags"][0][1].is_array());
}

TEST_CASE("identical inputs give identical bytes") {
    const auto a = render(session_report(*load(), FlagThresholds{}));
    const auto b = render(session_report(*load(), FlagThresholds{}));
    CHECK(a == b);
    // Keys are emitted sorted.
    CHECK(a.find("\"approximate\"") < a.find("\"characters\""));
    CHECK(a.find("\"characters\"") < a.find("\"flags\""));
    CHECK(a.back() == '\n');
}

TEST_CASE("metric view counts computations") {
    const auto s = load();
    const auto first = render(metric_json(*s, MetricKind::Entropy));
    const auto second = render(metric_json(*s, MetricKind::Entropy));
    CHECK(first == second);
    CHECK(s->cache().compute_count(MetricKind::Entropy) == 1);
    const auto doc = json::parse(first);
    CHECK(doc["compute_count"] == 1);
    CHECK(doc["values"].size() == 30);
    CHECK(doc["intensities"].size() == 30);
}

TEST_CASE("top-k view is sorted and excludes the tail") {
    const auto s = load();
    for (std::size_t pos = 0; pos < s->size(); ++pos) {
        const auto doc = topk_json(*s, pos, 10);
        const auto& rows = doc["alternatives"];
        CHECK(rows.size() <= 10);
        for (std::size_t i = 1; i < rows.size(); ++i)
            CHECK(rows[i - 1]["probability"].get<double>() >= rows[i]["probability"].get<double>());
        for (const auto& r : rows) CHECK(r["token_id"] != kTailTokenId);
        const auto& d = s->distributions()[pos];
        if (d.tail_index()) {
            CHECK(rows.size() == 3);
            CHECK(doc["tail_mass"].get<double>() > 0.0);
        } else {
            CHECK(doc["tail_mass"] == 0.0);
        }
        bool has_selected = false;
        for (const auto& r : rows) has_selected = has_selected || r["selected"] == true;
        if (rows.size() == d.support_size() - (d.tail_index() ? 1 : 0)) CHECK(has_selected);
    }
    CHECK(topk_json(*s, 0, 1)["alternatives"].size() == 1);
    CHECK_THROWS(topk_json(*s, 30, 1));
}

TEST_CASE("comparison view") {
    const auto left = load("left");
    const auto right = load("right");
    const auto r = compare(*left, *right);
    const auto doc = comparison_json(r);
    CHECK(doc["left"]["label"] == "left");
    CHECK(doc["delta"]["entropy"]["mean"] == 0.0);
    CHECK(doc["delta"]["sequence_perplexity"] == 0.0);
    CHECK(doc["delta"]["perplexity"]["mean"] == 0.0);
    CHECK(doc["ratio"]["entropy"]["mean"] == 1.0);

    const auto table = comparison_table(r);
    const char* rows[] = {"Metric", "Tokens", "Characters", "Entropy", "Varentropy", "Skewentropy",
                          "Perplexity", "Probability", "Log Probability"};
    std::size_t last = 0;
    for (const char* row : rows) {
        const auto at = table.find(row);
        REQUIRE(at != std::string::npos);
        CHECK(at >= last);
        last = at;
    }
}

TEST_CASE("monitor views") {
    MonitorConfig cfg;
    cfg.capacity = 4;
    MonitorState m(cfg);
    auto status = monitor_status_json(m);
    CHECK(status["baseline"].is_null());
    CHECK(status["window"].empty());
    CHECK(status["capacity"] == 4);

    TokenMetrics t{0.5, std::log(2.0), 1.0, 0.2, -0.1, false};
    for (int i = 0; i < 4; ++i) m.observe(t);
    m.freeze_baseline();
    t.entropy = 9.0;
    m.observe(t);
    m.score_all();
    status = monitor_status_json(m);
    CHECK(status["window"]["entropy"]["mean"] == doctest::Approx(3.0));
    CHECK(status["baseline"]["entropy"]["std"] == 0.0);
    CHECK(status["scores"]["entropy_mean"].get<double>() > 3.0);
    REQUIRE(status["alarms"].size() == 1);
    const auto& alarm = status["alarms"][0];
    CHECK(alarm[0] == 4);
    CHECK(alarm[1][0] == "entropy_mean");
    CHECK(alarm[2].get<std::string>().size() == 20);
    CHECK(alarm[3].size() == alarm[1].size());
}
