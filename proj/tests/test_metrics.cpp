// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tokenprobe Authors

#include <cmath>
#include <algorithm>
#include <random>

#include "doctest.h"
#include "support/oracle.hpp"
#include "tokenprobe/errors.hpp"
#include "tokenprobe/metrics.hpp"

using namespace tokenprobe;

namespace {

TokenDistribution from_probs(std::vector<double> probs, std::size_t selected) {
    std::vector<double> lp;
    for (double p : probs) lp.push_back(std::log(p));
    return TokenDistribution(0, std::move(lp), {}, selected, Coverage::Full);
}

TokenDistribution uniform(std::size_t n, std::size_t selected = 0) {
    return normalize_logits(std::vector<double>(n, 0.0), selected);
}

TokenDistribution one_hot(std::size_t n, std::size_t selected) {
    std::vector<double> lp(n, -std::numeric_limits<double>::infinity());
    lp[selected] = 0.0;
    return TokenDistribution(0, std::move(lp), {}, selected, Coverage::Full);
}

std::vector<double> random_logits(std::mt19937_64& rng, std::size_t n) {
    std::uniform_real_distribution<double> scale(0.05, 8.0), offset(-1000.0, 1000.0);
    std::normal_distribution<double> noise;
    const double s = scale(rng), o = offset(rng);
    std::vector<double> z(n);
    for (auto& v : z) v = o + s * noise(rng);
    return z;
}

}  // namespace

TEST_CASE("token_probability and token_surprisal") {
    CHECK(token_probability(uniform(4, 2)) == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(token_probability(one_hot(5, 3)) == 1.0);
    CHECK(token_probability(from_probs({0.7, 0.2, 0.1}, 1)) == doctest::Approx(0.2).epsilon(1e-15));

    CHECK(token_surprisal(one_hot(5, 3)) == 0.0);
    CHECK(token_surprisal(uniform(4)) == doctest::Approx(1.3862943611198906).epsilon(1e-15));
    // -ln 0.25, frozen from the binary128 oracle.
    CHECK(token_surprisal(from_probs({0.75, 0.25}, 1)) ==
          doctest::Approx(1.3862943611198906).epsilon(1e-14));
}

TEST_CASE("surprisal stays finite where exp underflows") {
    auto d = normalize_logits(std::vector<double>{0.0, -800.0}, 1);
    CHECK(token_probability(d) == 0.0);
    CHECK(token_surprisal(d) == doctest::Approx(800.0).epsilon(1e-15));
}

TEST_CASE("distribution_entropy") {
    for (std::size_t n : {2u, 4u, 1000u})
        CHECK(std::abs(distribution_entropy(uniform(n)) - std::log(double(n))) <= 1e-10);
    CHECK(distribution_entropy(one_hot(10, 4)) == 0.0);
    // binary128 oracle: 0.80181855254333734
    CHECK(distribution_entropy(from_probs({0.7, 0.2, 0.1}, 0)) ==
          doctest::Approx(0.80181855254333734).epsilon(1e-13));
}

TEST_CASE("distribution_varentropy") {
    for (std::size_t n : {2u, 7u, 50000u}) CHECK(distribution_varentropy(uniform(n)) <= 1e-10);
    CHECK(distribution_varentropy(one_hot(3, 0)) == 0.0);
    // binary128 oracle: 0.22630293015235911
    CHECK(distribution_varentropy(from_probs({0.75, 0.25}, 0)) ==
          doctest::Approx(0.22630293015235911).epsilon(1e-13));
    CHECK(distribution_varentropy(from_probs({0.7, 0.2, 0.1}, 0)) ==
          doctest::Approx(0.49438680958478276).epsilon(1e-13));
}

TEST_CASE("distribution_skewentropy") {
    CHECK(distribution_skewentropy(uniform(4)) == 0.0);
    CHECK(distribution_skewentropy(one_hot(4, 1)) == 0.0);
    // binary128 oracle: -1.0978391497145068
    CHECK(distribution_skewentropy(from_probs({0.7, 0.2, 0.1}, 0)) ==
          doctest::Approx(-1.0978391497145068).epsilon(1e-12));
    CHECK(distribution_skewentropy(from_probs({0.75, 0.25}, 0)) ==
          doctest::Approx(-1.1547005383792515).epsilon(1e-12));
}

TEST_CASE("compute_metrics agrees with the single-metric functions") {
    auto d = from_probs({0.5, 0.3, 0.15, 0.05}, 2);
    auto m = compute_metrics(d);
    CHECK(m.probability == token_probability(d));
    CHECK(m.surprisal == token_surprisal(d));
    CHECK(m.entropy == distribution_entropy(d));
    CHECK(m.varentropy == distribution_varentropy(d));
    CHECK(m.skewentropy == distribution_skewentropy(d));
    CHECK_FALSE(m.approximate);
}

TEST_CASE("sequence_perplexity") {
    const double l2 = std::log(2.0);
    std::vector<double> s{l2, l2, l2};
    CHECK(sequence_perplexity(s) == doctest::Approx(2.0).epsilon(1e-15));
    std::vector<double> zeros{0.0, 0.0};
    CHECK(sequence_perplexity(zeros) == 1.0);
    std::vector<double> empty;
    CHECK_THROWS_AS(sequence_perplexity(empty), EmptySequence);

    std::vector<double> seq{0.5, 1.5, 3.0};
    auto running = running_perplexity(seq);
    REQUIRE(running.size() == 3);
    CHECK(running[0] == doctest::Approx(std::exp(0.5)));
    CHECK(running.back() == doctest::Approx(sequence_perplexity(seq)).epsilon(1e-15));
}

TEST_CASE("metric kind names round-trip") {
    for (auto kind : kAllMetricKinds) CHECK(parse_metric_kind(to_string(kind)) == kind);
    CHECK_FALSE(parse_metric_kind("logprob").has_value());
}

// Property-style checks over random logits.

TEST_CASE("property: engine matches the binary128 oracle") {
    std::mt19937_64 rng(20260101);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 2 + rng() % 300;
        auto z = random_logits(rng, n);
        const std::size_t sel = rng() % n;
        auto expected = oracle::from_logits(z, sel);
        auto got = compute_metrics(normalize_logits(z, sel));
        CHECK(got.entropy == doctest::Approx(expected.entropy).epsilon(1e-8));
        CHECK(got.varentropy == doctest::Approx(expected.varentropy).epsilon(1e-8));
        CHECK(got.skewentropy == doctest::Approx(expected.skewentropy).epsilon(1e-8));
        CHECK(got.surprisal == doctest::Approx(expected.surprisal).epsilon(1e-12));
    }
}

TEST_CASE("property: shift invariance, bounds, P*exp(I) = 1") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 2 + rng() % 500;
        auto z = random_logits(rng, n);
        const std::size_t sel = rng() % n;
        auto shifted = z;
        for (auto& v : shifted) v += 1000.0;
        auto a = compute_metrics(normalize_logits(z, sel));
        auto b = compute_metrics(normalize_logits(shifted, sel));
        CHECK(std::abs(a.entropy - b.entropy) <= 1e-9);
        CHECK(std::abs(a.varentropy - b.varentropy) <= 1e-9);
        CHECK(std::abs(a.skewentropy - b.skewentropy) <= 1e-9 * std::max(1.0, std::abs(a.skewentropy)));
        CHECK(std::abs(a.surprisal - b.surprisal) <= 1e-9);

        CHECK(a.entropy >= 0.0);
        CHECK(a.entropy <= std::log(double(n)) + 1e-9);
        CHECK(a.varentropy >= 0.0);
        CHECK(std::abs(a.probability * std::exp(a.surprisal) - 1.0) <= 1e-9);
    }
}

TEST_CASE("property: merging support entries never increases entropy") {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 3 + rng() % 100;
        auto z = random_logits(rng, n);
        auto full = normalize_logits(z, 0);
        // Merge a random subset (never index 0) into one entry.
        std::vector<double> kept;
        std::vector<double> merged;
        kept.push_back(full.log_probs()[0]);
        for (std::size_t i = 1; i < n; ++i)
            (rng() % 2 ? merged : kept).push_back(full.log_probs()[i]);
        if (merged.empty()) continue;
        kept.push_back(logsumexp(merged));
        const double total = logsumexp(kept);
        for (auto& v : kept) v -= total;
        TokenDistribution coarse(0, kept, {}, 0, Coverage::Full);
        CHECK(distribution_entropy(coarse) <= distribution_entropy(full) + 1e-9);
    }
}

TEST_CASE("property: temperature sharpening drives entropy and varentropy to zero") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        auto z = random_logits(rng, 2 + rng() % 64);
        *std::max_element(z.begin(), z.end()) += 1.0;  // unique maximum with a margin
        double prev_h = INFINITY, prev_v = INFINITY;
        for (double tau : {1.0, 0.5, 0.1, 0.01}) {
            auto scaled = z;
            for (auto& v : scaled) v /= tau;
            auto m = compute_metrics(normalize_logits(scaled, 0));
            CHECK(m.entropy <= prev_h + 1e-12);
            prev_h = m.entropy;
            prev_v = m.varentropy;
        }
        CHECK(prev_h < 1e-3);
        CHECK(prev_v < 1e-2);
    }
}
