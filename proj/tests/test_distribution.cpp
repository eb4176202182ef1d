// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tokenprobe Authors

#include <cmath>
#include <limits>

#include "doctest.h"
#include "tokenprobe/distribution.hpp"
#include "tokenprobe/errors.hpp"

using namespace tokenprobe;

TEST_CASE("normalize_logits: uniform scores give equal log-probabilities") {
    auto d = normalize_logits(std::vector<double>{0, 0, 0, 0}, 0);
    REQUIRE(d.support_size() == 4);
    for (double lp : d.log_probs()) CHECK(lp == doctest::Approx(std::log(0.25)).epsilon(1e-15));
    CHECK(d.coverage() == Coverage::Full);
    CHECK_FALSE(d.tail_index().has_value());
}

TEST_CASE("normalize_logits: analytic two-point softmax") {
    auto d = normalize_logits(std::vector<double>{std::log(2.0), 0.0}, 0);
    CHECK(std::exp(d.log_probs()[0]) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(std::exp(d.log_probs()[1]) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("normalize_logits: huge gap does not overflow") {
    auto d = normalize_logits(std::vector<double>{1000.0, 0.0}, 0);
    CHECK(std::abs(d.log_probs()[0]) < 1e-300);
    CHECK(d.log_probs()[1] == doctest::Approx(-1000.0).epsilon(1e-15));
    for (double lp : d.log_probs()) CHECK(std::isfinite(lp));
}

TEST_CASE("normalize_logits: raw scores are shared, not copied") {
    std::vector<double> logits{3.0, 1.0, -2.0};
    const double* storage = logits.data();
    auto d = normalize_logits(std::move(logits), 2);
    REQUIRE(d.raw_logits().size() == 3);
    CHECK(d.raw_logits().data() == storage);

    auto copy = d;
    CHECK(copy.raw_logits().data() == storage);
}

TEST_CASE("normalize_logits: error paths") {
    CHECK_THROWS_AS(normalize_logits(std::vector<double>{}, 0), EmptySupport);
    CHECK_THROWS_AS(normalize_logits(std::vector<double>{1.0, NAN}, 0), InvalidLogits);
    CHECK_THROWS_AS(
        normalize_logits(std::vector<double>{1.0, std::numeric_limits<double>::infinity()}, 0),
        InvalidLogits);
    CHECK_THROWS_AS(normalize_logits(std::vector<double>{1.0, 2.0}, 2), InvalidLogits);
}

TEST_CASE("TokenDistribution enforces its invariants") {
    const double half = std::log(0.5);
    SUBCASE("unnormalized") {
        CHECK_THROWS_AS(TokenDistribution(0, {half, half, half}, {}, 0, Coverage::Full),
                        InvalidDistribution);
    }
    SUBCASE("positive log-probability") {
        CHECK_THROWS_AS(TokenDistribution(0, {0.1, -3.0}, {}, 0, Coverage::Full),
                        InvalidDistribution);
    }
    SUBCASE("selected out of range") {
        CHECK_THROWS_AS(TokenDistribution(0, {half, half}, {}, 2, Coverage::Full),
                        InvalidDistribution);
    }
    SUBCASE("selected is the tail") {
        CHECK_THROWS_AS(TokenDistribution(0, {half, half}, {7, kTailTokenId}, 1,
                                          Coverage::TopKLumped, 1),
                        InvalidDistribution);
    }
    SUBCASE("duplicate ids") {
        CHECK_THROWS_AS(TokenDistribution(0, {half, half}, {3, 3}, 0, Coverage::Full),
                        InvalidDistribution);
    }
    SUBCASE("valid lumped") {
        TokenDistribution d(4, {half, half}, {7, kTailTokenId}, 0, Coverage::TopKLumped, 1);
        CHECK(d.approximate());
        CHECK(d.selected_token_id() == 7);
        CHECK(d.position() == 4);
    }
}

TEST_CASE("logsumexp is stable for large offsets") {
    std::vector<double> v{1000.0, 1000.0};
    CHECK(logsumexp(v) == doctest::Approx(1000.0 + std::log(2.0)).epsilon(1e-15));
    std::vector<double> empty;
    CHECK(std::isinf(logsumexp(empty)));
}
