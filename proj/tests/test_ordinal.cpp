#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <random>

#include "steato/ordinal.hpp"

using namespace steato;

TEST_CASE("encode_ordinal produces the Frank-Hall label vectors") {
    CHECK(encode_ordinal(SteatosisGrade::None).bits == std::array{0, 0, 0});
    CHECK(encode_ordinal(SteatosisGrade::Mild).bits == std::array{1, 0, 0});
    CHECK(encode_ordinal(SteatosisGrade::Moderate).bits == std::array{1, 1, 0});
    CHECK(encode_ordinal(SteatosisGrade::Severe).bits == std::array{1, 1, 1});
}

TEST_CASE("decode_ordinal inverts encode and rejects invalid vectors") {
    for (int g = 0; g <= 3; ++g)
        CHECK(decode_ordinal(encode_ordinal(grade_from_int(g))) == grade_from_int(g));
    CHECK(decode_ordinal({{1, 0, 0}}) == SteatosisGrade::Mild);
    CHECK(decode_ordinal({{0, 0, 0}}) == SteatosisGrade::None);
    CHECK_THROWS_AS(decode_ordinal({{1, 0, 1}}), std::domain_error);
    CHECK_THROWS_AS(decode_ordinal({{0, 1, 0}}), std::domain_error);
}

TEST_CASE("image_score is the mean confidence") {
    CHECK(image_score({{1.0, 1.0, 1.0}}) == 1.0);
    CHECK(image_score({{0.0, 0.0, 0.0}}) == 0.0);
    CHECK(image_score({{0.9, 0.6, 0.3}}) == doctest::Approx(0.6).epsilon(1e-15));
    CHECK_THROWS_AS(image_score({{1.2, 0.0, 0.0}}), std::domain_error);
}

TEST_CASE("Frank-Hall identity: encoded grades score g/3 exactly") {
    for (int g = 0; g <= 3; ++g) {
        const auto bits = encode_ordinal(grade_from_int(g)).bits;
        const OrdinalConfidence conf{{static_cast<double>(bits[0]), static_cast<double>(bits[1]),
                                      static_cast<double>(bits[2])}};
        CHECK(image_score(conf) == static_cast<double>(g) / 3.0);
    }
}

TEST_CASE("image_score is monotone in each component") {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        OrdinalConfidence y{{unit(rng), unit(rng), unit(rng)}};
        const double base = image_score(y);
        const std::size_t i = rng() % 3;
        OrdinalConfidence bumped = y;
        bumped.y_hat[i] = std::min(1.0, y.y_hat[i] + 0.1);
        CHECK(image_score(bumped) >= base);
    }
}

TEST_CASE("view_group_score") {
    CHECK(*view_group_score(std::vector{0.2, 0.4, 0.6}, 3) == doctest::Approx(0.4));
    CHECK_FALSE(view_group_score(std::vector{0.5, 0.5}, 3).has_value());
    CHECK(*view_group_score(std::vector{0.77}, 1) == 0.77);
}

TEST_CASE("all_groups_score") {
    SUBCASE("mean over qualifying groups") {
        const ScoreTable t = make_score_table(
            {{ViewGroup::LLL, {0.2, 0.2, 0.2}}, {ViewGroup::RLL, {0.4, 0.4, 0.4}}}, 3);
        CHECK(*t.all_groups == doctest::Approx(0.3));
    }
    SUBCASE("single qualifying group passes through") {
        const ScoreTable t = make_score_table({{ViewGroup::LKC, {0.7, 0.7, 0.7}}}, 3);
        CHECK(*t.all_groups == doctest::Approx(0.7));
    }
    SUBCASE("no qualifying group gives none") {
        const ScoreTable t = make_score_table({{ViewGroup::LKC, {0.7}}}, 3);
        CHECK_FALSE(t.all_groups.has_value());
        CHECK(t.per_group.at(ViewGroup::LKC).n_images == 1);
    }
    SUBCASE("all_groups present iff some group qualifies") {
        std::mt19937_64 rng(15);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        for (int trial = 0; trial < 50; ++trial) {
            std::map<ViewGroup, std::vector<double>> gs;
            for (ViewGroup g : kAllViewGroups) {
                const std::size_t n = rng() % 5;
                for (std::size_t i = 0; i < n; ++i) gs[g].push_back(unit(rng));
            }
            const ScoreTable t = make_score_table(gs, 3);
            bool any_qualifying = false;
            for (const auto& [g, entry] : t.per_group) any_qualifying |= entry.qualifying;
            CHECK(t.all_groups.has_value() == any_qualifying);
            if (t.all_groups) {
                CHECK(*t.all_groups >= 0.0);
                CHECK(*t.all_groups <= 1.0);
            }
        }
    }
}

TEST_CASE("group and study scores are permutation invariant and bounded") {
    std::mt19937_64 rng(16);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> scores;
        const std::size_t n = 3 + rng() % 8;
        for (std::size_t i = 0; i < n; ++i) scores.push_back(unit(rng));
        const double base = *view_group_score(scores, 3);
        std::shuffle(scores.begin(), scores.end(), rng);
        CHECK(*view_group_score(scores, 3) == doctest::Approx(base).epsilon(1e-12));
        CHECK(base >= *std::min_element(scores.begin(), scores.end()) - 1e-12);
        CHECK(base <= *std::max_element(scores.begin(), scores.end()) + 1e-12);
    }
}

TEST_CASE("calibrate_qc_threshold") {
    SUBCASE("separable scores return the max negative") {
        const std::vector<double> scores{0.1, 0.2, 0.25, 0.8, 0.9, 0.95};
        const std::vector<char> qual{0, 0, 0, 1, 1, 1};
        CHECK(calibrate_qc_threshold(scores, qual, 0.95) == 0.25);
    }
    SUBCASE("target 1.0 returns the max negative score") {
        const std::vector<double> scores{0.3, 0.1, 0.4, 0.9};
        const std::vector<char> qual{0, 0, 0, 1};
        CHECK(calibrate_qc_threshold(scores, qual, 1.0) == 0.4);
    }
    SUBCASE("n_neg=20 at 0.95 leaves at least 19 negatives at or below") {
        std::mt19937_64 rng(77);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        for (int trial = 0; trial < 30; ++trial) {
            std::vector<double> scores;
            std::vector<char> qual;
            for (int i = 0; i < 20; ++i) {
                scores.push_back(unit(rng));
                qual.push_back(0);
            }
            for (int i = 0; i < 15; ++i) {
                scores.push_back(unit(rng));
                qual.push_back(1);
            }
            const double t = calibrate_qc_threshold(scores, qual, 0.95);
            int below = 0;
            for (int i = 0; i < 20; ++i) below += scores[static_cast<std::size_t>(i)] <= t;
            CHECK(below >= 19);
            // Smallest-threshold rule: the threshold is itself a negative score.
            CHECK(std::count(scores.begin(), scores.begin() + 20, t) >= 1);
        }
    }
    SUBCASE("no negatives is a domain error") {
        CHECK_THROWS_AS(
            calibrate_qc_threshold(std::vector{0.5, 0.6}, std::vector<char>{1, 1}, 0.95),
            std::domain_error);
    }
}
