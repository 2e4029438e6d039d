#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "factcache/metrics.hpp"

using namespace factcache;

namespace {

using Pairs = std::vector<std::pair<std::string, std::string>>;

struct Row {
    const char* model;
    const char* method;
    double sure;
    double em;
    double dd;
};

// Every published row with both EM and DD; base-model rows have neither.
const std::vector<Row> kPublishedRows = {
    {"GPT2-XL", "FT", 12.75, 22.72, 9.97},     {"GPT2-XL", "MEMIT", 20.87, 20.87, 0.00},
    {"GPT2-XL", "MeLLo", -53.67, 30.90, 84.57}, {"GPT2-XL", "IKE", 37.32, 50.51, 13.19},
    {"GPT2-XL", "SKEME", 65.80, 65.80, 0.00},   {"GPT-J", "FT", 25.21, 26.59, 1.38},
    {"GPT-J", "MEMIT", 45.85, 45.85, 0.00},     {"GPT-J", "MeLLo", 28.42, 55.74, 27.33},
    {"GPT-J", "IKE", 58.62, 70.04, 11.42},      {"GPT-J", "SKEME", 73.93, 73.93, 0.00},
    {"Llama2", "FT", 34.31, 41.80, 7.49},       {"Llama2", "MEMIT", 48.03, 48.39, 0.36},
    {"Llama2", "MeLLo", 36.38, 66.26, 29.88},   {"Llama2", "IKE", 71.38, 91.42, 20.04},
    {"Llama2", "SKEME", 90.54, 90.54, 0.00},    {"GPT-3.5", "MeLLo", 56.58, 73.75, 17.16},
    {"GPT-3.5", "IKE", 76.45, 89.53, 13.08},    {"GPT-3.5", "SKEME", 91.76, 91.76, 0.00},
};

double kl_oracle(const std::vector<double>& p, const std::vector<double>& q) {
    double total = 0;
    for (double v : q) total += v + 1e-9;
    double kl = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] > 0) kl += p[i] * std::log(p[i] * total / (q[i] + 1e-9));
    }
    return kl;
}

Distribution dist(const std::vector<double>& v) {
    Distribution d;
    for (std::size_t i = 0; i < v.size(); ++i) d["c" + std::to_string(i)] = v[i];
    return d;
}

}  // namespace

TEST(Normalize, CaseArticlesPunctuationSpace) {
    EXPECT_EQ(normalize_answer("  The   Paul Ten-Haken. "), "paul tenhaken");
    EXPECT_EQ(normalize_answer("An apple"), "apple");
    EXPECT_EQ(normalize_answer("a"), "a");
    EXPECT_EQ(normalize_answer("Théâtre"), "théâtre");
    EXPECT_EQ(normalize_answer("Washington, D.C."), "washington dc");
}

TEST(ExactMatch, TextAndChoiceLetters) {
    EXPECT_TRUE(exact_match({"the United States", "United States", std::nullopt}));
    EXPECT_FALSE(exact_match({"United Kingdom", "United States", std::nullopt}));
    for (const char* text : {"b", "B.", "B)", "B:", "B: Paris", "Paris"}) {
        EXPECT_TRUE(exact_match({text, "Paris", 'B'})) << text;
    }
    EXPECT_FALSE(exact_match({"A", "Paris", 'B'}));
    EXPECT_FALSE(exact_match({"B: Rome", "Paris", 'B'}));
    EXPECT_FALSE(exact_match({"Bordeaux", "Paris", 'B'}));
}

TEST(EmScore, Percentages) {
    EXPECT_DOUBLE_EQ(em_score(Pairs{{"a", "a"}, {"b", "c"}, {"d", "d"}, {"e", "e"}}), 75.0);
    EXPECT_DOUBLE_EQ(em_score(Pairs{{"x", "y"}}), 0.0);
    try {
        em_score(std::vector<Prediction>{});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::EmptySet);
    }
}

TEST(Drawdown, ClampsAtZero) {
    EXPECT_DOUBLE_EQ(drawdown(80, 60), 20);
    EXPECT_DOUBLE_EQ(drawdown(60, 80), 0);
    EXPECT_DOUBLE_EQ(drawdown(50, 50), 0);
}

TEST(Kl, IdenticalIsZero) {
    EXPECT_NEAR(kl_divergence(dist({0.2, 0.3, 0.5}), dist({0.2, 0.3, 0.5})), 0.0, 1e-8);
    const std::vector<Distribution> same{dist({1, 0}), dist({0.5, 0.5})};
    EXPECT_NEAR(nkl(same, same), 0.0, 1e-8);
}

TEST(Kl, PointMassAgainstUniformIsLn2) {
    EXPECT_NEAR(kl_divergence(dist({1, 0}), dist({0.5, 0.5})), std::log(2.0), 1e-6);
}

TEST(Kl, ZeroMassInQIsSmoothed) {
    const double v = kl_divergence(dist({0.5, 0.5}), dist({1, 0}));
    EXPECT_TRUE(std::isfinite(v));
    EXPECT_NEAR(v, kl_oracle({0.5, 0.5}, {1, 0}), 1e-9);
}

TEST(Kl, MatchesOracleOnRandomPairs) {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 2 + trial % 6;
        std::vector<double> p(n), q(n);
        double sp = 0, sq = 0;
        for (std::size_t i = 0; i < n; ++i) {
            p[i] = u(rng);
            q[i] = u(rng);
            sp += p[i];
            sq += q[i];
        }
        for (std::size_t i = 0; i < n; ++i) {
            p[i] /= sp;
            q[i] /= sq;
        }
        const double v = kl_divergence(dist(p), dist(q));
        EXPECT_GE(v, 0.0);
        EXPECT_NEAR(v, std::max(0.0, kl_oracle(p, q)), 1e-9);
    }
}

TEST(Kl, SupportMismatchAndEmpty) {
    Distribution a{{"x", 1.0}};
    Distribution b{{"y", 1.0}};
    EXPECT_THROW(kl_divergence(a, b), Error);
    EXPECT_THROW(kl_divergence(a, dist({0.5, 0.5})), Error);
    EXPECT_THROW(nkl(std::vector<Distribution>{}, std::vector<Distribution>{}), Error);
    EXPECT_THROW(nkl(std::vector<Distribution>{a}, std::vector<Distribution>{}), Error);
    const auto [p, q] = align_supports(a, b);
    EXPECT_EQ(p.size(), 2u);
    EXPECT_EQ(q.at("x"), 0.0);
    EXPECT_EQ(p.at("y"), 0.0);
}

TEST(Kl, UnavailableWithoutDistributions) {
    std::vector<std::optional<Distribution>> base{dist({1, 0}), std::nullopt};
    std::vector<std::optional<Distribution>> edited{dist({1, 0}), dist({1, 0})};
    EXPECT_FALSE(nkl(base, edited).has_value());
    base[1] = dist({1, 0});
    ASSERT_TRUE(nkl(base, edited).has_value());
    EXPECT_NEAR(*nkl(base, edited), 0.0, 1e-8);
}

TEST(Sure, PublishedRowsReproduce) {
    for (const auto& r : kPublishedRows) {
        EXPECT_NEAR(sure(r.em, r.dd), r.sure, 0.02) << r.model << "/" << r.method;
    }
}

TEST(Sure, MonotoneOverGrid) {
    for (const SureParams params : {SureParams{}, SureParams{1, 2, 1, 1}, SureParams{0.5, 1, 2, 0.5}}) {
        for (int i = 0; i < 10; ++i) {
            for (int j = 0; j < 10; ++j) {
                const double em = i * 11.0;
                const double dd = j * 11.0;
                EXPECT_LE(sure(em, dd + 1.0, params), sure(em, dd, params));
                EXPECT_GE(sure(em + 1.0, dd, params), sure(em, dd, params));
            }
        }
    }
}

TEST(Sure, ParameterGuards) {
    EXPECT_THROW(sure(-1, 0), Error);
    EXPECT_THROW(sure(1, -1), Error);
    EXPECT_THROW(sure(1, 1, {1, 1, 0, 1}), Error);
    EXPECT_THROW(sure(1, 1, {-1, 1, 1, 1}), Error);
    EXPECT_THROW(sure(1, 1, {1, 1, 1, std::nan("")}), Error);
    EXPECT_DOUBLE_EQ(sure(10, 3, {2, 3, 2, 1}), 2 * 100 - 3 * 3);
}
