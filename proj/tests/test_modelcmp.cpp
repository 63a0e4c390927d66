#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include <boost/math/special_functions/gamma.hpp>

#include "nlight/chisq.hpp"
#include "nlight/error.hpp"
#include "nlight/modelcmp.hpp"

using namespace nlight;

namespace {

CandidateModel model(std::string label, double n, double k, double rss) {
    CandidateModel m;
    m.label = std::move(label);
    m.response = "y";
    m.n = n;
    m.k_effective = k;
    m.rss = rss;
    return m;
}

}  // namespace

TEST(Criteria, Aic) {
    EXPECT_NEAR(aic(10, 10, 1), 4.0, 1e-12);
    EXPECT_NEAR(aic(10, 2, 1), 10 * std::log(0.2) + 4, 1e-10);
    EXPECT_NEAR(aic(10, 2, 1), -12.0944, 1e-4);
    try {
        aic(10, 0, 1);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::NonPositiveRSS);
    }
}

TEST(Criteria, Bic) {
    EXPECT_NEAR(bic(10, 10, 1), 2 * std::log(10.0), 1e-10);
    const double n = std::exp(2.0);
    EXPECT_NEAR(bic(n, n, 0), 2.0, 1e-12);
}

TEST(LikelihoodRatio, Examples) {
    auto same = likelihood_ratio(model("r", 20, 1, 10), model("f", 20, 2, 10));
    EXPECT_EQ(same.statistic, 0.0);
    EXPECT_EQ(same.p_value, 1.0);

    auto lr = likelihood_ratio(model("r", 20, 1, 10), model("f", 20, 2, 8));
    EXPECT_NEAR(lr.statistic, 20 * std::log(1.25), 1e-10);
    EXPECT_EQ(lr.df, 1.0);
    EXPECT_NEAR(lr.p_value, boost::math::gamma_q(0.5, lr.statistic / 2), 1e-12);

    try {
        likelihood_ratio(model("r", 20, 3, 10), model("f", 20, 2, 8));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::NotNested);
    }
    try {
        likelihood_ratio(model("r", 20, 1, 10), model("f", 21, 2, 8));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::MismatchedSamples);
    }
}

TEST(ChiSquare, AgainstBoost) {
    std::mt19937_64 gen(21);
    std::uniform_real_distribution<double> stat(0.0, 60.0);
    std::uniform_int_distribution<int> df(1, 30);
    for (int i = 0; i < 300; ++i) {
        const double x = stat(gen);
        const int k = df(gen);
        EXPECT_NEAR(chi_square_sf(x, k), boost::math::gamma_q(k / 2.0, x / 2.0), 1e-10) << x << " " << k;
        EXPECT_NEAR(chi_square_cdf(x, k), boost::math::gamma_p(k / 2.0, x / 2.0), 1e-10);
    }
    EXPECT_EQ(chi_square_sf(0, 3), 1.0);
    EXPECT_NEAR(chi_square_sf(3.841458820694124, 1), 0.05, 1e-12);
}

TEST(Compare, IdenticalFitsTieByOrder) {
    auto c = compare({model("b", 30, 2, 5), model("a", 30, 2, 5), model("base", 30, 1, 9)}, "base");
    EXPECT_EQ(*c.winner_aic, "a");
    EXPECT_EQ(*c.overall_winner, "a");
}

TEST(Compare, DominantCandidateWinsEverything) {
    auto c = compare({model("good", 30, 2, 4), model("poor", 30, 2, 6), model("base", 30, 1, 9)}, "base");
    EXPECT_EQ(*c.winner_aic, "good");
    EXPECT_EQ(*c.winner_bic, "good");
    EXPECT_EQ(*c.winner_lrt, "good");
    EXPECT_EQ(*c.overall_winner, "good");
    EXPECT_FALSE(c.score("base").lrt);
    EXPECT_TRUE(c.score("poor").lrt);
}

TEST(Compare, WithoutBaselineSkipsLrt) {
    auto c = compare({model("good", 30, 2, 4), model("poor", 30, 2, 6)}, "");
    EXPECT_FALSE(c.winner_lrt);
    EXPECT_EQ(*c.overall_winner, "good");
}

TEST(Compare, Errors) {
    EXPECT_THROW(compare({model("only", 30, 2, 4)}, ""), Error);
    try {
        compare({model("x", 30, 2, 4), model("x", 30, 2, 5)}, "");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::DuplicateKey);
    }
}

TEST(Compare, CsvShape) {
    auto c = compare({model("good", 30, 2, 4), model("base", 30, 1, 9)}, "base");
    auto csv = comparison_to_csv(c);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "model,lrt_stat,lrt_p,bic,aic");
}
