#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "nlight/error.hpp"
#include "nlight/regress.hpp"

using namespace nlight;

namespace {

// Normal equations (X'WX) b = X'Wy by Gauss-Jordan elimination in long double.
std::vector<double> wls_oracle(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const std::vector<double>& w) {
    const auto n = X.rows(), p = X.cols();
    std::vector<std::vector<long double>> a(p, std::vector<long double>(p + 1, 0.0L));
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index r = 0; r < p; ++r) {
            for (Eigen::Index c = 0; c < p; ++c) a[r][c] += static_cast<long double>(w[i]) * X(i, r) * X(i, c);
            a[r][p] += static_cast<long double>(w[i]) * X(i, r) * y(i);
        }
    for (Eigen::Index c = 0; c < p; ++c) {
        Eigen::Index piv = c;
        for (Eigen::Index r = c + 1; r < p; ++r)
            if (std::fabs(a[r][c]) > std::fabs(a[piv][c])) piv = r;
        std::swap(a[c], a[piv]);
        for (Eigen::Index r = 0; r < p; ++r) {
            if (r == c) continue;
            const long double f = a[r][c] / a[c][c];
            for (Eigen::Index k = c; k <= p; ++k) a[r][k] -= f * a[c][k];
        }
    }
    std::vector<double> b(p);
    for (Eigen::Index r = 0; r < p; ++r) b[r] = static_cast<double>(a[r][p] / a[r][r]);
    return b;
}

RegressionProblem random_problem(std::mt19937_64& gen, std::size_t n, std::size_t k) {
    std::normal_distribution<double> z;
    std::uniform_real_distribution<double> u(0, 10);
    Eigen::MatrixXd P(n, k);
    Eigen::VectorXd y(n);
    std::vector<Location> locs(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < k; ++j) P(i, j) = z(gen);
        y(i) = 1.0 + P.row(i).sum() + 0.5 * z(gen);
        locs[i] = {u(gen), u(gen)};
    }
    return make_problem(P, y, true, locs);
}

ErrorCode code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no nlight::Error thrown";
    return ErrorCode::IoError;
}

}  // namespace

TEST(Ols, ExactLine) {
    Eigen::MatrixXd x(3, 1);
    x << 1, 2, 3;
    Eigen::VectorXd y(3);
    y << 2, 4, 6;
    auto fit = ols_fit(make_problem(x, y));
    EXPECT_NEAR(fit.coefficients(0), 0, 1e-12);
    EXPECT_NEAR(fit.coefficients(1), 2, 1e-12);
    EXPECT_NEAR(fit.rss, 0, 1e-20);
    EXPECT_NEAR(fit.r_squared, 1, 1e-12);
}

TEST(Ols, InterceptOnly) {
    Eigen::MatrixXd x(3, 0);
    Eigen::VectorXd y(3);
    y << 1, 2, 3;
    auto fit = ols_fit(make_problem(x, y));
    EXPECT_NEAR(fit.coefficients(0), 2, 1e-12);
    EXPECT_NEAR(fit.rss, 2, 1e-12);
}

TEST(Ols, MatchesNormalEquations) {
    std::mt19937_64 gen(8);
    auto p = random_problem(gen, 8, 2);
    auto fit = ols_fit(p);
    auto oracle = wls_oracle(p.X, p.y, std::vector<double>(8, 1.0));
    for (std::size_t j = 0; j < oracle.size(); ++j) EXPECT_NEAR(fit.coefficients(j), oracle[j], 1e-8 * std::max(1.0, std::fabs(oracle[j])));
}

TEST(Ols, Errors) {
    Eigen::MatrixXd x(4, 2);
    x << 1, 2, 2, 4, 3, 6, 4, 8;
    Eigen::VectorXd y(4);
    y << 1, 2, 4, 3;
    EXPECT_EQ(code_of([&] { ols_fit(make_problem(x, y)); }), ErrorCode::RankDeficient);
    Eigen::MatrixXd few(2, 2);
    few << 1, 2, 3, 5;
    Eigen::VectorXd y2(2);
    y2 << 1, 2;
    EXPECT_EQ(code_of([&] { ols_fit(make_problem(few, y2)); }), ErrorCode::InsufficientEffectiveObservations);
}

TEST(Wls, IdentityWeights) {
    std::mt19937_64 gen(9);
    auto p = random_problem(gen, 12, 2);
    auto a = ols_fit(p);
    auto b = weighted_fit(p, std::vector<double>(12, 1.0));
    for (Eigen::Index j = 0; j < a.coefficients.size(); ++j) EXPECT_NEAR(a.coefficients(j), b.coefficients(j), 1e-12);
}

TEST(Wls, IntegerWeightsEqualReplication) {
    std::mt19937_64 gen(10);
    auto p = random_problem(gen, 10, 2);
    std::vector<double> w(10);
    std::vector<Eigen::Index> rows;
    for (std::size_t i = 0; i < 10; ++i) {
        w[i] = static_cast<double>(1 + i % 3);
        for (int r = 0; r < static_cast<int>(w[i]); ++r) rows.push_back(static_cast<Eigen::Index>(i));
    }
    Eigen::MatrixXd Xr(rows.size(), p.k());
    Eigen::VectorXd yr(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        Xr.row(r) = p.X.row(rows[r]).tail(p.k());
        yr(r) = p.y(rows[r]);
    }
    auto replicated = ols_fit(make_problem(Xr, yr));
    auto weighted = weighted_fit(p, w);
    for (Eigen::Index j = 0; j < weighted.coefficients.size(); ++j)
        EXPECT_NEAR(weighted.coefficients(j), replicated.coefficients(j), 1e-10);
    EXPECT_NEAR(weighted.rss, replicated.rss, 1e-9);
}

TEST(Wls, ZeroWeightDeletesRow) {
    std::mt19937_64 gen(12);
    auto p = random_problem(gen, 9, 1);
    std::vector<double> w(9, 1.0);
    w[4] = 0.0;
    Eigen::MatrixXd Xd(8, 1);
    Eigen::VectorXd yd(8);
    for (Eigen::Index i = 0, r = 0; i < 9; ++i) {
        if (i == 4) continue;
        Xd(r, 0) = p.X(i, 1);
        yd(r++) = p.y(i);
    }
    auto a = weighted_fit(p, w);
    auto b = ols_fit(make_problem(Xd, yd));
    for (Eigen::Index j = 0; j < 2; ++j) EXPECT_NEAR(a.coefficients(j), b.coefficients(j), 1e-12);
    EXPECT_EQ(a.n, 8u);
}

TEST(Wls, RejectsBadWeights) {
    std::mt19937_64 gen(13);
    auto p = random_problem(gen, 6, 1);
    EXPECT_THROW(weighted_fit(p, std::vector<double>(5, 1.0)), Error);
    std::vector<double> neg(6, 1.0);
    neg[0] = -1;
    EXPECT_THROW(weighted_fit(p, neg), Error);
}

TEST(Kernel, Values) {
    for (auto k : {KernelKind::Bisquare, KernelKind::Gaussian, KernelKind::Uniform})
        EXPECT_DOUBLE_EQ(kernel_weight(0, 3, k), 1.0);
    EXPECT_DOUBLE_EQ(kernel_weight(3, 3, KernelKind::Bisquare), 0.0);
    EXPECT_DOUBLE_EQ(kernel_weight(1.5, 3, KernelKind::Bisquare), 0.5625);
    EXPECT_DOUBLE_EQ(kernel_weight(3, 3, KernelKind::Gaussian), std::exp(-0.5));
    EXPECT_DOUBLE_EQ(kernel_weight(2.9, 3, KernelKind::Uniform), 1.0);
    EXPECT_DOUBLE_EQ(kernel_weight(3, 3, KernelKind::Uniform), 0.0);
    EXPECT_EQ(code_of([] { kernel_weight(1, 0, KernelKind::Gaussian); }), ErrorCode::ZeroBandwidth);
}

TEST(AdaptiveBandwidth, Collinear) {
    std::vector<Location> l = {{0, 0}, {1, 0}, {2, 0}, {3, 0}};
    EXPECT_DOUBLE_EQ(adaptive_bandwidth(l, 0, 2), 2.0);
    std::vector<Location> dup = {{0, 0}, {0, 0}, {2, 0}};
    EXPECT_DOUBLE_EQ(adaptive_bandwidth(dup, 0, 1), 0.0);
    EXPECT_EQ(code_of([&] { adaptive_bandwidth(l, 0, 4); }), ErrorCode::NotEnoughLocations);
}

TEST(AdaptiveBandwidth, MatchesFullSort) {
    std::mt19937_64 gen(14);
    std::uniform_real_distribution<double> u(-50, 50);
    std::vector<Location> l(20);
    for (auto& p : l) p = {u(gen), u(gen)};
    for (std::size_t i = 0; i < l.size(); ++i) {
        std::vector<double> d;
        for (std::size_t j = 0; j < l.size(); ++j)
            if (j != i) d.push_back(std::hypot(l[i].x - l[j].x, l[i].y - l[j].y));
        std::sort(d.begin(), d.end());
        for (std::size_t n = 1; n < l.size(); ++n) EXPECT_DOUBLE_EQ(adaptive_bandwidth(l, i, n), d[n - 1]);
    }
}

TEST(Gwr, UniformWideKernelIsOls) {
    std::mt19937_64 gen(15);
    auto p = random_problem(gen, 25, 2);
    auto ols = ols_fit(p);
    auto g = gwr_fit(p, KernelSpec::fixed(KernelKind::Uniform, 1e6));
    ASSERT_TRUE(g.ok());
    for (const auto& loc : g.locations)
        for (Eigen::Index j = 0; j < ols.coefficients.size(); ++j)
            EXPECT_NEAR(loc.coefficients(j), ols.coefficients(j), 1e-9 * std::max(1.0, std::fabs(ols.coefficients(j))));
    EXPECT_NEAR(g.effective_parameters, 3.0, 1e-9);
    EXPECT_NEAR(g.residual_squares, ols.rss, 1e-9 * ols.rss);
}

TEST(Gwr, FourPointHandAssembled) {
    Eigen::MatrixXd x(4, 1);
    x << 1, 2, 4, 3;
    Eigen::VectorXd y(4);
    y << 1.5, 2.0, 5.0, 2.5;
    std::vector<Location> locs = {{0, 0}, {1, 0}, {0, 2}, {3, 0.5}};
    auto p = make_problem(x, y, true, locs);
    auto g = gwr_fit(p, KernelSpec::adaptive(KernelKind::Bisquare, 3));
    ASSERT_TRUE(g.ok());
    double trace = 0;
    for (std::size_t i = 0; i < 4; ++i) {
        std::vector<double> d;
        for (std::size_t j = 0; j < 4; ++j)
            if (j != i) d.push_back(std::hypot(locs[i].x - locs[j].x, locs[i].y - locs[j].y));
        std::sort(d.begin(), d.end());
        const double b = d[2];
        std::vector<double> w(4);
        for (std::size_t j = 0; j < 4; ++j) {
            const double u = std::hypot(locs[i].x - locs[j].x, locs[i].y - locs[j].y) / b;
            w[j] = u < 1 ? (1 - u * u) * (1 - u * u) : 0.0;
        }
        auto beta = wls_oracle(p.X, p.y, w);
        EXPECT_NEAR(g.locations[i].coefficients(0), beta[0], 1e-9);
        EXPECT_NEAR(g.locations[i].coefficients(1), beta[1], 1e-9);
        trace += g.locations[i].leverage;
    }
    EXPECT_NEAR(trace, g.effective_parameters, 1e-12);
}

TEST(Gwr, ExactLineInterpolates) {
    std::mt19937_64 gen(16);
    std::uniform_real_distribution<double> u(0, 10);
    Eigen::MatrixXd x(15, 1);
    Eigen::VectorXd y(15);
    std::vector<Location> locs(15);
    for (int i = 0; i < 15; ++i) {
        x(i, 0) = u(gen);
        y(i) = 2 * x(i, 0);
        locs[i] = {u(gen), u(gen)};
    }
    auto g = gwr_fit(make_problem(x, y, true, locs), KernelSpec::adaptive(KernelKind::Bisquare, 8));
    ASSERT_TRUE(g.ok());
    for (const auto& l : g.locations) {
        EXPECT_NEAR(l.coefficients(0), 0, 1e-9);
        EXPECT_NEAR(l.coefficients(1), 2, 1e-9);
    }
    EXPECT_NEAR(g.residual_squares, 0, 1e-15);
}

TEST(Gwr, EffectiveParametersBounded) {
    std::mt19937_64 gen(17);
    for (int trial = 0; trial < 10; ++trial) {
        auto p = random_problem(gen, 30, 1);
        for (std::size_t n : {5u, 10u, 29u}) {
            auto g = gwr_fit(p, KernelSpec::adaptive(KernelKind::Bisquare, n));
            if (!g.ok()) continue;
            EXPECT_GE(g.effective_parameters, 2.0 - 1e-9);
            EXPECT_LE(g.effective_parameters, 30.0 + 1e-9);
        }
    }
}

TEST(Gwr, DuplicateLocationsZeroBandwidth) {
    Eigen::MatrixXd x(5, 1);
    x << 1, 2, 3, 4, 5;
    Eigen::VectorXd y(5);
    y << 1, 2, 3, 5, 4;
    auto p = make_problem(x, y, true, {{0, 0}, {0, 0}, {0, 0}, {0, 0}, {2, 2}});
    EXPECT_EQ(code_of([&] { gwr_fit(p, KernelSpec::adaptive(KernelKind::Bisquare, 3)); }), ErrorCode::ZeroBandwidth);
    EXPECT_EQ(code_of([&] { gwr_fit(p, KernelSpec::adaptive(KernelKind::Bisquare, 1)); }), ErrorCode::InvalidArgument);
}

TEST(Gwr, ThreadCountDoesNotChangeResults) {
    std::mt19937_64 gen(18);
    auto p = random_problem(gen, 60, 2);
    auto a = gwr_fit(p, KernelSpec::adaptive(KernelKind::Bisquare, 20), 1);
    auto b = gwr_fit(p, KernelSpec::adaptive(KernelKind::Bisquare, 20), 7);
    EXPECT_EQ(a.residual_squares, b.residual_squares);
    EXPECT_EQ(a.effective_parameters, b.effective_parameters);
    for (std::size_t i = 0; i < 60; ++i) EXPECT_EQ(a.locations[i].coefficients, b.locations[i].coefficients);
}

TEST(SelectNeighbors, PicksLowestAic) {
    std::mt19937_64 gen(19);
    auto p = random_problem(gen, 40, 1);
    auto a5 = gwr_fit(p, KernelSpec::adaptive(KernelKind::Bisquare, 5));
    auto a10 = gwr_fit(p, KernelSpec::adaptive(KernelKind::Bisquare, 10));
    auto sel = select_neighbors(p, KernelKind::Bisquare, {5, 10});
    const bool five_ok = a5.ok() && std::isfinite(a5.gwr_aic);
    const std::size_t expected = five_ok && a5.gwr_aic < a10.gwr_aic ? 5 : 10;
    EXPECT_EQ(sel.neighbors, expected);
    EXPECT_EQ(select_neighbors(p, KernelKind::Bisquare, {12}).neighbors, 12u);
}

TEST(SelectNeighbors, TieGoesToLarger) {
    // A uniform kernel wider than the data at both sizes gives identical fits.
    Eigen::MatrixXd x(6, 1);
    x << 1, 2, 3, 4, 5, 6;
    Eigen::VectorXd y(6);
    y << 1, 3, 2, 5, 4, 6;
    std::vector<Location> l(6, {0, 0});
    for (int i = 0; i < 6; ++i) l[i] = {double(i % 2) * 1e-3, double(i / 2) * 1e-3};
    auto p = make_problem(x, y, true, l);
    auto s4 = gwr_fit(p, KernelSpec::adaptive(KernelKind::Gaussian, 4));
    auto s5 = gwr_fit(p, KernelSpec::adaptive(KernelKind::Gaussian, 5));
    auto sel = select_neighbors(p, KernelKind::Gaussian, {4, 5});
    if (s4.gwr_aic == s5.gwr_aic) EXPECT_EQ(sel.neighbors, 5u);
    EXPECT_EQ(code_of([&] { select_neighbors(p, KernelKind::Gaussian, {6}); }), ErrorCode::InvalidArgument);
}

TEST(CoefficientSummary, Quartiles) {
    EXPECT_DOUBLE_EQ(quantile_type7({1, 2, 3, 4, 5}, 0.25), 2);
    EXPECT_DOUBLE_EQ(quantile_type7({1, 2, 3, 4, 5}, 0.75), 4);
    EXPECT_DOUBLE_EQ(quantile_type7({1, 2, 3, 4}, 0.25), 1.75);

    LocalFitSet l;
    l.p = 1;
    for (double v : {3.0, 1.0, 5.0, 2.0, 4.0}) {
        LocalFit f;
        f.coefficients = Eigen::VectorXd::Constant(1, v);
        l.locations.push_back(f);
    }
    auto s = coefficient_summary(l, {"b"}).at(0);
    EXPECT_DOUBLE_EQ(s.min, 1);
    EXPECT_DOUBLE_EQ(s.lower_quartile, 2);
    EXPECT_DOUBLE_EQ(s.mean, 3);
    EXPECT_DOUBLE_EQ(s.upper_quartile, 4);
    EXPECT_DOUBLE_EQ(s.max, 5);
}

TEST(CoefficientSummary, ConstantSurface) {
    LocalFitSet l;
    l.p = 1;
    for (int i = 0; i < 7; ++i) {
        LocalFit f;
        f.coefficients = Eigen::VectorXd::Constant(1, 0.3);
        l.locations.push_back(f);
    }
    auto s = coefficient_summary(l).at(0);
    for (double v : {s.min, s.lower_quartile, s.mean, s.upper_quartile, s.max}) EXPECT_DOUBLE_EQ(v, 0.3);
}

TEST(Aicc, InfiniteWhenDenominatorNonPositive) {
    EXPECT_TRUE(std::isinf(gwr_aicc(10, 1.0, 8.0)));
    const double expected = 10 * std::log(0.1) + 10.0 * (10 + 3) / (10 - 2 - 3);
    EXPECT_NEAR(gwr_aicc(10, 1.0, 3.0), expected, 1e-12);
}
