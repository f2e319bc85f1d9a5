#include "growthlab/error.hpp"
#include "growthlab/rng.hpp"
#include "growthlab/simplex.hpp"
#include "growthlab/stats.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

using namespace growthlab;

namespace {

// Threshold form of the projection: w_i = max(v_i - tau, floor), tau by bisection.
Eigen::VectorXd projection_oracle(const Eigen::VectorXd& v, double floor)
{
    double lo = v.minCoeff() - 2.0, hi = v.maxCoeff() + 2.0;
    for (int it = 0; it < 200; ++it) {
        const double tau = 0.5 * (lo + hi);
        double s = 0.0;
        for (int i = 0; i < v.size(); ++i) s += std::max(v[i] - tau, floor);
        (s > 1.0 ? lo : hi) = tau;
    }
    const double tau = 0.5 * (lo + hi);
    Eigen::VectorXd w(v.size());
    for (int i = 0; i < v.size(); ++i) w[i] = std::max(v[i] - tau, floor);
    return w;
}

ErrorCode code_of(const std::function<void()>& fn)
{
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no error thrown";
    return ErrorCode::InvalidArgument;
}

}  // namespace

TEST(SimplexPoint, RejectsBoundaryAndShortVectors)
{
    EXPECT_EQ(code_of([] { make_simplex_point(std::vector<double>{1.0, 0.0}); }), ErrorCode::NonPositiveEntry);
    EXPECT_EQ(code_of([] { make_simplex_point(std::vector<double>{1.0}); }), ErrorCode::DimensionTooSmall);
    auto p = make_simplex_point(std::vector<double>{0.25, 0.75});
    EXPECT_DOUBLE_EQ(p[1], 0.75);
    EXPECT_NEAR(uniform_point(4).coords().sum(), 1.0, 1e-15);
}

TEST(PortfolioWeights, ValidatesInvariants)
{
    Eigen::VectorXd w(3);
    w << 0.5, 0.5, 0.0;
    EXPECT_NO_THROW(PortfolioWeights::make(w));
    w << 0.6, 0.5, -0.1;
    EXPECT_EQ(code_of([&] { PortfolioWeights::make(w); }), ErrorCode::NegativeWeight);
    EXPECT_NO_THROW(PortfolioWeights::make(w, false));
    w << 0.7, 0.2, 0.2;
    EXPECT_THROW(PortfolioWeights::make(w), Error);
}

TEST(PortfolioWeights, MarginProjection)
{
    Eigen::VectorXd w(2);
    w << 1.0, 0.0;
    auto p = project_to_margin(PortfolioWeights::make(w), 0.2);
    EXPECT_NEAR(p[0], 0.9, 1e-15);
    EXPECT_NEAR(p[1], 0.1, 1e-15);
    EXPECT_NEAR(p.margin(), 0.2, 0.0);
}

TEST(ProjectToSimplex, MatchesThresholdOracle)
{
    RngStream rng(11, 0);
    for (int trial = 0; trial < 500; ++trial) {
        const int d = 2 + trial % 6;
        Eigen::VectorXd v(d);
        for (int i = 0; i < d; ++i) v[i] = 3.0 * rng.normal();
        const double floor = (trial % 3 == 0) ? 0.0 : 0.5 * rng.uniform() / d;
        Eigen::VectorXd got = project_to_simplex(v, floor);
        Eigen::VectorXd want = projection_oracle(v, floor);
        EXPECT_LE((got - want).lpNorm<Eigen::Infinity>(), 1e-12);
        EXPECT_NEAR(got.sum(), 1.0, 1e-12);
        EXPECT_GE(got.minCoeff(), floor - 1e-15);
    }
}

TEST(ProjectToSimplex, FullFloorGivesUniform)
{
    Eigen::VectorXd v(3);
    v << 5.0, -1.0, 0.3;
    Eigen::VectorXd w = project_to_simplex(v, 1.0 / 3.0);
    for (int i = 0; i < 3; ++i) EXPECT_NEAR(w[i], 1.0 / 3.0, 1e-15);
}

TEST(MarketPath, ValidatesConstruction)
{
    Eigen::MatrixXd P(2, 3);
    P << 0.5, 0.4, 0.3, 0.5, 0.6, 0.7;
    EXPECT_NO_THROW(MarketPath(PathKind::Discrete, {0, 1, 2}, P));
    EXPECT_EQ(code_of([&] { MarketPath(PathKind::Discrete, {0, 1}, P); }), ErrorCode::DimensionMismatch);
    EXPECT_THROW(MarketPath(PathKind::Discrete, {0, 2, 1}, P), Error);
    P(0, 1) = 0.0;
    P(1, 1) = 1.0;
    EXPECT_EQ(code_of([&] { MarketPath(PathKind::Discrete, {0, 1, 2}, P); }), ErrorCode::NonPositiveEntry);
}

TEST(QuadraticVariation, SumsSquaredIncrementsOnPartition)
{
    const std::size_t n = 9;
    std::vector<double> t(n);
    Eigen::MatrixXd P(2, n);
    for (std::size_t j = 0; j < n; ++j) {
        t[j] = 0.25 * j;
        const double x = 0.5 + 0.1 * std::sin(1.7 * j);
        P(0, j) = x;
        P(1, j) = 1.0 - x;
    }
    MarketPath path(PathKind::SampledContinuous, t, P);
    auto q = quadratic_variation(path, RefiningPartition{1.0, 1});
    ASSERT_EQ(q.partition_indices().size(), 5u);
    double want = 0.0;
    for (std::size_t j = 2; j < n; j += 2) {
        const double inc = P(0, j) - P(0, j - 2);
        want += inc * inc;
    }
    EXPECT_NEAR(q.qv(n - 1)(0, 0), want, 1e-15);
    EXPECT_NEAR(q.qv(n - 1)(0, 1), -want, 1e-15);
    // qv is piecewise constant between partition points
    EXPECT_EQ(q.qv(3)(0, 0), q.qv(2)(0, 0));

    EXPECT_EQ(code_of([&] { quadratic_variation(path, RefiningPartition{0.1, 0}); }),
              ErrorCode::PartitionCoarserThanPath);
}

TEST(WeightsCsv, RoundTripsExactly)
{
    RngStream rng(3, 0);
    const std::size_t n = 50;
    std::vector<double> t(n);
    Eigen::MatrixXd P(3, n);
    for (std::size_t j = 0; j < n; ++j) {
        t[j] = 0.01 * j;
        Eigen::Vector3d g(rng.gamma(1.0), rng.gamma(2.0), rng.gamma(0.5));
        P.col(j) = g / g.sum();
    }
    MarketPath path(PathKind::SampledContinuous, t, P);
    std::stringstream ss;
    write_weights_csv(ss, path);
    MarketPath back = read_weights_csv(ss, PathKind::SampledContinuous);
    ASSERT_EQ(back.size(), n);
    EXPECT_EQ((back.points() - P).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(back.times(), t);
}

TEST(WeightsCsv, RejectsBadHeader)
{
    std::stringstream ss("time,a,b\n0,0.5,0.5\n");
    EXPECT_EQ(code_of([&] { read_weights_csv(ss); }), ErrorCode::ParseError);
}

TEST(Rng, StreamsAreReproducibleAndDistinct)
{
    RngStream a(42, 7), b(42, 7), c(42, 8);
    for (int i = 0; i < 100; ++i) {
        const auto x = a.next();
        EXPECT_EQ(x, b.next());
        EXPECT_NE(x, c.next());
    }
    EXPECT_NE(derive_seed(1, 2), derive_seed(2, 1));
    EXPECT_EQ(derive_seed(5, 9), derive_seed(5, 9));
}

TEST(Rng, GammaMoments)
{
    RngStream rng(9, 0);
    const int n = 200000;
    double s = 0.0, s2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double g = rng.gamma(1.5);
        s += g;
        s2 += g * g;
    }
    const double mean = s / n, var = s2 / n - mean * mean;
    EXPECT_NEAR(mean, 1.5, 4.0 * std::sqrt(1.5 / n));
    EXPECT_NEAR(var, 1.5, 0.05);
}

TEST(BatchMeans, IidSeriesMatchesNaiveSe)
{
    RngStream rng(5, 0);
    std::vector<double> x(100000);
    for (auto& v : x) v = rng.normal();
    auto bm = batch_means(x, 20);
    EXPECT_EQ(bm.batches, 20u);
    EXPECT_NEAR(bm.se, 1.0 / std::sqrt(1e5), 0.35 / std::sqrt(1e5));
    EXPECT_LT(std::abs(bm.se_half - bm.se) / bm.se, 0.3);
}

TEST(PortfolioWeights, MarginExamples)
{
    Eigen::VectorXd w(3);
    w << 0.7, 0.2, 0.1;
    auto p = project_to_margin(PortfolioWeights::make(w), 0.3);
    EXPECT_NEAR(p[0], 0.59, 1e-15);
    EXPECT_NEAR(p[1], 0.24, 1e-15);
    EXPECT_NEAR(p[2], 0.17, 1e-15);
    Eigen::VectorXd u(2);
    u << 0.5, 0.5;
    auto q = project_to_margin(PortfolioWeights::make(u), 0.7);
    EXPECT_EQ(q[0], 0.5);
}

TEST(QuadraticVariation, HandSummedIncrements)
{
    Eigen::MatrixXd P(2, 3);
    P << 0.5, 0.6, 0.5, 0.5, 0.4, 0.5;
    MarketPath path(PathKind::SampledContinuous, {0.0, 0.5, 1.0}, P);
    auto q = quadratic_variation(path, RefiningPartition{1.0, 1});
    EXPECT_NEAR(q.qv(2)(0, 0), 0.02, 1e-15);
    EXPECT_NEAR(q.qv(2)(0, 1), -0.02, 1e-15);

    Eigen::MatrixXd C(2, 3);
    C << 0.3, 0.3, 0.3, 0.7, 0.7, 0.7;
    auto z = quadratic_variation(MarketPath(PathKind::SampledContinuous, {0.0, 0.5, 1.0}, C), RefiningPartition{1.0, 1});
    EXPECT_EQ(z.qv(2).cwiseAbs().maxCoeff(), 0.0);
}
