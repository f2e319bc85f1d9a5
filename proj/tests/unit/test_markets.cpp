#include "growthlab/error.hpp"
#include "growthlab/markets.hpp"
#include "growthlab/stats.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace growthlab;

namespace {

// Beta(a, b) density integrated against 1/x by the midpoint rule on a
// substitution x = u^2 that removes the endpoint singularity.
double beta_inverse_moment_quadrature(double a, double b)
{
    const int n = 400000;
    const double norm = std::exp(std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b));
    double s = 0.0;
    for (int k = 0; k < n; ++k) {
        const double u = (k + 0.5) / n;
        const double x = u * u;
        s += std::pow(x, a - 2.0) * std::pow(1.0 - x, b - 1.0) * 2.0 * u;
    }
    return s / n / norm;
}

std::vector<double> row(const InvariantSample& s, int i)
{
    std::vector<double> out(s.size());
    for (std::size_t j = 0; j < s.size(); ++j) out[j] = s.samples(i, static_cast<Eigen::Index>(j));
    return out;
}

}  // namespace

// Oracle for the stationary inverse moment of the benchmark: Beta(1.5, 1.5)
// gives E[1/x] = (a + b - 1) / (a - 1) = 4.
TEST(BetaInverseMoment, ClosedFormAgreesWithQuadratureAndMonteCarlo)
{
    const double a = 1.5, b = 1.5;
    const double closed = (a + b - 1.0) / (a - 1.0);
    EXPECT_DOUBLE_EQ(closed, 4.0);
    EXPECT_NEAR(beta_inverse_moment_quadrature(a, b), closed, 1e-3);

    // Beta via two gammas from the standard library; 1/x has infinite
    // variance here, so compare medians of block means.
    std::mt19937_64 eng(2024);
    std::gamma_distribution<double> ga(a, 1.0), gb(b, 1.0);
    const int blocks = 41, per = 50000;
    std::vector<double> means;
    for (int k = 0; k < blocks; ++k) {
        double s = 0.0;
        for (int j = 0; j < per; ++j) {
            const double x = ga(eng), y = gb(eng);
            s += (x + y) / x;
        }
        means.push_back(s / per);
    }
    std::nth_element(means.begin(), means.begin() + blocks / 2, means.end());
    EXPECT_NEAR(means[blocks / 2], closed, 0.1);
}

TEST(Kernels, IdentityKernelGivesConstantPath)
{
    auto mu0 = make_simplex_point(std::vector<double>{0.2, 0.3, 0.5});
    auto path = simulate_discrete(identity_kernel(3), 5, mu0, 1);
    ASSERT_EQ(path.size(), 6u);
    for (std::size_t t = 0; t < path.size(); ++t) EXPECT_EQ((path.points().col(t) - mu0.coords()).norm(), 0.0);
}

TEST(Kernels, DeterministicTwoCycle)
{
    auto step = [](const Eigen::VectorXd& x) {
        Eigen::VectorXd y(2);
        if (x[0] < 0.6) y << 2.0 / 3.0, 1.0 / 3.0;
        else y << 0.5, 0.5;
        return y;
    };
    auto path = simulate_discrete(deterministic_kernel(2, step, "{}"), 4, uniform_point(2), 0);
    for (std::size_t t = 0; t < 5; ++t) {
        const double want = (t % 2 == 0) ? 0.5 : 2.0 / 3.0;
        EXPECT_NEAR(path.points()(0, t), want, 1e-15);
    }
}

TEST(Kernels, DrawsAreSeedDeterministic)
{
    auto kernel = euler_kernel(make_diffusion(wright_fisher_benchmark()), 0.02);
    auto x = make_simplex_point(std::vector<double>{0.3, 0.7});
    RngStream a(1, 0), b(1, 0), c(2, 0);
    auto ya = kernel.draw(x, a), yb = kernel.draw(x, b), yc = kernel.draw(x, c);
    EXPECT_EQ(ya.coords(), yb.coords());
    EXPECT_NE(ya.coords(), yc.coords());
    auto p1 = simulate_discrete(kernel, 100, x, 9), p2 = simulate_discrete(kernel, 100, x, 9);
    EXPECT_EQ(p1.points(), p2.points());
}

TEST(Kernels, EulerKernelMeanFollowsDrift)
{
    const double dt = 0.02;
    auto wf = wright_fisher_benchmark();
    auto kernel = euler_kernel(make_diffusion(wf), dt);
    auto x = make_simplex_point(std::vector<double>{0.3, 0.7});
    RngStream rng(17, 0);
    auto Y = kernel.batch(x, 100000, rng);
    const double mean = Y.row(0).mean();
    const double want = 0.3 + wf.kappa * (0.5 - 0.3) * dt;
    const double sd = std::sqrt(wf.sigma2 * 0.3 * 0.7 * dt);
    EXPECT_NEAR(mean, want, 4.0 * sd / std::sqrt(1e5) + 1e-3 * dt);
    EXPECT_NEAR(Y.colwise().sum().maxCoeff(), 1.0, 1e-12);
    EXPECT_GT(Y.minCoeff(), 0.0);
}

TEST(Diffusion, ZeroDynamicsKeepsPathConstant)
{
    auto mu0 = make_simplex_point(std::vector<double>{0.1, 0.9});
    auto path = simulate_diffusion(zero_dynamics(2), 1.0, 0.01, mu0, 3);
    EXPECT_EQ((path.points().colwise() - mu0.coords()).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Diffusion, NumeraireDriftForm)
{
    auto wf = wright_fisher_benchmark();
    auto spec = make_diffusion(wf);
    Eigen::Vector2d x(0.3, 0.7);
    Eigen::MatrixXd c = spec.c(x);
    Eigen::VectorXd lam = spec.lambda(x);
    EXPECT_NEAR(c(0, 0), 0.21, 1e-15);
    EXPECT_NEAR(c(0, 1), -0.21, 1e-15);
    EXPECT_NEAR((c * Eigen::Vector2d::Ones()).norm(), 0.0, 1e-15);
    Eigen::VectorXd drift = c * lam;
    EXPECT_NEAR(drift[0], wf.kappa * (0.5 - 0.3), 1e-14);
}

TEST(Diffusion, StaysInSimplexAndCountsBoundaryEvents)
{
    WrightFisherSpec wf;
    wf.dim = 3;
    wf.kappa = 0.3;
    wf.theta = Eigen::Vector3d(0.05, 0.05, 0.9);
    auto path = simulate_diffusion(make_diffusion(wf), 20.0, 1e-2, uniform_point(3), 5);
    EXPECT_GT(path.points().minCoeff(), 0.0);
    EXPECT_NEAR((path.points().colwise().sum().array() - 1.0).abs().maxCoeff(), 0.0, 1e-12);
    EXPECT_GT(path.boundary_events(), 0u);
}

TEST(Diffusion, ModelJsonRoundTrip)
{
    auto wf = wright_fisher_benchmark();
    auto back = parse_model_json(wf.descriptor());
    EXPECT_EQ(back.dim, 2);
    EXPECT_EQ(back.kappa, 1.5);
    EXPECT_EQ(back.sigma2, 1.0);
    EXPECT_EQ(back.theta, wf.theta);
    EXPECT_THROW(parse_model_json("{\"kappa\": -1}"), Error);
}

TEST(InvariantSample, BenchmarkMomentsMatchBetaLaw)
{
    auto spec = make_diffusion(wright_fisher_benchmark());
    auto inv = invariant_sample(spec, 1e-3, uniform_point(2), 20000, 2000, 50, 11);
    auto x = row(inv, 0);
    auto m = batch_means(x);
    EXPECT_NEAR(m.mean, 0.5, 3.0 * m.se);
    std::vector<double> sq(x.size()), invx(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) {
        sq[j] = (x[j] - 0.5) * (x[j] - 0.5);
        invx[j] = 1.0 / x[j];
    }
    auto v = batch_means(sq);
    EXPECT_NEAR(v.mean, 1.0 / 16.0, 3.0 * v.se);
    auto r = batch_means(invx);
    EXPECT_NEAR(r.mean, 4.0, 3.0 * r.se);
}

TEST(InvariantSample, IdentityKernelReturnsStart)
{
    auto mu0 = make_simplex_point(std::vector<double>{0.4, 0.6});
    auto inv = invariant_sample(identity_kernel(2), mu0, 10, 5, 2, 1);
    EXPECT_EQ((inv.samples.colwise() - mu0.coords()).cwiseAbs().maxCoeff(), 0.0);
}

TEST(InvariantSample, ChainTimeAverageNearTheta)
{
    auto kernel = euler_kernel(make_diffusion(wright_fisher_benchmark()), 0.02);
    for (std::uint64_t seed : {1u, 2u}) {
        auto path = simulate_discrete(kernel, 50000, uniform_point(2), seed);
        std::vector<double> x(path.size());
        for (std::size_t j = 0; j < path.size(); ++j) x[j] = path.points()(0, j);
        auto m = batch_means(x);
        EXPECT_NEAR(m.mean, 0.5, 3.0 * m.se) << seed;
    }
}

TEST(QuadraticVariation, WrightFisherMatchesIntegratedCoefficient)
{
    auto spec = make_diffusion(wright_fisher_benchmark());
    auto path = simulate_diffusion(spec, 50.0, 1e-4, uniform_point(2), 21);
    double integral = 0.0;
    for (std::size_t j = 0; j + 1 < path.size(); ++j) {
        const double x = path.points()(0, j);
        integral += x * (1.0 - x) * 1e-4;
    }
    for (int level : {0, 2, 4}) {
        auto q = quadratic_variation(path, RefiningPartition{0.016, level});
        const double ratio = q.qv(path.size() - 1)(0, 0) / integral;
        EXPECT_NEAR(ratio, 1.0, 0.05) << level;
    }
}
