#include "growthlab/portfolios.hpp"
#include "growthlab/rng.hpp"
#include "growthlab/simplex_grid.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace growthlab;

namespace {

double binomial(int n, int k)
{
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

Eigen::VectorXd random_point(int d, RngStream& rng)
{
    Eigen::VectorXd g(d);
    for (int i = 0; i < d; ++i) g[i] = rng.gamma(1.0);
    return g / g.sum();
}

Eigen::VectorXd interpolate(const SimplexGrid& grid, const Eigen::MatrixXd& values, const Eigen::VectorXd& x)
{
    const int d = grid.dim();
    std::vector<int> idx(d);
    std::vector<double> w(d);
    grid.locate(x.data(), idx.data(), w.data());
    Eigen::VectorXd out = Eigen::VectorXd::Zero(values.rows());
    for (int k = 0; k < d; ++k) out += w[k] * values.col(idx[k]);
    return out;
}

}  // namespace

TEST(SimplexGrid, NodeCountIsBinomial)
{
    for (int d = 2; d <= 4; ++d)
        for (int n : {1, 4, 8}) {
            SimplexGrid g(d, n);
            EXPECT_EQ(static_cast<double>(g.size()), binomial(n + d - 1, d - 1)) << d << " " << n;
        }
}

TEST(SimplexGrid, LocateReproducesPoint)
{
    RngStream rng(2, 0);
    for (int d = 2; d <= 4; ++d) {
        SimplexGrid g(d, 7);
        std::vector<int> idx(d);
        std::vector<double> w(d);
        for (int trial = 0; trial < 300; ++trial) {
            Eigen::VectorXd x = random_point(d, rng);
            g.locate(x.data(), idx.data(), w.data());
            Eigen::VectorXd back = Eigen::VectorXd::Zero(d);
            double s = 0.0;
            for (int k = 0; k < d; ++k) {
                EXPECT_GE(w[k], -1e-14);
                s += w[k];
                back += w[k] * g.nodes().col(idx[k]);
            }
            EXPECT_NEAR(s, 1.0, 1e-13);
            EXPECT_LE((back - x).lpNorm<1>(), 1e-13);
        }
    }
}

TEST(LipschitzGridMap, MidpointInterpolation)
{
    auto grid = shared_grid(2, 2);
    Eigen::MatrixXd values(2, grid->size());
    for (std::size_t j = 0; j < grid->size(); ++j) {
        const double x1 = grid->nodes()(0, j);
        values(0, j) = 0.4 + 0.2 * x1;
        values(1, j) = 1.0 - values(0, j);
    }
    LipschitzGridMap m(grid, values, 5.0);
    Eigen::Vector2d x(0.25, 0.75), out;
    m.weights(x.data(), out.data());
    EXPECT_NEAR(out[0], 0.45, 1e-15);
    EXPECT_NEAR(out[1], 0.55, 1e-15);
    // l1 spread 0.2 between adjacent nodes at l1 distance 1.0
    EXPECT_NEAR(m.certified(), 0.2, 1e-14);
}

TEST(LipschitzConstant, TrivialExamples)
{
    auto grid = shared_grid(3, 5);
    Eigen::MatrixXd flat = Eigen::MatrixXd::Constant(3, grid->size(), 1.0 / 3.0);
    EXPECT_EQ(lipschitz_constant(*grid, flat), 0.0);
    EXPECT_NEAR(lipschitz_constant(*grid, grid->nodes()), 1.0, 1e-12);
}

// Nearby random pairs never exceed the certified constant, and pairs
// along the worst edge direction come close to it.
TEST(LipschitzConstant, BoundsSampledDifferenceQuotients)
{
    RngStream rng(8, 0);
    for (int d = 2; d <= 4; ++d) {
        auto grid = shared_grid(d, 4);
        Eigen::MatrixXd values(d, grid->size());
        for (std::size_t j = 0; j < grid->size(); ++j) values.col(j) = random_point(d, rng);
        const double L = lipschitz_constant(*grid, values);
        double worst = 0.0;
        for (int trial = 0; trial < 20000; ++trial) {
            Eigen::VectorXd x = random_point(d, rng);
            Eigen::VectorXd dir = random_point(d, rng) - random_point(d, rng);
            Eigen::VectorXd y = x + 1e-3 * dir;
            if (y.minCoeff() <= 0.0) continue;
            const double q = (interpolate(*grid, values, x) - interpolate(*grid, values, y)).lpNorm<1>() /
                             (x - y).lpNorm<1>();
            EXPECT_LE(q, L * (1.0 + 1e-9) + 1e-9);
            worst = std::max(worst, q);
        }
        EXPECT_GE(worst, 0.5 * L);
    }
}

TEST(ProjectLipschitzValues, CertifiesIntoClass)
{
    RngStream rng(4, 0);
    auto grid = shared_grid(3, 6);
    Eigen::MatrixXd values(3, grid->size());
    for (std::size_t j = 0; j < grid->size(); ++j) {
        values.col(j) = Eigen::VectorXd::Zero(3);
        values(static_cast<int>(rng.next() % 3), j) = 1.0;
    }
    for (double M : {1.5, 2.0, 5.0}) {
        Eigen::MatrixXd p = project_lipschitz_values(*grid, values, M, 1.0 / M);
        EXPECT_LE(lipschitz_constant(*grid, p), M * (1.0 + 1e-9));
        EXPECT_GE(p.minCoeff(), 1.0 / (3.0 * M) - 1e-12);
        for (std::size_t j = 0; j < grid->size(); ++j) EXPECT_NEAR(p.col(j).sum(), 1.0, 1e-12);
    }
}
