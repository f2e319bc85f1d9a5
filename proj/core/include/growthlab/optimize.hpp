#pragma once

#include "growthlab/generators.hpp"
#include "growthlab/markets.hpp"
#include "growthlab/portfolios.hpp"
#include "growthlab/simplex.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

namespace growthlab {

struct SolverTrace {
    std::size_t iterations = 0;
    std::size_t starts = 1;
    double grad_norm = 0.0;
};

struct RetroResult {
    PortfolioMapSpec map;
    double log_value = 0.0;  // log V*_T of `map` on the path
    SolverTrace trace;
};

// argmax over constant weights with coordinates >= margin/d.
RetroResult best_constant(const MarketPath& path, double margin = 0.0);

struct LipschitzOptions {
    int starts = 5;
    int sweeps = 50;
    int max_iter = 400;
    double tol = 1e-9;
    std::optional<double> margin;  // defaults to 1/M
    std::vector<PortfolioMapSpec> extra_starts;
    std::uint64_t seed = 0;
};

RetroResult best_lipschitz(const MarketPath& path, double M, int resolution, const LipschitzOptions& opts = {});

struct GeneratorOptions {
    int starts = 16;
    int max_iter = 200;
    int grid_n = 20;
    std::uint64_t seed = 0;
    std::vector<GeneratorFunction> extra_starts;
};

// log V^G_T by the master equation, using only partition intervals.
double generator_objective(const MarketPath& path, const GeneratorFunction& G);

RetroResult best_generator(const MarketPath& path, double M, double alpha, const std::vector<GeneratorFamily>& families,
                           const GeneratorOptions& opts = {});

struct StateSolution {
    Eigen::VectorXd p_raw;  // unblended optimum
    Eigen::VectorXd p;      // blended (1 - eps) p_raw + eps/d
    double L = 0.0;         // sample objective at p
    double L_raw = 0.0;     // sample objective at p_raw
    std::size_t iterations = 0;
    double grad_norm = 0.0;
};

// Maximizes sum_s prob_s log <p, y_s / x> over the closed simplex by
// exponentiated gradient; samples are columns of y.
StateSolution solve_log_optimal(const SimplexPoint& x, const Eigen::MatrixXd& y, const Eigen::VectorXd& prob, double eps);

// Sample objective sum_s prob_s log <p, y_s / x>.
double log_optimal_objective(const SimplexPoint& x, const Eigen::MatrixXd& y, const Eigen::VectorXd& prob,
                             const Eigen::VectorXd& p);

// Kernel draws (or its exact law when available) at x.
void kernel_samples(const SimplexPoint& x, const MarkovKernel& kernel, std::size_t n, std::uint64_t seed,
                    Eigen::MatrixXd& y, Eigen::VectorXd& prob);

StateSolution log_optimal_state(const SimplexPoint& x, const MarkovKernel& kernel, std::size_t n, double eps,
                                std::uint64_t seed);

struct LogOptimalTable {
    std::shared_ptr<const SimplexGrid> grid;
    double offset = 0.0;
    Eigen::MatrixXd states;   // d x K
    Eigen::MatrixXd weights;  // d x K, blended
    std::vector<double> L;
    std::vector<std::size_t> iterations;
    std::size_t n = 0;
    double eps = 0.0;

    PortfolioMapSpec map() const;
};

// Table states sit at (1 - offset) * node + offset * uniform; offset
// defaults to 1/(2N).
LogOptimalTable log_optimal_map(const MarkovKernel& kernel, int resolution, std::size_t n, double eps,
                                std::uint64_t seed, std::optional<double> offset = std::nullopt);

PortfolioWeights numeraire_weights(const DiffusionSpec& spec, const SimplexPoint& x);
void numeraire_weights_raw(const DiffusionSpec& spec, const double* x, double* out);

// Moves an arbitrary map into the Lipschitz grid class: node values are the
// map's values at the nodes, then projected and certified.
PortfolioMapSpec project_into_lipschitz(const PortfolioMapSpec& map, double M, int resolution, int sweeps = 200);

}  // namespace growthlab
