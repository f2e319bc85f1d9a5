#pragma once

#include "growthlab/generators.hpp"
#include "growthlab/simplex.hpp"
#include "growthlab/simplex_grid.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <memory>
#include <string>
#include <variant>
#include <vector>

namespace growthlab {

// Interpolant of node values on a barycentric grid; certified l1 Lipschitz.
class LipschitzGridMap {
public:
    LipschitzGridMap() = default;
    // values: d x nodes, each column in the margin simplex with margin 1/M
    LipschitzGridMap(std::shared_ptr<const SimplexGrid> grid, Eigen::MatrixXd values, double M);

    const SimplexGrid& grid() const { return *grid_; }
    std::shared_ptr<const SimplexGrid> grid_ptr() const { return grid_; }
    const Eigen::MatrixXd& values() const { return values_; }
    double M() const { return M_; }
    double certified() const { return certified_; }

    void weights(const double* x, double* out) const;

    friend double certify_lipschitz(LipschitzGridMap& map);

private:
    std::shared_ptr<const SimplexGrid> grid_;
    Eigen::MatrixXd values_;
    double M_ = 0.0;
    double certified_ = 0.0;
};

// Exact per-cell l1 Lipschitz constant of the interpolant of `values`.
double lipschitz_constant(const SimplexGrid& grid, const Eigen::MatrixXd& values);
double certify_lipschitz(LipschitzGridMap& map);

// Table of weights at the states (1 - offset) * node + offset * uniform,
// interpolated barycentrically; points outside the shrunk simplex are
// clamped onto it.
class TableMap {
public:
    TableMap() = default;
    TableMap(std::shared_ptr<const SimplexGrid> grid, double offset, Eigen::MatrixXd values, double margin);

    const SimplexGrid& grid() const { return *grid_; }
    std::shared_ptr<const SimplexGrid> grid_ptr() const { return grid_; }
    double offset() const { return offset_; }
    double margin() const { return margin_; }
    const Eigen::MatrixXd& values() const { return values_; }
    Eigen::MatrixXd states() const;

    void weights(const double* x, double* out) const;

private:
    std::shared_ptr<const SimplexGrid> grid_;
    double offset_ = 0.0;
    Eigen::MatrixXd values_;
    double margin_ = 0.0;
};

struct ConstantMap {
    Eigen::VectorXd b;
};

struct FgMap {
    GeneratorFunction G;
};

// pi^G_i = x_i (D_i G / G + 1 - sum_j x_j D_j G / G)
PortfolioWeights fg_weights(const GeneratorFunction& G, const SimplexPoint& x);
void fg_weights_raw(const GeneratorFunction& G, const double* x, double* out);

class PortfolioMapSpec {
public:
    using Variant = std::variant<ConstantMap, LipschitzGridMap, FgMap, TableMap>;

    PortfolioMapSpec() = default;
    explicit PortfolioMapSpec(Variant v);

    static PortfolioMapSpec constant(const Eigen::VectorXd& b);
    static PortfolioMapSpec lipschitz(LipschitzGridMap m);
    static PortfolioMapSpec fg(GeneratorFunction G);
    static PortfolioMapSpec table(TableMap t);

    int dim() const { return dim_; }
    const Variant& variant() const { return v_; }
    std::string kind() const;

    // Fast evaluation without validation; out has dim() entries.
    void weights(const double* x, double* out) const;
    PortfolioWeights evaluate(const SimplexPoint& x) const;

    std::string to_json() const;
    static PortfolioMapSpec from_json(const std::string& text);

private:
    Variant v_;
    int dim_ = 0;
};

// pi(x) = x, as the functionally generated map of a constant generator.
PortfolioMapSpec market_map(int dim);

struct MixtureAtom {
    PortfolioMapSpec map;
    double weight = 0.0;
};

struct MixtureMeasure {
    std::vector<MixtureAtom> atoms;
    std::string provenance;  // JSON object

    int dim() const { return atoms.empty() ? 0 : atoms.front().map.dim(); }
    // First n atoms, weights renormalized.
    MixtureMeasure prefix(std::size_t n) const;
    std::string to_json() const;
    static MixtureMeasure from_json(const std::string& text);
};

MixtureMeasure make_mixture(std::vector<PortfolioMapSpec> maps, std::vector<double> weights,
                            std::string provenance = "{}");

enum class MapClass { Constant, Lipschitz, Fg };

struct ClassSpec {
    MapClass kind = MapClass::Constant;
    double M = 5.0;
    double alpha = 0.2;
    int resolution = 32;  // Lipschitz grid N = 1/h
    std::vector<GeneratorFamily> families{GeneratorFamily::Quadratic};
    int grid_n = 20;
};

MixtureMeasure sample_mixture(const ClassSpec& cls, int dim, std::size_t n_atoms, std::uint64_t seed);
// Atom counts per M proportional to 2^{-M}, M = 1..M_max.
MixtureMeasure sample_mixture_multi(const ClassSpec& cls, int dim, int M_max, std::size_t n_atoms,
                                    std::uint64_t seed);

// Lipschitz node values projected into {margin 1/M per node, pairwise caps}
// by cyclic Dykstra sweeps, then scaled toward their mean until certified.
Eigen::MatrixXd project_lipschitz_values(const SimplexGrid& grid, const Eigen::MatrixXd& values, double M,
                                         double margin, int sweeps = 50);

}  // namespace growthlab
