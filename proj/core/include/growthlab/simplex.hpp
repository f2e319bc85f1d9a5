#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace growthlab {

inline constexpr double kSumTolerance = 1e-9;

// Point of the open simplex; coordinates strictly positive and summing to one.
class SimplexPoint {
public:
    SimplexPoint() = default;

    int dim() const { return static_cast<int>(coords_.size()); }
    const Eigen::VectorXd& coords() const { return coords_; }
    double operator[](int i) const { return coords_[i]; }
    const double* data() const { return coords_.data(); }

    friend SimplexPoint make_simplex_point(const Eigen::VectorXd& raw);

private:
    Eigen::VectorXd coords_;
};

SimplexPoint make_simplex_point(const Eigen::VectorXd& raw);
SimplexPoint make_simplex_point(const std::vector<double>& raw);
SimplexPoint uniform_point(int dim);

class PortfolioWeights {
public:
    PortfolioWeights() = default;

    // Validates the sum, sign and margin invariants.
    static PortfolioWeights make(Eigen::VectorXd coords, bool long_only = true, double margin = 0.0);

    int dim() const { return static_cast<int>(coords_.size()); }
    const Eigen::VectorXd& coords() const { return coords_; }
    double operator[](int i) const { return coords_[i]; }
    bool long_only() const { return long_only_; }
    double margin() const { return margin_; }

private:
    Eigen::VectorXd coords_;
    bool long_only_ = true;
    double margin_ = 0.0;
};

PortfolioWeights project_to_margin(const PortfolioWeights& w, double eps);

// Euclidean projection of v onto {w : sum w = 1, w_i >= floor}.
Eigen::VectorXd project_to_simplex(const Eigen::VectorXd& v, double floor = 0.0);

enum class PathKind { Discrete, SampledContinuous };

struct RefiningPartition {
    double h0 = 1.0;
    int level = 0;

    double mesh() const;
};

// Trajectory of market weights, stored column-wise (d x n).
class MarketPath {
public:
    MarketPath() = default;
    MarketPath(PathKind kind, std::vector<double> times, Eigen::MatrixXd points);

    PathKind kind() const { return kind_; }
    int dim() const { return static_cast<int>(points_.rows()); }
    std::size_t size() const { return times_.size(); }
    const std::vector<double>& times() const { return times_; }
    const Eigen::MatrixXd& points() const { return points_; }
    const double* point_data(std::size_t i) const { return points_.col(static_cast<Eigen::Index>(i)).data(); }
    SimplexPoint point(std::size_t i) const;

    bool has_qv() const { return qv_.size() > 0; }
    // Cumulative quadratic variation at time index i, d x d.
    Eigen::MatrixXd qv(std::size_t i) const;
    const double* qv_data(std::size_t i) const { return qv_.col(static_cast<Eigen::Index>(i)).data(); }
    std::optional<RefiningPartition> partition() const { return partition_; }

    // Time indices where the partition has a point (filled with qv).
    const std::vector<std::size_t>& partition_indices() const { return partition_indices_; }

    // Boundary corrections applied by the simulator, and steps taken.
    std::size_t boundary_events() const { return boundary_events_; }
    std::size_t steps() const { return size() > 0 ? size() - 1 : 0; }
    void set_boundary_events(std::size_t n) { boundary_events_ = n; }

    // Prefix [0, n) of the path, keeping qv when present.
    MarketPath prefix(std::size_t n) const;

    friend MarketPath quadratic_variation(const MarketPath& path, const RefiningPartition& partition);

private:
    PathKind kind_ = PathKind::Discrete;
    std::vector<double> times_;
    Eigen::MatrixXd points_;
    Eigen::MatrixXd qv_;
    std::optional<RefiningPartition> partition_;
    std::vector<std::size_t> partition_indices_;
    std::size_t boundary_events_ = 0;
};

MarketPath quadratic_variation(const MarketPath& path, const RefiningPartition& partition);

// Weights CSV: header t,w1,...,wd.
void write_weights_csv(std::ostream& out, const MarketPath& path);
MarketPath read_weights_csv(std::istream& in, PathKind kind = PathKind::Discrete);

}  // namespace growthlab
