#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <unordered_map>
#include <vector>

namespace growthlab {

// Barycentric grid {s/N : s in N^d, sum s = N} with the Kuhn (Freudenthal)
// triangulation taken in cumulative coordinates u_k = s_1 + ... + s_k.
class SimplexGrid {
public:
    struct Cell {
        std::vector<int> vertices;  // w_0 .. w_{d-1}, consecutive vertices differ by e_{order[m]} in u
        std::vector<int> order;     // cumulative coordinate stepped between w_m and w_{m+1}
    };

    SimplexGrid() = default;
    SimplexGrid(int dim, int resolution);

    int dim() const { return dim_; }
    int resolution() const { return n_; }
    std::size_t size() const { return static_cast<std::size_t>(nodes_.cols()); }
    const Eigen::MatrixXd& nodes() const { return nodes_; }

    // Interpolation stencil of a point of the closed simplex: dim() node
    // indices and barycentric weights.
    void locate(const double* x, int* idx, double* w) const;

    const std::vector<Cell>& cells() const { return cells_; }
    // Unique vertex pairs sharing a cell, with their l1 distance.
    struct Edge {
        int a, b;
        double dist;
    };
    const std::vector<Edge>& edges() const { return edges_; }

    int index_of_cumulative(const int* u) const;

private:
    std::uint64_t key(const int* u) const;

    int dim_ = 0;
    int n_ = 0;
    Eigen::MatrixXd nodes_;
    std::vector<int> dense_;  // key -> node index, when small enough
    std::unordered_map<std::uint64_t, int> sparse_;
    std::vector<Cell> cells_;
    std::vector<Edge> edges_;
};

}  // namespace growthlab

#include <memory>

namespace growthlab {

// Process-wide cache; grids are immutable once built.
std::shared_ptr<const SimplexGrid> shared_grid(int dim, int resolution);

}  // namespace growthlab
