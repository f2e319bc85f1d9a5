#include "growthlab/simplex_grid.hpp"

#include "growthlab/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace growthlab {

SimplexGrid::SimplexGrid(int dim, int resolution) : dim_(dim), n_(resolution)
{
    if (dim < 2) throw Error(ErrorCode::DimensionTooSmall, "grid dimension must be at least 2");
    if (resolution < 1) throw Error(ErrorCode::InvalidArgument, "grid resolution must be positive");
    const int m = dim - 1;

    // enumerate monotone cumulative vectors 0 <= u_1 <= ... <= u_m <= N
    std::vector<std::vector<int>> us;
    std::vector<int> u(static_cast<std::size_t>(m), 0);
    for (;;) {
        us.push_back(u);
        int k = m - 1;
        while (k >= 0 && u[static_cast<std::size_t>(k)] == n_) --k;
        if (k < 0) break;
        int v = u[static_cast<std::size_t>(k)] + 1;
        for (int j = k; j < m; ++j) u[static_cast<std::size_t>(j)] = v;
    }

    double span = std::pow(static_cast<double>(n_ + 1), m);
    if (span <= static_cast<double>(1 << 22)) dense_.assign(static_cast<std::size_t>(span), -1);

    nodes_.resize(dim, static_cast<Eigen::Index>(us.size()));
    for (std::size_t j = 0; j < us.size(); ++j) {
        int prev = 0;
        for (int i = 0; i < dim; ++i) {
            int cur = i < m ? us[j][static_cast<std::size_t>(i)] : n_;
            nodes_(i, static_cast<Eigen::Index>(j)) = static_cast<double>(cur - prev) / n_;
            prev = cur;
        }
        std::uint64_t k = key(us[j].data());
        if (!dense_.empty())
            dense_[k] = static_cast<int>(j);
        else
            sparse_[k] = static_cast<int>(j);
    }

    // Kuhn cells: base vertex in {0..N-1}^m and a permutation of steps,
    // kept when every vertex is monotone.
    std::vector<int> perm(static_cast<std::size_t>(m));
    std::vector<int> base(static_cast<std::size_t>(m), 0);
    std::set<std::pair<int, int>> seen;
    for (;;) {
        std::iota(perm.begin(), perm.end(), 0);
        do {
            std::vector<int> w = base;
            Cell cell;
            bool ok = true;
            auto valid = [&](const std::vector<int>& v) {
                for (int k = 0; k < m; ++k) {
                    if (v[static_cast<std::size_t>(k)] < 0 || v[static_cast<std::size_t>(k)] > n_) return false;
                    if (k > 0 && v[static_cast<std::size_t>(k)] < v[static_cast<std::size_t>(k - 1)]) return false;
                }
                return true;
            };
            if (!valid(w)) ok = false;
            if (ok) cell.vertices.push_back(index_of_cumulative(w.data()));
            for (int s = 0; ok && s < m; ++s) {
                ++w[static_cast<std::size_t>(perm[static_cast<std::size_t>(s)])];
                if (!valid(w)) {
                    ok = false;
                    break;
                }
                cell.vertices.push_back(index_of_cumulative(w.data()));
            }
            if (ok) {
                cell.order = perm;
                cells_.push_back(std::move(cell));
            }
        } while (std::next_permutation(perm.begin(), perm.end()));

        int k = m - 1;
        while (k >= 0 && base[static_cast<std::size_t>(k)] == n_ - 1) {
            base[static_cast<std::size_t>(k)] = 0;
            --k;
        }
        if (k < 0) break;
        ++base[static_cast<std::size_t>(k)];
    }

    for (const auto& c : cells_) {
        for (std::size_t a = 0; a < c.vertices.size(); ++a) {
            for (std::size_t b = a + 1; b < c.vertices.size(); ++b) {
                int i = std::min(c.vertices[a], c.vertices[b]);
                int j = std::max(c.vertices[a], c.vertices[b]);
                if (seen.insert({i, j}).second) {
                    double dist = (nodes_.col(i) - nodes_.col(j)).lpNorm<1>();
                    edges_.push_back({i, j, dist});
                }
            }
        }
    }
}

std::uint64_t SimplexGrid::key(const int* u) const
{
    std::uint64_t k = 0;
    for (int i = dim_ - 2; i >= 0; --i) k = k * static_cast<std::uint64_t>(n_ + 1) + static_cast<std::uint64_t>(u[i]);
    return k;
}

int SimplexGrid::index_of_cumulative(const int* u) const
{
    std::uint64_t k = key(u);
    if (!dense_.empty()) return dense_[k];
    auto it = sparse_.find(k);
    return it == sparse_.end() ? -1 : it->second;
}

void SimplexGrid::locate(const double* x, int* idx, double* w) const
{
    const int m = dim_ - 1;
    if (m == 1) {
        double u = std::clamp(x[0] * n_, 0.0, static_cast<double>(n_));
        int f = std::min(static_cast<int>(std::floor(u)), n_ - 1);
        double phi = u - f;
        idx[0] = f;
        idx[1] = f + 1;
        w[0] = 1.0 - phi;
        w[1] = phi;
        return;
    }

    int fl[32];
    double phi[32];
    int ord[32];
    if (m > 32) throw Error(ErrorCode::InvalidArgument, "grid dimension too large");
    double cum = 0.0;
    for (int k = 0; k < m; ++k) {
        cum += x[k];
        double u = std::clamp(cum * n_, 0.0, static_cast<double>(n_));
        if (k > 0) u = std::max(u, static_cast<double>(fl[k - 1]) + phi[k - 1]);
        fl[k] = std::min(static_cast<int>(std::floor(u)), n_ - 1);
        phi[k] = u - fl[k];
        ord[k] = k;
    }
    std::sort(ord, ord + m, [&](int a, int b) {
        if (phi[a] != phi[b]) return phi[a] > phi[b];
        return a > b;
    });
    int u[32];
    for (int k = 0; k < m; ++k) u[k] = fl[k];
    idx[0] = index_of_cumulative(u);
    w[0] = 1.0 - phi[ord[0]];
    for (int s = 0; s < m; ++s) {
        ++u[ord[s]];
        idx[s + 1] = index_of_cumulative(u);
        w[s + 1] = phi[ord[s]] - (s + 1 < m ? phi[ord[s + 1]] : 0.0);
    }
}

}  // namespace growthlab

#include <map>
#include <mutex>

namespace growthlab {

std::shared_ptr<const SimplexGrid> shared_grid(int dim, int resolution)
{
    static std::mutex mu;
    static std::map<std::pair<int, int>, std::shared_ptr<const SimplexGrid>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto& slot = cache[{dim, resolution}];
    if (!slot) slot = std::make_shared<const SimplexGrid>(dim, resolution);
    return slot;
}

}  // namespace growthlab
