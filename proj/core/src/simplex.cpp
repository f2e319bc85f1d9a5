#include "growthlab/simplex.hpp"

#include "growthlab/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

namespace growthlab {

SimplexPoint make_simplex_point(const Eigen::VectorXd& raw)
{
    if (raw.size() < 2)
        throw Error(ErrorCode::DimensionTooSmall, "simplex point needs at least 2 coordinates");
    for (Eigen::Index i = 0; i < raw.size(); ++i) {
        if (!(raw[i] > 0.0) || !std::isfinite(raw[i]))
            throw Error(ErrorCode::NonPositiveEntry,
                        "coordinate " + std::to_string(i) + " is not strictly positive");
    }
    SimplexPoint p;
    p.coords_ = raw / raw.sum();
    return p;
}

SimplexPoint make_simplex_point(const std::vector<double>& raw)
{
    return make_simplex_point(Eigen::Map<const Eigen::VectorXd>(raw.data(), static_cast<Eigen::Index>(raw.size())));
}

SimplexPoint uniform_point(int dim)
{
    return make_simplex_point(Eigen::VectorXd::Ones(dim));
}

PortfolioWeights PortfolioWeights::make(Eigen::VectorXd coords, bool long_only, double margin)
{
    const int d = static_cast<int>(coords.size());
    if (d < 1) throw Error(ErrorCode::DimensionTooSmall, "empty weight vector");
    if (!coords.allFinite()) throw Error(ErrorCode::InvalidArgument, "non-finite weight");
    if (std::abs(coords.sum() - 1.0) > kSumTolerance)
        throw Error(ErrorCode::InvalidArgument, "weights do not sum to one");
    if (long_only) {
        for (int i = 0; i < d; ++i) {
            if (coords[i] < 0.0)
                throw Error(ErrorCode::NegativeWeight, "negative weight in long-only vector");
            if (margin > 0.0 && coords[i] < margin / d - 1e-15)
                throw Error(ErrorCode::InvalidArgument, "weight below margin floor");
        }
    }
    PortfolioWeights w;
    w.coords_ = std::move(coords);
    w.long_only_ = long_only;
    w.margin_ = long_only ? margin : 0.0;
    return w;
}

PortfolioWeights project_to_margin(const PortfolioWeights& w, double eps)
{
    if (!w.long_only()) throw Error(ErrorCode::InvalidArgument, "project_to_margin needs long-only weights");
    if (eps < 0.0 || eps > 1.0) throw Error(ErrorCode::InvalidArgument, "margin must lie in [0, 1]");
    const int d = w.dim();
    Eigen::VectorXd out(d);
    for (int i = 0; i < d; ++i) out[i] = (1.0 - eps) * w[i] + eps / d;
    return PortfolioWeights::make(std::move(out), true, std::max(eps, w.margin() * (1.0 - eps) + eps));
}

Eigen::VectorXd project_to_simplex(const Eigen::VectorXd& v, double floor)
{
    const Eigen::Index d = v.size();
    const double mass = 1.0 - floor * static_cast<double>(d);
    if (mass < -1e-15) throw Error(ErrorCode::InvalidArgument, "floor too large for the simplex");
    if (mass <= 0.0) return Eigen::VectorXd::Constant(d, 1.0 / static_cast<double>(d));
    std::vector<double> u(v.data(), v.data() + d);
    for (auto& x : u) x -= floor;
    std::vector<double> s = u;
    std::sort(s.begin(), s.end(), std::greater<>());
    double cum = 0.0, tau = 0.0;
    for (Eigen::Index k = 0; k < d; ++k) {
        cum += s[static_cast<std::size_t>(k)];
        double t = (cum - std::max(mass, 0.0)) / static_cast<double>(k + 1);
        if (s[static_cast<std::size_t>(k)] - t > 0.0) tau = t;
    }
    Eigen::VectorXd out(d);
    for (Eigen::Index i = 0; i < d; ++i) out[i] = std::max(u[static_cast<std::size_t>(i)] - tau, 0.0) + floor;
    return out;
}

double RefiningPartition::mesh() const { return std::ldexp(h0, -level); }

MarketPath::MarketPath(PathKind kind, std::vector<double> times, Eigen::MatrixXd points)
    : kind_(kind), times_(std::move(times)), points_(std::move(points))
{
    if (points_.rows() < 2) throw Error(ErrorCode::DimensionTooSmall, "path dimension must be at least 2");
    if (static_cast<std::size_t>(points_.cols()) != times_.size())
        throw Error(ErrorCode::DimensionMismatch, "times and points differ in length");
    for (std::size_t i = 1; i < times_.size(); ++i) {
        if (!(times_[i] > times_[i - 1]))
            throw Error(ErrorCode::InvalidArgument, "path times must be strictly increasing");
    }
    for (Eigen::Index j = 0; j < points_.cols(); ++j) {
        double s = 0.0;
        for (Eigen::Index i = 0; i < points_.rows(); ++i) {
            double x = points_(i, j);
            if (!(x > 0.0) || !std::isfinite(x))
                throw Error(ErrorCode::NonPositiveEntry, "path point " + std::to_string(j) + " leaves the open simplex");
            s += x;
        }
        if (std::abs(s - 1.0) > kSumTolerance)
            throw Error(ErrorCode::InvalidArgument, "path point " + std::to_string(j) + " does not sum to one");
    }
}

SimplexPoint MarketPath::point(std::size_t i) const
{
    return make_simplex_point(Eigen::VectorXd(points_.col(static_cast<Eigen::Index>(i))));
}

Eigen::MatrixXd MarketPath::qv(std::size_t i) const
{
    if (!has_qv()) throw Error(ErrorCode::MissingQV, "path carries no quadratic variation");
    const int d = dim();
    return Eigen::Map<const Eigen::MatrixXd>(qv_data(i), d, d);
}

MarketPath MarketPath::prefix(std::size_t n) const
{
    n = std::min(n, size());
    MarketPath out;
    out.kind_ = kind_;
    out.times_.assign(times_.begin(), times_.begin() + static_cast<std::ptrdiff_t>(n));
    out.points_ = points_.leftCols(static_cast<Eigen::Index>(n));
    if (has_qv()) out.qv_ = qv_.leftCols(static_cast<Eigen::Index>(n));
    out.partition_ = partition_;
    for (auto idx : partition_indices_)
        if (idx < n) out.partition_indices_.push_back(idx);
    return out;
}

MarketPath quadratic_variation(const MarketPath& path, const RefiningPartition& partition)
{
    if (path.has_qv()) throw Error(ErrorCode::InvalidArgument, "path already carries quadratic variation");
    if (!(partition.h0 > 0.0) || partition.level < 0)
        throw Error(ErrorCode::InvalidArgument, "invalid refining partition");
    const double mesh = partition.mesh();
    const auto& t = path.times();
    const double t0 = t.front(), t1 = t.back();
    const double tol = 1e-9 * std::max(1.0, std::abs(t1));

    std::vector<std::size_t> idx;
    long long k0 = static_cast<long long>(std::ceil(t0 / mesh - 1e-9));
    long long k1 = static_cast<long long>(std::floor(t1 / mesh + 1e-9));
    std::size_t j = 0;
    for (long long k = k0; k <= k1; ++k) {
        const double p = static_cast<double>(k) * mesh;
        while (j < t.size() && t[j] < p - tol) ++j;
        if (j >= t.size() || std::abs(t[j] - p) > tol)
            throw Error(ErrorCode::PartitionCoarserThanPath,
                        "partition point " + std::to_string(p) + " is not a path time");
        idx.push_back(j);
    }

    MarketPath out = path;
    const int d = path.dim();
    out.qv_ = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d) * d, static_cast<Eigen::Index>(path.size()));
    Eigen::MatrixXd cum = Eigen::MatrixXd::Zero(d, d);
    std::size_t next = 1;
    for (std::size_t i = 0; i < path.size(); ++i) {
        if (next < idx.size() && idx[next] == i) {
            Eigen::VectorXd inc = path.points().col(static_cast<Eigen::Index>(idx[next])) -
                                  path.points().col(static_cast<Eigen::Index>(idx[next - 1]));
            cum.noalias() += inc * inc.transpose();
            ++next;
        }
        out.qv_.col(static_cast<Eigen::Index>(i)) = Eigen::Map<const Eigen::VectorXd>(cum.data(), d * d);
    }
    out.partition_ = partition;
    out.partition_indices_ = std::move(idx);
    return out;
}

void write_weights_csv(std::ostream& out, const MarketPath& path)
{
    const int d = path.dim();
    out << "t";
    for (int i = 1; i <= d; ++i) out << ",w" << i;
    out << "\n";
    char buf[64];
    for (std::size_t j = 0; j < path.size(); ++j) {
        std::snprintf(buf, sizeof buf, "%.17g", path.times()[j]);
        out << buf;
        const double* x = path.point_data(j);
        for (int i = 0; i < d; ++i) {
            std::snprintf(buf, sizeof buf, ",%.17g", x[i]);
            out << buf;
        }
        out << "\n";
    }
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line)
{
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
        std::size_t b = cell.find_first_not_of(' ');
        cells.push_back(b == std::string::npos ? std::string() : cell.substr(b));
    }
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

double parse_cell(const std::string& s, std::size_t row, std::size_t col)
{
    double v = 0.0;
    const char* b = s.data();
    const char* e = b + s.size();
    if (!s.empty() && *b == '+') ++b;
    auto [ptr, ec] = std::from_chars(b, e, v);
    if (ec != std::errc() || ptr != e || s.empty())
        throw Error(ErrorCode::ParseError,
                    "row " + std::to_string(row) + " col " + std::to_string(col) + ": cannot parse '" + s + "'");
    return v;
}

}  // namespace

MarketPath read_weights_csv(std::istream& in, PathKind kind)
{
    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorCode::ParseError, "row 1: missing header");
    auto header = split_csv_line(line);
    if (header.size() < 3 || header[0] != "t")
        throw Error(ErrorCode::ParseError, "row 1: expected header t,w1,...,wd");
    const std::size_t d = header.size() - 1;
    std::vector<double> times;
    std::vector<double> flat;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty() || line == "\r") continue;
        auto cells = split_csv_line(line);
        if (cells.size() != d + 1)
            throw Error(ErrorCode::ParseError, "row " + std::to_string(row) + ": expected " +
                                                   std::to_string(d + 1) + " columns");
        times.push_back(parse_cell(cells[0], row, 1));
        for (std::size_t i = 1; i <= d; ++i) flat.push_back(parse_cell(cells[i], row, i + 1));
    }
    Eigen::MatrixXd pts = Eigen::Map<Eigen::MatrixXd>(flat.data(), static_cast<Eigen::Index>(d),
                                                      static_cast<Eigen::Index>(times.size()));
    return MarketPath(kind, std::move(times), std::move(pts));
}

}  // namespace growthlab
