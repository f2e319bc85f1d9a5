#include "growthlab/generators.hpp"

#include "growthlab/error.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace growthlab {

const char* family_name(GeneratorFamily f)
{
    switch (f) {
    case GeneratorFamily::PowerProduct: return "power_product";
    case GeneratorFamily::Quadratic: return "quadratic";
    case GeneratorFamily::Entropy: return "entropy";
    case GeneratorFamily::AffineMixture: return "affine_mixture";
    }
    return "unknown";
}

GeneratorFamily parse_family(const std::string& name)
{
    if (name == "power_product") return GeneratorFamily::PowerProduct;
    if (name == "quadratic") return GeneratorFamily::Quadratic;
    if (name == "entropy") return GeneratorFamily::Entropy;
    if (name == "affine_mixture") return GeneratorFamily::AffineMixture;
    throw Error(ErrorCode::InvalidArgument, "unknown generator family '" + name + "'");
}

std::size_t GeneratorFunction::param_count(GeneratorFamily family, int dim)
{
    const auto d = static_cast<std::size_t>(dim);
    switch (family) {
    case GeneratorFamily::PowerProduct: return d + 1;
    case GeneratorFamily::Quadratic: return d + 1;
    case GeneratorFamily::Entropy: return 2;
    case GeneratorFamily::AffineMixture: return 1 + d + d * (d - 1) / 2;
    }
    return 0;
}

GeneratorFunction::GeneratorFunction(GeneratorFamily family, int dim, std::vector<double> params, double M,
                                     double alpha)
    : family_(family), dim_(dim), params_(std::move(params)), M_(M), alpha_(alpha)
{
    if (dim < 2) throw Error(ErrorCode::DimensionTooSmall, "generator dimension must be at least 2");
    if (!(M > 0.0)) throw Error(ErrorCode::InvalidArgument, "generator bound M must be positive");
    std::size_t want = param_count(family, dim);
    if (family == GeneratorFamily::PowerProduct && params_.size() == want - 1) params_.push_back(0.0);
    if (params_.size() != want)
        throw Error(ErrorCode::InvalidArgument, std::string(family_name(family)) + " expects " +
                                                    std::to_string(want) + " parameters");
    for (double p : params_)
        if (!std::isfinite(p)) throw Error(ErrorCode::InvalidArgument, "non-finite generator parameter");

    if (std::isfinite(M)) {
        Eigen::MatrixXd grid = audit_grid(dim, 20);
        for (Eigen::Index j = 0; j < grid.cols(); ++j) {
            if (value(grid.col(j).data()) < 1.0 / M)
                throw Error(ErrorCode::CertificationFailed, "generator falls below 1/M on the audit grid");
        }
    }
}

namespace {

double power_term(const std::vector<double>& a, const double* x, int d)
{
    double s = 0.0;
    for (int i = 0; i < d; ++i) s += a[static_cast<std::size_t>(i)] * std::log(x[i]);
    return std::exp(s);
}

inline std::size_t pair_index(int i, int j, int d)
{
    // position of q_ij (i < j) in row-major upper-triangle order
    return static_cast<std::size_t>(i * d - i * (i + 1) / 2 + (j - i - 1));
}

}  // namespace

double GeneratorFunction::value(const double* x) const
{
    const int d = dim_;
    const auto& p = params_;
    switch (family_) {
    case GeneratorFamily::PowerProduct: return power_term(p, x, d) + p[static_cast<std::size_t>(d)];
    case GeneratorFamily::Quadratic: {
        double s = p[0];
        for (int i = 0; i < d; ++i) s -= 0.5 * p[static_cast<std::size_t>(i + 1)] * x[i] * x[i];
        return s;
    }
    case GeneratorFamily::Entropy: {
        double s = 0.0;
        for (int i = 0; i < d; ++i) s += x[i] * std::log(x[i]);
        return p[0] - p[1] * s;
    }
    case GeneratorFamily::AffineMixture: {
        double s = p[0];
        for (int i = 0; i < d; ++i) s += p[static_cast<std::size_t>(1 + i)] * x[i];
        for (int i = 0; i < d; ++i)
            for (int j = i + 1; j < d; ++j) s += p[1 + static_cast<std::size_t>(d) + pair_index(i, j, d)] * x[i] * x[j];
        return s;
    }
    }
    return 0.0;
}

void GeneratorFunction::gradient(const double* x, double* g) const
{
    const int d = dim_;
    const auto& p = params_;
    switch (family_) {
    case GeneratorFamily::PowerProduct: {
        double P = power_term(p, x, d);
        for (int i = 0; i < d; ++i) g[i] = p[static_cast<std::size_t>(i)] * P / x[i];
        return;
    }
    case GeneratorFamily::Quadratic:
        for (int i = 0; i < d; ++i) g[i] = -p[static_cast<std::size_t>(i + 1)] * x[i];
        return;
    case GeneratorFamily::Entropy:
        for (int i = 0; i < d; ++i) g[i] = -p[1] * (std::log(x[i]) + 1.0);
        return;
    case GeneratorFamily::AffineMixture:
        for (int i = 0; i < d; ++i) g[i] = p[static_cast<std::size_t>(1 + i)];
        for (int i = 0; i < d; ++i)
            for (int j = i + 1; j < d; ++j) {
                double q = p[1 + static_cast<std::size_t>(d) + pair_index(i, j, d)];
                g[i] += q * x[j];
                g[j] += q * x[i];
            }
        return;
    }
}

void GeneratorFunction::hessian(const double* x, double* h) const
{
    const int d = dim_;
    const auto& p = params_;
    for (int k = 0; k < d * d; ++k) h[k] = 0.0;
    switch (family_) {
    case GeneratorFamily::PowerProduct: {
        double P = power_term(p, x, d);
        for (int j = 0; j < d; ++j)
            for (int i = 0; i < d; ++i) {
                double ai = p[static_cast<std::size_t>(i)], aj = p[static_cast<std::size_t>(j)];
                h[j * d + i] = P * (ai * aj - (i == j ? ai : 0.0)) / (x[i] * x[j]);
            }
        return;
    }
    case GeneratorFamily::Quadratic:
        for (int i = 0; i < d; ++i) h[i * d + i] = -p[static_cast<std::size_t>(i + 1)];
        return;
    case GeneratorFamily::Entropy:
        for (int i = 0; i < d; ++i) h[i * d + i] = -p[1] / x[i];
        return;
    case GeneratorFamily::AffineMixture:
        for (int i = 0; i < d; ++i)
            for (int j = i + 1; j < d; ++j) {
                double q = p[1 + static_cast<std::size_t>(d) + pair_index(i, j, d)];
                h[j * d + i] = q;
                h[i * d + j] = q;
            }
        return;
    }
}

Eigen::VectorXd GeneratorFunction::gradient(const Eigen::VectorXd& x) const
{
    Eigen::VectorXd g(dim_);
    gradient(x.data(), g.data());
    return g;
}

Eigen::MatrixXd GeneratorFunction::hessian(const Eigen::VectorXd& x) const
{
    Eigen::MatrixXd h(dim_, dim_);
    hessian(x.data(), h.data());
    return h;
}

void GeneratorFunction::param_derivatives(const double* x, const double* Q, double* dvalue, double* dpair) const
{
    const int d = dim_;
    const auto& p = params_;
    switch (family_) {
    case GeneratorFamily::PowerProduct: {
        double P = power_term(p, x, d);
        double hq = 0.0;
        for (int j = 0; j < d; ++j)
            for (int i = 0; i < d; ++i) {
                double ai = p[static_cast<std::size_t>(i)], aj = p[static_cast<std::size_t>(j)];
                hq += P * (ai * aj - (i == j ? ai : 0.0)) / (x[i] * x[j]) * Q[j * d + i];
            }
        for (int k = 0; k < d; ++k) {
            double lk = std::log(x[k]);
            double s = 0.0;
            for (int j = 0; j < d; ++j) s += p[static_cast<std::size_t>(j)] * Q[j * d + k] / (x[k] * x[j]);
            dvalue[k] = P * lk;
            dpair[k] = lk * hq + P * (2.0 * s - Q[k * d + k] / (x[k] * x[k]));
        }
        dvalue[d] = 1.0;
        dpair[d] = 0.0;
        return;
    }
    case GeneratorFamily::Quadratic:
        dvalue[0] = 1.0;
        dpair[0] = 0.0;
        for (int k = 0; k < d; ++k) {
            dvalue[k + 1] = -0.5 * x[k] * x[k];
            dpair[k + 1] = -Q[k * d + k];
        }
        return;
    case GeneratorFamily::Entropy: {
        double s = 0.0, t = 0.0;
        for (int i = 0; i < d; ++i) {
            s += x[i] * std::log(x[i]);
            t += Q[i * d + i] / x[i];
        }
        dvalue[0] = 1.0;
        dpair[0] = 0.0;
        dvalue[1] = -s;
        dpair[1] = -t;
        return;
    }
    case GeneratorFamily::AffineMixture:
        dvalue[0] = 1.0;
        dpair[0] = 0.0;
        for (int k = 0; k < d; ++k) {
            dvalue[1 + k] = x[k];
            dpair[1 + k] = 0.0;
        }
        for (int i = 0; i < d; ++i)
            for (int j = i + 1; j < d; ++j) {
                std::size_t at = 1 + static_cast<std::size_t>(d) + pair_index(i, j, d);
                dvalue[at] = x[i] * x[j];
                dpair[at] = Q[j * d + i] + Q[i * d + j];
            }
        return;
    }
}

Eigen::MatrixXd audit_grid(int dim, int grid_n)
{
    if (grid_n < 10) throw Error(ErrorCode::InvalidArgument, "audit grid needs grid_n >= 10");
    std::vector<Eigen::VectorXd> pts;
    std::vector<int> k(static_cast<std::size_t>(dim), 0);
    const double denom = grid_n + 0.5 * dim;
    // compositions of grid_n into dim nonnegative parts
    std::function<void(int, int)> rec = [&](int i, int left) {
        if (i == dim - 1) {
            k[static_cast<std::size_t>(i)] = left;
            Eigen::VectorXd x(dim);
            for (int j = 0; j < dim; ++j) x[j] = (k[static_cast<std::size_t>(j)] + 0.5) / denom;
            pts.push_back(x / x.sum());
            return;
        }
        for (int v = 0; v <= left; ++v) {
            k[static_cast<std::size_t>(i)] = v;
            rec(i + 1, left - v);
        }
    };
    rec(0, grid_n);
    Eigen::MatrixXd out(dim, static_cast<Eigen::Index>(pts.size()));
    for (std::size_t j = 0; j < pts.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = pts[j];
    return out;
}

GeneratorCertificate certify_generator(const GeneratorFunction& G, int grid_n)
{
    const int d = G.dim();
    Eigen::MatrixXd grid = audit_grid(d, grid_n);
    const Eigen::Index n = grid.cols();
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(d, d - 1);
    for (int i = 0; i < d - 1; ++i) {
        B(i, i) = 1.0;
        B(d - 1, i) = -1.0;
    }

    GeneratorCertificate c;
    c.floor = std::numeric_limits<double>::infinity();
    c.concavity_margin = -std::numeric_limits<double>::infinity();
    std::vector<Eigen::MatrixXd> hess(static_cast<std::size_t>(n));
    Eigen::VectorXd g(d);
    for (Eigen::Index j = 0; j < n; ++j) {
        const double* x = grid.col(j).data();
        double v = G.value(x);
        G.gradient(x, g.data());
        Eigen::MatrixXd h(d, d);
        G.hessian(x, h.data());
        c.floor = std::min(c.floor, v);
        c.M_value = std::max({c.M_value, std::abs(v), g.cwiseAbs().maxCoeff(), h.cwiseAbs().maxCoeff()});
        Eigen::MatrixXd ht = B.transpose() * h * B;
        double top = d == 2 ? ht(0, 0) : Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(ht).eigenvalues().maxCoeff();
        c.concavity_margin = std::max(c.concavity_margin, top);
        hess[static_cast<std::size_t>(j)] = std::move(h);
    }
    if (G.alpha() > 0.0) {
        for (Eigen::Index a = 0; a < n; ++a)
            for (Eigen::Index b = a + 1; b < n; ++b) {
                double dist = (grid.col(a) - grid.col(b)).lpNorm<1>();
                double diff = (hess[static_cast<std::size_t>(a)] - hess[static_cast<std::size_t>(b)]).cwiseAbs().maxCoeff();
                c.holder = std::max(c.holder, diff / std::pow(dist, G.alpha()));
            }
    }
    const double inv_m = std::isfinite(G.M()) ? 1.0 / G.M() : 0.0;
    c.pass = c.concavity_margin <= 1e-8 && c.floor >= inv_m;
    c.within_norm = c.M_value <= G.M();
    return c;
}

ParamBox generator_box(GeneratorFamily family, int dim, double M)
{
    const double inv_m = std::isfinite(M) ? 1.0 / M : 0.0;
    const double cap = std::isfinite(M) ? M : 1e3;
    const auto d = static_cast<std::size_t>(dim);
    ParamBox box;
    switch (family) {
    case GeneratorFamily::PowerProduct:
        box.lo.assign(d, 0.0);
        box.hi.assign(d, 1.0);
        box.lo.push_back(inv_m);
        box.hi.push_back(std::max(1.0, inv_m));
        break;
    case GeneratorFamily::Quadratic:
        box.lo.push_back(inv_m);
        box.hi.push_back(cap);
        box.lo.insert(box.lo.end(), d, 0.0);
        box.hi.insert(box.hi.end(), d, cap);
        break;
    case GeneratorFamily::Entropy:
        box.lo = {inv_m, 0.0};
        box.hi = {cap, cap};
        break;
    case GeneratorFamily::AffineMixture:
        box.lo.push_back(inv_m);
        box.hi.push_back(cap);
        box.lo.insert(box.lo.end(), d, -1.0);
        box.hi.insert(box.hi.end(), d, 1.0);
        box.lo.insert(box.lo.end(), d * (d - 1) / 2, 0.0);
        box.hi.insert(box.hi.end(), d * (d - 1) / 2, cap);
        break;
    }
    return box;
}

std::vector<double> generator_default(GeneratorFamily family, int dim, double M)
{
    std::vector<double> p(GeneratorFunction::param_count(family, dim), 0.0);
    const double inv_m = std::isfinite(M) ? 1.0 / M : 0.0;
    if (family == GeneratorFamily::PowerProduct)
        p.back() = std::max(inv_m, 0.0);
    else
        p[0] = std::clamp(1.0, inv_m, std::isfinite(M) ? M : 1.0);
    return p;
}

std::optional<GeneratorFunction> try_certified_generator(GeneratorFamily family, int dim,
                                                         const std::vector<double>& params, double M,
                                                         double alpha, int grid_n)
{
    try {
        GeneratorFunction G(family, dim, params, M, alpha);
        if (certify_generator(G, grid_n).in_class()) return G;
    } catch (const Error&) {
    }
    return std::nullopt;
}

GeneratorFunction constant_generator(int dim, double value)
{
    std::vector<double> p(static_cast<std::size_t>(dim) + 1, 0.0);
    p[0] = value;
    return GeneratorFunction(GeneratorFamily::Quadratic, dim, std::move(p));
}

GeneratorFunction geometric_mean_generator(int dim)
{
    std::vector<double> p(static_cast<std::size_t>(dim), 1.0 / dim);
    return GeneratorFunction(GeneratorFamily::PowerProduct, dim, std::move(p));
}

}  // namespace growthlab
