#include "growthlab/optimize.hpp"

#include "growthlab/error.hpp"
#include "growthlab/parallel.hpp"
#include "growthlab/rng.hpp"
#include "growthlab/wealth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace growthlab {

namespace {

// Per-step price relatives r_t = mu_{t+1} / mu_t, d x T.
Eigen::MatrixXd relatives(const MarketPath& path)
{
    const int d = path.dim();
    const auto T = static_cast<Eigen::Index>(path.size() - 1);
    Eigen::MatrixXd R(d, T);
    for (Eigen::Index t = 0; t < T; ++t)
        R.col(t) = path.points().col(t + 1).cwiseQuotient(path.points().col(t));
    return R;
}

double constant_objective(const Eigen::MatrixXd& R, const Eigen::VectorXd& b, Eigen::VectorXd* grad)
{
    const Eigen::Index T = R.cols();
    Eigen::VectorXd den = R.transpose() * b;
    double f = 0.0;
    for (Eigen::Index t = 0; t < T; ++t) {
        if (!(den[t] > 0.0)) return -std::numeric_limits<double>::infinity();
        f += std::log(den[t]);
    }
    if (grad) *grad = R * den.cwiseInverse() / static_cast<double>(T);
    return f / static_cast<double>(T);
}

}  // namespace

RetroResult best_constant(const MarketPath& path, double margin)
{
    if (path.size() < 2) throw Error(ErrorCode::InvalidArgument, "best_constant needs a path of length >= 2");
    const int d = path.dim();
    const double floor = margin / d;
    Eigen::MatrixXd R = relatives(path);
    Eigen::VectorXd b = Eigen::VectorXd::Constant(d, 1.0 / d);
    Eigen::VectorXd g, gn;
    double f = constant_objective(R, b, &g);
    double step = 1.0, gm = 0.0;
    std::size_t it = 0;
    Eigen::VectorXd prev_b, prev_g;
    for (; it < 10000; ++it) {
        gm = (project_to_simplex(b + g, floor) - b).norm();
        if (gm <= 1e-10) break;
        if (it > 0) {
            Eigen::VectorXd s = b - prev_b, y = g - prev_g;
            double sy = s.dot(y);
            if (sy < -1e-300) step = std::clamp(-s.squaredNorm() / sy, 1e-8, 1e8);
        }
        Eigen::VectorXd nb;
        double nf = f;
        bool moved = false;
        for (int ls = 0; ls < 60; ++ls) {
            nb = project_to_simplex(b + step * g, floor);
            nf = constant_objective(R, nb, nullptr);
            if (nf >= f + 1e-4 * g.dot(nb - b)) {
                moved = true;
                break;
            }
            step *= 0.5;
        }
        if (!moved || (nb - b).norm() == 0.0) break;
        prev_b = b;
        prev_g = g;
        b = nb;
        f = constant_objective(R, b, &g);
    }
    RetroResult res;
    res.map = PortfolioMapSpec::constant(b);
    res.log_value = wealth_discrete(path, res.map).final_log();
    res.trace.iterations = it;
    res.trace.grad_norm = gm;
    return res;
}

namespace {

struct Stencils {
    std::vector<int> idx;     // T x d
    std::vector<double> w;    // T x d
    Eigen::MatrixXd R;        // d x T
};

Stencils build_stencils(const MarketPath& path, const SimplexGrid& grid)
{
    const int d = path.dim();
    Stencils s;
    s.R = relatives(path);
    const auto T = static_cast<std::size_t>(s.R.cols());
    s.idx.resize(T * static_cast<std::size_t>(d));
    s.w.resize(T * static_cast<std::size_t>(d));
    for (std::size_t t = 0; t < T; ++t)
        grid.locate(path.point_data(t), &s.idx[t * static_cast<std::size_t>(d)], &s.w[t * static_cast<std::size_t>(d)]);
    return s;
}

double lipschitz_objective(const Stencils& s, const Eigen::MatrixXd& V, Eigen::MatrixXd* grad)
{
    const int d = static_cast<int>(V.rows());
    const auto T = static_cast<std::size_t>(s.R.cols());
    if (grad) grad->setZero(V.rows(), V.cols());
    double f = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
        const int* id = &s.idx[t * static_cast<std::size_t>(d)];
        const double* w = &s.w[t * static_cast<std::size_t>(d)];
        const double* r = s.R.col(static_cast<Eigen::Index>(t)).data();
        double den = 0.0;
        for (int k = 0; k < d; ++k) {
            if (w[k] == 0.0) continue;
            const double* v = V.col(id[k]).data();
            double dot = 0.0;
            for (int i = 0; i < d; ++i) dot += v[i] * r[i];
            den += w[k] * dot;
        }
        if (!(den > 0.0)) return -std::numeric_limits<double>::infinity();
        f += std::log(den);
        if (grad) {
            for (int k = 0; k < d; ++k) {
                if (w[k] == 0.0) continue;
                double c = w[k] / den;
                double* gcol = grad->col(id[k]).data();
                for (int i = 0; i < d; ++i) gcol[i] += c * r[i];
            }
        }
    }
    if (grad) *grad /= static_cast<double>(T);
    return f / static_cast<double>(T);
}

}  // namespace

RetroResult best_lipschitz(const MarketPath& path, double M, int resolution, const LipschitzOptions& opts)
{
    if (path.size() < 2) throw Error(ErrorCode::InvalidArgument, "best_lipschitz needs a path of length >= 2");
    if (!(M >= 0.0)) throw Error(ErrorCode::InvalidArgument, "Lipschitz bound must be nonnegative");
    const double margin = opts.margin.value_or(M > 0.0 ? 1.0 / M : 0.0);
    if (margin > 1.0 || margin < 0.0)
        throw Error(ErrorCode::InvalidArgument, "margin 1/M exceeds 1; pass an explicit margin for M < 1");
    const int d = path.dim();
    auto grid = shared_grid(d, resolution);
    const auto K = static_cast<Eigen::Index>(grid->size());
    Stencils st = build_stencils(path, *grid);
    auto project = [&](const Eigen::MatrixXd& V) {
        return project_lipschitz_values(*grid, V, M, margin, opts.sweeps);
    };

    std::vector<Eigen::MatrixXd> starts;
    starts.push_back(Eigen::MatrixXd::Constant(d, K, 1.0 / d));
    {
        RetroResult bc = best_constant(path, margin);
        Eigen::VectorXd b(d);
        bc.map.weights(nullptr, b.data());
        starts.push_back(b.replicate(1, K));
    }
    for (int s = 1; s < opts.starts; ++s) {
        RngStream rng(opts.seed, static_cast<std::uint64_t>(s));
        Eigen::MatrixXd V(d, K);
        for (Eigen::Index k = 0; k < K; ++k) {
            Eigen::VectorXd g(d);
            for (int i = 0; i < d; ++i) g[i] = -std::log(rng.uniform());
            V.col(k) = g / g.sum();
        }
        starts.push_back(V);
    }
    for (const auto& m : opts.extra_starts) {
        if (m.dim() != d) throw Error(ErrorCode::DimensionMismatch, "extra start has the wrong dimension");
        Eigen::MatrixXd V(d, K);
        for (Eigen::Index k = 0; k < K; ++k) {
            Eigen::VectorXd x = (1.0 - 1e-9) * grid->nodes().col(k).array() + 1e-9 / d;
            m.weights(x.data(), V.col(k).data());
        }
        starts.push_back(V);
    }

    std::vector<Eigen::MatrixXd> best_v(starts.size());
    std::vector<double> best_f(starts.size(), -std::numeric_limits<double>::infinity());
    std::vector<std::size_t> iters(starts.size(), 0);
    std::vector<double> gnorm(starts.size(), 0.0);

    parallel_for(starts.size(), [&](std::size_t s) {
        // feasible starts are kept as they are so the result never falls below them
        const bool feasible = starts[s].minCoeff() >= margin / d - 1e-15 &&
                              ((starts[s].colwise().sum().array() - 1.0).abs() <= 1e-12).all() &&
                              lipschitz_constant(*grid, starts[s]) <= M;
        Eigen::MatrixXd V = feasible ? starts[s] : project(starts[s]);
        Eigen::MatrixXd G, prevV, prevG;
        double f = lipschitz_objective(st, V, &G);
        double step = 1.0;
        std::size_t it = 0;
        for (; it < static_cast<std::size_t>(opts.max_iter); ++it) {
            if (it > 0) {
                Eigen::MatrixXd sv = V - prevV, yv = G - prevG;
                double sy = (sv.array() * yv.array()).sum();
                if (sy < -1e-300) step = std::clamp(-sv.squaredNorm() / sy, 1e-6, 1e6);
            }
            Eigen::MatrixXd nV;
            double nf = f;
            bool moved = false;
            for (int ls = 0; ls < 40; ++ls) {
                nV = project(V + step * G);
                nf = lipschitz_objective(st, nV, nullptr);
                if (nf >= f + 1e-4 * ((nV - V).array() * G.array()).sum() && nf >= f) {
                    moved = true;
                    break;
                }
                step *= 0.5;
            }
            if (!moved) break;
            double change = (nV - V).norm() / step;
            prevV = V;
            prevG = G;
            V = nV;
            f = lipschitz_objective(st, V, &G);
            gnorm[s] = change;
            if (change <= opts.tol) break;
        }
        iters[s] = it;
        best_v[s] = V;
        best_f[s] = f;
    });

    std::size_t pick = 0;
    for (std::size_t s = 1; s < starts.size(); ++s)
        if (best_f[s] > best_f[pick]) pick = s;

    // sub-unit bounds rely on the explicit margin instead of 1/M
    LipschitzGridMap map(grid, best_v[pick], M < 1.0 ? std::numeric_limits<double>::infinity() : M);
    double cert = certify_lipschitz(map);
    if (cert > M * (1.0 + 1e-9) + 1e-12)
        throw Error(ErrorCode::CertificationFailed, "best Lipschitz map exceeds the bound after projection");

    RetroResult res;
    res.map = PortfolioMapSpec::lipschitz(std::move(map));
    res.log_value = wealth_discrete(path, res.map).final_log();
    res.trace.iterations = iters[pick];
    res.trace.starts = starts.size();
    res.trace.grad_norm = gnorm[pick];
    return res;
}

namespace {

struct PartitionData {
    Eigen::MatrixXd left;  // d x m
    Eigen::MatrixXd dq;    // d*d x m
    Eigen::VectorXd x0, xT;
};

PartitionData partition_data(const MarketPath& path)
{
    if (!path.has_qv()) throw Error(ErrorCode::MissingQV, "generator objective needs quadratic variation");
    const int d = path.dim();
    const auto& idx = path.partition_indices();
    PartitionData p;
    const auto m = static_cast<Eigen::Index>(idx.size() > 0 ? idx.size() - 1 : 0);
    p.left.resize(d, m);
    p.dq.resize(d * d, m);
    for (Eigen::Index k = 0; k < m; ++k) {
        auto l = idx[static_cast<std::size_t>(k)], r = idx[static_cast<std::size_t>(k + 1)];
        p.left.col(k) = path.points().col(static_cast<Eigen::Index>(l));
        p.dq.col(k) = Eigen::Map<const Eigen::VectorXd>(path.qv_data(r), d * d) -
                      Eigen::Map<const Eigen::VectorXd>(path.qv_data(l), d * d);
    }
    p.x0 = path.points().col(0);
    p.xT = path.points().col(static_cast<Eigen::Index>(path.size() - 1));
    return p;
}

double partition_objective(const PartitionData& p, const GeneratorFunction& G, std::vector<double>* grad)
{
    const int d = G.dim();
    const std::size_t np = G.params().size();
    std::vector<double> h(static_cast<std::size_t>(d * d)), dv(np), dp(np);
    double gT = G.value(p.xT.data()), g0 = G.value(p.x0.data());
    double f = std::log(gT) - std::log(g0);
    if (grad) {
        grad->assign(np, 0.0);
        std::vector<double> zero(static_cast<std::size_t>(d * d), 0.0);
        G.param_derivatives(p.xT.data(), zero.data(), dv.data(), dp.data());
        for (std::size_t k = 0; k < np; ++k) (*grad)[k] += dv[k] / gT;
        G.param_derivatives(p.x0.data(), zero.data(), dv.data(), dp.data());
        for (std::size_t k = 0; k < np; ++k) (*grad)[k] -= dv[k] / g0;
    }
    for (Eigen::Index m = 0; m < p.left.cols(); ++m) {
        const double* x = p.left.col(m).data();
        const double* q = p.dq.col(m).data();
        G.hessian(x, h.data());
        double pair = 0.0;
        for (int k = 0; k < d * d; ++k) pair += h[static_cast<std::size_t>(k)] * q[k];
        double gv = G.value(x);
        f += -pair / (2.0 * gv);
        if (grad) {
            G.param_derivatives(x, q, dv.data(), dp.data());
            for (std::size_t k = 0; k < np; ++k) (*grad)[k] += -dp[k] / (2.0 * gv) + pair * dv[k] / (2.0 * gv * gv);
        }
    }
    return f;
}

}  // namespace

double generator_objective(const MarketPath& path, const GeneratorFunction& G)
{
    return partition_objective(partition_data(path), G, nullptr);
}

RetroResult best_generator(const MarketPath& path, double M, double alpha, const std::vector<GeneratorFamily>& families,
                           const GeneratorOptions& opts)
{
    if (families.empty()) throw Error(ErrorCode::InvalidArgument, "best_generator needs at least one family");
    const int d = path.dim();
    PartitionData pd = partition_data(path);

    struct Candidate {
        std::vector<double> params;
        double f = -std::numeric_limits<double>::infinity();
        std::size_t iters = 0;
        double gnorm = 0.0;
        GeneratorFamily family = GeneratorFamily::Quadratic;
        bool valid = false;
    };

    struct Job {
        GeneratorFamily family;
        std::vector<double> start;
    };
    std::vector<Job> jobs;
    for (std::size_t fi = 0; fi < families.size(); ++fi) {
        auto fam = families[fi];
        ParamBox box = generator_box(fam, d, M);
        jobs.push_back({fam, generator_default(fam, d, M)});
        for (const auto& G : opts.extra_starts)
            if (G.family() == fam && G.dim() == d) jobs.push_back({fam, G.params()});
        RngStream rng(opts.seed, fi);
        int found = 1;
        for (int tries = 0; found < opts.starts && tries < 100 * opts.starts; ++tries) {
            std::vector<double> p(box.lo.size());
            for (std::size_t i = 0; i < p.size(); ++i) p[i] = box.lo[i] + (box.hi[i] - box.lo[i]) * rng.uniform();
            if (try_certified_generator(fam, d, p, M, alpha, opts.grid_n)) {
                jobs.push_back({fam, p});
                ++found;
            }
        }
    }

    std::vector<Candidate> out(jobs.size());
    parallel_for(jobs.size(), [&](std::size_t j) {
        const auto fam = jobs[j].family;
        ParamBox box = generator_box(fam, d, M);
        // index of the additive constant: shifting it moves the floor of G
        const std::size_t shift = fam == GeneratorFamily::PowerProduct ? box.lo.size() - 1 : 0;
        const Eigen::MatrixXd audit = audit_grid(d, opts.grid_n);
        auto clamp_box = [&](std::vector<double> p) {
            for (std::size_t i = 0; i < p.size(); ++i) p[i] = std::clamp(p[i], box.lo[i], box.hi[i]);
            if (std::isfinite(M)) {
                GeneratorFunction raw(fam, d, p);
                double lo = std::numeric_limits<double>::infinity();
                for (Eigen::Index k = 0; k < audit.cols(); ++k) lo = std::min(lo, raw.value(audit.col(k).data()));
                if (lo < 1.0 / M) p[shift] = std::min(p[shift] + (1.0 / M - lo) * (1.0 + 1e-9), box.hi[shift]);
            }
            return p;
        };
        auto eval = [&](const std::vector<double>& p, std::vector<double>* g) -> std::optional<double> {
            auto G = try_certified_generator(fam, d, p, M, alpha, opts.grid_n);
            if (!G) return std::nullopt;
            double f = partition_objective(pd, *G, g);
            if (!std::isfinite(f)) return std::nullopt;
            return f;
        };

        Candidate c;
        c.family = fam;
        std::vector<double> x = clamp_box(jobs[j].start), g;
        auto f0 = eval(x, &g);
        if (!f0) {
            out[j] = c;
            return;
        }
        double f = *f0;
        const std::size_t n = x.size();
        Eigen::MatrixXd B = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
        std::size_t it = 0;
        double gm = 0.0;
        for (; it < static_cast<std::size_t>(opts.max_iter); ++it) {
            std::vector<double> pg(n);
            gm = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                pg[i] = std::clamp(x[i] + g[i], box.lo[i], box.hi[i]) - x[i];
                gm = std::max(gm, std::abs(pg[i]));
            }
            if (gm <= 1e-9) break;

            Eigen::Map<Eigen::VectorXd> gv(g.data(), static_cast<Eigen::Index>(n));
            Eigen::VectorXd dir = B * gv;
            bool moved = false;
            std::vector<double> nx, ng;
            double nf = f;
            for (int attempt = 0; attempt < 2 && !moved; ++attempt) {
                if (attempt == 1) dir = gv;
                double t = 1.0;
                for (int ls = 0; ls < 20; ++ls) {
                    nx.resize(n);
                    for (std::size_t i = 0; i < n; ++i) nx[i] = x[i] + t * dir[static_cast<Eigen::Index>(i)];
                    nx = clamp_box(nx);
                    double lin = 0.0;
                    for (std::size_t i = 0; i < n; ++i) lin += g[i] * (nx[i] - x[i]);
                    auto v = eval(nx, &ng);
                    if (v && *v >= f + 1e-4 * lin && *v > f) {
                        nf = *v;
                        moved = true;
                        break;
                    }
                    t *= 0.5;
                }
            }
            // blocked by the certification boundary: slide along single coordinates
            for (std::size_t i = 0; i < n && !moved; ++i) {
                if (std::abs(pg[i]) <= 1e-12) continue;
                double t = 1.0;
                for (int ls = 0; ls < 12; ++ls) {
                    nx = x;
                    nx[i] = x[i] + t * pg[i];
                    nx = clamp_box(nx);
                    auto v = eval(nx, &ng);
                    if (v && *v > f + 1e-4 * g[i] * (nx[i] - x[i])) {
                        nf = *v;
                        moved = true;
                        break;
                    }
                    t *= 0.5;
                }
            }
            if (!moved) break;
            Eigen::VectorXd s(static_cast<Eigen::Index>(n)), y(static_cast<Eigen::Index>(n));
            for (std::size_t i = 0; i < n; ++i) {
                s[static_cast<Eigen::Index>(i)] = nx[i] - x[i];
                y[static_cast<Eigen::Index>(i)] = -(ng[i] - g[i]);
            }
            double sy = s.dot(y);
            if (sy > 1e-12) {
                Eigen::VectorXd By = B * y;
                double yBy = y.dot(By);
                B += ((sy + yBy) / (sy * sy)) * (s * s.transpose()) - (By * s.transpose() + s * By.transpose()) / sy;
            } else {
                B.setIdentity();
            }
            x = nx;
            g = ng;
            f = nf;
        }
        c.params = x;
        c.f = f;
        c.iters = it;
        c.gnorm = gm;
        c.valid = true;
        out[j] = c;
    });

    std::size_t pick = jobs.size();
    for (std::size_t j = 0; j < out.size(); ++j) {
        if (!out[j].valid) continue;
        if (pick == jobs.size() || out[j].f > out[pick].f + 1e-12) pick = j;
    }
    if (pick == jobs.size()) throw Error(ErrorCode::RejectionBudgetExceeded, "no generator parameters certified");

    GeneratorFunction G(out[pick].family, d, out[pick].params, M, alpha);
    RetroResult res;
    res.map = PortfolioMapSpec::fg(G);
    res.log_value = wealth_master_equation(path, G).final_log();
    res.trace.iterations = out[pick].iters;
    res.trace.starts = jobs.size();
    res.trace.grad_norm = out[pick].gnorm;
    return res;
}

double log_optimal_objective(const SimplexPoint& x, const Eigen::MatrixXd& y, const Eigen::VectorXd& prob,
                             const Eigen::VectorXd& p)
{
    Eigen::VectorXd px = p.cwiseQuotient(x.coords());
    Eigen::VectorXd den = y.transpose() * px;
    double f = 0.0;
    for (Eigen::Index s = 0; s < y.cols(); ++s) f += prob[s] * std::log(den[s]);
    return f;
}

StateSolution solve_log_optimal(const SimplexPoint& x, const Eigen::MatrixXd& y, const Eigen::VectorXd& prob, double eps)
{
    const int d = x.dim();
    if (y.rows() != d || y.cols() != prob.size() || y.cols() < 1)
        throw Error(ErrorCode::DimensionMismatch, "sample matrix does not match the state");
    if (eps < 0.0 || eps >= 1.0) throw Error(ErrorCode::InvalidArgument, "eps must lie in [0, 1)");
    for (Eigen::Index s = 0; s < y.cols(); ++s)
        for (int i = 0; i < d; ++i)
            if (!(y(i, s) > 0.0)) throw Error(ErrorCode::DegenerateSamples, "kernel sample has a zero coordinate");

    Eigen::MatrixXd R = y.array().colwise() / x.coords().array();  // d x n
    StateSolution sol;
    bool degenerate = ((R.array() - 1.0).abs() <= 1e-15).all();
    Eigen::VectorXd p;
    if (degenerate) {
        p = x.coords();
    } else {
        p = Eigen::VectorXd::Constant(d, 1.0 / d);
        auto objective = [&](const Eigen::VectorXd& q, Eigen::VectorXd* grad) {
            Eigen::VectorXd den = R.transpose() * q;
            double f = 0.0;
            for (Eigen::Index s = 0; s < den.size(); ++s) {
                if (!(den[s] > 0.0)) return -std::numeric_limits<double>::infinity();
                f += prob[s] * std::log(den[s]);
            }
            if (grad) *grad = R * prob.cwiseQuotient(den);
            return f;
        };
        Eigen::VectorXd g;
        double f = objective(p, &g);
        double eta = 1.0;
        std::size_t it = 0;
        for (; it < 10000; ++it) {
            sol.grad_norm = (project_to_simplex(p + g) - p).norm();
            if (sol.grad_norm <= 1e-10) break;
            Eigen::VectorXd np;
            double nf = f;
            bool moved = false;
            for (int ls = 0; ls < 60; ++ls) {
                Eigen::VectorXd z = (eta * (g.array() - g.maxCoeff())).exp() * p.array();
                np = z / z.sum();
                nf = objective(np, nullptr);
                if (nf >= f) {
                    moved = true;
                    break;
                }
                eta *= 0.5;
            }
            if (!moved || np == p) break;
            p = np;
            f = objective(p, &g);
            eta = std::min(eta * 2.0, 1e6);
        }
        sol.iterations = it;
    }
    sol.p_raw = p;
    sol.p = (1.0 - eps) * p.array() + eps / d;
    sol.L_raw = log_optimal_objective(x, y, prob, sol.p_raw);
    sol.L = log_optimal_objective(x, y, prob, sol.p);
    return sol;
}

void kernel_samples(const SimplexPoint& x, const MarkovKernel& kernel, std::size_t n, std::uint64_t seed,
                    Eigen::MatrixXd& y, Eigen::VectorXd& prob)
{
    if (kernel.dim() != x.dim()) throw Error(ErrorCode::DimensionMismatch, "kernel and state dimensions differ");
    if (kernel.has_atoms()) {
        auto atoms = kernel.atoms(x);
        y.resize(x.dim(), static_cast<Eigen::Index>(atoms.size()));
        prob.resize(static_cast<Eigen::Index>(atoms.size()));
        for (std::size_t a = 0; a < atoms.size(); ++a) {
            y.col(static_cast<Eigen::Index>(a)) = atoms[a].y;
            prob[static_cast<Eigen::Index>(a)] = atoms[a].prob;
        }
        return;
    }
    if (n < 1) throw Error(ErrorCode::InvalidArgument, "log-optimal solve needs n >= 1");
    RngStream rng(seed, 0);
    y = kernel.batch(x, n, rng);
    prob = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n), 1.0 / static_cast<double>(n));
}

StateSolution log_optimal_state(const SimplexPoint& x, const MarkovKernel& kernel, std::size_t n, double eps,
                                std::uint64_t seed)
{
    Eigen::MatrixXd y;
    Eigen::VectorXd prob;
    kernel_samples(x, kernel, n, seed, y, prob);
    return solve_log_optimal(x, y, prob, eps);
}

PortfolioMapSpec LogOptimalTable::map() const { return PortfolioMapSpec::table(TableMap(grid, offset, weights, eps)); }

LogOptimalTable log_optimal_map(const MarkovKernel& kernel, int resolution, std::size_t n, double eps,
                                std::uint64_t seed, std::optional<double> offset)
{
    if (resolution < 1) throw Error(ErrorCode::InvalidArgument, "grid resolution must be positive");
    const int d = kernel.dim();
    LogOptimalTable tab;
    tab.grid = shared_grid(d, resolution);
    tab.offset = offset.value_or(1.0 / (2.0 * resolution));
    tab.n = n;
    tab.eps = eps;
    tab.states = ((1.0 - tab.offset) * tab.grid->nodes()).array() + tab.offset / d;
    const std::size_t K = tab.grid->size();
    tab.weights.resize(d, static_cast<Eigen::Index>(K));
    tab.L.assign(K, 0.0);
    tab.iterations.assign(K, 0);
    parallel_for(K, [&](std::size_t k) {
        SimplexPoint x = make_simplex_point(Eigen::VectorXd(tab.states.col(static_cast<Eigen::Index>(k))));
        StateSolution s = log_optimal_state(x, kernel, n, eps, derive_seed(seed, k));
        tab.weights.col(static_cast<Eigen::Index>(k)) = s.p;
        tab.L[k] = s.L;
        tab.iterations[k] = s.iterations;
    });
    return tab;
}

void numeraire_weights_raw(const DiffusionSpec& spec, const double* x, double* out)
{
    const int d = spec.dim();
    spec.lambda(x, out);
    double s = 0.0;
    for (int i = 0; i < d; ++i) s += x[i] * out[i];
    for (int i = 0; i < d; ++i) out[i] = x[i] * (out[i] + 1.0 - s);
}

PortfolioWeights numeraire_weights(const DiffusionSpec& spec, const SimplexPoint& x)
{
    if (spec.dim() != x.dim()) throw Error(ErrorCode::DimensionMismatch, "spec and state dimensions differ");
    Eigen::VectorXd lam = spec.lambda(x.coords());
    if (!lam.allFinite()) throw Error(ErrorCode::NonFiniteLambda, "market price of risk is not finite");
    Eigen::VectorXd w(x.dim());
    numeraire_weights_raw(spec, x.data(), w.data());
    return PortfolioWeights::make(std::move(w), w.minCoeff() >= 0.0, 0.0);
}

PortfolioMapSpec project_into_lipschitz(const PortfolioMapSpec& map, double M, int resolution, int sweeps)
{
    const int d = map.dim();
    auto grid = shared_grid(d, resolution);
    const auto K = static_cast<Eigen::Index>(grid->size());
    Eigen::MatrixXd V(d, K);
    for (Eigen::Index k = 0; k < K; ++k) {
        Eigen::VectorXd x = (1.0 - 1e-9) * grid->nodes().col(k).array() + 1e-9 / d;
        map.weights(x.data(), V.col(k).data());
    }
    Eigen::MatrixXd P = project_lipschitz_values(*grid, V, M, 1.0 / M, sweeps);
    return PortfolioMapSpec::lipschitz(LipschitzGridMap(grid, P, M));
}

}  // namespace growthlab
