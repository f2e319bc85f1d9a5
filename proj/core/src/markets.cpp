#include "growthlab/markets.hpp"

#include "growthlab/error.hpp"

#include <json.hpp>

#include <cmath>

namespace growthlab {

MarkovKernel::MarkovKernel(int dim, Sampler sampler, std::string descriptor)
    : dim_(dim), sampler_(std::move(sampler)), descriptor_(std::move(descriptor))
{
}

MarkovKernel& MarkovKernel::with_batch(Batch b)
{
    batch_ = std::move(b);
    return *this;
}

MarkovKernel& MarkovKernel::with_atoms(Atoms a)
{
    atoms_ = std::move(a);
    return *this;
}

SimplexPoint MarkovKernel::draw(const SimplexPoint& x, RngStream& rng) const
{
    if (x.dim() != dim_) throw Error(ErrorCode::DimensionMismatch, "kernel and state dimensions differ");
    Eigen::VectorXd y(dim_);
    sampler_(x.data(), rng, y.data());
    for (int i = 0; i < dim_; ++i) {
        if (!(y[i] > 0.0) || !std::isfinite(y[i]))
            throw Error(ErrorCode::KernelProducedInvalidPoint, "kernel draw left the open simplex");
    }
    return make_simplex_point(y);
}

Eigen::MatrixXd MarkovKernel::batch(const SimplexPoint& x, std::size_t n, RngStream& rng) const
{
    if (x.dim() != dim_) throw Error(ErrorCode::DimensionMismatch, "kernel and state dimensions differ");
    Eigen::MatrixXd out(dim_, static_cast<Eigen::Index>(n));
    if (batch_) {
        batch_(x.data(), n, rng, out);
    } else {
        for (std::size_t j = 0; j < n; ++j) sampler_(x.data(), rng, out.col(static_cast<Eigen::Index>(j)).data());
    }
    return out;
}

DiffusionSpec::DiffusionSpec(int dim, MatrixFn c, VectorFn lambda, std::string descriptor)
    : dim_(dim), c_(std::move(c)), lambda_(std::move(lambda)), descriptor_(std::move(descriptor))
{
}

Eigen::MatrixXd DiffusionSpec::c(const Eigen::VectorXd& x) const
{
    Eigen::MatrixXd out(dim_, dim_);
    c_(x.data(), out.data());
    return out;
}

Eigen::VectorXd DiffusionSpec::lambda(const Eigen::VectorXd& x) const
{
    Eigen::VectorXd out(dim_);
    lambda_(x.data(), out.data());
    return out;
}

std::string WrightFisherSpec::descriptor() const
{
    nlohmann::ordered_json j;
    j["model"] = "wright_fisher";
    j["d"] = dim;
    j["kappa"] = kappa;
    j["sigma2"] = sigma2;
    j["theta"] = std::vector<double>(theta.data(), theta.data() + theta.size());
    return j.dump();
}

WrightFisherSpec wright_fisher_benchmark()
{
    WrightFisherSpec wf;
    wf.dim = 2;
    wf.kappa = 1.5;
    wf.sigma2 = 1.0;
    wf.theta = Eigen::VectorXd::Constant(2, 0.5);
    return wf;
}

DiffusionSpec make_diffusion(const WrightFisherSpec& wf)
{
    const int d = wf.dim;
    if (d < 2) throw Error(ErrorCode::DimensionTooSmall, "model dimension must be at least 2");
    if (!(wf.kappa > 0.0) || !(wf.sigma2 > 0.0))
        throw Error(ErrorCode::InvalidArgument, "kappa and sigma2 must be positive");
    if (wf.theta.size() != d) throw Error(ErrorCode::DimensionMismatch, "theta has the wrong length");
    Eigen::VectorXd theta = make_simplex_point(wf.theta).coords();
    const double s2 = wf.sigma2, k = wf.kappa;
    auto c = [d, s2](const double* x, double* out) {
        for (int j = 0; j < d; ++j)
            for (int i = 0; i < d; ++i) out[j * d + i] = s2 * x[i] * ((i == j ? 1.0 : 0.0) - x[j]);
    };
    auto lambda = [d, s2, k, theta](const double* x, double* out) {
        for (int i = 0; i < d; ++i) out[i] = (k / s2) * theta[i] / x[i];
    };
    WrightFisherSpec norm = wf;
    norm.theta = theta;
    return DiffusionSpec(d, c, lambda, norm.descriptor());
}

DiffusionSpec zero_dynamics(int dim)
{
    auto c = [dim](const double*, double* out) {
        for (int i = 0; i < dim * dim; ++i) out[i] = 0.0;
    };
    auto lambda = [dim](const double*, double* out) {
        for (int i = 0; i < dim; ++i) out[i] = 0.0;
    };
    nlohmann::ordered_json j{{"model", "zero"}, {"d", dim}};
    return DiffusionSpec(dim, c, lambda, j.dump());
}

WrightFisherSpec parse_model_json(const std::string& text)
{
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ParseError, std::string("model JSON: ") + e.what());
    }
    try {
        if (j.at("model").get<std::string>() != "wright_fisher")
            throw Error(ErrorCode::InvalidArgument, "unsupported model '" + j.at("model").get<std::string>() + "'");
        WrightFisherSpec wf;
        wf.dim = j.at("d").get<int>();
        wf.kappa = j.at("kappa").get<double>();
        wf.sigma2 = j.at("sigma2").get<double>();
        auto th = j.at("theta").get<std::vector<double>>();
        if (static_cast<int>(th.size()) != wf.dim)
            throw Error(ErrorCode::DimensionMismatch, "theta length differs from d");
        wf.theta = Eigen::Map<Eigen::VectorXd>(th.data(), static_cast<Eigen::Index>(th.size()));
        make_diffusion(wf);  // validates
        return wf;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ParseError, std::string("model JSON: ") + e.what());
    }
}

namespace {

void symmetric_sqrt(const double* c, int d, double* out)
{
    if (d == 2) {
        Eigen::Matrix2d m;
        m << c[0], c[2], c[1], c[3];
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es;
        es.computeDirect(m);
        Eigen::Vector2d ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
        Eigen::Matrix2d r = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
        out[0] = r(0, 0);
        out[1] = r(1, 0);
        out[2] = r(0, 1);
        out[3] = r(1, 1);
        return;
    }
    Eigen::Map<const Eigen::MatrixXd> m(c, d, d);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
    Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    Eigen::Map<Eigen::MatrixXd>(out, d, d) = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

bool euler_step(const DiffusionSpec& spec, const double* x, double dt, const double* xi, double* y,
                const SimulationOptions& opts)
{
    const int d = spec.dim();
    double cbuf[64], lbuf[8], sbuf[64];
    std::vector<double> cdyn, ldyn, sdyn;
    double* c = cbuf;
    double* l = lbuf;
    double* s = sbuf;
    if (d > 8) {
        cdyn.resize(static_cast<std::size_t>(d * d));
        sdyn.resize(static_cast<std::size_t>(d * d));
        ldyn.resize(static_cast<std::size_t>(d));
        c = cdyn.data();
        s = sdyn.data();
        l = ldyn.data();
    }
    spec.c(x, c);
    spec.lambda(x, l);
    symmetric_sqrt(c, d, s);
    const double sq = std::sqrt(dt);
    for (int i = 0; i < d; ++i) {
        double drift = 0.0, noise = 0.0;
        for (int j = 0; j < d; ++j) {
            drift += c[j * d + i] * l[j];
            noise += s[j * d + i] * xi[j];
        }
        y[i] = x[i] + drift * dt + noise * sq;
        if (!std::isfinite(y[i])) throw Error(ErrorCode::NonFiniteState, "Euler step produced a non-finite state");
    }

    bool event = false;
    for (int i = 0; i < d; ++i)
        if (y[i] < opts.floor) event = true;
    if (opts.boundary == BoundaryRule::Reflect) {
        for (int i = 0; i < d; ++i) {
            if (y[i] < 0.0) y[i] = -y[i];
            if (y[i] > 1.0) y[i] = 2.0 - y[i];
        }
    }
    double sum = 0.0;
    for (int i = 0; i < d; ++i) {
        if (y[i] < opts.floor) y[i] = opts.floor;
        sum += y[i];
    }
    for (int i = 0; i < d; ++i) y[i] /= sum;
    return event;
}

MarketPath simulate_discrete(const MarkovKernel& kernel, std::size_t T, const SimplexPoint& mu0, std::uint64_t seed)
{
    if (T < 1) throw Error(ErrorCode::InvalidArgument, "T must be at least 1");
    if (kernel.dim() != mu0.dim()) throw Error(ErrorCode::DimensionMismatch, "kernel and initial state differ");
    const int d = mu0.dim();
    Eigen::MatrixXd pts(d, static_cast<Eigen::Index>(T + 1));
    pts.col(0) = mu0.coords();
    std::vector<double> times(T + 1);
    RngStream rng(seed, 0);
    Eigen::VectorXd y(d);
    for (std::size_t t = 0; t < T; ++t) {
        times[t] = static_cast<double>(t);
        kernel.draw_raw(pts.col(static_cast<Eigen::Index>(t)).data(), rng, y.data());
        double sum = 0.0;
        for (int i = 0; i < d; ++i) {
            if (!(y[i] > 0.0) || !std::isfinite(y[i]))
                throw Error(ErrorCode::KernelProducedInvalidPoint,
                            "kernel draw at step " + std::to_string(t + 1) + " left the open simplex");
            sum += y[i];
        }
        if (std::abs(sum - 1.0) > kSumTolerance)
            throw Error(ErrorCode::KernelProducedInvalidPoint,
                        "kernel draw at step " + std::to_string(t + 1) + " does not sum to one");
        pts.col(static_cast<Eigen::Index>(t + 1)) = y / sum;
    }
    times[T] = static_cast<double>(T);
    return MarketPath(PathKind::Discrete, std::move(times), std::move(pts));
}

MarketPath simulate_diffusion(const DiffusionSpec& spec, double T, double dt, const SimplexPoint& mu0,
                              std::uint64_t seed, const SimulationOptions& opts)
{
    if (!(dt > 0.0)) throw Error(ErrorCode::InvalidArgument, "dt must be positive");
    if (!(T >= dt)) throw Error(ErrorCode::InvalidArgument, "T must be at least dt");
    if (spec.dim() != mu0.dim()) throw Error(ErrorCode::DimensionMismatch, "spec and initial state differ");
    const int d = mu0.dim();
    const auto n = static_cast<std::size_t>(std::llround(T / dt));
    Eigen::MatrixXd pts(d, static_cast<Eigen::Index>(n + 1));
    pts.col(0) = mu0.coords();
    std::vector<double> times(n + 1);
    RngStream rng(seed, 0);
    Eigen::VectorXd xi(d);
    std::size_t events = 0;
    for (std::size_t t = 0; t < n; ++t) {
        times[t] = static_cast<double>(t) * dt;
        for (int i = 0; i < d; ++i) xi[i] = rng.normal();
        if (euler_step(spec, pts.col(static_cast<Eigen::Index>(t)).data(), dt, xi.data(),
                       pts.col(static_cast<Eigen::Index>(t + 1)).data(), opts))
            ++events;
    }
    times[n] = static_cast<double>(n) * dt;
    MarketPath path(PathKind::SampledContinuous, std::move(times), std::move(pts));
    path.set_boundary_events(events);
    return path;
}

MarkovKernel identity_kernel(int dim)
{
    MarkovKernel k(
        dim,
        [dim](const double* x, RngStream&, double* y) {
            for (int i = 0; i < dim; ++i) y[i] = x[i];
        },
        R"({"kernel":"identity"})");
    k.with_atoms([](const SimplexPoint& x) { return std::vector<KernelAtom>{{x.coords(), 1.0}}; });
    return k;
}

MarkovKernel deterministic_kernel(int dim, std::function<Eigen::VectorXd(const Eigen::VectorXd&)> step,
                                  std::string descriptor)
{
    MarkovKernel k(
        dim,
        [dim, step](const double* x, RngStream&, double* y) {
            Eigen::VectorXd out = step(Eigen::Map<const Eigen::VectorXd>(x, dim));
            for (int i = 0; i < dim; ++i) y[i] = out[i];
        },
        std::move(descriptor));
    k.with_atoms([step](const SimplexPoint& x) { return std::vector<KernelAtom>{{step(x.coords()), 1.0}}; });
    return k;
}

MarkovKernel finite_kernel(int dim, MarkovKernel::Atoms law, std::string descriptor)
{
    MarkovKernel k(
        dim,
        [dim, law](const double* x, RngStream& rng, double* y) {
            auto atoms = law(make_simplex_point(Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(x, dim))));
            double u = rng.uniform(), acc = 0.0;
            std::size_t pick = atoms.size() - 1;
            for (std::size_t a = 0; a < atoms.size(); ++a) {
                acc += atoms[a].prob;
                if (u < acc) {
                    pick = a;
                    break;
                }
            }
            for (int i = 0; i < dim; ++i) y[i] = atoms[pick].y[i];
        },
        std::move(descriptor));
    k.with_atoms(std::move(law));
    return k;
}

MarkovKernel euler_kernel(const DiffusionSpec& spec, double dt, const SimulationOptions& opts)
{
    if (!(dt > 0.0)) throw Error(ErrorCode::InvalidArgument, "dt must be positive");
    const int d = spec.dim();
    nlohmann::ordered_json desc;
    desc["kernel"] = "euler";
    desc["dt"] = dt;
    desc["boundary"] = opts.boundary == BoundaryRule::Reflect ? "reflect" : "clip";
    desc["model"] = nlohmann::json::parse(spec.descriptor());
    MarkovKernel k(
        d,
        [spec, dt, opts, d](const double* x, RngStream& rng, double* y) {
            double xi[64];
            std::vector<double> big;
            double* p = xi;
            if (d > 64) {
                big.resize(static_cast<std::size_t>(d));
                p = big.data();
            }
            for (int i = 0; i < d; ++i) p[i] = rng.normal();
            euler_step(spec, x, dt, p, y, opts);
        },
        desc.dump());
    k.with_batch([spec, dt, opts, d](const double* x, std::size_t n, RngStream& rng, Eigen::MatrixXd& out) {
        Eigen::VectorXd xi(d), neg(d);
        for (std::size_t j = 0; j < n; j += 2) {
            for (int i = 0; i < d; ++i) xi[i] = rng.normal();
            euler_step(spec, x, dt, xi.data(), out.col(static_cast<Eigen::Index>(j)).data(), opts);
            if (j + 1 < n) {
                neg = -xi;
                euler_step(spec, x, dt, neg.data(), out.col(static_cast<Eigen::Index>(j + 1)).data(), opts);
            }
        }
    });
    return k;
}

InvariantSample invariant_sample(const MarkovKernel& kernel, const SimplexPoint& mu0, std::size_t n,
                                 std::size_t burn_in, std::size_t thinning, std::uint64_t seed)
{
    if (n < 1) throw Error(ErrorCode::InvalidArgument, "invariant sample needs n >= 1");
    if (thinning < 1) throw Error(ErrorCode::InvalidArgument, "thinning must be at least 1");
    const int d = mu0.dim();
    InvariantSample out;
    out.samples.resize(d, static_cast<Eigen::Index>(n));
    out.burn_in = burn_in;
    out.thinning = thinning;
    out.seed = seed;
    RngStream rng(seed, 0);
    Eigen::VectorXd x = mu0.coords(), y(d);
    auto step = [&] {
        kernel.draw_raw(x.data(), rng, y.data());
        for (int i = 0; i < d; ++i) {
            if (!(y[i] > 0.0) || !std::isfinite(y[i]))
                throw Error(ErrorCode::KernelProducedInvalidPoint, "kernel draw left the open simplex");
        }
        x = y / y.sum();
    };
    for (std::size_t s = 0; s < burn_in; ++s) step();
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t s = 0; s < thinning; ++s) step();
        out.samples.col(static_cast<Eigen::Index>(j)) = x;
    }
    return out;
}

InvariantSample invariant_sample(const DiffusionSpec& spec, double dt, const SimplexPoint& mu0, std::size_t n,
                                 std::size_t burn_in, std::size_t thinning, std::uint64_t seed,
                                 const SimulationOptions& opts)
{
    if (n < 1) throw Error(ErrorCode::InvalidArgument, "invariant sample needs n >= 1");
    if (thinning < 1) throw Error(ErrorCode::InvalidArgument, "thinning must be at least 1");
    if (!(dt > 0.0)) throw Error(ErrorCode::InvalidArgument, "dt must be positive");
    const int d = mu0.dim();
    InvariantSample out;
    out.samples.resize(d, static_cast<Eigen::Index>(n));
    out.burn_in = burn_in;
    out.thinning = thinning;
    out.seed = seed;
    RngStream rng(seed, 0);
    Eigen::VectorXd x = mu0.coords(), y(d), xi(d);
    auto step = [&] {
        for (int i = 0; i < d; ++i) xi[i] = rng.normal();
        if (euler_step(spec, x.data(), dt, xi.data(), y.data(), opts)) ++out.boundary_events;
        x = y;
    };
    for (std::size_t s = 0; s < burn_in; ++s) step();
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t s = 0; s < thinning; ++s) step();
        out.samples.col(static_cast<Eigen::Index>(j)) = x;
    }
    return out;
}

}  // namespace growthlab
