#include "growthlab/wealth.hpp"

#include "growthlab/error.hpp"
#include "growthlab/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace growthlab {

namespace {

constexpr std::size_t kBlock = 64;

inline double step_factor(const double* w, const double* x, const double* y, int d)
{
    double f = 0.0;
    for (int j = 0; j < d; ++j) f += w[j] * (y[j] / x[j]);
    return f;
}

}  // namespace

double log_sum_exp(const double* v, std::size_t n)
{
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) m = std::max(m, v[i]);
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += std::exp(v[i] - m);
    return m + std::log(s);
}

WealthCurve wealth_discrete(const MarketPath& path, const WeightFunction& weights, std::string descriptor)
{
    if (path.size() < 2) throw Error(ErrorCode::InvalidArgument, "wealth needs a path of length >= 2");
    const int d = path.dim();
    WealthCurve c;
    c.times = path.times();
    c.log_values.assign(path.size(), 0.0);
    c.descriptor = std::move(descriptor);
    std::vector<double> w(static_cast<std::size_t>(d));
    double acc = 0.0;
    for (std::size_t t = 0; t + 1 < path.size(); ++t) {
        const double* x = path.point_data(t);
        weights(x, w.data());
        double f = step_factor(w.data(), x, path.point_data(t + 1), d);
        if (!(f > 0.0) || !std::isfinite(f))
            throw Error(ErrorCode::NonPositiveReturn, "one-step wealth factor is not positive at step " + std::to_string(t));
        acc += std::log(f);
        c.log_values[t + 1] = acc;
    }
    return c;
}

WealthCurve wealth_discrete(const MarketPath& path, const PortfolioMapSpec& map)
{
    if (map.dim() != path.dim()) throw Error(ErrorCode::DimensionMismatch, "map and path dimensions differ");
    return wealth_discrete(
        path, [&map](const double* x, double* out) { map.weights(x, out); }, map.to_json());
}

MasterEquationTrace master_equation_trace(const MarketPath& path, const GeneratorFunction& G)
{
    if (!path.has_qv()) throw Error(ErrorCode::MissingQV, "master equation needs quadratic variation");
    if (G.dim() != path.dim()) throw Error(ErrorCode::DimensionMismatch, "generator and path dimensions differ");
    const int d = path.dim();
    const auto& idx = path.partition_indices();
    MasterEquationTrace tr;
    tr.curve.times = path.times();
    tr.curve.log_values.assign(path.size(), 0.0);
    tr.curve.descriptor = PortfolioMapSpec::fg(G).to_json();
    tr.drift.assign(path.size(), 0.0);

    const double g0 = G.value(path.point_data(0));
    std::vector<double> h(static_cast<std::size_t>(d * d));
    std::vector<double> dq(static_cast<std::size_t>(d * d));
    double drift = 0.0;
    std::size_t next = 1;
    for (std::size_t i = 0; i < path.size(); ++i) {
        if (next < idx.size() && idx[next] == i) {
            const std::size_t left = idx[next - 1];
            const double* xl = path.point_data(left);
            G.hessian(xl, h.data());
            const double* q1 = path.qv_data(i);
            const double* q0 = path.qv_data(left);
            double pair = 0.0;
            for (int k = 0; k < d * d; ++k) pair += h[static_cast<std::size_t>(k)] * (q1[k] - q0[k]);
            drift += -pair / (2.0 * G.value(xl));
            ++next;
        }
        tr.drift[i] = drift;
        tr.curve.log_values[i] = std::log(G.value(path.point_data(i))) - std::log(g0) + drift;
    }
    tr.curve.log_values[0] = 0.0;
    tr.final_state.drift = drift;
    tr.final_state.log_wealth = tr.curve.log_values.back();
    return tr;
}

WealthCurve wealth_master_equation(const MarketPath& path, const GeneratorFunction& G)
{
    return master_equation_trace(path, G).curve;
}

ExponentialTrace exponential_trace(const MarketPath& path, const WeightFunction& weights, const DiffusionSpec& spec,
                                   std::string descriptor)
{
    if (path.size() < 2) throw Error(ErrorCode::InvalidArgument, "wealth needs a path of length >= 2");
    if (spec.dim() != path.dim()) throw Error(ErrorCode::DimensionMismatch, "spec and path dimensions differ");
    const int d = path.dim();
    ExponentialTrace tr;
    tr.curve.times = path.times();
    tr.curve.log_values.assign(path.size(), 0.0);
    tr.curve.descriptor = std::move(descriptor);
    tr.compensator.assign(path.size(), 0.0);
    tr.final_state.returns = Eigen::VectorXd::Zero(d);
    std::vector<double> w(static_cast<std::size_t>(d)), r(static_cast<std::size_t>(d)),
        c(static_cast<std::size_t>(d * d));
    double lv = 0.0, comp = 0.0;
    for (std::size_t t = 0; t + 1 < path.size(); ++t) {
        const double* x = path.point_data(t);
        const double* y = path.point_data(t + 1);
        const double dt = path.times()[t + 1] - path.times()[t];
        weights(x, w.data());
        spec.c(x, c.data());
        double lin = 0.0, quad = 0.0;
        for (int i = 0; i < d; ++i) {
            r[static_cast<std::size_t>(i)] = w[static_cast<std::size_t>(i)] / x[i];
            lin += r[static_cast<std::size_t>(i)] * (y[i] - x[i]);
            tr.final_state.returns[i] += (y[i] - x[i]) / x[i];
        }
        for (int j = 0; j < d; ++j)
            for (int i = 0; i < d; ++i)
                quad += r[static_cast<std::size_t>(i)] * c[static_cast<std::size_t>(j * d + i)] * r[static_cast<std::size_t>(j)];
        lv += lin - 0.5 * quad * dt;
        comp += quad * dt;
        tr.curve.log_values[t + 1] = lv;
        tr.compensator[t + 1] = comp;
    }
    tr.final_state.log_wealth = lv;
    tr.final_state.compensator = comp;
    return tr;
}

WealthCurve wealth_diffusion_exponential(const MarketPath& path, const PortfolioMapSpec& map, const DiffusionSpec* spec)
{
    if (!spec) throw Error(ErrorCode::MissingSpec, "exponential engine needs the generating diffusion spec");
    if (map.dim() != path.dim()) throw Error(ErrorCode::DimensionMismatch, "map and path dimensions differ");
    return exponential_trace(
               path, [&map](const double* x, double* out) { map.weights(x, out); }, *spec, map.to_json())
        .curve;
}

UniversalWealth wealth_universal(const MarketPath& path, const MixtureMeasure& mixture, WealthMode mode)
{
    if (mixture.atoms.empty()) throw Error(ErrorCode::InvalidArgument, "mixture has no atoms");
    if (mixture.dim() != path.dim()) throw Error(ErrorCode::DimensionMismatch, "mixture and path dimensions differ");
    if (path.size() < 2) throw Error(ErrorCode::InvalidArgument, "wealth needs a path of length >= 2");
    const int d = path.dim();
    const std::size_t K = mixture.atoms.size();

    // sample indices of the curve
    std::vector<std::size_t> at;
    if (mode == WealthMode::Discrete) {
        at.resize(path.size());
        for (std::size_t i = 0; i < path.size(); ++i) at[i] = i;
    } else {
        if (!path.has_qv()) throw Error(ErrorCode::MissingQV, "master-equation mode needs quadratic variation");
        for (const auto& a : mixture.atoms)
            if (a.map.variant().index() != 2)
                throw Error(ErrorCode::InvalidArgument, "master-equation mode needs functionally generated atoms");
        at = path.partition_indices();
        if (at.empty() || at.front() != 0) at.insert(at.begin(), 0);
    }
    const std::size_t n = at.size();
    const std::size_t blocks = (K + kBlock - 1) / kBlock;
    std::vector<std::vector<double>> block_lse(blocks, std::vector<double>(n));
    std::vector<double> atom_final(K);

    parallel_for(blocks, [&](std::size_t b) {
        const std::size_t k0 = b * kBlock, k1 = std::min(K, k0 + kBlock);
        const std::size_t m = k1 - k0;
        std::vector<double> logw(m), lw(m, 0.0), terms(m);
        for (std::size_t k = 0; k < m; ++k) logw[k] = std::log(mixture.atoms[k0 + k].weight);
        auto& out = block_lse[b];

        if (mode == WealthMode::Discrete) {
            std::vector<double> w(static_cast<std::size_t>(d));
            for (std::size_t k = 0; k < m; ++k) terms[k] = logw[k];
            out[0] = log_sum_exp(terms.data(), m);
            for (std::size_t t = 0; t + 1 < n; ++t) {
                const double* x = path.point_data(t);
                const double* y = path.point_data(t + 1);
                for (std::size_t k = 0; k < m; ++k) {
                    mixture.atoms[k0 + k].map.weights(x, w.data());
                    double f = step_factor(w.data(), x, y, d);
                    if (!(f > 0.0) || !std::isfinite(f))
                        throw Error(ErrorCode::NonPositiveReturn, "atom " + std::to_string(k0 + k) +
                                                                      ": non-positive wealth factor");
                    lw[k] += std::log(f);
                    terms[k] = logw[k] + lw[k];
                }
                out[t + 1] = log_sum_exp(terms.data(), m);
            }
        } else {
            std::vector<const GeneratorFunction*> gs(m);
            std::vector<double> g0(m), drift(m, 0.0), h(static_cast<std::size_t>(d * d));
            for (std::size_t k = 0; k < m; ++k) {
                gs[k] = &std::get<FgMap>(mixture.atoms[k0 + k].map.variant()).G;
                g0[k] = std::log(gs[k]->value(path.point_data(0)));
                terms[k] = logw[k];
            }
            out[0] = log_sum_exp(terms.data(), m);
            for (std::size_t s = 1; s < n; ++s) {
                const std::size_t left = at[s - 1], right = at[s];
                const double* xl = path.point_data(left);
                const double* xr = path.point_data(right);
                const double* q1 = path.qv_data(right);
                const double* q0 = path.qv_data(left);
                for (std::size_t k = 0; k < m; ++k) {
                    gs[k]->hessian(xl, h.data());
                    double pair = 0.0;
                    for (int i = 0; i < d * d; ++i) pair += h[static_cast<std::size_t>(i)] * (q1[i] - q0[i]);
                    drift[k] += -pair / (2.0 * gs[k]->value(xl));
                    lw[k] = std::log(gs[k]->value(xr)) - g0[k] + drift[k];
                    terms[k] = logw[k] + lw[k];
                }
                out[s] = log_sum_exp(terms.data(), m);
            }
        }
        for (std::size_t k = 0; k < m; ++k) atom_final[k0 + k] = lw[k];
    });

    UniversalWealth res;
    res.curve.times.resize(n);
    res.curve.log_values.resize(n);
    res.curve.descriptor = mixture.provenance;
    std::vector<double> col(blocks);
    for (std::size_t s = 0; s < n; ++s) {
        for (std::size_t b = 0; b < blocks; ++b) col[b] = block_lse[b][s];
        res.curve.times[s] = path.times()[at[s]];
        res.curve.log_values[s] = log_sum_exp(col.data(), blocks);
    }
    res.curve.log_values[0] = 0.0;
    res.atom_log_final = std::move(atom_final);
    return res;
}

PortfolioWeights posterior_weights(const std::vector<double>& log_mass, const std::vector<Eigen::VectorXd>& atom_weights)
{
    if (log_mass.empty() || log_mass.size() != atom_weights.size())
        throw Error(ErrorCode::DimensionMismatch, "posterior needs one mass per atom");
    const double m = *std::max_element(log_mass.begin(), log_mass.end());
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(atom_weights.front().size());
    double z = 0.0;
    for (std::size_t k = 0; k < log_mass.size(); ++k) {
        double e = std::exp(log_mass[k] - m);
        acc += e * atom_weights[k];
        z += e;
    }
    Eigen::VectorXd w = acc / z;
    for (Eigen::Index i = 0; i < w.size(); ++i) w[i] = std::max(w[i], 0.0);
    return PortfolioWeights::make(w / w.sum(), true, 0.0);
}

PortfolioWeights universal_weights_at(const MarketPath& path, const MixtureMeasure& mixture, std::size_t t)
{
    if (t >= path.size()) throw Error(ErrorCode::InvalidArgument, "time index outside the path");
    const std::size_t K = mixture.atoms.size();
    std::vector<double> mass(K);
    std::vector<Eigen::VectorXd> ws(K, Eigen::VectorXd(path.dim()));
    parallel_for(K, [&](std::size_t k) {
        const auto& map = mixture.atoms[k].map;
        double lv = 0.0;
        if (t > 0) lv = wealth_discrete(path.prefix(t + 1), map).final_log();
        mass[k] = std::log(mixture.atoms[k].weight) + lv;
        map.weights(path.point_data(t), ws[k].data());
    });
    return posterior_weights(mass, ws);
}

}  // namespace growthlab
