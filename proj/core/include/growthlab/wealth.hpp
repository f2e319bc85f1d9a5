#pragma once

#include "growthlab/generators.hpp"
#include "growthlab/markets.hpp"
#include "growthlab/portfolios.hpp"
#include "growthlab/simplex.hpp"

#include <functional>
#include <string>
#include <vector>

namespace growthlab {

// Relative wealth (market numeraire) in log form; log_values[0] = 0.
struct WealthCurve {
    std::vector<double> times;
    std::vector<double> log_values;
    std::string descriptor;

    double final_log() const { return log_values.back(); }
    double horizon() const { return times.back() - times.front(); }
};

using WeightFunction = std::function<void(const double* x, double* out)>;

// Running sums of the continuous-time engines.
struct PathwiseIntegrator {
    double log_wealth = 0.0;
    double drift = 0.0;         // g([0,t]) of the master equation
    double compensator = 0.0;   // int (pi/mu)' c (pi/mu) dt
    Eigen::VectorXd returns;    // R^i_t = int d mu^i / mu^i
};

WealthCurve wealth_discrete(const MarketPath& path, const PortfolioMapSpec& map);
WealthCurve wealth_discrete(const MarketPath& path, const WeightFunction& weights, std::string descriptor);

struct MasterEquationTrace {
    WealthCurve curve;
    std::vector<double> drift;  // cumulative drift per path index
    PathwiseIntegrator final_state;
};

// log V_t = log G(mu_t) - log G(mu_0) + sum over completed partition
// intervals of -<Hess G, dQ> / (2G), evaluated at the left partition point.
MasterEquationTrace master_equation_trace(const MarketPath& path, const GeneratorFunction& G);
WealthCurve wealth_master_equation(const MarketPath& path, const GeneratorFunction& G);

struct ExponentialTrace {
    WealthCurve curve;
    std::vector<double> compensator;  // cumulative, per path index
    PathwiseIntegrator final_state;
};

ExponentialTrace exponential_trace(const MarketPath& path, const WeightFunction& weights, const DiffusionSpec& spec,
                                   std::string descriptor);
WealthCurve wealth_diffusion_exponential(const MarketPath& path, const PortfolioMapSpec& map,
                                         const DiffusionSpec* spec);

enum class WealthMode { Discrete, MasterEquation };

struct UniversalWealth {
    WealthCurve curve;                  // master mode: sampled at partition points
    std::vector<double> atom_log_final; // per-atom log V_T, same times as curve end
};

UniversalWealth wealth_universal(const MarketPath& path, const MixtureMeasure& mixture, WealthMode mode);

// Wealth-weighted average of atom weights: sum_k m_k pi_k / sum_k m_k with
// log m_k given.
PortfolioWeights posterior_weights(const std::vector<double>& log_mass, const std::vector<Eigen::VectorXd>& atom_weights);
PortfolioWeights universal_weights_at(const MarketPath& path, const MixtureMeasure& mixture, std::size_t t);

// Ordered log-sum-exp.
double log_sum_exp(const double* v, std::size_t n);

}  // namespace growthlab
