#pragma once

#include "growthlab/markets.hpp"
#include "growthlab/optimize.hpp"
#include "growthlab/portfolios.hpp"
#include "growthlab/report.hpp"
#include "growthlab/stats.hpp"
#include "growthlab/wealth.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace growthlab {

struct GrowthAverage {
    double rate = 0.0;  // log V_T / T
    double se = 0.0;    // batch means over per-step increments
    double se_half = 0.0;
    Series partials;    // dyadic step counts plus the final time
};

GrowthAverage growth_time_average(const WealthCurve& curve, std::size_t batches = 20);

// Nested Monte Carlo of int int log <pi(x), y/x> rho(x, dy) rho(dx); exact
// inner expectation when the kernel has a finite law.
BatchMeans l_pi_discrete(const PortfolioMapSpec& map, const MarkovKernel& kernel, const InvariantSample& inv,
                         std::size_t n_inner, std::uint64_t seed);

struct DiffusionQuadrature {
    BatchMeans L;  // (pi/x)' c lambda - 1/2 (pi/x)' c (pi/x)
    BatchMeans Q;  // (pi/x)' c (pi/x)
};

DiffusionQuadrature l_pi_diffusion(const WeightFunction& weights, const DiffusionSpec& spec,
                                   const InvariantSample& inv);
DiffusionQuadrature l_pi_diffusion(const PortfolioMapSpec& map, const DiffusionSpec& spec,
                                   const InvariantSample& inv);

// 1/2 lambda' c lambda averaged over the sample.
BatchMeans l_num_quadrature(const DiffusionSpec& spec, const InvariantSample& inv);

// Non-empty when the batch SE moves by more than half under batch refinement,
// a symptom of an integrand without finite variance.
std::string heavy_tail_warning(const std::string& name, const BatchMeans& bm);

// Wright-Fisher numeraire rate from the Dirichlet(2 kappa theta / sigma2)
// stationary law; infinite when some 2 kappa theta_i / sigma2 <= 1.
double wf_l_num_closed_form(const WrightFisherSpec& wf);

WeightFunction numeraire_weight_function(const DiffusionSpec& spec);

struct CoverGap {
    CheckRecord record;
    double gap = 0.0;     // (log V* - log V(nu)) / T
    double bound = 0.0;
    double w_near = 0.0;
    double lipschitz = 0.0;  // per-step constant used for the covering term
};

// Per-step constant for |T^-1 log V(b) - T^-1 log V(b~)| / |b - b~|_1 on a
// path with price relatives in [c, C].
double cover_lipschitz_constant(const MarketPath& path);

// Constant class only. Throws NoAtomInBall when no atom lies within eta (l1)
// of the retrospective optimum.
CoverGap check_cover_gap(const MarketPath& path, const MixtureMeasure& mixture, const RetroResult& retro,
                         double eta);

// One-step ratio of the mixture's wealth against hat after t steps, over
// n_paths independent paths started at mu0.
CheckRecord check_supermartingale(const MarkovKernel& kernel, const SimplexPoint& mu0, const MixtureMeasure& mixture,
                                  const PortfolioMapSpec& hat, std::size_t t, std::size_t n_paths,
                                  std::uint64_t seed);

// At n_states random states: solve the log-optimal weights on n_inner
// kernel samples and average <pi, y/x> / <p_hat, y/x> over the same samples.
CheckRecord check_ratio_states(const MarkovKernel& kernel, const PortfolioMapSpec& map, std::size_t n_states,
                               std::size_t n_inner, std::uint64_t seed);

struct MartingaleDiagnostic {
    CheckRecord record;   // relative change of <M>_T / T between the last two dyadic times
    Series ratio;         // (T, <M>_T / T)
    BatchMeans rate;      // per-unit-time increments of <M>
};

MartingaleDiagnostic check_martingale_clt_premise(const MarketPath& path, const WeightFunction& weights,
                                                  const DiffusionSpec& spec);

struct CompareConfig {
    std::string mode = "discrete";  // or "continuous"
    WrightFisherSpec model = wright_fisher_benchmark();
    double T = 1e5;                 // steps (discrete) or time (continuous)
    double dt = 0.02;
    std::uint64_t seed = 1;
    double M = 5.0;
    std::vector<double> M_ladder{1.0, 2.0, 5.0};
    double alpha = 0.2;
    double h = 1.0 / 32.0;
    double eps = 0.0;
    std::vector<std::string> families{"quadratic"};
    std::size_t n_atoms = 1000;
    std::vector<std::size_t> atom_ladder{10, 100, 1000};
    std::size_t logopt_samples = 2000;
    std::size_t quad_samples = 20000;
    std::size_t burn_in = 1000;
    std::size_t thinning = 5;
    std::size_t inner_samples = 200;
    double qv_mesh = 0.01;
    int generator_starts = 4;
    int generator_iterations = 60;
    double tolerance = 0.02;

    int resolution() const;
    std::string to_json() const;
    // Unknown keys are rejected.
    static CompareConfig from_json(const std::string& text);
};

CompareConfig default_continuous_config();

GrowthRateReport compare_three(const CompareConfig& cfg);

struct CheckConfig {
    WrightFisherSpec model = wright_fisher_benchmark();
    std::uint64_t seed = 1;
    // cover gap on the alternating path
    std::vector<std::size_t> cover_T{100, 1000, 10000};
    std::size_t cover_atoms = 1000;
    double cover_eta = 0.05;
    // numeraire neutrality
    std::size_t neutrality_paths = 100;
    double neutrality_T = 10.0;
    double neutrality_dt = 1e-3;
    // supermartingale battery on the Euler chain
    double chain_dt = 0.02;
    std::size_t sm_paths = 100000;
    std::size_t sm_steps = 5;
    std::size_t sm_atoms = 100;
    int table_resolution = 32;
    std::size_t table_samples = 2000;
    std::size_t ratio_states = 20;
    std::size_t ratio_samples = 2000;
    // continuous benchmark
    double T = 2000.0;
    double dt = 1e-3;
    std::size_t quad_samples = 20000;
    std::size_t burn_in = 2000;
    std::size_t thinning = 50;
    // log-ratio Lipschitz bound on bounded-ratio paths
    std::size_t lipschitz_paths = 1000;
    std::size_t lipschitz_steps = 200;
    double lipschitz_ratio = 3.5;

    std::string to_json() const;
    static CheckConfig from_json(const std::string& text);
};

CheckReport run_checks(const CheckConfig& cfg);

// Model-free legs on an observed path: retrospective optimum and universal
// mixture per class.
struct BacktestConfig {
    std::vector<std::string> classes{"constant"};
    double M = 5.0;
    double alpha = 0.2;
    double h = 1.0 / 32.0;
    std::vector<std::string> families{"quadratic"};
    std::size_t n_atoms = 1000;
    double eta = 0.05;
    std::uint64_t seed = 1;

    std::string to_json() const;
    static BacktestConfig from_json(const std::string& text);
};

BacktestReport backtest(const MarketPath& path, const BacktestConfig& cfg, std::string source = "");

// Weights alternate (1/2, 1/2), (2/3, 1/3), ...; steps + 1 points.
MarketPath alternating_path(std::size_t steps);
// Weight path whose price relatives are drawn log-uniformly from [1, ratio].
MarketPath bounded_ratio_path(int dim, std::size_t steps, double ratio, RngStream& rng);
// max over random constant pairs of |T^-1 log V(b) - T^-1 log V(b~)| - log(ratio) |b - b~|_1.
CheckRecord check_ratio_lipschitz_bound(std::size_t n_paths, std::size_t steps, double ratio, std::uint64_t seed);

}  // namespace growthlab
