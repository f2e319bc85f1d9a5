#include "growthlab/asymptotics.hpp"
#include "growthlab/error.hpp"

#include <gtest/gtest.h>

#include <json.hpp>

#include <cmath>
#include <random>

using namespace growthlab;
using nlohmann::json;

namespace {

DiffusionSpec benchmark() { return make_diffusion(wright_fisher_benchmark()); }

MarkovKernel chain_kernel() { return euler_kernel(benchmark(), 0.02); }

// E[lambda' c lambda] / 2 for Wright-Fisher by Monte Carlo of the Dirichlet
// law built from standard-library gamma draws.
double l_num_dirichlet_monte_carlo(const WrightFisherSpec& wf, int n)
{
    std::mt19937_64 eng(77);
    const int d = wf.dim;
    std::vector<std::gamma_distribution<double>> g;
    for (int i = 0; i < d; ++i) g.emplace_back(2.0 * wf.kappa * wf.theta[i] / wf.sigma2, 1.0);
    double s = 0.0;
    for (int k = 0; k < n; ++k) {
        Eigen::VectorXd x(d);
        for (int i = 0; i < d; ++i) x[i] = g[i](eng);
        x /= x.sum();
        double q = 0.0;
        for (int i = 0; i < d; ++i) q += wf.theta[i] * wf.theta[i] / x[i];
        s += 0.5 * wf.kappa * wf.kappa / wf.sigma2 * (q - 1.0);
    }
    return s / n;
}

}  // namespace

TEST(GrowthAverage, MarketAndHalfDouble)
{
    auto path = alternating_path(1000);
    auto m = growth_time_average(wealth_discrete(path, market_map(2)));
    EXPECT_EQ(m.rate, 0.0);
    auto h = growth_time_average(wealth_discrete(path, PortfolioMapSpec::constant(Eigen::Vector2d(0.5, 0.5))));
    EXPECT_NEAR(h.rate, 0.058891517828191, 1e-12);
    EXPECT_EQ(h.partials.back().first, 1000.0);
}

TEST(GrowthAverage, PureStockRateVanishes)
{
    auto path = simulate_diffusion(benchmark(), 500.0, 1e-2, uniform_point(2), 4);
    auto g = growth_time_average(wealth_discrete(path, PortfolioMapSpec::constant(Eigen::Vector2d(1.0, 0.0))));
    EXPECT_LE(std::abs(g.rate), std::log(1.0 / path.points().minCoeff()) / 500.0);
}

TEST(GrowthAverage, BatchHalvingIsStable)
{
    auto path = simulate_discrete(chain_kernel(), 100000, uniform_point(2), 3);
    auto g = growth_time_average(wealth_discrete(path, PortfolioMapSpec::constant(Eigen::Vector2d(0.5, 0.5))));
    EXPECT_LT(std::abs(g.se_half - g.se) / g.se, 0.3);
}

TEST(HeavyTail, WarnsOnlyWhenSeMoves)
{
    std::mt19937_64 gen(5);
    std::normal_distribution<double> z;
    std::vector<double> x(20000);
    for (auto& v : x) v = z(gen);
    EXPECT_TRUE(heavy_tail_warning("L", batch_means(x)).empty());

    BatchMeans bm;
    bm.se = 0.01;
    bm.se_half = 0.03;
    const std::string w = heavy_tail_warning("L_num", bm);
    EXPECT_EQ(w.rfind("L_num:", 0), 0u);
    bm.se_half = 0.014;
    EXPECT_TRUE(heavy_tail_warning("L_num", bm).empty());
}

TEST(LPiDiscrete, TrivialCases)
{
    auto inv = invariant_sample(chain_kernel(), uniform_point(2), 500, 100, 5, 1);
    auto m = l_pi_discrete(market_map(2), chain_kernel(), inv, 50, 2);
    EXPECT_LE(std::abs(m.mean), 1e-15);
    auto idinv = invariant_sample(identity_kernel(2), uniform_point(2), 50, 0, 1, 1);
    auto z = l_pi_discrete(PortfolioMapSpec::constant(Eigen::Vector2d(0.9, 0.1)), identity_kernel(2), idinv, 10, 2);
    EXPECT_EQ(z.mean, 0.0);
}

TEST(LPiDiscrete, AgreesWithTimeAverageOfTabulatedMap)
{
    auto kernel = chain_kernel();
    auto table = log_optimal_map(kernel, 16, 500, 0.0, 5);
    auto map = table.map();
    auto inv = invariant_sample(kernel, uniform_point(2), 5000, 1000, 5, 6);
    auto q = l_pi_discrete(map, kernel, inv, 200, 7);
    auto path = simulate_discrete(kernel, 100000, uniform_point(2), 8);
    auto g = growth_time_average(wealth_discrete(path, map));
    EXPECT_NEAR(g.rate, q.mean, 3.0 * std::hypot(g.se, q.se));
}

TEST(LPiDiffusion, MarketMapIsZero)
{
    auto inv = invariant_sample(benchmark(), 1e-3, uniform_point(2), 200, 100, 10, 1);
    auto q = l_pi_diffusion(market_map(2), benchmark(), inv);
    // c 1 = 0 up to the rounding of sum x
    EXPECT_LE(std::abs(q.L.mean), 1e-15);
    EXPECT_LE(std::abs(q.Q.mean), 1e-15);
    auto z = l_num_quadrature(zero_dynamics(2), inv);
    EXPECT_EQ(z.mean, 0.0);
}

TEST(LPiDiffusion, NumeraireConsistencyAndBenchmarkValue)
{
    auto spec = benchmark();
    auto inv = invariant_sample(spec, 1e-3, uniform_point(2), 20000, 2000, 50, 3);
    auto ln = l_num_quadrature(spec, inv);
    auto lp = l_pi_diffusion(numeraire_weight_function(spec), spec, inv);
    EXPECT_LE(std::abs(ln.mean - lp.L.mean), 1e-10);
    EXPECT_NEAR(ln.mean, 1.125, 3.0 * ln.se);
}

TEST(LPiDiffusion, EqualWeightMatchesTimeAverage)
{
    auto spec = benchmark();
    auto eq = PortfolioMapSpec::constant(Eigen::Vector2d(0.5, 0.5));
    auto inv = invariant_sample(spec, 1e-3, uniform_point(2), 20000, 2000, 50, 4);
    auto q = l_pi_diffusion(eq, spec, inv);
    auto path = simulate_diffusion(spec, 1000.0, 1e-3, uniform_point(2), 5);
    auto g = growth_time_average(wealth_discrete(path, eq));
    EXPECT_NEAR(g.rate, q.L.mean, 3.0 * std::hypot(g.se, q.L.se));
}

TEST(ClosedForm, BenchmarkAndDirichletOracle)
{
    EXPECT_NEAR(wf_l_num_closed_form(wright_fisher_benchmark()), 1.125, 1e-15);
    WrightFisherSpec wf;
    wf.dim = 3;
    wf.kappa = 3.0;
    wf.sigma2 = 1.0;
    wf.theta = Eigen::Vector3d(0.3, 0.3, 0.4);
    const double mc = l_num_dirichlet_monte_carlo(wf, 400000);
    EXPECT_NEAR(wf_l_num_closed_form(wf), mc, 0.01 * mc);
    wf.kappa = 1.0;  // 2 kappa theta_1 / sigma2 = 0.6 <= 1
    EXPECT_TRUE(std::isinf(wf_l_num_closed_form(wf)));
}

TEST(CoverGap, SingleAtomAtOptimum)
{
    auto path = alternating_path(100);
    auto retro = best_constant(path);
    auto g = check_cover_gap(path, make_mixture({retro.map}, {1.0}), retro, 0.05);
    EXPECT_LE(g.gap, 1e-12);
    EXPECT_TRUE(g.record.pass);
}

TEST(CoverGap, HalfDoubleLadder)
{
    ClassSpec cls;
    auto mix = sample_mixture(cls, 2, 1000, 1);
    auto full = alternating_path(10000);
    double prev = INFINITY;
    for (std::size_t T : {100u, 1000u, 10000u}) {
        auto p = full.prefix(T + 1);
        auto g = check_cover_gap(p, mix, best_constant(p), 0.05);
        EXPECT_GE(g.gap, -1e-12);
        EXPECT_TRUE(g.record.pass) << T;
        EXPECT_LE(g.gap, prev + 1e-12);
        prev = g.gap;
    }
}

TEST(CoverGap, NoAtomInBall)
{
    auto path = alternating_path(10);
    auto retro = best_constant(path);
    auto mix = make_mixture({PortfolioMapSpec::constant(Eigen::Vector2d(0.99, 0.01))}, {1.0});
    try {
        check_cover_gap(path, mix, retro, 0.05);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::NoAtomInBall);
    }
}

TEST(RatioLipschitzBound, LogRatioFailsForWideRatios)
{
    // one step with relatives (rho, 1); b = (0, 1) against b~ = (eps, 1 - eps)
    const double rho = 6.0, eps = 1e-6;
    Eigen::MatrixXd P(2, 2);
    P.col(0) = Eigen::Vector2d(0.5, 0.5);
    P.col(1) = Eigen::Vector2d(rho, 1.0) / (rho + 1.0);
    MarketPath path(PathKind::Discrete, {0.0, 1.0}, P);
    const double a = wealth_discrete(path, PortfolioMapSpec::constant(Eigen::Vector2d(0.0, 1.0))).final_log();
    const double b = wealth_discrete(path, PortfolioMapSpec::constant(Eigen::Vector2d(eps, 1 - eps))).final_log();
    const double quotient = std::abs(a - b) / (2.0 * eps);
    EXPECT_GT(quotient, std::log(rho) + 0.5);
    EXPECT_NEAR(quotient, 0.5 * (rho - 1.0), 1e-5);
    EXPECT_LE(quotient, cover_lipschitz_constant(path) + 1e-12);
}

TEST(RatioLipschitzBound, HoldsBelowCrossover)
{
    auto r = check_ratio_lipschitz_bound(300, 50, 3.5, 2);
    EXPECT_TRUE(r.pass);
    EXPECT_EQ(cover_lipschitz_constant(alternating_path(4)), std::log(2.0));
}

TEST(Supermartingale, TrivialRatios)
{
    auto kernel = chain_kernel();
    auto hat = PortfolioMapSpec::constant(Eigen::Vector2d(0.4, 0.6));
    auto self = check_supermartingale(kernel, uniform_point(2), make_mixture({hat}, {1.0}), hat, 3, 100, 1);
    EXPECT_NEAR(self.statistic, 1.0, 1e-15);
    ClassSpec cls;
    auto mix = sample_mixture(cls, 2, 20, 2);
    auto id = check_supermartingale(identity_kernel(2), uniform_point(2), mix, hat, 3, 100, 1);
    EXPECT_NEAR(id.statistic, 1.0, 1e-15);
}

TEST(Supermartingale, MixtureAgainstTable)
{
    auto kernel = chain_kernel();
    auto table = log_optimal_map(kernel, 16, 1000, 0.0, 3);
    ClassSpec cls;
    auto mix = sample_mixture(cls, 2, 50, 4);
    auto r = check_supermartingale(kernel, uniform_point(2), mix, table.map(), 5, 20000, 5);
    EXPECT_TRUE(r.pass) << r.statistic << " " << r.tolerance;
}

TEST(RatioStates, PassOnChain)
{
    auto kernel = chain_kernel();
    ClassSpec cls;
    auto mix = sample_mixture(cls, 2, 1, 1);
    EXPECT_TRUE(check_ratio_states(kernel, mix.atoms[0].map, 20, 1000, 3).pass);
}

TEST(Martingale, ZeroDynamicsHasNoBracket)
{
    auto spec = zero_dynamics(2);
    auto path = simulate_diffusion(spec, 10.0, 0.01, uniform_point(2), 1);
    auto m = check_martingale_clt_premise(path, numeraire_weight_function(spec), spec);
    for (const auto& [T, v] : m.ratio) EXPECT_EQ(v, 0.0);
}

TEST(Martingale, NumeraireBracketRate)
{
    auto spec = benchmark();
    auto path = simulate_diffusion(spec, 1000.0, 1e-3, uniform_point(2), 9);
    auto m = check_martingale_clt_premise(path, numeraire_weight_function(spec), spec);
    EXPECT_NEAR(m.rate.mean, 2.25, 3.0 * m.rate.se);
    auto eq = m.ratio.back().second;
    EXPECT_NEAR(eq, m.rate.mean, 1e-9);
}

TEST(Martingale, EqualWeightBracketMatchesQ)
{
    auto spec = benchmark();
    auto eq = PortfolioMapSpec::constant(Eigen::Vector2d(0.5, 0.5));
    WeightFunction w = [&](const double* x, double* out) { eq.weights(x, out); };
    auto path = simulate_diffusion(spec, 1000.0, 1e-3, uniform_point(2), 10);
    auto m = check_martingale_clt_premise(path, w, spec);
    auto inv = invariant_sample(spec, 1e-3, uniform_point(2), 20000, 2000, 50, 11);
    auto q = l_pi_diffusion(eq, spec, inv);
    EXPECT_NEAR(m.rate.mean, q.Q.mean, 3.0 * std::hypot(m.rate.se, q.Q.se));
}

TEST(Configs, JsonRoundTripAndStrictKeys)
{
    CompareConfig c;
    c.seed = 42;
    c.atom_ladder = {5, 50};
    auto back = CompareConfig::from_json(c.to_json());
    EXPECT_EQ(back.to_json(), c.to_json());
    EXPECT_THROW(CompareConfig::from_json("{\"bogus\": 1}"), Error);
    auto cont = CompareConfig::from_json("{\"mode\": \"continuous\"}");
    EXPECT_EQ(cont.T, default_continuous_config().T);

    CheckConfig k;
    EXPECT_EQ(CheckConfig::from_json(k.to_json()).to_json(), k.to_json());
    EXPECT_THROW(CheckConfig::from_json("{\"sm_path\": 3}"), Error);

    BacktestConfig b;
    b.classes = {"constant", "lipschitz"};
    EXPECT_EQ(BacktestConfig::from_json(b.to_json()).to_json(), b.to_json());
    EXPECT_THROW(BacktestConfig::from_json("{\"class\": \"constant\"}"), Error);
}

TEST(Reports, CheckRecordsAndJson)
{
    EXPECT_FALSE(make_check("x", NAN, 1.0).pass);
    EXPECT_TRUE(make_check("x", 1.0, 1.0).pass);
    GrowthRateReport r;
    r.seed = 3;
    r.T = 10.0;
    r.retro.value = 0.1;
    r.quad_L = 0.2;
    r.checks.push_back(make_check("a", INFINITY, 1.0));
    auto j = json::parse(r.to_json());
    EXPECT_EQ(j["version"], 1);
    EXPECT_TRUE(j["rates"]["quadrature"]["L_num"].is_null());
    EXPECT_TRUE(j["checks"][0]["statistic"].is_null());
    EXPECT_FALSE(j["checks"][0]["pass"].get<bool>());
    for (const char* key : {"retro", "universal", "logopt"}) {
        EXPECT_TRUE(j["rates"][key].contains("value"));
        EXPECT_TRUE(j["rates"][key].contains("se"));
        EXPECT_TRUE(j["rates"][key].contains("ladder"));
    }
    EXPECT_FALSE(r.all_pass());
    EXPECT_EQ(r.plot_csv().rfind("series,T,partial_average\n", 0), 0u);
}

TEST(Backtest, HalfDoubleConstantRate)
{
    BacktestConfig cfg;
    cfg.n_atoms = 200;
    auto rep = backtest(alternating_path(1000), cfg, "alternating");
    ASSERT_EQ(rep.classes.size(), 1u);
    EXPECT_NEAR(rep.classes[0].retro, std::log(9.0 / 8.0) / 2.0, 1e-12);
    EXPECT_LE(rep.classes[0].universal, rep.classes[0].retro);
    for (const auto& c : rep.checks) EXPECT_TRUE(c.pass) << c.name;
}

TEST(RunChecks, SmallConfigIsDeterministic)
{
    CheckConfig cfg;
    cfg.cover_T = {100, 1000};
    cfg.neutrality_paths = 4;
    cfg.sm_paths = 2000;
    cfg.ratio_states = 4;
    cfg.ratio_samples = 500;
    cfg.table_resolution = 8;
    cfg.table_samples = 300;
    cfg.T = 100.0;
    cfg.quad_samples = 2000;
    cfg.lipschitz_paths = 50;
    auto a = run_checks(cfg).to_json();
    auto b = run_checks(cfg).to_json();
    EXPECT_EQ(a, b);
}
