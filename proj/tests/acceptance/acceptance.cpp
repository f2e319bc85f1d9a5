// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.
#include "growthlab/asymptotics.hpp"
#include "growthlab/error.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

using namespace growthlab;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double a)
{
    char buf[128];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Eigen::VectorXd random_point(int d, RngStream& rng)
{
    Eigen::VectorXd g(d);
    for (int i = 0; i < d; ++i) g[i] = rng.gamma(1.0);
    return g / g.sum();
}

MarketPath subsample(const MarketPath& fine, std::size_t stride)
{
    const std::size_t n = (fine.size() - 1) / stride + 1;
    std::vector<double> t(n);
    Eigen::MatrixXd P(fine.dim(), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        t[i] = fine.times()[i * stride];
        P.col(static_cast<Eigen::Index>(i)) = fine.points().col(static_cast<Eigen::Index>(i * stride));
    }
    return MarketPath(PathKind::SampledContinuous, t, P);
}

// 1. half/double example
Outcome half_double()
{
    const auto t0 = std::chrono::steady_clock::now();
    const std::size_t t = 10000;
    MarketPath path = alternating_path(2 * t);
    RetroResult r = best_constant(path);
    const Eigen::VectorXd b = std::get<ConstantMap>(r.map.variant()).b;
    WealthCurve c = wealth_discrete(path, r.map);
    const double elapsed = seconds_since(t0);
    double worst = 0.0;  // max over k of |log V_2k - k log(9/8)| / k
    for (std::size_t k = 1; k <= t; ++k)
        worst = std::max(worst, std::abs(c.log_values[2 * k] - k * std::log(9.0 / 8.0)) / k);
    const double dist = (b - Eigen::Vector2d(0.5, 0.5)).lpNorm<1>();
    Outcome o;
    o.pass = dist <= 1e-6 && worst <= 1e-9 && elapsed < 1.0;
    o.detail = "|b*-(1/2,1/2)|_1=" + fmt("%.2e", dist) + " max|dlog|/t=" + fmt("%.2e", worst) +
               " runtime=" + fmt("%.3fs", elapsed);
    return o;
}

// 2. cover gap ladder on the same path
Outcome cover_gap()
{
    ClassSpec cls;
    MixtureMeasure mix = sample_mixture(cls, 2, 1000, 2024);
    MarketPath full = alternating_path(10000);
    Outcome o{true, ""};
    double prev = INFINITY;
    for (std::size_t T : {100u, 1000u, 10000u}) {
        MarketPath p = full.prefix(T + 1);
        CoverGap g = check_cover_gap(p, mix, best_constant(p), 0.05);
        o.pass = o.pass && g.gap >= -1e-12 && g.record.pass && g.gap <= prev;
        prev = g.gap;
        o.detail += "T=" + std::to_string(T) + " gap=" + fmt("%.3e", g.gap) + " bound=" + fmt("%.3e", g.bound) + "; ";
    }
    return o;
}

// 3. numeraire neutrality in all engines
Outcome neutrality()
{
    DiffusionSpec spec = make_diffusion(wright_fisher_benchmark());
    GeneratorFunction one = constant_generator(2);
    double worst = 0.0;
    for (std::uint64_t p = 0; p < 100; ++p) {
        MarketPath path = quadratic_variation(simulate_diffusion(spec, 10.0, 1e-3, uniform_point(2), 500 + p),
                                              RefiningPartition{1e-3, 0});
        worst = std::max(worst, std::abs(wealth_discrete(path, market_map(2)).final_log()));
        worst = std::max(worst, std::abs(wealth_master_equation(path, one).final_log()));
        worst = std::max(worst, std::abs(wealth_diffusion_exponential(path, market_map(2), &spec).final_log()));
    }
    return {worst <= 1e-9, "max |log V_T| over 100 paths x 3 engines=" + fmt("%.2e", worst)};
}

// 4. functionally generated identities
Outcome fg_identities()
{
    RngStream rng(4, 0);
    double eq = 0.0, sum = 0.0;
    for (int d = 2; d <= 5; ++d) {
        GeneratorFunction gm = geometric_mean_generator(d);
        std::vector<GeneratorFunction> all{gm, constant_generator(d),
                                           GeneratorFunction(GeneratorFamily::Quadratic, d, std::vector<double>(d + 1, 0.8)),
                                           GeneratorFunction(GeneratorFamily::Entropy, d, {0.5, 0.7})};
        std::vector<double> am(1, 1.0);
        for (int i = 0; i < d; ++i) am.push_back(0.1 * i);
        for (int i = 0; i < d * (d - 1) / 2; ++i) am.push_back(0.4);
        all.emplace_back(GeneratorFamily::AffineMixture, d, am);
        std::vector<double> pp(d, 0.9 / d);
        pp.push_back(0.2);
        all.emplace_back(GeneratorFamily::PowerProduct, d, pp);
        Eigen::VectorXd w(d);
        for (int k = 0; k < 1000; ++k) {
            Eigen::VectorXd x = random_point(d, rng);
            fg_weights_raw(gm, x.data(), w.data());
            eq = std::max(eq, (w.array() - 1.0 / d).abs().maxCoeff());
            for (const auto& G : all) {
                fg_weights_raw(G, x.data(), w.data());
                sum = std::max(sum, std::abs(w.sum() - 1.0));
            }
        }
    }
    return {eq <= 1e-12 && sum <= 1e-12, "geometric mean max dev=" + fmt("%.2e", eq) + " max |sum-1|=" + fmt("%.2e", sum)};
}

// 5. master equation against the discrete recursion on the same grid
Outcome master_consistency()
{
    DiffusionSpec spec = make_diffusion(wright_fisher_benchmark());
    GeneratorFunction G(GeneratorFamily::Quadratic, 2, {2.0, 1.0, 1.0});
    PortfolioMapSpec fg = PortfolioMapSpec::fg(G);
    const double dts[3] = {4e-3, 2e-3, 1e-3};
    double err[3] = {0, 0, 0};
    const int n_paths = 10;
    for (int p = 0; p < n_paths; ++p) {
        MarketPath fine = simulate_diffusion(spec, 100.0, 1e-3, uniform_point(2), 700 + p);
        for (int k = 0; k < 3; ++k) {
            MarketPath path = quadratic_variation(subsample(fine, std::size_t(4) >> k), RefiningPartition{dts[k], 0});
            err[k] += std::abs(wealth_master_equation(path, G).final_log() - wealth_discrete(path, fg).final_log()) / n_paths;
        }
    }
    const double order = std::log2(err[0] / err[2]) / 2.0;
    Outcome o;
    o.pass = err[1] < err[0] && err[2] < err[1] && order >= 0.5 && err[2] <= 1e-2;
    o.detail = "mean |dlog V| at dt=4e-3,2e-3,1e-3: " + fmt("%.2e", err[0]) + "," + fmt("%.2e", err[1]) + "," +
               fmt("%.2e", err[2]) + " order=" + fmt("%.2f", order);
    return o;
}

// 6. log-optimal state solver against a 1-D grid oracle
double one_dim_oracle(double q, double* p_out)
{
    auto f = [q](double s) {
        return q * std::log(s * 4.0 / 3.0 + (1 - s) * 2.0 / 3.0) + (1 - q) * std::log(s * 2.0 / 3.0 + (1 - s) * 4.0 / 3.0);
    };
    const int n = 1000000;
    int best = 0;
    double fb = f(0.0);
    for (int i = 1; i <= n; ++i) {
        const double v = f(double(i) / n);
        if (v > fb) {
            fb = v;
            best = i;
        }
    }
    *p_out = double(best) / n;
    return fb;
}

Outcome log_optimal_states()
{
    Outcome o{true, ""};
    for (double q : {0.6, 0.8}) {
        MarkovKernel k = finite_kernel(
            2,
            [q](const SimplexPoint&) {
                return std::vector<KernelAtom>{{Eigen::Vector2d(2.0 / 3.0, 1.0 / 3.0), q},
                                               {Eigen::Vector2d(1.0 / 3.0, 2.0 / 3.0), 1.0 - q}};
            },
            "{}");
        double p_oracle = 0.0;
        const double L_oracle = one_dim_oracle(q, &p_oracle);
        StateSolution s = log_optimal_state(uniform_point(2), k, 0, 0.0, 1);
        const double dp = std::abs(s.p[0] - p_oracle), dL = std::abs(s.L - L_oracle);
        o.pass = o.pass && dp <= 1e-4 && dL <= 1e-4;
        o.detail += "q=" + fmt("%.1f", q) + " p=" + fmt("%.6f", s.p[0]) + " (oracle " + fmt("%.6f", p_oracle) +
                    ") L=" + fmt("%.6f", s.L) + " (oracle " + fmt("%.6f", L_oracle) + "); ";
    }
    return o;
}

// 7. continuous-time benchmark
Outcome continuous_benchmark()
{
    const auto t0 = std::chrono::steady_clock::now();
    WrightFisherSpec wf = wright_fisher_benchmark();
    DiffusionSpec spec = make_diffusion(wf);
    GeneratorFunction Ghat(GeneratorFamily::PowerProduct, 2, {0.75, 0.75});
    RngStream rng(7, 0);
    double ident = 0.0;
    Eigen::Vector2d a, b;
    for (int k = 0; k < 1000; ++k) {
        Eigen::VectorXd x = random_point(2, rng);
        numeraire_weights_raw(spec, x.data(), a.data());
        fg_weights_raw(Ghat, x.data(), b.data());
        ident = std::max(ident, (a - b).lpNorm<Eigen::Infinity>());
    }
    // Beta(1.5, 1.5): E[1/x] = 4, so L = 0.5 kappa^2 / sigma2 (2 * 0.25 * 4 - 1)
    const double oracle = 0.5 * wf.kappa * wf.kappa / wf.sigma2 * (2.0 * 0.25 * 4.0 - 1.0);
    InvariantSample inv = invariant_sample(spec, 1e-3, uniform_point(2), 20000, 2000, 50, 71);
    BatchMeans Ln = l_num_quadrature(spec, inv);
    MarketPath path = simulate_diffusion(spec, 2000.0, 1e-3, uniform_point(2), 72);
    GrowthAverage g = growth_time_average(wealth_discrete(path, numeraire_weight_function(spec), "numeraire"));
    const double elapsed = seconds_since(t0);
    Outcome o;
    o.pass = ident <= 1e-12 && std::abs(Ln.mean - oracle) <= 3.0 * Ln.se && std::abs(g.rate - oracle) <= 3.0 * g.se &&
             elapsed <= 300.0 && std::abs(wf_l_num_closed_form(wf) - oracle) <= 1e-12;
    o.detail = "identity dev=" + fmt("%.2e", ident) + " quadrature=" + fmt("%.4f", Ln.mean) + "+-" + fmt("%.4f", Ln.se) +
               " time average=" + fmt("%.4f", g.rate) + "+-" + fmt("%.4f", g.se) + " target=" + fmt("%.4f", oracle) +
               " runtime=" + fmt("%.1fs", elapsed);
    return o;
}

// 8. three-way equality on the discrete chain
Outcome three_way()
{
    CompareConfig cfg;
    GrowthRateReport rep = compare_three(cfg);
    const std::vector<std::string> needed{"gap_retro_universal", "gap_retro_logopt",        "gap_universal_logopt",
                                          "retro_vs_quadrature", "universal_vs_quadrature", "logopt_vs_quadrature",
                                          "hindsight_dominance", "universal_lower_bound"};
    Outcome o{true, ""};
    for (const auto& name : needed) {
        bool found = false;
        for (const auto& c : rep.checks)
            if (c.name == name) {
                found = true;
                o.pass = o.pass && c.pass;
                if (!c.pass) o.detail += "failed " + name + "; ";
            }
        o.pass = o.pass && found;
    }
    o.detail += "retro=" + fmt("%.5f", rep.retro.value) + " universal=" + fmt("%.5f", rep.universal.value) +
                " logopt=" + fmt("%.5f", rep.logopt.value) + " L=" + fmt("%.5f", rep.quad_L.value_or(NAN));
    return o;
}

// 9. supermartingale battery
Outcome supermartingale()
{
    MarkovKernel kernel = euler_kernel(make_diffusion(wright_fisher_benchmark()), 0.02);
    LogOptimalTable table = log_optimal_map(kernel, 32, 2000, 0.0, 91);
    PortfolioMapSpec hat = table.map();
    ClassSpec cls;
    MixtureMeasure mix = sample_mixture(cls, 2, 100, 92);
    CheckRecord sm = check_supermartingale(kernel, uniform_point(2), mix, hat, 5, 100000, 93);
    CheckRecord r1 = check_ratio_states(kernel, mix.atoms[0].map, 20, 2000, 94);
    CheckRecord r2 = check_ratio_states(kernel, hat, 20, 2000, 95);
    Outcome o;
    o.pass = sm.pass && r1.pass && r2.pass;
    o.detail = "mean=" + fmt("%.6f", sm.statistic) + " <= " + fmt("%.6f", sm.tolerance) +
               "; max per-state (mean-3se)=" + fmt("%.6f", std::max(r1.statistic, r2.statistic)) + " <= 1";
    return o;
}

// 10. log-ratio Lipschitz bound for constant portfolios
Outcome ratio_bound()
{
    double worst = -INFINITY;
    for (std::uint64_t p = 0; p < 1000; ++p) {
        RngStream rng(1010, p);
        const int d = 2 + static_cast<int>(p % 3);
        MarketPath path = bounded_ratio_path(d, 200, 3.5, rng);
        // price relatives in [c, C]; the weight form carries the same ratio per step
        double logCc = 0.0;
        for (std::size_t t = 0; t + 1 < path.size(); ++t) {
            double hi = 0.0, lo = INFINITY;
            for (int i = 0; i < d; ++i) {
                const double r = path.point_data(t + 1)[i] / path.point_data(t)[i];
                hi = std::max(hi, r);
                lo = std::min(lo, r);
            }
            logCc = std::max(logCc, std::log(hi / lo));
        }
        Eigen::VectorXd b = random_point(d, rng), bt = random_point(d, rng);
        const double lhs = std::abs(wealth_discrete(path, PortfolioMapSpec::constant(b)).final_log() -
                                    wealth_discrete(path, PortfolioMapSpec::constant(bt)).final_log()) / 200.0;
        worst = std::max(worst, lhs - logCc * (b - bt).lpNorm<1>());
    }
    return {worst <= 1e-12, "max excess over (log C - log c)|b-b~|_1 in 1000 instances=" + fmt("%.3e", worst)};
}

// 11. reproducibility of the CLI across runs and thread counts
std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Outcome reproducibility()
{
    fs::path dir = fs::temp_directory_path() / "growthlab_acceptance";
    fs::create_directories(dir);
    std::ofstream(dir / "continuous.json") << R"({"mode": "continuous", "T": 200})";
    struct Job {
        std::string name, args;
    };
    const std::vector<Job> jobs{{"compare_discrete", "compare --seed 7"},
                                {"compare_continuous", "compare --config " + (dir / "continuous.json").string()},
                                {"check", "check --seed 3"}};
    Outcome o{true, ""};
    for (const auto& job : jobs) {
        std::vector<std::string> outputs;
        for (const char* threads : {"1", "1", "4"}) {
            fs::path out = dir / (job.name + "_" + threads + "_" + std::to_string(outputs.size()) + ".json");
            const std::string cmd = std::string("GROWTHLAB_THREADS=") + threads + " " + GROWTHLAB_CLI_PATH + " " +
                                    job.args + " --out " + out.string() + " 2>/dev/null";
            const int rc = std::system(cmd.c_str());
            if (rc == -1 || !fs::exists(out)) {
                o.pass = false;
                o.detail += job.name + " did not produce output; ";
            }
            outputs.push_back(slurp(out));
        }
        const bool same = outputs[0] == outputs[1] && outputs[1] == outputs[2] && !outputs[0].empty();
        o.pass = o.pass && same;
        o.detail += job.name + (same ? " identical" : " DIFFERS") + " (" + std::to_string(outputs[0].size()) + " bytes); ";
    }
    return o;
}

}  // namespace

int main()
{
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"half/double example", half_double},
        {"cover gap ladder", cover_gap},
        {"numeraire neutrality", neutrality},
        {"functionally generated identities", fg_identities},
        {"master-equation consistency", master_consistency},
        {"log-optimal state solver", log_optimal_states},
        {"continuous-time benchmark", continuous_benchmark},
        {"three-way equality at desk scale", three_way},
        {"supermartingale battery", supermartingale},
        {"log-ratio Lipschitz bound", ratio_bound},
        {"reproducibility", reproducibility},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        if (!o.pass) ++failed;
        std::printf("%s criterion %zu: %s | %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                    o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
