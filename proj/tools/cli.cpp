#include "cli.hpp"

#include "growthlab/asymptotics.hpp"
#include "growthlab/error.hpp"
#include "growthlab/markets.hpp"
#include "growthlab/optimize.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>

namespace growthlab::cli {

namespace {

std::string read_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void emit(const std::string& path, const std::string& content, std::ostream& out)
{
    if (path.empty() || path == "-")
        out << content;
    else
        write_atomic(path, content);
}

std::string error_json(const std::string& code, const std::string& message)
{
    nlohmann::ordered_json j;
    j["error"] = {{"code", code}, {"message", message}};
    return j.dump() + "\n";
}

std::string fmt(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

WrightFisherSpec load_model(const std::string& file)
{
    return file.empty() ? wright_fisher_benchmark() : parse_model_json(read_file(file));
}

BoundaryRule parse_boundary(const std::string& s)
{
    if (s == "reflect") return BoundaryRule::Reflect;
    if (s == "clip") return BoundaryRule::Clip;
    throw Error(ErrorCode::InvalidArgument, "boundary must be 'reflect' or 'clip'");
}

struct SimulateArgs {
    std::string model, mode = "continuous", boundary = "reflect", out;
    double T = 100.0, dt = 1e-3;
    std::uint64_t seed = 1;
};

int do_simulate(const SimulateArgs& a, std::ostream& out)
{
    WrightFisherSpec wf = load_model(a.model);
    DiffusionSpec spec = make_diffusion(wf);
    SimulationOptions opts;
    opts.boundary = parse_boundary(a.boundary);
    MarketPath path;
    if (a.mode == "continuous") {
        path = simulate_diffusion(spec, a.T, a.dt, uniform_point(wf.dim), a.seed, opts);
    } else if (a.mode == "discrete") {
        auto steps = std::llround(a.T);
        if (steps < 1) throw Error(ErrorCode::InvalidArgument, "T must be at least one step");
        path = simulate_discrete(euler_kernel(spec, a.dt, opts), static_cast<std::size_t>(steps),
                                 uniform_point(wf.dim), a.seed);
    } else {
        throw Error(ErrorCode::InvalidArgument, "mode must be 'discrete' or 'continuous'");
    }
    std::ostringstream ss;
    write_weights_csv(ss, path);
    emit(a.out, ss.str(), out);
    return 0;
}

struct BacktestArgs {
    std::string prices, config, out;
    std::vector<std::string> classes, families;
    std::optional<double> M, alpha, h;
    std::optional<std::size_t> atoms;
    std::optional<std::uint64_t> seed;
};

int do_backtest(const BacktestArgs& a, std::ostream& out)
{
    BacktestConfig cfg = a.config.empty() ? BacktestConfig{} : BacktestConfig::from_json(read_file(a.config));
    if (!a.classes.empty()) cfg.classes = a.classes;
    if (!a.families.empty()) cfg.families = a.families;
    if (a.M) cfg.M = *a.M;
    if (a.alpha) cfg.alpha = *a.alpha;
    if (a.h) cfg.h = *a.h;
    if (a.atoms) cfg.n_atoms = *a.atoms;
    if (a.seed) cfg.seed = *a.seed;
    cfg = BacktestConfig::from_json(cfg.to_json());  // validates overrides
    auto [series, path] = ingest_prices(a.prices);
    BacktestReport rep = backtest(path, cfg, a.prices);
    emit(a.out, rep.to_json(), out);
    return 0;
}

struct LogoptArgs {
    std::string model, boundary = "reflect", out;
    double dt = 0.02, eps = 0.0, h = 1.0 / 32.0;
    std::size_t samples = 2000;
    std::uint64_t seed = 1;
};

int do_logopt(const LogoptArgs& a, std::ostream& out)
{
    WrightFisherSpec wf = load_model(a.model);
    SimulationOptions opts;
    opts.boundary = parse_boundary(a.boundary);
    MarkovKernel kernel = euler_kernel(make_diffusion(wf), a.dt, opts);
    if (!(a.h > 0.0) || a.h > 1.0) throw Error(ErrorCode::InvalidArgument, "h must lie in (0, 1]");
    LogOptimalTable tab = log_optimal_map(kernel, static_cast<int>(std::lround(1.0 / a.h)), a.samples, a.eps, a.seed);
    const int d = wf.dim;
    std::string csv;
    for (int i = 1; i <= d; ++i) csv += "x" + std::to_string(i) + ",";
    for (int i = 1; i <= d; ++i) csv += "p" + std::to_string(i) + ",";
    csv += "L\n";
    for (Eigen::Index k = 0; k < tab.states.cols(); ++k) {
        for (int i = 0; i < d; ++i) csv += fmt(tab.states(i, k)) + ",";
        for (int i = 0; i < d; ++i) csv += fmt(tab.weights(i, k)) + ",";
        csv += fmt(tab.L[static_cast<std::size_t>(k)]) + "\n";
    }
    emit(a.out, csv, out);
    return 0;
}

struct CompareArgs {
    std::string config, mode, out, plot;
    std::optional<std::uint64_t> seed;
    std::optional<double> T;
};

int do_compare(const CompareArgs& a, std::ostream& out)
{
    CompareConfig cfg;
    if (!a.config.empty())
        cfg = CompareConfig::from_json(read_file(a.config));
    else if (a.mode == "continuous")
        cfg = default_continuous_config();
    if (!a.mode.empty() && a.mode != cfg.mode) {
        if (!a.config.empty()) throw Error(ErrorCode::InvalidArgument, "--mode conflicts with the config file");
        if (a.mode != "discrete") throw Error(ErrorCode::InvalidArgument, "mode must be 'discrete' or 'continuous'");
    }
    if (a.seed) cfg.seed = *a.seed;
    if (a.T) cfg.T = *a.T;
    GrowthRateReport rep = compare_three(cfg);
    std::string json = rep.to_json(), csv = rep.plot_csv();
    if (!a.plot.empty()) write_atomic(a.plot, csv);
    emit(a.out, json, out);
    return 0;
}

struct CheckArgs {
    std::string config, out;
    std::optional<std::uint64_t> seed;
};

int do_check(const CheckArgs& a, std::ostream& out)
{
    CheckConfig cfg = a.config.empty() ? CheckConfig{} : CheckConfig::from_json(read_file(a.config));
    if (a.seed) cfg.seed = *a.seed;
    CheckReport rep = run_checks(cfg);
    emit(a.out, rep.to_json(), out);
    return rep.all_pass() ? 0 : 1;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"growthlab: growth rates of portfolio maps on market-weight paths"};
    app.name("growthlab");
    app.require_subcommand(1);

    SimulateArgs sa;
    auto* sim = app.add_subcommand("simulate", "Simulate a Wright-Fisher market path; writes t,w1..wd CSV");
    sim->add_option("--model", sa.model, "Model JSON file (default: benchmark model)");
    sim->add_option("--mode", sa.mode, "continuous (Euler path, times t*dt) or discrete (Euler chain, T steps)")
        ->capture_default_str();
    sim->add_option("--T", sa.T, "Horizon: time (continuous) or steps (discrete)")->capture_default_str();
    sim->add_option("--dt", sa.dt, "Euler step")->capture_default_str();
    sim->add_option("--seed", sa.seed, "RNG seed")->capture_default_str();
    sim->add_option("--boundary", sa.boundary, "Boundary rule: reflect or clip")->capture_default_str();
    sim->add_option("--out", sa.out, "Output CSV (default: stdout)");

    BacktestArgs ba;
    auto* bt = app.add_subcommand("backtest", "Model-free retrospective and universal rates for a prices CSV");
    bt->add_option("--prices", ba.prices, "Prices CSV with header date,<names...>")->required();
    bt->add_option("--config", ba.config, "Backtest config JSON");
    bt->add_option("--class", ba.classes, "Portfolio class: constant, lipschitz or fg (repeatable)");
    bt->add_option("--family", ba.families, "Generator family for the fg class (repeatable)");
    bt->add_option("--M", ba.M, "Class bound M");
    bt->add_option("--alpha", ba.alpha, "Holder exponent of the fg class");
    bt->add_option("--grid-step", ba.h, "Lipschitz grid spacing");
    bt->add_option("--atoms", ba.atoms, "Number of mixture atoms");
    bt->add_option("--seed", ba.seed, "RNG seed");
    bt->add_option("--out", ba.out, "Output report JSON (default: stdout)");

    LogoptArgs la;
    auto* lo = app.add_subcommand("logopt", "Tabulate the one-step log-optimal map of the Euler chain; writes x,p,L CSV");
    lo->add_option("--model", la.model, "Model JSON file (default: benchmark model)");
    lo->add_option("--dt", la.dt, "Euler step of the chain")->capture_default_str();
    lo->add_option("--grid-step", la.h, "Table grid spacing")->capture_default_str();
    lo->add_option("--samples", la.samples, "Kernel samples per state")->capture_default_str();
    lo->add_option("--eps", la.eps, "Blend toward uniform weights")->capture_default_str();
    lo->add_option("--seed", la.seed, "RNG seed")->capture_default_str();
    lo->add_option("--boundary", la.boundary, "Boundary rule: reflect or clip")->capture_default_str();
    lo->add_option("--out", la.out, "Output CSV (default: stdout)");

    CompareArgs ca;
    auto* cmp = app.add_subcommand("compare", "Three-way comparison report (retrospective, universal, log-optimal)");
    cmp->add_option("--config", ca.config, "Compare config JSON");
    cmp->add_option("--mode", ca.mode, "discrete or continuous (when no config is given)");
    cmp->add_option("--seed", ca.seed, "RNG seed (overrides the config)");
    cmp->add_option("--T", ca.T, "Horizon (overrides the config)");
    cmp->add_option("--out", ca.out, "Output report JSON (default: stdout)");
    cmp->add_option("--plot", ca.plot, "Output CSV of partial averages: series,T,partial_average");

    CheckArgs ka;
    auto* chk = app.add_subcommand("check", "Run the check battery; exit code 0 iff every check passes");
    chk->add_option("--config", ka.config, "Check config JSON");
    chk->add_option("--seed", ka.seed, "RNG seed (overrides the config)");
    chk->add_option("--out", ka.out, "Output report JSON (default: stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e, out, err);
        err << error_json("UsageError", e.what());
        return 2;
    }

    try {
        if (*sim) return do_simulate(sa, out);
        if (*bt) return do_backtest(ba, out);
        if (*lo) return do_logopt(la, out);
        if (*cmp) return do_compare(ca, out);
        if (*chk) return do_check(ka, out);
    } catch (const Error& e) {
        err << error_json(error_code_name(e.code()), e.what());
        return 2;
    } catch (const std::exception& e) {
        err << error_json("InternalError", e.what());
        return 2;
    }
    return 2;
}

}  // namespace growthlab::cli
