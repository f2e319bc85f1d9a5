#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace growthlab {

// pass is always statistic <= tolerance (false for non-finite statistics).
struct CheckRecord {
    std::string name;
    double statistic = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

CheckRecord make_check(std::string name, double statistic, double tolerance);

using Series = std::vector<std::pair<double, double>>;  // (T, partial average)

struct PortfolioRecord {
    std::string name;
    double time_average = 0.0;
    double se = 0.0;
    Series partials;
    std::optional<double> quadrature;
    std::optional<double> quadrature_se;
    std::optional<double> Q;
    std::optional<double> Q_se;
};

struct LadderPoint {
    std::string key;  // "M", "atoms" or "T"
    double param = 0.0;
    double value = 0.0;
};

struct RateEntry {
    double value = 0.0;
    double se = 0.0;
    std::vector<LadderPoint> ladder;
};

struct GrowthRateReport {
    int version = 1;
    std::uint64_t seed = 0;
    std::string model = "{}";   // JSON object
    std::string config = "{}";  // JSON object
    double T = 0.0;
    RateEntry retro, universal, logopt;
    std::optional<double> quad_L, quad_L_num;
    std::vector<std::pair<std::string, double>> gaps;
    std::vector<CheckRecord> checks;
    std::vector<std::string> warnings;  // informational, never gate all_pass
    std::vector<PortfolioRecord> portfolios;

    bool all_pass() const;
    std::string to_json() const;
    // series,T,partial_average
    std::string plot_csv() const;
};

struct ClassRates {
    std::string name;  // constant, lipschitz or fg
    double retro = 0.0;
    double retro_se = 0.0;
    double universal = 0.0;
    double universal_se = 0.0;
    std::size_t atoms = 0;
};

struct BacktestReport {
    int version = 1;
    std::uint64_t seed = 0;
    std::string source;
    std::string config = "{}";
    double T = 0.0;
    std::vector<ClassRates> classes;
    std::vector<CheckRecord> checks;

    bool all_pass() const;
    std::string to_json() const;
};

struct CheckReport {
    int version = 1;
    std::uint64_t seed = 0;
    std::string model = "{}";
    std::string config = "{}";
    std::vector<CheckRecord> checks;

    bool all_pass() const;
    std::string to_json() const;
};

}  // namespace growthlab
