#include "growthlab/report.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>

namespace growthlab {

using nlohmann::ordered_json;

CheckRecord make_check(std::string name, double statistic, double tolerance)
{
    CheckRecord r;
    r.name = std::move(name);
    r.statistic = statistic;
    r.tolerance = tolerance;
    r.pass = std::isfinite(statistic) && statistic <= tolerance;
    return r;
}

namespace {

ordered_json number(double v)
{
    if (!std::isfinite(v)) return nullptr;
    return v;
}

ordered_json number(const std::optional<double>& v) { return v ? number(*v) : ordered_json(nullptr); }

ordered_json checks_json(const std::vector<CheckRecord>& checks)
{
    ordered_json a = ordered_json::array();
    for (const auto& c : checks)
        a.push_back({{"name", c.name}, {"statistic", number(c.statistic)}, {"tolerance", number(c.tolerance)},
                     {"pass", c.pass}});
    return a;
}

ordered_json rate_json(const RateEntry& r)
{
    ordered_json j;
    j["value"] = number(r.value);
    j["se"] = number(r.se);
    j["ladder"] = ordered_json::array();
    for (const auto& p : r.ladder) j["ladder"].push_back({{p.key, p.param}, {"value", number(p.value)}});
    return j;
}

bool every(const std::vector<CheckRecord>& checks)
{
    for (const auto& c : checks)
        if (!c.pass) return false;
    return true;
}

std::string fmt(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

bool GrowthRateReport::all_pass() const { return every(checks); }
bool CheckReport::all_pass() const { return every(checks); }
bool BacktestReport::all_pass() const { return every(checks); }

std::string BacktestReport::to_json() const
{
    ordered_json j;
    j["version"] = version;
    j["seed"] = seed;
    j["source"] = source;
    j["T"] = T;
    j["rates"] = ordered_json::object();
    for (const auto& c : classes) {
        j["rates"][c.name] = {{"retro", {{"value", number(c.retro)}, {"se", number(c.retro_se)}}},
                              {"universal", {{"value", number(c.universal)}, {"se", number(c.universal_se)}, {"atoms", c.atoms}}},
                              {"gap", number(c.retro - c.universal)}};
    }
    j["checks"] = checks_json(checks);
    j["config"] = ordered_json::parse(config);
    return j.dump(2) + "\n";
}

std::string GrowthRateReport::to_json() const
{
    ordered_json j;
    j["version"] = version;
    j["seed"] = seed;
    j["model"] = ordered_json::parse(model);
    j["T"] = T;
    j["rates"]["retro"] = rate_json(retro);
    j["rates"]["universal"] = rate_json(universal);
    j["rates"]["logopt"] = rate_json(logopt);
    j["rates"]["quadrature"] = {{"L", number(quad_L)}, {"L_num", number(quad_L_num)}};
    j["gaps"] = ordered_json::object();
    for (const auto& [k, v] : gaps) j["gaps"][k] = number(v);
    j["checks"] = checks_json(checks);
    j["warnings"] = warnings;
    j["portfolios"] = ordered_json::array();
    for (const auto& p : portfolios) {
        ordered_json r;
        r["name"] = p.name;
        r["time_average"] = number(p.time_average);
        r["se"] = number(p.se);
        r["quadrature"] = number(p.quadrature);
        r["quadrature_se"] = number(p.quadrature_se);
        r["Q"] = number(p.Q);
        r["Q_se"] = number(p.Q_se);
        r["partials"] = ordered_json::array();
        for (const auto& [t, v] : p.partials) r["partials"].push_back({t, number(v)});
        j["portfolios"].push_back(std::move(r));
    }
    j["config"] = ordered_json::parse(config);
    return j.dump(2) + "\n";
}

std::string GrowthRateReport::plot_csv() const
{
    std::string out = "series,T,partial_average\n";
    for (const auto& p : portfolios)
        for (const auto& [t, v] : p.partials) out += p.name + "," + fmt(t) + "," + fmt(v) + "\n";
    return out;
}

std::string CheckReport::to_json() const
{
    ordered_json j;
    j["version"] = version;
    j["seed"] = seed;
    j["model"] = ordered_json::parse(model);
    j["checks"] = checks_json(checks);
    j["all_pass"] = all_pass();
    j["config"] = ordered_json::parse(config);
    return j.dump(2) + "\n";
}

}  // namespace growthlab
