#include "growthlab/portfolios.hpp"

#include "growthlab/error.hpp"
#include "growthlab/parallel.hpp"
#include "growthlab/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace growthlab {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

void check_columns(const Eigen::MatrixXd& values, double margin, const char* what)
{
    const auto d = values.rows();
    for (Eigen::Index j = 0; j < values.cols(); ++j) {
        double s = 0.0;
        for (Eigen::Index i = 0; i < d; ++i) {
            double v = values(i, j);
            if (!std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, std::string(what) + ": non-finite value");
            if (v < margin / static_cast<double>(d) - 1e-12)
                throw Error(ErrorCode::InvalidArgument, std::string(what) + ": node value below margin");
            s += v;
        }
        if (std::abs(s - 1.0) > kSumTolerance)
            throw Error(ErrorCode::InvalidArgument, std::string(what) + ": node value does not sum to one");
    }
}

void interpolate(const SimplexGrid& grid, const Eigen::MatrixXd& values, const double* x, double* out)
{
    const int d = grid.dim();
    int idx[33];
    double w[33];
    grid.locate(x, idx, w);
    for (int i = 0; i < d; ++i) out[i] = 0.0;
    for (int k = 0; k < d; ++k) {
        if (w[k] == 0.0) continue;
        const double* v = values.col(idx[k]).data();
        for (int i = 0; i < d; ++i) out[i] += w[k] * v[i];
    }
}

double inv_or_zero(double M) { return std::isfinite(M) ? 1.0 / M : 0.0; }

}  // namespace

LipschitzGridMap::LipschitzGridMap(std::shared_ptr<const SimplexGrid> grid, Eigen::MatrixXd values, double M)
    : grid_(std::move(grid)), values_(std::move(values)), M_(M)
{
    if (!grid_) throw Error(ErrorCode::InvalidArgument, "Lipschitz map needs a grid");
    if (values_.rows() != grid_->dim() || static_cast<std::size_t>(values_.cols()) != grid_->size())
        throw Error(ErrorCode::DimensionMismatch, "node values do not match the grid");
    if (!(M >= 1.0)) throw Error(ErrorCode::InvalidArgument, "Lipschitz class needs M >= 1");
    check_columns(values_, inv_or_zero(M), "Lipschitz map");
    certified_ = lipschitz_constant(*grid_, values_);
}

void LipschitzGridMap::weights(const double* x, double* out) const { interpolate(*grid_, values_, x, out); }

double lipschitz_constant(const SimplexGrid& grid, const Eigen::MatrixXd& values)
{
    const int d = grid.dim();
    const int m = d - 1;
    const double half_n = 0.5 * grid.resolution();
    double best = 0.0;
    Eigen::MatrixXd D(d, m);
    Eigen::VectorXd S(d);
    for (const auto& cell : grid.cells()) {
        for (int s = 0; s < m; ++s)
            D.col(cell.order[static_cast<std::size_t>(s)]) =
                values.col(cell.vertices[static_cast<std::size_t>(s + 1)]) - values.col(cell.vertices[static_cast<std::size_t>(s)]);
        for (int a = 0; a < m; ++a) {
            S.setZero();
            for (int b = a; b < m; ++b) {
                S += D.col(b);
                best = std::max(best, half_n * S.lpNorm<1>());
            }
        }
    }
    return best;
}

double certify_lipschitz(LipschitzGridMap& map)
{
    map.certified_ = lipschitz_constant(*map.grid_, map.values_);
    return map.certified_;
}

TableMap::TableMap(std::shared_ptr<const SimplexGrid> grid, double offset, Eigen::MatrixXd values, double margin)
    : grid_(std::move(grid)), offset_(offset), values_(std::move(values)), margin_(margin)
{
    if (!grid_) throw Error(ErrorCode::InvalidArgument, "table map needs a grid");
    if (!(offset > 0.0 && offset < 1.0)) throw Error(ErrorCode::InvalidArgument, "table offset must lie in (0, 1)");
    if (values_.rows() != grid_->dim() || static_cast<std::size_t>(values_.cols()) != grid_->size())
        throw Error(ErrorCode::DimensionMismatch, "table values do not match the grid");
    check_columns(values_, margin_, "table map");
}

Eigen::MatrixXd TableMap::states() const
{
    const int d = grid_->dim();
    return ((1.0 - offset_) * grid_->nodes()).array() + offset_ / d;
}

void TableMap::weights(const double* x, double* out) const
{
    const int d = grid_->dim();
    double z[33];
    double s = 0.0;
    for (int i = 0; i < d; ++i) {
        z[i] = std::max((x[i] - offset_ / d) / (1.0 - offset_), 0.0);
        s += z[i];
    }
    for (int i = 0; i < d; ++i) z[i] /= s;
    interpolate(*grid_, values_, z, out);
}

void fg_weights_raw(const GeneratorFunction& G, const double* x, double* out)
{
    const int d = G.dim();
    double g[64];
    std::vector<double> big;
    double* gp = g;
    if (d > 64) {
        big.resize(static_cast<std::size_t>(d));
        gp = big.data();
    }
    const double v = G.value(x);
    G.gradient(x, gp);
    double s = 0.0;
    for (int i = 0; i < d; ++i) {
        gp[i] /= v;
        s += x[i] * gp[i];
    }
    for (int i = 0; i < d; ++i) out[i] = x[i] * (gp[i] + 1.0 - s);
}

PortfolioWeights fg_weights(const GeneratorFunction& G, const SimplexPoint& x)
{
    if (G.dim() != x.dim()) throw Error(ErrorCode::DimensionMismatch, "generator and state dimensions differ");
    Eigen::VectorXd w(x.dim());
    fg_weights_raw(G, x.data(), w.data());
    double lo = w.minCoeff();
    if (lo < -1e-10) throw Error(ErrorCode::NegativeWeight, "functionally generated weight below -1e-10");
    return PortfolioWeights::make(std::move(w), lo >= 0.0, 0.0);
}

PortfolioMapSpec::PortfolioMapSpec(Variant v) : v_(std::move(v))
{
    std::visit(
        [this](const auto& m) {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, ConstantMap>)
                dim_ = static_cast<int>(m.b.size());
            else if constexpr (std::is_same_v<T, FgMap>)
                dim_ = m.G.dim();
            else
                dim_ = m.grid().dim();
        },
        v_);
    if (dim_ < 2) throw Error(ErrorCode::DimensionTooSmall, "portfolio map dimension must be at least 2");
}

PortfolioMapSpec PortfolioMapSpec::constant(const Eigen::VectorXd& b)
{
    PortfolioWeights::make(b, true, 0.0);
    return PortfolioMapSpec(ConstantMap{b});
}

PortfolioMapSpec PortfolioMapSpec::lipschitz(LipschitzGridMap m) { return PortfolioMapSpec(std::move(m)); }
PortfolioMapSpec PortfolioMapSpec::fg(GeneratorFunction G) { return PortfolioMapSpec(FgMap{std::move(G)}); }
PortfolioMapSpec PortfolioMapSpec::table(TableMap t) { return PortfolioMapSpec(std::move(t)); }

std::string PortfolioMapSpec::kind() const
{
    switch (v_.index()) {
    case 0: return "constant";
    case 1: return "lipschitz";
    case 2: return "fg";
    default: return "table";
    }
}

void PortfolioMapSpec::weights(const double* x, double* out) const
{
    switch (v_.index()) {
    case 0: {
        const auto& b = std::get<ConstantMap>(v_).b;
        for (int i = 0; i < dim_; ++i) out[i] = b[i];
        return;
    }
    case 1: std::get<LipschitzGridMap>(v_).weights(x, out); return;
    case 2: fg_weights_raw(std::get<FgMap>(v_).G, x, out); return;
    default: std::get<TableMap>(v_).weights(x, out); return;
    }
}

PortfolioWeights PortfolioMapSpec::evaluate(const SimplexPoint& x) const
{
    if (x.dim() != dim_) throw Error(ErrorCode::DimensionMismatch, "map and state dimensions differ");
    if (v_.index() == 2) return fg_weights(std::get<FgMap>(v_).G, x);
    Eigen::VectorXd w(dim_);
    weights(x.data(), w.data());
    double margin = 0.0;
    if (v_.index() == 1) margin = inv_or_zero(std::get<LipschitzGridMap>(v_).M());
    if (v_.index() == 3) margin = std::get<TableMap>(v_).margin();
    // interpolation rounding can dip below the exact floor by an ulp
    for (int i = 0; i < dim_; ++i) w[i] = std::max(w[i], margin / dim_);
    return PortfolioWeights::make(std::move(w), true, margin);
}

namespace {

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double number_or_inf(const json& j, const char* key)
{
    if (!j.contains(key) || j.at(key).is_null()) return std::numeric_limits<double>::infinity();
    return j.at(key).get<double>();
}

json matrix_columns(const Eigen::MatrixXd& m)
{
    json out = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j)
        out.push_back(std::vector<double>(m.col(j).data(), m.col(j).data() + m.rows()));
    return out;
}

Eigen::MatrixXd columns_matrix(const json& j, int d)
{
    Eigen::MatrixXd m(d, static_cast<Eigen::Index>(j.size()));
    for (std::size_t c = 0; c < j.size(); ++c) {
        auto v = j[c].get<std::vector<double>>();
        if (static_cast<int>(v.size()) != d) throw Error(ErrorCode::DimensionMismatch, "node value has wrong length");
        for (int i = 0; i < d; ++i) m(i, static_cast<Eigen::Index>(c)) = v[static_cast<std::size_t>(i)];
    }
    return m;
}

ordered_json map_to_json(const PortfolioMapSpec& spec)
{
    ordered_json j;
    const auto& v = spec.variant();
    switch (v.index()) {
    case 0: {
        const auto& b = std::get<ConstantMap>(v).b;
        j["variant"] = "constant";
        j["weights"] = std::vector<double>(b.data(), b.data() + b.size());
        break;
    }
    case 1: {
        const auto& m = std::get<LipschitzGridMap>(v);
        j["variant"] = "lipschitz";
        j["d"] = m.grid().dim();
        j["resolution"] = m.grid().resolution();
        j["M"] = number_or_null(m.M());
        j["values"] = matrix_columns(m.values());
        break;
    }
    case 2: {
        const auto& G = std::get<FgMap>(v).G;
        j["variant"] = "fg";
        j["family"] = family_name(G.family());
        j["d"] = G.dim();
        j["params"] = G.params();
        j["M"] = number_or_null(G.M());
        j["alpha"] = G.alpha();
        break;
    }
    default: {
        const auto& t = std::get<TableMap>(v);
        j["variant"] = "table";
        j["d"] = t.grid().dim();
        j["resolution"] = t.grid().resolution();
        j["offset"] = t.offset();
        j["margin"] = t.margin();
        j["values"] = matrix_columns(t.values());
        break;
    }
    }
    return j;
}

PortfolioMapSpec map_from_json(const json& j)
{
    const auto variant = j.at("variant").get<std::string>();
    if (variant == "constant") {
        auto w = j.at("weights").get<std::vector<double>>();
        return PortfolioMapSpec::constant(Eigen::Map<Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size())));
    }
    if (variant == "lipschitz") {
        int d = j.at("d").get<int>();
        auto grid = shared_grid(d, j.at("resolution").get<int>());
        return PortfolioMapSpec::lipschitz(
            LipschitzGridMap(grid, columns_matrix(j.at("values"), d), number_or_inf(j, "M")));
    }
    if (variant == "fg") {
        auto family = parse_family(j.at("family").get<std::string>());
        auto params = j.at("params").get<std::vector<double>>();
        int d = 0;
        if (j.contains("d")) {
            d = j.at("d").get<int>();
        } else if (family == GeneratorFamily::PowerProduct) {
            d = static_cast<int>(params.size());
        } else if (family == GeneratorFamily::Quadratic) {
            d = static_cast<int>(params.size()) - 1;
        } else {
            throw Error(ErrorCode::ParseError, "fg map JSON needs \"d\" for this family");
        }
        double alpha = j.contains("alpha") ? j.at("alpha").get<double>() : 0.0;
        return PortfolioMapSpec::fg(GeneratorFunction(family, d, params, number_or_inf(j, "M"), alpha));
    }
    if (variant == "table") {
        int d = j.at("d").get<int>();
        auto grid = shared_grid(d, j.at("resolution").get<int>());
        return PortfolioMapSpec::table(TableMap(grid, j.at("offset").get<double>(), columns_matrix(j.at("values"), d),
                                                j.at("margin").get<double>()));
    }
    throw Error(ErrorCode::ParseError, "unknown map variant '" + variant + "'");
}

}  // namespace

std::string PortfolioMapSpec::to_json() const { return map_to_json(*this).dump(); }

PortfolioMapSpec PortfolioMapSpec::from_json(const std::string& text)
{
    try {
        return map_from_json(json::parse(text));
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ParseError, std::string("map JSON: ") + e.what());
    }
}

PortfolioMapSpec market_map(int dim) { return PortfolioMapSpec::fg(constant_generator(dim, 1.0)); }

MixtureMeasure make_mixture(std::vector<PortfolioMapSpec> maps, std::vector<double> weights, std::string provenance)
{
    if (maps.empty()) throw Error(ErrorCode::InvalidArgument, "mixture needs at least one atom");
    if (maps.size() != weights.size()) throw Error(ErrorCode::DimensionMismatch, "maps and weights differ in length");
    double total = 0.0;
    for (double w : weights) {
        if (!(w > 0.0)) throw Error(ErrorCode::InvalidArgument, "mixture weights must be positive");
        total += w;
    }
    MixtureMeasure m;
    for (std::size_t k = 0; k < maps.size(); ++k) {
        if (maps[k].dim() != maps.front().dim()) throw Error(ErrorCode::DimensionMismatch, "atoms differ in dimension");
        m.atoms.push_back({std::move(maps[k]), weights[k] / total});
    }
    m.provenance = std::move(provenance);
    return m;
}

MixtureMeasure MixtureMeasure::prefix(std::size_t n) const
{
    n = std::min(n, atoms.size());
    std::vector<PortfolioMapSpec> maps;
    std::vector<double> w;
    for (std::size_t k = 0; k < n; ++k) {
        maps.push_back(atoms[k].map);
        w.push_back(atoms[k].weight);
    }
    json prov = json::parse(provenance.empty() ? "{}" : provenance);
    prov["prefix"] = n;
    return make_mixture(std::move(maps), std::move(w), prov.dump());
}

std::string MixtureMeasure::to_json() const
{
    ordered_json j;
    j["provenance"] = json::parse(provenance.empty() ? "{}" : provenance);
    j["atoms"] = json::array();
    for (const auto& a : atoms) j["atoms"].push_back(ordered_json{{"weight", a.weight}, {"map", map_to_json(a.map)}});
    return j.dump();
}

MixtureMeasure MixtureMeasure::from_json(const std::string& text)
{
    try {
        json j = json::parse(text);
        MixtureMeasure m;
        for (const auto& a : j.at("atoms")) m.atoms.push_back({map_from_json(a.at("map")), a.at("weight").get<double>()});
        m.provenance = j.contains("provenance") ? j.at("provenance").dump() : "{}";
        if (m.atoms.empty()) throw Error(ErrorCode::ParseError, "mixture has no atoms");
        return m;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ParseError, std::string("mixture JSON: ") + e.what());
    }
}

Eigen::MatrixXd project_lipschitz_values(const SimplexGrid& grid, const Eigen::MatrixXd& values, double M,
                                         double margin, int sweeps)
{
    const int d = grid.dim();
    const double floor = margin / d;
    Eigen::MatrixXd V = values;
    const auto& edges = grid.edges();
    const auto nodes = static_cast<Eigen::Index>(grid.size());

    if (std::isfinite(M)) {
        Eigen::MatrixXd pn = Eigen::MatrixXd::Zero(d, nodes);
        std::vector<Eigen::MatrixXd> pe(edges.size(), Eigen::MatrixXd::Zero(d, 2));
        Eigen::VectorXd a(d), b(d);
        for (int s = 0; s < sweeps; ++s) {
            for (Eigen::Index k = 0; k < nodes; ++k) {
                Eigen::VectorXd y = V.col(k) + pn.col(k);
                Eigen::VectorXd p = project_to_simplex(y, floor);
                pn.col(k) = y - p;
                V.col(k) = p;
            }
            for (std::size_t e = 0; e < edges.size(); ++e) {
                const auto& ed = edges[e];
                a = V.col(ed.a) + pe[e].col(0);
                b = V.col(ed.b) + pe[e].col(1);
                Eigen::VectorXd mid = 0.5 * (a + b);
                Eigen::VectorXd delta = a - b;
                double r = M * ed.dist;
                double n1 = delta.lpNorm<1>();
                if (n1 > r) delta *= r / n1;
                Eigen::VectorXd na = mid + 0.5 * delta, nb = mid - 0.5 * delta;
                pe[e].col(0) = a - na;
                pe[e].col(1) = b - nb;
                V.col(ed.a) = na;
                V.col(ed.b) = nb;
            }
        }
    }
    for (Eigen::Index k = 0; k < nodes; ++k) V.col(k) = project_to_simplex(V.col(k), floor);
    if (std::isfinite(M)) {
        double L = lipschitz_constant(grid, V);
        if (L > M) {
            Eigen::VectorXd mean = V.rowwise().mean();
            double s = (M / L) * (1.0 - 1e-12);
            for (Eigen::Index k = 0; k < nodes; ++k) V.col(k) = mean + s * (V.col(k) - mean);
        }
    }
    return V;
}

namespace {

Eigen::VectorXd flat_dirichlet(int d, RngStream& rng)
{
    Eigen::VectorXd g(d);
    for (int i = 0; i < d; ++i) g[i] = -std::log(rng.uniform());
    return g / g.sum();
}

}  // namespace

MixtureMeasure sample_mixture(const ClassSpec& cls, int dim, std::size_t n_atoms, std::uint64_t seed)
{
    if (n_atoms < 1) throw Error(ErrorCode::InvalidArgument, "n_atoms must be at least 1");
    if (dim < 2) throw Error(ErrorCode::DimensionTooSmall, "dimension must be at least 2");
    std::vector<PortfolioMapSpec> maps(n_atoms);
    std::vector<std::size_t> draws(n_atoms, 0);
    ordered_json prov;
    prov["seed"] = seed;
    prov["n_atoms"] = n_atoms;

    switch (cls.kind) {
    case MapClass::Constant:
        prov["class"] = "constant";
        parallel_for(n_atoms, [&](std::size_t k) {
            RngStream rng(seed, k);
            maps[k] = PortfolioMapSpec::constant(flat_dirichlet(dim, rng));
        });
        break;
    case MapClass::Lipschitz: {
        if (!(cls.M >= 1.0)) throw Error(ErrorCode::InvalidArgument, "Lipschitz class needs M >= 1");
        prov["class"] = "lipschitz";
        prov["M"] = cls.M;
        prov["resolution"] = cls.resolution;
        auto grid = shared_grid(dim, cls.resolution);
        const double margin = 1.0 / cls.M;
        parallel_for(n_atoms, [&](std::size_t k) {
            RngStream rng(seed, k);
            Eigen::MatrixXd V(dim, static_cast<Eigen::Index>(grid->size()));
            for (Eigen::Index j = 0; j < V.cols(); ++j)
                V.col(j) = margin / dim + (1.0 - margin) * flat_dirichlet(dim, rng).array();
            LipschitzGridMap m(grid, project_lipschitz_values(*grid, V, cls.M, margin, 200), cls.M);
            if (m.certified() > cls.M)
                throw Error(ErrorCode::CertificationFailed, "sampled Lipschitz atom failed certification");
            maps[k] = PortfolioMapSpec::lipschitz(std::move(m));
        });
        break;
    }
    case MapClass::Fg: {
        if (cls.families.empty()) throw Error(ErrorCode::InvalidArgument, "fg class needs at least one family");
        prov["class"] = "fg";
        prov["M"] = cls.M;
        prov["alpha"] = cls.alpha;
        json fams = json::array();
        for (auto f : cls.families) fams.push_back(family_name(f));
        prov["families"] = fams;
        const std::size_t budget = 100;
        parallel_for(n_atoms, [&](std::size_t k) {
            RngStream rng(seed, k);
            for (std::size_t tries = 0; tries < 100 * budget; ++tries) {
                ++draws[k];
                auto fam = cls.families[static_cast<std::size_t>(rng.next() % cls.families.size())];
                ParamBox box = generator_box(fam, dim, cls.M);
                std::vector<double> p(box.lo.size());
                for (std::size_t i = 0; i < p.size(); ++i) p[i] = box.lo[i] + (box.hi[i] - box.lo[i]) * rng.uniform();
                if (auto G = try_certified_generator(fam, dim, p, cls.M, cls.alpha, cls.grid_n)) {
                    maps[k] = PortfolioMapSpec::fg(std::move(*G));
                    return;
                }
            }
        });
        std::size_t total = 0;
        for (std::size_t k = 0; k < n_atoms; ++k) {
            total += draws[k];
            if (maps[k].dim() == 0) total = std::numeric_limits<std::size_t>::max();
            if (total == std::numeric_limits<std::size_t>::max()) break;
        }
        if (total > budget * n_atoms)
            throw Error(ErrorCode::RejectionBudgetExceeded, "fg rejection rate exceeds 99%");
        prov["draws"] = total;
        break;
    }
    }
    return make_mixture(std::move(maps), std::vector<double>(n_atoms, 1.0), prov.dump());
}

MixtureMeasure sample_mixture_multi(const ClassSpec& cls, int dim, int M_max, std::size_t n_atoms, std::uint64_t seed)
{
    if (M_max < 1) throw Error(ErrorCode::InvalidArgument, "M_max must be at least 1");
    std::vector<double> share(static_cast<std::size_t>(M_max));
    double z = 0.0;
    for (int M = 1; M <= M_max; ++M) z += std::ldexp(1.0, -M);
    std::vector<std::size_t> count(static_cast<std::size_t>(M_max));
    std::size_t assigned = 0;
    std::vector<std::pair<double, int>> rem;
    for (int M = 1; M <= M_max; ++M) {
        double exact = static_cast<double>(n_atoms) * std::ldexp(1.0, -M) / z;
        count[static_cast<std::size_t>(M - 1)] = static_cast<std::size_t>(std::floor(exact));
        assigned += count[static_cast<std::size_t>(M - 1)];
        rem.push_back({exact - std::floor(exact), M});
    }
    std::stable_sort(rem.begin(), rem.end(), [](auto a, auto b) { return a.first > b.first; });
    for (std::size_t r = 0; assigned < n_atoms; ++r, ++assigned) ++count[static_cast<std::size_t>(rem[r].second - 1)];

    std::vector<PortfolioMapSpec> maps;
    json per_m = json::array();
    for (int M = 1; M <= M_max; ++M) {
        std::size_t c = count[static_cast<std::size_t>(M - 1)];
        per_m.push_back({{"M", M}, {"atoms", c}});
        if (c == 0) continue;
        ClassSpec sub = cls;
        sub.M = M;
        auto part = sample_mixture(sub, dim, c, derive_seed(seed, static_cast<std::uint64_t>(M)));
        for (auto& a : part.atoms) maps.push_back(std::move(a.map));
    }
    ordered_json prov;
    prov["class"] = cls.kind == MapClass::Constant ? "constant" : cls.kind == MapClass::Lipschitz ? "lipschitz" : "fg";
    prov["multi_M"] = M_max;
    prov["seed"] = seed;
    prov["n_atoms"] = n_atoms;
    prov["per_M"] = per_m;
    std::vector<double> w(maps.size(), 1.0);
    return make_mixture(std::move(maps), std::move(w), prov.dump());
}

}  // namespace growthlab
