#include "cli.hpp"

#include "growthlab/error.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unistd.h>

namespace growthlab::cli {

namespace {

std::vector<std::string> split(const std::string& line)
{
    std::vector<std::string> cells;
    std::size_t start = 0;
    for (;;) {
        std::size_t comma = line.find(',', start);
        std::string cell = line.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
        std::size_t b = cell.find_first_not_of(" \t\r");
        std::size_t e = cell.find_last_not_of(" \t\r");
        cells.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return cells;
}

bool parse_number(const std::string& s, double& v)
{
    if (s.empty()) return false;
    const char* first = s.data();
    if (*first == '+') ++first;
    auto [p, ec] = std::from_chars(first, s.data() + s.size(), v);
    return ec == std::errc() && p == s.data() + s.size();
}

std::string where(std::size_t row, std::size_t col)
{
    return "row " + std::to_string(row) + ", column " + std::to_string(col);
}

}  // namespace

std::pair<PriceSeries, MarketPath> ingest_prices(std::istream& in)
{
    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorCode::ParseError, "row 1: missing header");
    auto header = split(line);
    if (header.size() < 3) throw Error(ErrorCode::TooFewAssets, "need at least 2 asset columns");
    PriceSeries ps;
    ps.names.assign(header.begin() + 1, header.end());
    const std::size_t d = ps.names.size();

    std::vector<double> flat;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        auto cells = split(line);
        if (cells.size() != d + 1)
            throw Error(ErrorCode::ParseError, "row " + std::to_string(row) + ": expected " + std::to_string(d + 1) +
                                                   " columns, found " + std::to_string(cells.size()));
        ps.dates.push_back(cells[0]);
        for (std::size_t i = 1; i <= d; ++i) {
            double v;
            if (!parse_number(cells[i], v)) throw Error(ErrorCode::ParseError, where(row, i + 1) + ": not a number");
            if (!(v > 0.0) || !std::isfinite(v))
                throw Error(ErrorCode::NonPositivePrice, where(row, i + 1) + ": price must be positive");
            flat.push_back(v);
        }
    }
    const std::size_t n = ps.dates.size();
    if (n < 2) throw Error(ErrorCode::ParseError, "need at least 2 price rows");
    ps.prices = Eigen::Map<Eigen::MatrixXd>(flat.data(), static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(n));

    std::vector<double> times(n);
    bool numeric = true;
    for (std::size_t j = 0; j < n && numeric; ++j) {
        numeric = parse_number(ps.dates[j], times[j]) && (j == 0 || times[j] > times[j - 1]);
    }
    if (!numeric)
        for (std::size_t j = 0; j < n; ++j) times[j] = static_cast<double>(j);

    Eigen::MatrixXd w = ps.prices;
    for (Eigen::Index j = 0; j < w.cols(); ++j) w.col(j) /= w.col(j).sum();
    MarketPath path(PathKind::Discrete, std::move(times), std::move(w));
    return {std::move(ps), std::move(path)};
}

std::pair<PriceSeries, MarketPath> ingest_prices(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path + "'");
    return ingest_prices(in);
}

void write_atomic(const std::string& path, const std::string& content)
{
    std::string tmp = path + ".tmp." + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::IoError, "cannot write '" + tmp + "'");
        out << content;
        out.flush();
        if (!out) throw Error(ErrorCode::IoError, "write to '" + tmp + "' failed");
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
        std::remove(tmp.c_str());
        throw Error(ErrorCode::IoError, "cannot rename onto '" + path + "'");
    }
}

}  // namespace growthlab::cli
