#pragma once

#include "growthlab/simplex.hpp"

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace growthlab::cli {

struct PriceSeries {
    std::vector<std::string> dates;
    std::vector<std::string> names;
    Eigen::MatrixXd prices;  // assets x rows
};

// CSV with header date,<name1>,...,<named>. Market weights are prices
// divided by the row total. A first column that parses as increasing
// numbers becomes the path times, otherwise rows are indexed 0, 1, ...
std::pair<PriceSeries, MarketPath> ingest_prices(std::istream& in);
std::pair<PriceSeries, MarketPath> ingest_prices(const std::string& path);

// Writes to a temporary file next to `path`, then renames it over `path`.
void write_atomic(const std::string& path, const std::string& content);

// Entry point; returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace growthlab::cli
