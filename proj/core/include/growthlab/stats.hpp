#pragma once

#include <cstddef>
#include <vector>

namespace growthlab {

struct BatchMeans {
    double mean = 0.0;
    double se = 0.0;       // with `batches` batches
    double se_half = 0.0;  // with batches of half the size
    std::size_t batches = 0;
};

// Standard error of the mean of a (possibly autocorrelated) series.
BatchMeans batch_means(const std::vector<double>& x, std::size_t batches = 20);

struct Estimate {
    double value = 0.0;
    double se = 0.0;
};

}  // namespace growthlab
