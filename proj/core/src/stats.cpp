#include "growthlab/stats.hpp"

#include "growthlab/error.hpp"

#include <cmath>
#include <numeric>

namespace growthlab {

namespace {

double batch_se(const std::vector<double>& x, std::size_t batches, double mean)
{
    const std::size_t len = x.size() / batches;
    if (len == 0 || batches < 2) return 0.0;
    double ss = 0.0;
    for (std::size_t b = 0; b < batches; ++b) {
        double s = 0.0;
        for (std::size_t i = b * len; i < (b + 1) * len; ++i) s += x[i];
        double m = s / static_cast<double>(len) - mean;
        ss += m * m;
    }
    return std::sqrt(ss / static_cast<double>(batches - 1) / static_cast<double>(batches));
}

}  // namespace

BatchMeans batch_means(const std::vector<double>& x, std::size_t batches)
{
    if (x.empty()) throw Error(ErrorCode::InvalidArgument, "batch means of an empty series");
    if (batches < 2) throw Error(ErrorCode::InvalidArgument, "batch means needs at least 2 batches");
    BatchMeans out;
    out.mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
    std::size_t b = std::min(batches, x.size());
    out.batches = b;
    // batch averages over the leading b * len entries keep batches equal-sized
    out.se = batch_se(x, b, out.mean);
    out.se_half = batch_se(x, std::min(2 * b, x.size()), out.mean);
    return out;
}

}  // namespace growthlab
