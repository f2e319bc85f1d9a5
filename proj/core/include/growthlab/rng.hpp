#pragma once

#include <cstdint>
#include <random>

namespace growthlab {

// One independent random stream per (seed, stream id). Work items draw from
// the stream named by their index, never by the executing thread.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t stream);

    double uniform();  // open interval (0, 1)
    double normal();
    double gamma(double shape);
    std::uint64_t next() { return engine_(); }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

// Stable derivation of sub-seeds, e.g. one per experiment leg.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag);

}  // namespace growthlab
