#pragma once

#include "growthlab/rng.hpp"
#include "growthlab/simplex.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace growthlab {

struct KernelAtom {
    Eigen::VectorXd y;
    double prob = 0.0;
};

// Transition kernel rho(x, .). Samplers write one draw into y.
class MarkovKernel {
public:
    using Sampler = std::function<void(const double* x, RngStream& rng, double* y)>;
    using Batch = std::function<void(const double* x, std::size_t n, RngStream& rng, Eigen::MatrixXd& out)>;
    using Atoms = std::function<std::vector<KernelAtom>(const SimplexPoint& x)>;

    MarkovKernel() = default;
    MarkovKernel(int dim, Sampler sampler, std::string descriptor);

    int dim() const { return dim_; }
    const std::string& descriptor() const { return descriptor_; }

    SimplexPoint draw(const SimplexPoint& x, RngStream& rng) const;
    void draw_raw(const double* x, RngStream& rng, double* y) const { sampler_(x, rng, y); }
    // n draws from the same state, d x n.
    Eigen::MatrixXd batch(const SimplexPoint& x, std::size_t n, RngStream& rng) const;

    // Exact finite law, when the kernel has one.
    bool has_atoms() const { return static_cast<bool>(atoms_); }
    std::vector<KernelAtom> atoms(const SimplexPoint& x) const { return atoms_(x); }

    MarkovKernel& with_batch(Batch b);
    MarkovKernel& with_atoms(Atoms a);

private:
    int dim_ = 0;
    Sampler sampler_;
    Batch batch_;
    Atoms atoms_;
    std::string descriptor_;
};

// Time-homogeneous diffusion d mu = c(mu) lambda(mu) dt + sqrt(c(mu)) dW.
class DiffusionSpec {
public:
    using MatrixFn = std::function<void(const double* x, double* c)>;  // c is d x d, column-major
    using VectorFn = std::function<void(const double* x, double* lambda)>;

    DiffusionSpec() = default;
    DiffusionSpec(int dim, MatrixFn c, VectorFn lambda, std::string descriptor);

    int dim() const { return dim_; }
    const std::string& descriptor() const { return descriptor_; }
    void c(const double* x, double* out) const { c_(x, out); }
    void lambda(const double* x, double* out) const { lambda_(x, out); }
    Eigen::MatrixXd c(const Eigen::VectorXd& x) const;
    Eigen::VectorXd lambda(const Eigen::VectorXd& x) const;

private:
    int dim_ = 0;
    MatrixFn c_;
    VectorFn lambda_;
    std::string descriptor_;
};

struct WrightFisherSpec {
    int dim = 2;
    double kappa = 1.5;
    Eigen::VectorXd theta;
    double sigma2 = 1.0;

    std::string descriptor() const;  // model JSON
};

WrightFisherSpec wright_fisher_benchmark();
DiffusionSpec make_diffusion(const WrightFisherSpec& wf);
DiffusionSpec zero_dynamics(int dim);

// Model JSON <-> spec.
WrightFisherSpec parse_model_json(const std::string& json);

enum class BoundaryRule { Clip, Reflect };

struct SimulationOptions {
    BoundaryRule boundary = BoundaryRule::Reflect;
    double floor = 1e-10;
};

// One Euler-Maruyama step from x into y; returns true when a boundary
// correction was applied.
bool euler_step(const DiffusionSpec& spec, const double* x, double dt, const double* xi, double* y,
                const SimulationOptions& opts);

MarketPath simulate_discrete(const MarkovKernel& kernel, std::size_t T, const SimplexPoint& mu0, std::uint64_t seed);
MarketPath simulate_diffusion(const DiffusionSpec& spec, double T, double dt, const SimplexPoint& mu0,
                              std::uint64_t seed, const SimulationOptions& opts = {});

MarkovKernel identity_kernel(int dim);
MarkovKernel deterministic_kernel(int dim, std::function<Eigen::VectorXd(const Eigen::VectorXd&)> step,
                                  std::string descriptor);
MarkovKernel finite_kernel(int dim, MarkovKernel::Atoms law, std::string descriptor);
// Batches use antithetic noise pairs.
MarkovKernel euler_kernel(const DiffusionSpec& spec, double dt, const SimulationOptions& opts = {});

struct InvariantSample {
    Eigen::MatrixXd samples;  // d x n
    std::size_t burn_in = 0;
    std::size_t thinning = 1;
    std::uint64_t seed = 0;
    std::size_t boundary_events = 0;

    std::size_t size() const { return static_cast<std::size_t>(samples.cols()); }
};

InvariantSample invariant_sample(const MarkovKernel& kernel, const SimplexPoint& mu0, std::size_t n,
                                 std::size_t burn_in, std::size_t thinning, std::uint64_t seed);
InvariantSample invariant_sample(const DiffusionSpec& spec, double dt, const SimplexPoint& mu0, std::size_t n,
                                 std::size_t burn_in, std::size_t thinning, std::uint64_t seed,
                                 const SimulationOptions& opts = {});

}  // namespace growthlab
