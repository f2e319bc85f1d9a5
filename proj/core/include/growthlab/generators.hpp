#pragma once

#include <Eigen/Dense>

#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace growthlab {

enum class GeneratorFamily { PowerProduct, Quadratic, Entropy, AffineMixture };

const char* family_name(GeneratorFamily f);
GeneratorFamily parse_family(const std::string& name);

// Closed-form concave generating functions on the simplex.
//   power_product  : prod_i x_i^{a_i} + s          params a_1..a_d [, s]
//   quadratic      : c0 - 1/2 sum_i a_i x_i^2      params c0, a_1..a_d
//   entropy        : c0 - a sum_i x_i log x_i      params c0, a
//   affine_mixture : c0 + b.x + sum_{i<j} q_ij x_i x_j   params c0, b_1..b_d, q_12, q_13, ..
class GeneratorFunction {
public:
    GeneratorFunction() = default;
    // Rejects G < 1/M on the audit grid. M may be +infinity (floor 0).
    GeneratorFunction(GeneratorFamily family, int dim, std::vector<double> params,
                      double M = std::numeric_limits<double>::infinity(), double alpha = 0.0);

    static std::size_t param_count(GeneratorFamily family, int dim);

    GeneratorFamily family() const { return family_; }
    int dim() const { return dim_; }
    const std::vector<double>& params() const { return params_; }
    double M() const { return M_; }
    double alpha() const { return alpha_; }

    double value(const double* x) const;
    void gradient(const double* x, double* g) const;
    void hessian(const double* x, double* h) const;  // d x d column-major

    double value(const Eigen::VectorXd& x) const { return value(x.data()); }
    Eigen::VectorXd gradient(const Eigen::VectorXd& x) const;
    Eigen::MatrixXd hessian(const Eigen::VectorXd& x) const;

    // Derivatives in the parameters at x: dvalue[p] and the pairing
    // <d Hess / d param_p, Q> for a fixed symmetric matrix Q.
    void param_derivatives(const double* x, const double* Q, double* dvalue, double* dpair) const;

private:
    GeneratorFamily family_ = GeneratorFamily::Quadratic;
    int dim_ = 0;
    std::vector<double> params_;
    double M_ = std::numeric_limits<double>::infinity();
    double alpha_ = 0.0;
};

struct GeneratorCertificate {
    double M_value = 0.0;           // sup of |G|, |DG|, |D^2 G| entries on the grid
    double concavity_margin = 0.0;  // max tangent-space Hessian eigenvalue
    double floor = 0.0;             // min G on the grid
    double holder = 0.0;            // grid estimate of the alpha-Holder seminorm of D^2 G
    bool pass = false;              // concavity_margin <= 1e-8 and floor >= 1/M
    bool within_norm = false;       // M_value <= M as well

    bool in_class() const { return pass && within_norm; }
};

// Interior audit grid: barycentric points (k + 1/2)/(n + d/2), n >= 10.
Eigen::MatrixXd audit_grid(int dim, int grid_n);

GeneratorCertificate certify_generator(const GeneratorFunction& G, int grid_n = 20);

// Admissible parameter box used for sampling and optimization.
struct ParamBox {
    std::vector<double> lo, hi;
};
ParamBox generator_box(GeneratorFamily family, int dim, double M);
// Default (tie-break) parameters of a family.
std::vector<double> generator_default(GeneratorFamily family, int dim, double M);

// Builds a generator when the parameters certify into the class, else nullopt.
std::optional<GeneratorFunction> try_certified_generator(GeneratorFamily family, int dim,
                                                         const std::vector<double>& params, double M,
                                                         double alpha, int grid_n = 20);

GeneratorFunction constant_generator(int dim, double value = 1.0);
GeneratorFunction geometric_mean_generator(int dim);

}  // namespace growthlab
