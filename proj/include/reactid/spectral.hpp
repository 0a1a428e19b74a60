#pragma once

#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "reactid/grid.hpp"

namespace reactid {

struct ConstructionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Boundary condition for one end of the interval: impedance
/// du/dnu + gamma u = 0, or its Dirichlet limit gamma -> infinity.
struct BoundarySpec {
    enum class Kind { Robin, Dirichlet };
    Kind kind = Kind::Robin;
    double gamma = 0.0;  // ignored for Dirichlet

    static BoundarySpec robin(double g) { return {Kind::Robin, g}; }
    static BoundarySpec dirichlet() { return {Kind::Dirichlet, 0.0}; }
};

/// Discrete -L for L u = (a u')' + c u with impedance boundary conditions,
/// built by conservative second-order differences.  Owns the eigenpairs
/// (lambda_j, phi_j), orthonormal in the h-weighted inner product, and the
/// mode truncation used by the solution operators.
class EllipticOperator {
public:
    /// a > 0 and c <= 0 nodewise; definiteness_shift subtracts a constant
    /// from c when a pure-Neumann zero-potential setup would make
    /// lambda_1 = 0.  Throws ConstructionError if lambda_1 <= 0.
    EllipticOperator(Grid1D grid, Field a, Field c, BoundarySpec left, BoundarySpec right,
                     double definiteness_shift = 0.0, int max_modes = 200);

    const Grid1D& grid() const { return grid_; }
    int n_nodes() const { return grid_.n; }
    /// Number of stored eigenpairs (full decomposition).
    int n_modes() const { return n_modes_; }
    /// Mode truncation used by the solution operators; tail modes sit
    /// below the Mittag-Leffler decay floor.
    int mode_cap() const { return mode_cap_; }

    double eigenvalue(int j) const { return eigenvalues_[j]; }
    const std::vector<double>& eigenvalues() const { return eigenvalues_; }
    /// j-th eigenvector phi_j sampled on the grid nodes.
    std::span<const double> eigenvector(int j) const;

    /// Quadrature weight of node i in the discrete L2 inner product
    /// (h at interior nodes, h/2 at the ends).
    double node_weight(int i) const { return weights_[i]; }
    const std::vector<double>& node_weights() const { return weights_; }

    /// Discrete L2 inner product (u, v)_h.
    double inner(std::span<const double> u, std::span<const double> v) const;
    double norm(std::span<const double> u) const;

    /// (v, phi_j)_h for j < n_modes().
    std::vector<double> modal_coefficients(std::span<const double> v) const;

    /// Apply the operator matrix A = -L nodewise (tridiagonal product).
    Field apply_matrix(std::span<const double> v) const;

    /// Solve (I + s A) u = rhs (tridiagonal).  Used by the time steppers.
    Field solve_shifted(double s, std::span<const double> rhs) const;
    /// Solve (d_i + s A) u = rhs for a nodewise diagonal d.
    Field solve_shifted_diag(std::span<const double> d, double s,
                             std::span<const double> rhs) const;

    struct Tridiag {
        std::vector<double> lower, diag, upper;
    };
    const Tridiag& matrix() const { return tri_; }

private:
    Grid1D grid_;
    Field a_, c_;
    BoundarySpec left_, right_;
    Tridiag tri_;                      // nodal operator A = -L
    std::vector<double> weights_;      // h-weights of the inner product
    std::vector<double> eigenvalues_;  // ascending
    std::vector<double> eigvec_;           // row-major [mode][node]
    std::vector<double> weighted_eigvec_;  // h .* phi_j, for fast coefficients
    int n_modes_ = 0;
    int mode_cap_ = 0;
};

/// Spectrally weighted Sobolev scale built on the operator's eigenpairs.
struct SobolevScale {
    const EllipticOperator* op;
    double s;
};

/// || v ||_{H^s} = ( sum_j lambda_j^s (v, phi_j)^2 )^{1/2}
double hdot_norm(const SobolevScale& scale, std::span<const double> v);

/// E(t) v = sum_j E_{alpha,1}(-lambda_j t^alpha) (v, phi_j) phi_j
Field apply_E(const EllipticOperator& op, double alpha, double t, std::span<const double> v);

/// Duhamel term of the solution formula: per mode,
///   int_0^t (t-s)^{alpha-1} E_{alpha,alpha}(-lambda_j (t-s)^alpha) (r(., s), phi_j) ds,
/// resummed over modes.  The source is sampled on a uniform time grid
/// covering [0, t]; the (t-s)^{alpha-1} endpoint singularity is handled by
/// product integration exact for piecewise-linear integrands.
Field apply_Ebar_convolution(const EllipticOperator& op, double alpha, double t,
                             std::span<const double> sample_times,
                             const std::vector<Field>& source_samples);

}  // namespace reactid
