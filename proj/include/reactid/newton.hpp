#pragma once

#include <functional>
#include <vector>

#include "reactid/fixedpoint.hpp"

namespace reactid {

struct NewtonConfig {
    enum class Variant { Tikhonov, Ivanov };
    Variant variant = Variant::Tikhonov;
    double gamma0 = 1e-2;  // Tikhonov sequence gamma_k = gamma0 kappa^k
    double kappa = 0.5;
    double varrho = 1.0;  // Ivanov radius
    double tau = 1.5;     // discrepancy factor
    int max_iters = 10;
    bool freeze_jacobian = false;
    double step_cap = 1.0;  // max update length in the coefficient H1 norm
    double eps0 = 1e-10;    // Jacobian penalty eps0 I + eps2 R
    double eps2 = 1e-6;
    std::function<double(double)> lambda_weight;  // weight in R; default 1

    void validate() const;
};

/// F(f) = u(., T; f): final-time slice of the forward solve.
Field forward_map(const ReactionTerm& f, const ProblemBundle& bundle);

/// F'(f) b_j = v(., T) where v solves the linearized PDE with potential
/// f'(P u) read from the stored forward history and source b_j(P u).
Field jacobian_column(const ReactionTerm& f, int j, const StateHistory& hist,
                      const ProblemBundle& bundle);

/// All m columns; independent linearized solves against the same history.
std::vector<Field> assemble_jacobian(const ReactionTerm& f, const StateHistory& hist,
                                     const ProblemBundle& bundle);

/// Coefficient-space metrics: X = discrete H1(I) inner product of the basis,
/// R the lambda-weighted L2 Gram (composite Simpson on 4m+1 points).
struct CoefficientMetrics {
    std::vector<double> X;  // m x m, row-major
    std::vector<double> R;
    int m = 0;

    double x_norm(const std::vector<double>& c) const;
};
CoefficientMetrics coefficient_metrics(const ReactionTerm& basis,
                                       const std::function<double(double)>& lambda_weight);

/// One regularized Newton update from f_k given the Jacobian columns.
/// Tikhonov: (J'WJ + gamma_k X + eps0 I + eps2 R) dc = J'W(g - F) - gamma_k X(c_k - c_0).
/// Ivanov: Lagrange-multiplier bisection so ||f - f_0||_X <= varrho.
/// Both damp the step to step_cap in the X norm.
ReactionTerm newton_step(const ReactionTerm& f_k, const ReactionTerm& f_0,
                         const std::vector<Field>& jacobian, const Field& F_k,
                         const Field& gdelta, const EllipticOperator& op,
                         const CoefficientMetrics& metrics, const NewtonConfig& cfg,
                         double gamma_k);

struct NewtonResult {
    ReconstructionTrace trace;
    int k_star = -1;          // discrepancy stopping index (-1: not reached)
    double final_residual = 0.0;
    bool diverged = false;
};

/// Newton iteration with discrepancy stopping ||F(f_k) - g^delta|| <= tau delta.
/// Residual growth over 3 consecutive iterations halves step_cap once; a
/// further growth stops with non-convergence status.
NewtonResult run_newton(const NewtonConfig& cfg, const ProblemBundle& bundle,
                        const OverposedData& gdata, const ReactionTerm& f0,
                        const ScalarFn& truth = nullptr);

}  // namespace reactid
