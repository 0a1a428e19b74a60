#pragma once

#include <functional>
#include <string>
#include <vector>

#include "reactid/grid.hpp"
#include "reactid/reaction.hpp"
#include "reactid/spectral.hpp"

namespace reactid {

enum class Scheme { CrankNicolson, FractionalL2 };

/// Time discretization: Crank-Nicolson for alpha = 1, or the second-order
/// shifted-point Caputo scheme (collocation at t_{n+sigma}, sigma = 1 - alpha/2)
/// for alpha < 1.
struct TimeConfig {
    double alpha = 1.0;
    double T = 1.0;
    int n_steps = 400;
    Scheme scheme = Scheme::CrankNicolson;

    double dt() const { return T / n_steps; }
    void validate() const;
};

/// Full time history u(x, t_n); the nonlocal Caputo memory and the
/// final-time derivative both need it.
struct StateHistory {
    Grid1D grid;
    std::vector<double> times;   // n_steps + 1, from 0 to T
    std::vector<Field> states;   // [time][node]
};

struct SolverError : std::runtime_error {
    int step;
    SolverError(const std::string& what, int s) : std::runtime_error(what), step(s) {}
};

struct BlowUpError : std::runtime_error {
    int step;
    BlowUpError(const std::string& what, int s) : std::runtime_error(what), step(s) {}
};

using SpaceTimeFn = std::function<double(double x, double t)>;
using ScalarFn = std::function<double(double u)>;

/// Solve D_t^alpha u - L u = f(P u) + r with homogeneous impedance BCs.
/// Diffusion is implicit; f(P u) is taken at the scheme's collocation state
/// (midpoint / sigma-weighted) and resolved by Picard sweeps.  The clamp P
/// applies to the argument of f only, never to the stored state.
StateHistory solve_forward(const EllipticOperator& op, const TimeConfig& tc, const Field& u0,
                           const ScalarFn& f, const SpaceTimeFn& r, const ClampInterval& clamp);

StateHistory solve_forward(const EllipticOperator& op, const TimeConfig& tc, const Field& u0,
                           const ReactionTerm& f, const SpaceTimeFn& r,
                           const ClampInterval& clamp);

/// D_t^alpha u(., T) from the stored history: the stepping scheme's
/// second-order weights for alpha < 1 (backward-biased on the last
/// interval), or a one-sided second-order difference for alpha = 1.
Field caputo_at_final(const TimeConfig& tc, const StateHistory& hist);

/// Diagnostic: per-step fraction of nodes outside [g_min, g_max] and the
/// largest excursion.
struct RangeReport {
    struct StepStat {
        int step;
        double fraction_outside;
        double max_excursion;
    };
    std::vector<StepStat> violations;  // only steps with excursions
    bool ok() const { return violations.empty(); }
};
RangeReport range_condition_check(const StateHistory& hist, const ClampInterval& clamp);

/// Solve the linearized problem D_t^alpha v - L v - q(x,t) v = s(x,t),
/// v(x,0) = 0, with q and s sampled on the history time grid; same scheme
/// and weights as solve_forward.  Returns v(., T).
Field solve_linearized(const EllipticOperator& op, const TimeConfig& tc,
                       const std::vector<Field>& q_samples,
                       const std::vector<Field>& s_samples);

/// Columnar debug dump: header "t,x,u", one record per (time, node).
void dump_history_csv(const StateHistory& hist, const std::string& path);

namespace detail {
/// Weights W_k on u^0..u^M such that sum_k W_k u^k approximates
/// D_t^alpha u(t_eval) built from piecewise-quadratic interpolation
/// (forward three-point stencils; backward on the final interval when
/// t_eval = t_M).  Exposed for the monomial-oracle tests.
std::vector<double> caputo_eval_weights(double alpha, double tau, int m_nodes);
}  // namespace detail

}  // namespace reactid
