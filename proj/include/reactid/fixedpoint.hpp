#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "reactid/data.hpp"
#include "reactid/forward.hpp"
#include "reactid/reaction.hpp"

namespace reactid {

/// Everything a reconstruction needs to run the forward problem.
struct ProblemBundle {
    const EllipticOperator* op;
    TimeConfig tc;
    Field u0;
    SpaceTimeFn r;
    ClampInterval clamp;
};

struct FixedPointConfig {
    int max_iters = 20;
    double stall_tol = 1e-6;  // scaled by (1 + |f_k|_inf) at the check
    std::optional<double> rho_cap;  // W^{1,inf} ball radius; enforced by rescaling
    bool record_trace = true;
};

struct ProjectionError : std::runtime_error {
    double condition_estimate;
    ProjectionError(const std::string& what, double cond)
        : std::runtime_error(what), condition_estimate(cond) {}
};

struct IterationRecord {
    ReactionTerm f;
    double surface_residual;  // || f_{k+1}(g~) - y_k ||_{L2}
    double true_error;        // coverage-masked sup error; NaN when truth absent
};

struct ReconstructionTrace {
    std::vector<IterationRecord> iterations;
    bool converged = false;
    int stall_iteration = -1;
    std::string error;  // forward-solver failure annotation; empty when clean
};

/// Subinterval of the clamp interval actually visited by g~: bins one basis
/// spacing wide, covered when at least one data node lands inside.  Outside
/// coverage f is unidentifiable and errors are not reported.
struct CoverageMask {
    double origin, bin_width;
    std::vector<char> covered;
    double lo, hi;  // extent of the covered bins

    template <typename F, typename G>
    double sup_diff(F&& fa, G&& fb, int per_bin = 16) const {
        double m = 0.0;
        for (std::size_t b = 0; b < covered.size(); ++b) {
            if (!covered[b]) continue;
            for (int i = 0; i < per_bin; ++i) {
                const double u = origin + bin_width * (b + (i + 0.5) / per_bin);
                m = std::max(m, std::fabs(fa(u) - fb(u)));
            }
        }
        return m;
    }
};

CoverageMask coverage_mask(const OverposedData& gdata, const ReactionTerm& basis);

/// P: least-squares recovery of a univariate function from its composition
/// with g~, over the Gaussian basis.  Normal equations on the Gram matrix
/// with a tiny ridge; no additional smoothing.
ReactionTerm project_onto_basis(const Field& y, const OverposedData& gdata,
                                const EllipticOperator& op, const ReactionTerm& basis);

/// S: evaluate the PDE on the overposed surface,
///   (S f)(x) = D_t^alpha u(x,T;f) - L g~(x) - r(x,T).
Field apply_S(const ReactionTerm& f, const ProblemBundle& bundle, const OverposedData& gdata);

/// Fixed-point iteration f_{k+1} = P(S(f_k)) until stall or max_iters.
/// Forward blow-ups truncate the trace with an annotation instead of
/// propagating.
ReconstructionTrace run_fixed_point(const FixedPointConfig& cfg, const ProblemBundle& bundle,
                                    const OverposedData& gdata, const ReactionTerm& f0,
                                    const ScalarFn& truth = nullptr);

/// Trace CSV: "iter,residual,true_error".
void write_trace_csv(const std::string& path, const ReconstructionTrace& trace);
/// Reaction samples CSV: "u,f_u".
void write_reaction_csv(const std::string& path, const ReactionTerm& f, int samples = 257);

}  // namespace reactid
