#pragma once

#include <memory>
#include <string>

#include "reactid/config.hpp"
#include "reactid/fixedpoint.hpp"
#include "reactid/newton.hpp"

namespace reactid {

/// Problem objects materialized from an ExperimentConfig.
struct ExperimentSetup {
    Grid1D grid;
    std::shared_ptr<EllipticOperator> op;
    TimeConfig tc;
    Field u0;
    SpaceTimeFn r;
    ScalarFn truth;  // empty when data comes from a file
    std::string truth_name;
};

ExperimentSetup build_setup(const ExperimentConfig& cfg);

/// Fit an analytic univariate function onto the Gaussian basis by least
/// squares on a dense argument grid (no PDE involved).
ReactionTerm fit_reaction(const ScalarFn& f, const ReactionTerm& basis);

/// Builtin reaction truths.
ScalarFn make_zeldovich(double a);
ScalarFn make_lipschitz_b();

// Exit codes: 0 success, 2 config, 3 solver, 4 method non-convergence.
int cmd_solve(const ExperimentConfig& cfg, const std::string& out_dir);
int cmd_reconstruct(const ExperimentConfig& cfg, const std::string& out_dir);
int cmd_sweep(const ExperimentConfig& cfg, const std::string& out_dir, int jobs);

}  // namespace reactid
