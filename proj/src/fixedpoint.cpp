#include "reactid/fixedpoint.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace reactid {

CoverageMask coverage_mask(const OverposedData& gdata, const ReactionTerm& basis) {
    CoverageMask mask;
    const auto& I = basis.interval();
    const double spacing = basis.size() > 1
                               ? (I.g_max - I.g_min) / (basis.size() - 1)
                               : (I.g_max - I.g_min);
    mask.origin = I.g_min;
    mask.bin_width = spacing;
    const int nbins = std::max(1, (int)std::ceil((I.g_max - I.g_min) / spacing - 1e-9));
    mask.covered.assign(nbins, 0);
    for (double v : gdata.smoothed) {
        if (v < I.g_min || v > I.g_max) continue;
        int b = std::min(nbins - 1, (int)((v - I.g_min) / spacing));
        mask.covered[b] = 1;
    }
    mask.lo = I.g_max;
    mask.hi = I.g_min;
    for (int b = 0; b < nbins; ++b) {
        if (!mask.covered[b]) continue;
        mask.lo = std::min(mask.lo, mask.origin + b * spacing);
        mask.hi = std::max(mask.hi, mask.origin + (b + 1) * spacing);
    }
    if (mask.lo > mask.hi) mask.lo = mask.hi = I.g_min;
    return mask;
}

ReactionTerm project_onto_basis(const Field& y, const OverposedData& gdata,
                                const EllipticOperator& op, const ReactionTerm& basis) {
    const int n = op.n_nodes();
    const int m = basis.size();
    if ((int)y.size() != n || (int)gdata.smoothed.size() != n)
        throw std::invalid_argument("project_onto_basis: size mismatch");

    Eigen::MatrixXd B(n, m);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j) B(i, j) = basis.basis(j, gdata.smoothed[i]);

    Eigen::MatrixXd G0 = B.transpose() * B;
    Eigen::Map<const Eigen::VectorXd> yv(y.data(), n);
    Eigen::VectorXd rhs = B.transpose() * yv;

    const double ridge = 1e-12 * G0.trace() / m;
    Eigen::MatrixXd G = G0;
    G.diagonal().array() += ridge;

    Eigen::LDLT<Eigen::MatrixXd> ldlt(G);
    Eigen::VectorXd c = ldlt.solve(rhs);
    // Refinement against the ridge-free residual removes the ridge bias on
    // well-posed systems while keeping the rescue for degenerate ones.  The
    // Gaussian Gram runs to kappa ~ 1e10, so the residual needs extended
    // precision or the sweeps stall at kappa * eps.
    Eigen::VectorXd r(m);
    for (int sweep = 0; sweep < 3; ++sweep) {
        for (int j = 0; j < m; ++j) {
            long double acc = rhs(j);
            for (int k = 0; k < m; ++k)
                acc -= static_cast<long double>(G0(j, k)) * static_cast<long double>(c(k));
            r(j) = static_cast<double>(acc);
        }
        c += ldlt.solve(r);
    }

    if (ldlt.info() != Eigen::Success || !c.allFinite()) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G);
        const double cond = es.eigenvalues()(m - 1) / std::max(es.eigenvalues()(0), 1e-300);
        throw ProjectionError("project_onto_basis: Gram system unsolvable beyond ridge rescue",
                              cond);
    }

    ReactionTerm out = basis;
    out.coeffs().assign(c.data(), c.data() + m);
    return out;
}

Field apply_S(const ReactionTerm& f, const ProblemBundle& bundle, const OverposedData& gdata) {
    const EllipticOperator& op = *bundle.op;
    auto hist = solve_forward(op, bundle.tc, bundle.u0, f, bundle.r, bundle.clamp);
    Field d = caputo_at_final(bundle.tc, hist);
    const auto& x = op.grid().nodes;
    for (int i = 0; i < op.n_nodes(); ++i)
        d[i] -= gdata.lap_smoothed[i] + bundle.r(x[i], bundle.tc.T);
    return d;
}

ReconstructionTrace run_fixed_point(const FixedPointConfig& cfg, const ProblemBundle& bundle,
                                    const OverposedData& gdata, const ReactionTerm& f0,
                                    const ScalarFn& truth) {
    ReconstructionTrace trace;
    const EllipticOperator& op = *bundle.op;
    const auto mask = coverage_mask(gdata, f0);
    const auto& I = f0.interval();

    ReactionTerm f = f0;
    for (int k = 0; k < cfg.max_iters; ++k) {
        Field y;
        try {
            y = apply_S(f, bundle, gdata);
        } catch (const BlowUpError& e) {
            trace.error = e.what();
            break;
        } catch (const SolverError& e) {
            trace.error = e.what();
            break;
        }
        ReactionTerm next = project_onto_basis(y, gdata, op, f);

        if (cfg.rho_cap) {
            const double w = next.w1inf_norm();
            if (w > *cfg.rho_cap)
                for (double& c : next.coeffs()) c *= *cfg.rho_cap / w;
        }

        IterationRecord rec{next, 0.0, std::numeric_limits<double>::quiet_NaN()};
        Field fit(op.n_nodes());
        for (int i = 0; i < op.n_nodes(); ++i) fit[i] = next.eval(gdata.smoothed[i]) - y[i];
        rec.surface_residual = op.norm(fit);
        if (truth)
            rec.true_error =
                mask.sup_diff([&](double u) { return next.eval(u); }, truth);
        if (cfg.record_trace || trace.iterations.empty())
            trace.iterations.push_back(rec);
        else
            trace.iterations.back() = rec;

        const double step = next.sup_distance(f, I.g_min, I.g_max);
        const double scale = 1.0 + f.w1inf_norm();
        f = next;
        if (step <= cfg.stall_tol * scale) {
            trace.converged = true;
            trace.stall_iteration = k + 1;
            break;
        }
    }
    return trace;
}

void write_trace_csv(const std::string& path, const ReconstructionTrace& trace) {
    std::FILE* fp = std::fopen(path.c_str(), "w");
    if (!fp) throw std::runtime_error("write_trace_csv: cannot open " + path);
    std::fprintf(fp, "iter,residual,true_error\n");
    for (std::size_t k = 0; k < trace.iterations.size(); ++k)
        std::fprintf(fp, "%zu,%.17g,%.17g\n", k + 1, trace.iterations[k].surface_residual,
                     trace.iterations[k].true_error);
    std::fclose(fp);
}

void write_reaction_csv(const std::string& path, const ReactionTerm& f, int samples) {
    std::FILE* fp = std::fopen(path.c_str(), "w");
    if (!fp) throw std::runtime_error("write_reaction_csv: cannot open " + path);
    std::fprintf(fp, "u,f_u\n");
    const auto& I = f.interval();
    for (int i = 0; i < samples; ++i) {
        const double u = I.g_min + (I.g_max - I.g_min) * i / (samples - 1.0);
        std::fprintf(fp, "%.17g,%.17g\n", u, f.eval(u));
    }
    std::fclose(fp);
}

}  // namespace reactid
