#include "reactid/newton.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace reactid {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

MatrixXd map_metric(const std::vector<double>& a, int m) {
    return Eigen::Map<const MatrixXd>(a.data(), m, m);
}

}  // namespace

void NewtonConfig::validate() const {
    if (!(gamma0 > 0.0)) throw std::invalid_argument("NewtonConfig: gamma0 must be > 0");
    if (!(kappa > 0.0 && kappa < 1.0))
        throw std::invalid_argument("NewtonConfig: kappa must lie in (0,1)");
    if (!(tau > 1.0)) throw std::invalid_argument("NewtonConfig: tau must be > 1");
    if (!(varrho > 0.0)) throw std::invalid_argument("NewtonConfig: varrho must be > 0");
    if (max_iters < 1) throw std::invalid_argument("NewtonConfig: max_iters must be >= 1");
    if (!(step_cap > 0.0)) throw std::invalid_argument("NewtonConfig: step_cap must be > 0");
    if (eps0 < 0.0 || eps2 < 0.0)
        throw std::invalid_argument("NewtonConfig: penalties must be >= 0");
}

Field forward_map(const ReactionTerm& f, const ProblemBundle& bundle) {
    auto hist = solve_forward(*bundle.op, bundle.tc, bundle.u0, f, bundle.r, bundle.clamp);
    return hist.states.back();
}

Field jacobian_column(const ReactionTerm& f, int j, const StateHistory& hist,
                      const ProblemBundle& bundle) {
    const int n = bundle.op->n_nodes();
    const int N = bundle.tc.n_steps;
    if ((int)hist.states.size() != N + 1)
        throw std::invalid_argument("jacobian_column: history incomplete");

    std::vector<Field> q(N + 1, Field(n)), s(N + 1, Field(n));
    for (int k = 0; k <= N; ++k) {
        for (int i = 0; i < n; ++i) {
            const double u = hist.states[k][i];
            q[k][i] = bundle.clamp.contains(u) ? f.eval_deriv(u) : 0.0;
            s[k][i] = f.basis(j, bundle.clamp.clamp(u));
        }
    }
    return solve_linearized(*bundle.op, bundle.tc, q, s);
}

std::vector<Field> assemble_jacobian(const ReactionTerm& f, const StateHistory& hist,
                                     const ProblemBundle& bundle) {
    std::vector<Field> J(f.size());
    for (int j = 0; j < f.size(); ++j) J[j] = jacobian_column(f, j, hist, bundle);
    return J;
}

CoefficientMetrics coefficient_metrics(const ReactionTerm& basis,
                                       const std::function<double(double)>& lambda_weight) {
    const int m = basis.size();
    const auto& I = basis.interval();
    const int pts = 4 * m + 1;  // composite Simpson; 4m intervals
    const double h = (I.g_max - I.g_min) / (pts - 1);

    std::vector<double> u(pts), w(pts);
    for (int i = 0; i < pts; ++i) {
        u[i] = I.g_min + h * i;
        w[i] = (i == 0 || i == pts - 1) ? h / 3.0 : (i % 2 ? 4.0 * h / 3.0 : 2.0 * h / 3.0);
    }

    // basis values and derivatives at the quadrature points
    std::vector<double> b(static_cast<std::size_t>(m) * pts), db(b.size());
    for (int j = 0; j < m; ++j) {
        for (int i = 0; i < pts; ++i) {
            const double d = u[i] - basis.centers()[j];
            const double e = std::exp(-d * d / basis.width());
            b[j * pts + i] = e;
            db[j * pts + i] = e * (-2.0 * d / basis.width());
        }
    }

    CoefficientMetrics mm;
    mm.m = m;
    mm.X.assign(static_cast<std::size_t>(m) * m, 0.0);
    mm.R.assign(static_cast<std::size_t>(m) * m, 0.0);
    for (int j = 0; j < m; ++j) {
        for (int k = j; k < m; ++k) {
            double x = 0.0, r = 0.0;
            for (int i = 0; i < pts; ++i) {
                x += w[i] * (b[j * pts + i] * b[k * pts + i] + db[j * pts + i] * db[k * pts + i]);
                r += w[i] * b[j * pts + i] * b[k * pts + i] *
                     (lambda_weight ? lambda_weight(u[i]) : 1.0);
            }
            mm.X[j * m + k] = mm.X[k * m + j] = x;
            mm.R[j * m + k] = mm.R[k * m + j] = r;
        }
    }
    return mm;
}

double CoefficientMetrics::x_norm(const std::vector<double>& c) const {
    double s = 0.0;
    for (int j = 0; j < m; ++j)
        for (int k = 0; k < m; ++k) s += c[j] * X[j * m + k] * c[k];
    return std::sqrt(std::max(0.0, s));
}

ReactionTerm newton_step(const ReactionTerm& f_k, const ReactionTerm& f_0,
                         const std::vector<Field>& jacobian, const Field& F_k,
                         const Field& gdelta, const EllipticOperator& op,
                         const CoefficientMetrics& metrics, const NewtonConfig& cfg,
                         double gamma_k) {
    const int m = f_k.size();
    const int n = op.n_nodes();
    if ((int)jacobian.size() != m) throw std::invalid_argument("newton_step: column count");

    const MatrixXd X = map_metric(metrics.X, m);
    const MatrixXd R = map_metric(metrics.R, m);

    // Weighted normal matrix J'WJ and rhs J'W (g - F).
    MatrixXd N(m, m);
    VectorXd rhs(m);
    {
        std::vector<Field> wj(m, Field(n));
        for (int j = 0; j < m; ++j)
            for (int i = 0; i < n; ++i) wj[j][i] = jacobian[j][i] * op.node_weight(i);
        for (int j = 0; j < m; ++j) {
            for (int k = j; k < m; ++k) {
                double s = 0.0;
                for (int i = 0; i < n; ++i) s += wj[j][i] * jacobian[k][i];
                N(j, k) = N(k, j) = s;
            }
            double s = 0.0;
            for (int i = 0; i < n; ++i) s += wj[j][i] * (gdelta[i] - F_k[i]);
            rhs(j) = s;
        }
    }

    VectorXd ck = Eigen::Map<const VectorXd>(f_k.coeffs().data(), m);
    VectorXd c0 = Eigen::Map<const VectorXd>(f_0.coeffs().data(), m);

    MatrixXd E = cfg.eps0 * MatrixXd::Identity(m, m) + cfg.eps2 * R;

    auto solve_with = [&](double nu) -> VectorXd {
        MatrixXd A = N + E + nu * X;
        VectorXd b = rhs - nu * (X * (ck - c0));
        Eigen::LDLT<MatrixXd> ldlt(A);
        VectorXd dc = ldlt.solve(b);
        if (ldlt.info() != Eigen::Success || !dc.allFinite())
            throw ProjectionError("newton_step: singular regularized system",
                                  std::numeric_limits<double>::infinity());
        return dc;
    };

    VectorXd dc;
    if (cfg.variant == NewtonConfig::Variant::Tikhonov) {
        dc = solve_with(gamma_k);
    } else {
        // Ivanov: smallest multiplier whose solution is feasible.
        auto x_norm_of = [&](const VectorXd& v) {
            return std::sqrt(std::max(0.0, v.dot(X * v)));
        };
        dc = solve_with(0.0);
        if (x_norm_of(ck + dc - c0) > cfg.varrho) {
            double lo = 0.0, hi = 1.0;
            while (x_norm_of(ck + solve_with(hi) - c0) > cfg.varrho && hi < 1e20) hi *= 10.0;
            for (int it = 0; it < 60; ++it) {
                const double mid = 0.5 * (lo + hi);
                const double r = x_norm_of(ck + solve_with(mid) - c0);
                if (r > cfg.varrho)
                    lo = mid;
                else
                    hi = mid;
                if (std::fabs(r - cfg.varrho) <= 1e-8 * cfg.varrho) {
                    hi = mid;
                    break;
                }
            }
            dc = solve_with(hi);
        }
    }

    // step damping in the coefficient H1 norm
    const double slen = std::sqrt(std::max(0.0, dc.dot(X * dc)));
    if (slen > cfg.step_cap) dc *= cfg.step_cap / slen;

    ReactionTerm out = f_k;
    for (int j = 0; j < m; ++j) out.coeffs()[j] = ck(j) + dc(j);
    return out;
}

NewtonResult run_newton(const NewtonConfig& cfg, const ProblemBundle& bundle,
                        const OverposedData& gdata, const ReactionTerm& f0,
                        const ScalarFn& truth) {
    cfg.validate();
    NewtonResult res;
    const EllipticOperator& op = *bundle.op;
    const auto mask = coverage_mask(gdata, f0);
    const auto metrics = coefficient_metrics(f0, cfg.lambda_weight);

    NewtonConfig run_cfg = cfg;
    ReactionTerm f = f0;
    std::vector<Field> frozen_jacobian;

    double prev_resid = std::numeric_limits<double>::infinity();
    int growth_streak = 0;
    bool halved = false;

    for (int k = 0; k < cfg.max_iters; ++k) {
        StateHistory hist;
        try {
            hist = solve_forward(op, bundle.tc, bundle.u0, f, bundle.r, bundle.clamp);
        } catch (const std::runtime_error& e) {
            res.trace.error = e.what();
            res.diverged = true;
            break;
        }
        Field F_k = hist.states.back();
        Field diff(op.n_nodes());
        for (int i = 0; i < op.n_nodes(); ++i) diff[i] = F_k[i] - gdata.raw[i];
        const double resid = op.norm(diff);

        IterationRecord rec{f, resid, std::numeric_limits<double>::quiet_NaN()};
        if (truth)
            rec.true_error = mask.sup_diff([&](double u) { return f.eval(u); }, truth);
        res.trace.iterations.push_back(rec);
        res.final_residual = resid;

        if (gdata.delta > 0.0 && resid <= cfg.tau * gdata.delta) {
            res.k_star = k;
            res.trace.converged = true;
            res.trace.stall_iteration = k;
            break;
        }

        if (resid > prev_resid) {
            ++growth_streak;
            if (growth_streak >= 3) {
                if (halved) {
                    res.diverged = true;
                    res.trace.error = "newton: residual kept growing after step halving";
                    break;
                }
                run_cfg.step_cap *= 0.5;
                halved = true;
                growth_streak = 0;
            }
        } else {
            growth_streak = 0;
        }
        prev_resid = resid;

        if (k + 1 >= cfg.max_iters) break;  // no step needed after the last record

        try {
            const std::vector<Field>* J;
            std::vector<Field> Jk;
            if (cfg.freeze_jacobian) {
                if (frozen_jacobian.empty()) frozen_jacobian = assemble_jacobian(f, hist, bundle);
                J = &frozen_jacobian;
            } else {
                Jk = assemble_jacobian(f, hist, bundle);
                J = &Jk;
            }
            const double gamma_k = cfg.gamma0 * std::pow(cfg.kappa, k);
            f = newton_step(f, f0, *J, F_k, gdata.raw, op, metrics, run_cfg, gamma_k);
        } catch (const std::runtime_error& e) {
            res.trace.error = e.what();
            res.diverged = true;
            break;
        }
    }
    return res;
}

}  // namespace reactid
