#include "reactid/forward.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>

#include "reactid/kernels.hpp"
#include "reactid/mlf.hpp"

namespace reactid {

namespace {

constexpr int kPicardCap = 25;
constexpr double kPicardTol = 1e-10;

double blowup_bound(const Field& u0, const ClampInterval& clamp) {
    double g = 0.0;
    if (std::fabs(clamp.g_min) < 1e100) g += std::fabs(clamp.g_min);
    if (std::fabs(clamp.g_max) < 1e100) g += std::fabs(clamp.g_max);
    return 1e3 * (1.0 + kern::amax(u0) + g);
}

void check_state(const Field& u, int step, double bound) {
    const double m = kern::amax(u);
    if (!std::isfinite(m) || m > bound)
        throw BlowUpError("forward solver: state blow-up at step " + std::to_string(step) +
                              " (|u|_inf = " + std::to_string(m) + ")",
                          step);
}

// Caputo quadrature moments for the shifted-point scheme.  With
// t_eval = (n + sigma) tau and l = n - k, the interval [t_k, t_{k+1}]
// contributes
//   I0(l) = int (t_eval - s)^-a ds  = tau^{1-a}/(1-a) [ (l+s)^{1-a} - (l-1+s)^{1-a} ]
//   I1(l) = int (s - t_{k+1/2})(t_eval - s)^-a ds
//         = (l - 1/2 + s) tau I0(l) - tau^{2-a}/(2-a) [ (l+s)^{2-a} - (l-1+s)^{2-a} ]
struct CaputoMoments {
    double alpha, tau, sigma;
    double i0(int l) const {
        const double p = 1.0 - alpha;
        return std::pow(tau, p) / p *
               (std::pow(l + sigma, p) - std::pow(l - 1 + sigma, p));
    }
    double i1(int l) const {
        const double p2 = 2.0 - alpha;
        const double b = std::pow(tau, p2) / p2 *
                         (std::pow(l + sigma, p2) - std::pow(l - 1 + sigma, p2));
        return (l - 0.5 + sigma) * tau * i0(l) - b;
    }
    double stub() const {  // int over [t_n, t_n + sigma tau]
        const double p = 1.0 - alpha;
        return std::pow(sigma * tau, p) / p;
    }
};

// Weights on the differences d_k = u^{k+1} - u^k, k = 0..n, approximating
// Gamma(1-a) D_t^a u(t_{n+sigma}).  Forward three-point quadratics on every
// full interval plus a linear stub on [t_n, t_{n+sigma}].
std::vector<double> diff_weights_shifted(double alpha, double tau, int n) {
    const double sigma = 1.0 - 0.5 * alpha;
    CaputoMoments m{alpha, tau, sigma};
    std::vector<double> w(n + 1, 0.0);
    w[n] += m.stub() / tau;
    for (int k = 0; k < n; ++k) {
        const int l = n - k;
        const double i0 = m.i0(l), i1 = m.i1(l);
        w[k] += i0 / tau - i1 / (tau * tau);
        w[k + 1] += i1 / (tau * tau);
    }
    return w;
}

}  // namespace

void TimeConfig::validate() const {
    if (!(T > 0.0)) throw std::invalid_argument("TimeConfig: T must be positive");
    if (n_steps < 1) throw std::invalid_argument("TimeConfig: n_steps must be >= 1");
    if (scheme == Scheme::CrankNicolson) {
        if (alpha != 1.0)
            throw std::invalid_argument("TimeConfig: CrankNicolson requires alpha = 1");
    } else {
        if (!(alpha > 0.0 && alpha < 1.0))
            throw std::invalid_argument("TimeConfig: FractionalL2 requires alpha in (0,1)");
    }
}

namespace detail {

std::vector<double> caputo_eval_weights(double alpha, double tau, int m_nodes) {
    // Weights on u^0..u^M for D_t^alpha u(t_M); M = m_nodes - 1 intervals,
    // forward quadratics except a backward one on [t_{M-1}, t_M].
    const int M = m_nodes - 1;
    if (M < 2) throw std::invalid_argument("caputo_eval_weights: need at least 2 steps");
    CaputoMoments m{alpha, tau, 0.0};
    std::vector<double> wd(M, 0.0);  // weights on d_k = u^{k+1} - u^k
    for (int k = 0; k < M; ++k) {
        const int l = M - k;
        const double i0 = m.i0(l), i1 = m.i1(l);
        wd[k] += i0 / tau;
        if (k < M - 1) {
            // forward quadratic: second difference d_{k+1} - d_k
            wd[k] -= i1 / (tau * tau);
            wd[k + 1] += i1 / (tau * tau);
        } else {
            // backward quadratic on the last interval: d_{M-1} - d_{M-2}
            wd[M - 1] += i1 / (tau * tau);
            wd[M - 2] -= i1 / (tau * tau);
        }
    }
    std::vector<double> w(m_nodes, 0.0);
    const double inv_gamma = mlf::reciprocal_gamma(1.0 - alpha);
    for (int k = 0; k < M; ++k) {
        w[k + 1] += wd[k] * inv_gamma;
        w[k] -= wd[k] * inv_gamma;
    }
    return w;
}

}  // namespace detail

StateHistory solve_forward(const EllipticOperator& op, const TimeConfig& tc, const Field& u0,
                           const ScalarFn& f, const SpaceTimeFn& r, const ClampInterval& clamp) {
    tc.validate();
    const int n = op.n_nodes();
    if ((int)u0.size() != n) throw std::invalid_argument("solve_forward: u0 size mismatch");

    const int N = tc.n_steps;
    const double tau = tc.dt();
    const double bound = blowup_bound(u0, clamp);

    StateHistory hist;
    hist.grid = op.grid();
    hist.times.resize(N + 1);
    for (int k = 0; k <= N; ++k) hist.times[k] = tau * k;
    hist.times[N] = tc.T;
    hist.states.reserve(N + 1);
    hist.states.push_back(u0);
    check_state(u0, 0, bound);

    const auto& x = op.grid().nodes;

    // theta-weighted collocation state for the nonlinearity: theta = 1/2 for
    // Crank-Nicolson, theta = sigma for the shifted fractional scheme.
    const bool fractional = tc.scheme == Scheme::FractionalL2;
    const double sigma = fractional ? 1.0 - 0.5 * tc.alpha : 0.5;
    const double inv_gamma_1ma =
        fractional ? mlf::reciprocal_gamma(1.0 - tc.alpha) : 0.0;

    Field rhs(n), base(n), guess(n), prev_guess(n), coll(n), fval(n), diag(n);

    for (int nstep = 0; nstep < N; ++nstep) {
        const Field& un = hist.states[nstep];
        const double t_coll = fractional ? (nstep + sigma) * tau : (nstep + 0.5) * tau;

        double lead = 0.0;  // coefficient of u^{n+1} from the time derivative
        if (!fractional) {
            lead = 1.0 / tau;
            // base = u^n / tau - (1/2) A u^n + r(t_{n+1/2})
            Field Aun = op.apply_matrix(un);
            for (int i = 0; i < n; ++i)
                base[i] = un[i] / tau - 0.5 * Aun[i] + r(x[i], t_coll);
        } else {
            auto w = diff_weights_shifted(tc.alpha, tau, nstep);
            for (double& wk : w) wk *= inv_gamma_1ma;
            lead = w[nstep];
            // history part: sum_{k<n} w_k (u^{k+1} - u^k)  - w_n u^n
            std::fill(base.begin(), base.end(), 0.0);
            for (int k = 0; k < nstep; ++k) {
                kern::axpy(w[k], hist.states[k + 1], base);
                kern::axpy(-w[k], hist.states[k], base);
            }
            Field Aun = op.apply_matrix(un);
            for (int i = 0; i < n; ++i)
                base[i] = -base[i] + w[nstep] * un[i] - (1.0 - sigma) * Aun[i] + r(x[i], t_coll);
        }
        const double s_implicit = fractional ? sigma : 0.5;
        std::fill(diag.begin(), diag.end(), lead);

        // Picard sweeps on the nonlinearity, initialized by linear extrapolation.
        if (nstep >= 1) {
            for (int i = 0; i < n; ++i)
                guess[i] = 2.0 * un[i] - hist.states[nstep - 1][i];
        } else {
            guess = un;
        }

        bool converged = false;
        for (int it = 0; it < kPicardCap; ++it) {
            for (int i = 0; i < n; ++i) {
                coll[i] = sigma * guess[i] + (1.0 - sigma) * un[i];
                fval[i] = f(clamp.clamp(coll[i]));
            }
            for (int i = 0; i < n; ++i) rhs[i] = base[i] + fval[i];
            prev_guess = guess;
            guess = op.solve_shifted_diag(diag, s_implicit, rhs);

            double diff2 = 0.0, norm2 = 0.0;
            for (int i = 0; i < n; ++i) {
                const double d = guess[i] - prev_guess[i];
                diff2 += op.node_weight(i) * d * d;
                norm2 += op.node_weight(i) * guess[i] * guess[i];
            }
            if (std::sqrt(diff2) <= kPicardTol * (1.0 + std::sqrt(norm2))) {
                converged = true;
                break;
            }
        }
        if (!converged)
            throw SolverError("forward solver: Picard iteration stalled at step " +
                                  std::to_string(nstep + 1),
                              nstep + 1);
        check_state(guess, nstep + 1, bound);
        hist.states.push_back(guess);
    }
    return hist;
}

StateHistory solve_forward(const EllipticOperator& op, const TimeConfig& tc, const Field& u0,
                           const ReactionTerm& f, const SpaceTimeFn& r,
                           const ClampInterval& clamp) {
    return solve_forward(op, tc, u0, [&f](double u) { return f.eval(u); }, r, clamp);
}

Field caputo_at_final(const TimeConfig& tc, const StateHistory& hist) {
    tc.validate();
    const int M = static_cast<int>(hist.states.size()) - 1;
    if (M != tc.n_steps || M < 2)
        throw std::invalid_argument("caputo_at_final: history incomplete");
    const int n = static_cast<int>(hist.states[0].size());
    const double tau = tc.dt();

    Field out(n, 0.0);
    if (tc.scheme == Scheme::CrankNicolson) {
        // one-sided second-order u_t(T)
        for (int i = 0; i < n; ++i)
            out[i] = (3.0 * hist.states[M][i] - 4.0 * hist.states[M - 1][i] +
                      hist.states[M - 2][i]) /
                     (2.0 * tau);
        return out;
    }
    const auto w = detail::caputo_eval_weights(tc.alpha, tau, M + 1);
    for (int k = 0; k <= M; ++k)
        if (w[k] != 0.0) kern::axpy(w[k], hist.states[k], out);
    return out;
}

RangeReport range_condition_check(const StateHistory& hist, const ClampInterval& clamp) {
    RangeReport rep;
    const int n = static_cast<int>(hist.states.empty() ? 0 : hist.states[0].size());
    for (int k = 0; k < (int)hist.states.size(); ++k) {
        int outside = 0;
        double exc = 0.0;
        for (double v : hist.states[k]) {
            if (!clamp.contains(v)) {
                ++outside;
                exc = std::max(exc, std::max(clamp.g_min - v, v - clamp.g_max));
            }
        }
        if (outside > 0)
            rep.violations.push_back({k, static_cast<double>(outside) / n, exc});
    }
    return rep;
}

Field solve_linearized(const EllipticOperator& op, const TimeConfig& tc,
                       const std::vector<Field>& q_samples,
                       const std::vector<Field>& s_samples) {
    tc.validate();
    const int n = op.n_nodes();
    const int N = tc.n_steps;
    if ((int)q_samples.size() != N + 1 || (int)s_samples.size() != N + 1)
        throw std::invalid_argument("solve_linearized: need n_steps+1 q and s samples");

    const double tau = tc.dt();
    const bool fractional = tc.scheme == Scheme::FractionalL2;
    const double sigma = fractional ? 1.0 - 0.5 * tc.alpha : 0.5;
    const double inv_gamma_1ma =
        fractional ? mlf::reciprocal_gamma(1.0 - tc.alpha) : 0.0;

    std::vector<Field> v;
    v.reserve(N + 1);
    v.push_back(Field(n, 0.0));

    Field base(n), rhs(n), diag(n), qc(n), sc(n);

    for (int nstep = 0; nstep < N; ++nstep) {
        const Field& vn = v[nstep];
        // sigma-interpolated potential and source at the collocation point
        for (int i = 0; i < n; ++i) {
            qc[i] = sigma * q_samples[nstep + 1][i] + (1.0 - sigma) * q_samples[nstep][i];
            sc[i] = sigma * s_samples[nstep + 1][i] + (1.0 - sigma) * s_samples[nstep][i];
        }

        double lead = 0.0;
        if (!fractional) {
            lead = 1.0 / tau;
            Field Avn = op.apply_matrix(vn);
            for (int i = 0; i < n; ++i)
                base[i] = vn[i] / tau - 0.5 * Avn[i] + (1.0 - sigma) * qc[i] * vn[i] + sc[i];
        } else {
            auto w = diff_weights_shifted(tc.alpha, tau, nstep);
            for (double& wk : w) wk *= inv_gamma_1ma;
            lead = w[nstep];
            std::fill(base.begin(), base.end(), 0.0);
            for (int k = 0; k < nstep; ++k) {
                kern::axpy(w[k], v[k + 1], base);
                kern::axpy(-w[k], v[k], base);
            }
            Field Avn = op.apply_matrix(vn);
            for (int i = 0; i < n; ++i)
                base[i] = -base[i] + w[nstep] * vn[i] - (1.0 - sigma) * Avn[i] +
                          (1.0 - sigma) * qc[i] * vn[i] + sc[i];
        }
        const double s_implicit = fractional ? sigma : 0.5;
        for (int i = 0; i < n; ++i) diag[i] = lead - s_implicit * qc[i];
        v.push_back(op.solve_shifted_diag(diag, s_implicit, base));
    }
    return v.back();
}

void dump_history_csv(const StateHistory& hist, const std::string& path) {
    std::FILE* fp = std::fopen(path.c_str(), "w");
    if (!fp) throw std::runtime_error("dump_history_csv: cannot open " + path);
    std::fprintf(fp, "t,x,u\n");
    for (std::size_t k = 0; k < hist.states.size(); ++k)
        for (int i = 0; i < hist.grid.n; ++i)
            std::fprintf(fp, "%.17g,%.17g,%.17g\n", hist.times[k], hist.grid.nodes[i],
                         hist.states[k][i]);
    std::fclose(fp);
}

}  // namespace reactid
