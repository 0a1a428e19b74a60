#include "reactid/spectral.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>

#include "reactid/kernels.hpp"
#include "reactid/mlf.hpp"

namespace reactid {

namespace {

bool is_dirichlet(const BoundarySpec& b) { return b.kind == BoundarySpec::Kind::Dirichlet; }

}  // namespace

EllipticOperator::EllipticOperator(Grid1D grid, Field a, Field c, BoundarySpec left,
                                   BoundarySpec right, double definiteness_shift,
                                   int max_modes)
    : grid_(std::move(grid)), a_(std::move(a)), c_(std::move(c)), left_(left), right_(right) {
    const int n = grid_.n;
    if ((int)a_.size() != n || (int)c_.size() != n)
        throw ConstructionError("EllipticOperator: coefficient fields must match the grid");
    for (int i = 0; i < n; ++i) {
        if (!(a_[i] > 0.0))
            throw ConstructionError("EllipticOperator: a(x) must be strictly positive at node " +
                                    std::to_string(i));
        if (c_[i] > 0.0)
            throw ConstructionError("EllipticOperator: c(x) must be <= 0 at node " +
                                    std::to_string(i));
    }
    if (left_.kind == BoundarySpec::Kind::Robin && left_.gamma < 0.0)
        throw ConstructionError("EllipticOperator: gamma_left must be >= 0");
    if (right_.kind == BoundarySpec::Kind::Robin && right_.gamma < 0.0)
        throw ConstructionError("EllipticOperator: gamma_right must be >= 0");

    if (definiteness_shift != 0.0) {
        for (double& ci : c_) ci -= definiteness_shift;
    }

    const double h = grid_.spacing();
    weights_.assign(n, h);
    weights_.front() = weights_.back() = 0.5 * h;

    // Conservative second-order stencil for A = -(a u')' - c u; impedance
    // rows come from ghost-node elimination on the boundary half-cells,
    // which keeps the h-weighted bilinear form symmetric.
    tri_.lower.assign(n, 0.0);
    tri_.diag.assign(n, 0.0);
    tri_.upper.assign(n, 0.0);

    auto a_half = [&](int i) { return 0.5 * (a_[i] + a_[i + 1]); };

    for (int i = 1; i + 1 < n; ++i) {
        const double am = a_half(i - 1), ap = a_half(i);
        tri_.lower[i] = -am / (h * h);
        tri_.upper[i] = -ap / (h * h);
        tri_.diag[i] = (am + ap) / (h * h) - c_[i];
    }
    if (is_dirichlet(left_)) {
        tri_.diag[0] = 1.0;  // placeholder unit row; eliminated from the eigenproblem
    } else {
        const double ap = a_half(0);
        tri_.diag[0] = 2.0 * ap / (h * h) + 2.0 * left_.gamma * a_[0] / h - c_[0];
        tri_.upper[0] = -2.0 * ap / (h * h);
    }
    if (is_dirichlet(right_)) {
        tri_.diag[n - 1] = 1.0;
    } else {
        const double am = a_half(n - 2);
        tri_.diag[n - 1] = 2.0 * am / (h * h) + 2.0 * right_.gamma * a_[n - 1] / h - c_[n - 1];
        tri_.lower[n - 1] = -2.0 * am / (h * h);
    }

    // Symmetrize in the weighted inner product: T = H^{1/2} M H^{-1/2} on the
    // retained rows, then solve the symmetric tridiagonal eigenproblem.
    const int lo = is_dirichlet(left_) ? 1 : 0;
    const int hi = is_dirichlet(right_) ? n - 1 : n;  // [lo, hi)
    const int m = hi - lo;
    if (m < 1) throw ConstructionError("EllipticOperator: no interior nodes left");

    Eigen::VectorXd diag(m), subdiag(std::max(m - 1, 0));
    for (int i = 0; i < m; ++i) diag[i] = tri_.diag[lo + i];
    for (int i = 0; i + 1 < m; ++i) {
        const int row = lo + i;
        subdiag[i] = tri_.upper[row] * std::sqrt(weights_[row] / weights_[row + 1]);
    }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(diag, subdiag, Eigen::ComputeEigenvectors);
    if (es.info() != Eigen::Success)
        throw ConstructionError("EllipticOperator: eigendecomposition failed");

    n_modes_ = m;
    mode_cap_ = std::min(max_modes, m);
    eigenvalues_.resize(m);
    eigvec_.assign(static_cast<std::size_t>(m) * n, 0.0);
    weighted_eigvec_.assign(static_cast<std::size_t>(m) * n, 0.0);

    for (int j = 0; j < m; ++j) {
        eigenvalues_[j] = es.eigenvalues()[j];
        double* phi = &eigvec_[static_cast<std::size_t>(j) * n];
        double* wphi = &weighted_eigvec_[static_cast<std::size_t>(j) * n];
        for (int i = 0; i < m; ++i) {
            const int row = lo + i;
            phi[row] = es.eigenvectors()(i, j) / std::sqrt(weights_[row]);
            wphi[row] = phi[row] * weights_[row];
        }
    }

    if (!(eigenvalues_.front() > 0.0))
        throw ConstructionError(
            "EllipticOperator: operator is not positive definite (lambda_1 = " +
            std::to_string(eigenvalues_.front()) +
            "); supply a definiteness_shift or nonzero impedance");
}

std::span<const double> EllipticOperator::eigenvector(int j) const {
    return {&eigvec_[static_cast<std::size_t>(j) * grid_.n], static_cast<std::size_t>(grid_.n)};
}

double EllipticOperator::inner(std::span<const double> u, std::span<const double> v) const {
    double s = 0.0;
    const int n = grid_.n;
    for (int i = 0; i < n; ++i) s += weights_[i] * u[i] * v[i];
    return s;
}

double EllipticOperator::norm(std::span<const double> u) const {
    return std::sqrt(std::max(0.0, inner(u, u)));
}

std::vector<double> EllipticOperator::modal_coefficients(std::span<const double> v) const {
    std::vector<double> c(n_modes_);
    const int n = grid_.n;
    for (int j = 0; j < n_modes_; ++j)
        c[j] = kern::dot(v, {&weighted_eigvec_[static_cast<std::size_t>(j) * n],
                             static_cast<std::size_t>(n)});
    return c;
}

Field EllipticOperator::apply_matrix(std::span<const double> v) const {
    const int n = grid_.n;
    Field out(n);
    out[0] = tri_.diag[0] * v[0] + tri_.upper[0] * v[1];
    for (int i = 1; i + 1 < n; ++i)
        out[i] = tri_.lower[i] * v[i - 1] + tri_.diag[i] * v[i] + tri_.upper[i] * v[i + 1];
    out[n - 1] = tri_.lower[n - 1] * v[n - 2] + tri_.diag[n - 1] * v[n - 1];
    return out;
}

Field EllipticOperator::solve_shifted(double s, std::span<const double> rhs) const {
    Field ones(grid_.n, 1.0);
    return solve_shifted_diag(ones, s, rhs);
}

Field EllipticOperator::solve_shifted_diag(std::span<const double> d, double s,
                                           std::span<const double> rhs) const {
    const int n = grid_.n;
    std::vector<double> cp(n), dp(n);
    Field x(n);

    auto row = [&](int i, double& lo, double& di, double& up, double& b) {
        if ((i == 0 && is_dirichlet(left_)) || (i == n - 1 && is_dirichlet(right_))) {
            lo = 0.0;
            di = 1.0;
            up = 0.0;
            b = 0.0;  // homogeneous boundary value
        } else {
            lo = s * tri_.lower[i];
            di = d[i] + s * tri_.diag[i];
            up = s * tri_.upper[i];
            b = rhs[i];
        }
    };

    double lo, di, up, b;
    row(0, lo, di, up, b);
    cp[0] = up / di;
    dp[0] = b / di;
    for (int i = 1; i < n; ++i) {
        row(i, lo, di, up, b);
        const double denom = di - lo * cp[i - 1];
        cp[i] = up / denom;
        dp[i] = (b - lo * dp[i - 1]) / denom;
    }
    x[n - 1] = dp[n - 1];
    for (int i = n - 2; i >= 0; --i) x[i] = dp[i] - cp[i] * x[i + 1];
    return x;
}

double hdot_norm(const SobolevScale& scale, std::span<const double> v) {
    const EllipticOperator& op = *scale.op;
    auto c = op.modal_coefficients(v);
    double s = 0.0;
    for (int j = 0; j < op.n_modes(); ++j)
        s += std::pow(op.eigenvalue(j), scale.s) * c[j] * c[j];
    return std::sqrt(std::max(0.0, s));
}

Field apply_E(const EllipticOperator& op, double alpha, double t, std::span<const double> v) {
    if (t < 0.0) throw std::invalid_argument("apply_E: t must be >= 0");
    if (t == 0.0) return Field(v.begin(), v.end());

    auto c = op.modal_coefficients(v);
    const int J = op.mode_cap();
    Field out(op.n_nodes(), 0.0);
    mlf::MlfParams p;
    p.alpha = alpha;
    p.beta = 1.0;
    const double ta = std::pow(t, alpha);
    for (int j = 0; j < J; ++j) {
        const double factor = mlf::mittag_leffler(p, -op.eigenvalue(j) * ta);
        kern::axpy(factor * c[j], op.eigenvector(j), out);
    }
    return out;
}

Field apply_Ebar_convolution(const EllipticOperator& op, double alpha, double t,
                             std::span<const double> sample_times,
                             const std::vector<Field>& source_samples) {
    const int M = static_cast<int>(sample_times.size());
    if (M < 2 || source_samples.size() != static_cast<std::size_t>(M))
        throw std::invalid_argument("apply_Ebar_convolution: need matching time/sample arrays");
    const double t0 = sample_times[0];
    const double tend = sample_times[M - 1];
    const double tiny = 1e-12 * std::max(1.0, std::fabs(t));
    if (t0 > tiny || tend < t - tiny)
        throw std::invalid_argument("apply_Ebar_convolution: time grid does not cover [0, t]");
    if (t <= tiny) return Field(op.n_nodes(), 0.0);

    const int J = op.mode_cap();
    const int n = op.n_nodes();

    // Modal source coefficients at every sample.
    std::vector<std::vector<double>> q(M);
    for (int i = 0; i < M; ++i) q[i] = op.modal_coefficients(source_samples[i]);

    mlf::MlfParams p;
    p.alpha = alpha;
    p.beta = alpha;
    const double inv_gamma_alpha = mlf::reciprocal_gamma(alpha);

    Field out(n, 0.0);
    std::vector<double> w(M);
    for (int j = 0; j < J; ++j) {
        const double lambda = op.eigenvalue(j);
        // Smooth part w(s) = E_{a,a}(-lambda (t-s)^a) q_j(s) at the samples.
        for (int i = 0; i < M; ++i) {
            const double tau = t - sample_times[i];
            if (tau < -tiny) break;
            const double tau_c = std::max(tau, 0.0);
            const double factor = tau_c == 0.0
                                      ? inv_gamma_alpha
                                      : mlf::mittag_leffler(p, -lambda * std::pow(tau_c, alpha));
            w[i] = factor * q[i][j];
        }

        double integral = 0.0;
        for (int i = 0; i + 1 < M && sample_times[i] < t - tiny; ++i) {
            const double s0 = sample_times[i];
            const double s1 = std::min(sample_times[i + 1], t);
            if (s1 <= s0) continue;
            const double tau0 = t - s0;       // larger
            const double tau1 = t - s1;       // smaller, >= 0
            const double J0 = (std::pow(tau0, alpha) - std::pow(tau1, alpha)) / alpha;
            const double J1 =
                (std::pow(tau0, alpha + 1.0) - std::pow(tau1, alpha + 1.0)) / (alpha + 1.0);
            // Linear interpolant between (s0, w_i) and (s1, w_end) where the
            // right endpoint is the kernel-limit value for a clipped segment.
            double w_left = w[i];
            double w_right;
            if (i + 1 <= M - 1 && sample_times[i + 1] <= t + tiny) {
                w_right = w[i + 1];
            } else {
                // partial segment: interpolate the source to s = t
                const double frac = (t - s0) / (sample_times[i + 1] - s0);
                const double q_t = q[i][j] + frac * (q[i + 1][j] - q[i][j]);
                w_right = inv_gamma_alpha * q_t;
            }
            const double dseg = s1 - s0;
            integral += (w_left * ((s1 - t) * J0 + J1) + w_right * ((t - s0) * J0 - J1)) / dseg;
        }
        kern::axpy(integral, op.eigenvector(j), out);
    }
    return out;
}

}  // namespace reactid
