#pragma once

#include <stdexcept>

namespace reactid::mlf {

/// Evaluation parameters for the two-parameter Mittag-Leffler function
/// E_{alpha,beta}(z) on the real line.
///
/// The power series is summed in extended precision; once |z| exceeds the
/// series' safe range (or asymptotic_threshold, whichever is smaller) the
/// finite asymptotic expansion on the negative axis takes over.
struct MlfParams {
    double alpha = 0.5;
    double beta = 1.0;
    double series_tol = 1e-15;          // absolute truncation tolerance
    double asymptotic_threshold = 50.0; // |z| above which the asymptotic branch is preferred
    int asymptotic_terms = 10;          // minimum number of asymptotic terms

    void validate() const;
};

struct ParameterError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct NumericalError : std::runtime_error {
    double attained_residual;
    NumericalError(const std::string& what, double residual)
        : std::runtime_error(what), attained_residual(residual) {}
};

/// E_{alpha,beta}(z) for real z.  The asymptotic branch requires z < 0.
double mittag_leffler(const MlfParams& p, double z);

/// Envelope c/(1+|z|) dominating |E_{alpha,beta}| on the negative axis;
/// the constant is calibrated per (alpha, beta).
double mlf_decay_bound(const MlfParams& p, double z);

/// Power-series branch (extended-precision accumulation).  Valid while the
/// internal cancellation stays within the accumulator's headroom, i.e. for
/// |z| up to roughly series_safe_limit(alpha) on the negative axis.
double mlf_series(const MlfParams& p, double z);

/// Finite asymptotic sum -sum_{k>=1} z^{-k}/Gamma(beta - alpha k), z < 0.
/// Terms beyond asymptotic_terms are added until they drop below
/// series_tol or start growing (optimal truncation).
double mlf_asymptotic(const MlfParams& p, double z);

/// Largest |z| for which the series accumulator retains ~1e-10 absolute
/// accuracy against the alternating-series cancellation at this alpha.
double series_safe_limit(double alpha);

/// 1/Gamma(x) on the whole real line; exactly zero at the poles of Gamma.
double reciprocal_gamma(double x);

/// sin(pi x) with exact argument reduction.
double sinpi(double x);

}  // namespace reactid::mlf
