#include "reactid/mlf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#if defined(__SIZEOF_FLOAT128__) && !defined(REACTID_NO_FLOAT128)
#include <quadmath.h>
#define REACTID_HAVE_FLOAT128 1
#endif

namespace reactid::mlf {

namespace {

constexpr int kSeriesCap = 4000;
constexpr int kAsymptoticCap = 300;

// Headroom of the extended-precision accumulator, in nats.  The alternating
// series for E(-x) cancels down from a peak term of magnitude ~exp(x^{1/alpha});
// the accumulator must absorb that peak while keeping ~1e-10 absolute accuracy.
#if REACTID_HAVE_FLOAT128
constexpr double kAccumulatorHeadroomNats = 48.0;  // ~33 digits minus margin
using wide = __float128;
inline wide wide_abs(wide x) { return fabsq(x); }
inline wide wide_tgamma(wide x) { return tgammaq(x); }
inline wide wide_floor(wide x) { return floorq(x); }
#else
constexpr double kAccumulatorHeadroomNats = 18.0;  // long double fallback
using wide = long double;
inline wide wide_abs(wide x) { return fabsl(x); }
inline wide wide_tgamma(wide x) { return tgammal(x); }
inline wide wide_floor(wide x) { return floorl(x); }
#endif

// Above alpha ~ 1.2 the Mittag-Leffler function on the negative axis carries
// an oscillatory contribution ~exp(|z|^{1/alpha} cos(pi/alpha)) that the
// algebraic asymptotic sum misses, so only the series branch is trusted there.
constexpr double kAsymptoticAlphaMax = 1.2;

}  // namespace

void MlfParams::validate() const {
    // alpha = 2 is admitted for the cosine identity E_{2,1}(-x^2) = cos x.
    if (!(alpha > 0.0) || !(alpha <= 2.0))
        throw ParameterError("mlf: alpha must lie in (0, 2], got " + std::to_string(alpha));
    if (!(series_tol > 0.0))
        throw ParameterError("mlf: series_tol must be positive");
    if (!(asymptotic_threshold > 0.0))
        throw ParameterError("mlf: asymptotic_threshold must be positive");
    if (asymptotic_terms < 1)
        throw ParameterError("mlf: asymptotic_terms must be >= 1");
    if (!std::isfinite(beta))
        throw ParameterError("mlf: beta must be finite");
}

double sinpi(double x) {
    const double n = std::round(x);
    const double r = x - n;  // exact, r in [-1/2, 1/2]
    const double s = std::sin(M_PI * r);
    return std::fmod(n, 2.0) == 0.0 ? s : -s;
}

double reciprocal_gamma(double x) {
    if (x > 0.5) {
        // exp(-lgamma) keeps well clear of tgamma overflow at x > 171.
        if (x > 170.0) {
            double lg = std::lgamma(x);
            return lg > 745.0 ? 0.0 : std::exp(-lg);
        }
        return 1.0 / std::tgamma(x);
    }
    // Reflection: 1/Gamma(x) = sin(pi x)/pi * Gamma(1-x); zero at poles.
    if (x == std::floor(x)) return 0.0;
    return sinpi(x) / M_PI * std::tgamma(1.0 - x);
}

double series_safe_limit(double alpha) {
    return std::pow(kAccumulatorHeadroomNats, alpha);
}

double mlf_series(const MlfParams& p, double z) {
    p.validate();
    const wide zw = z;
    const wide aw = p.alpha;
    const wide bw = p.beta;

    wide sum = 0;
    wide zk = 1;  // z^k
    double prev_mag = std::numeric_limits<double>::infinity();
    double last_mag = prev_mag;

    for (int k = 0; k < kSeriesCap; ++k) {
        wide arg = aw * static_cast<wide>(k) + bw;
        wide term;
        if (arg <= 0 && arg == wide_floor(arg)) {
            term = 0;  // 1/Gamma at a pole
        } else {
            term = zk / wide_tgamma(arg);
        }
        sum += term;
        zk *= zw;

        double mag = static_cast<double>(wide_abs(term));
        last_mag = mag;
        if (k >= 2 && mag < p.series_tol && mag <= prev_mag) {
            return static_cast<double>(sum);
        }
        if (mag > 0.0) prev_mag = mag;
    }
    throw NumericalError(
        "mlf: series did not converge within " + std::to_string(kSeriesCap) +
            " terms (alpha=" + std::to_string(p.alpha) + ", z=" + std::to_string(z) + ")",
        last_mag);
}

double mlf_asymptotic(const MlfParams& p, double z) {
    p.validate();
    if (!(z < 0.0))
        throw ParameterError("mlf: asymptotic branch requires z < 0, got " + std::to_string(z));

    const double x = -z;
    const double log_x = std::log(x);

    // Terms -z^{-k}/Gamma(beta - alpha k) in log space (the reflection
    // formula keeps |1/Gamma| stable for very negative arguments).  Gamma
    // poles intersperse exact zeros and near-poles intersperse anomalously
    // tiny terms, so the optimal truncation point is chosen afterwards by
    // the envelope of the following terms, not by each term's own size.
    std::vector<double> terms;
    terms.reserve(64);
    double ln_floor = std::numeric_limits<double>::infinity();
    double prev_ln_mag = std::numeric_limits<double>::infinity();
    bool diverged = false;
    for (int k = 1; k <= kAsymptoticCap; ++k) {
        const double g = p.beta - p.alpha * k;
        double ln_mag, sign;
        if (g > 0.5) {
            const double gam = std::tgamma(g);
            ln_mag = -std::log(std::fabs(gam)) - k * log_x;
            sign = gam > 0 ? 1.0 : -1.0;
        } else {
            const double sp = sinpi(g);
            if (sp == 0.0) {
                terms.push_back(0.0);  // exact Gamma pole
                continue;
            }
            // 1/Gamma(g) = sinpi(g) Gamma(1-g) / pi
            ln_mag = std::log(std::fabs(sp) / M_PI) + std::lgamma(1.0 - g) - k * log_x;
            sign = sp > 0 ? 1.0 : -1.0;
        }
        sign *= (k & 1) ? 1.0 : -1.0;  // -z^{-k} = -(-1)^k x^{-k}
        if (ln_mag < ln_floor) ln_floor = ln_mag;
        if (ln_mag > ln_floor + 42.0 || ln_mag > 700.0) {
            diverged = true;
            terms.push_back(sign * std::exp(std::min(ln_mag, 700.0)));
            break;
        }
        terms.push_back(ln_mag < -745.0 ? 0.0 : sign * std::exp(ln_mag));
        // converged: two consecutive nonzero terms under tolerance (a single
        // tiny term may just sit next to a Gamma pole)
        if ((int)terms.size() >= p.asymptotic_terms &&
            std::max(ln_mag, prev_ln_mag) < std::log(p.series_tol))
            break;
        prev_ln_mag = ln_mag;
    }

    // Score each cut by the largest of the following few terms (a remainder
    // proxy robust to pole dips); return the prefix sum at the best cut.
    const int n = static_cast<int>(terms.size());
    if (n == 0) return 0.0;
    std::vector<double> prefix(n + 1, 0.0);
    for (int k = 0; k < n; ++k) prefix[k + 1] = prefix[k] + terms[k];

    const int max_cut = diverged ? n - 1 : n;
    const int min_cut = std::min(p.asymptotic_terms, max_cut);
    double best_sum = prefix[max_cut];
    double best_score = std::numeric_limits<double>::infinity();
    for (int cut = min_cut; cut <= max_cut; ++cut) {
        double score = 0.0;
        for (int j = cut; j < std::min(cut + 8, n); ++j)
            score = std::max(score, std::fabs(terms[j]));
        if (score < best_score) {
            best_score = score;
            best_sum = prefix[cut];
        }
    }
    return best_sum;
}

double mittag_leffler(const MlfParams& p, double z) {
    p.validate();
    if (!std::isfinite(z)) throw ParameterError("mlf: z must be finite");
    if (z == 0.0) return reciprocal_gamma(p.beta);
    if (p.alpha == 1.0 && p.beta == 1.0) return std::exp(z);  // exact identity

    const double safe = series_safe_limit(p.alpha);
    if (z > 0.0) {
        if (z > safe)
            throw NumericalError("mlf: positive argument exceeds series range", z);
        return mlf_series(p, z);
    }

    const double switch_x = std::min(p.asymptotic_threshold, safe);
    if (-z <= switch_x) return mlf_series(p, z);

    if (p.alpha > kAsymptoticAlphaMax) {
        if (-z <= safe) return mlf_series(p, z);
        throw NumericalError(
            "mlf: |z| exceeds the supported range for alpha > 1.2 (no asymptotic branch)", -z);
    }
    return mlf_asymptotic(p, z);
}

double mlf_decay_bound(const MlfParams& p, double z) {
    p.validate();
    if (z > 0.0) throw ParameterError("mlf: decay bound requires z <= 0");

    // Empirical envelope constant: sup of |E|(1+|z|) over a log-spaced grid,
    // padded by 25%.  Corollary-style bounds fix the shape, not the constant.
    double c = std::fabs(reciprocal_gamma(p.beta));
    const double grid_max =
        p.alpha > kAsymptoticAlphaMax ? series_safe_limit(p.alpha) : 16384.0;
    for (double x = 1.0 / 64.0; x <= grid_max; x *= 2.0) {
        double v = std::fabs(mittag_leffler(p, -x));
        c = std::max(c, v * (1.0 + x));
    }
    return 1.25 * c / (1.0 + std::fabs(z));
}

}  // namespace reactid::mlf
