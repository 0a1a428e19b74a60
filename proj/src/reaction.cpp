#include "reactid/reaction.hpp"

#include <algorithm>
#include <cmath>

namespace reactid {

ReactionTerm::ReactionTerm(std::vector<double> centers, double width, ClampInterval interval,
                           std::vector<double> coeffs)
    : centers_(std::move(centers)), width_(width), interval_(interval),
      coeffs_(std::move(coeffs)) {
    if (centers_.empty()) throw std::invalid_argument("ReactionTerm: need at least one center");
    if (!(width_ > 0.0)) throw std::invalid_argument("ReactionTerm: width must be positive");
    for (std::size_t j = 0; j + 1 < centers_.size(); ++j)
        if (!(centers_[j] < centers_[j + 1]))
            throw std::invalid_argument("ReactionTerm: centers must be strictly increasing");
    if (centers_.front() < interval_.g_min - 1e-12 || centers_.back() > interval_.g_max + 1e-12)
        throw std::invalid_argument("ReactionTerm: centers must lie inside the clamp interval");
    if (coeffs_.empty()) coeffs_.assign(centers_.size(), 0.0);
    if (coeffs_.size() != centers_.size())
        throw std::invalid_argument("ReactionTerm: coefficient/center size mismatch");
}

ReactionTerm ReactionTerm::equispaced(int m, ClampInterval interval) {
    if (m < 2) throw std::invalid_argument("ReactionTerm: need at least 2 centers");
    std::vector<double> centers(m);
    const double d = (interval.g_max - interval.g_min) / (m - 1);
    if (!(d > 0.0)) throw std::invalid_argument("ReactionTerm: degenerate interval");
    for (int j = 0; j < m; ++j) centers[j] = interval.g_min + d * j;
    centers.back() = interval.g_max;
    // width (2.2 spacing)^2: wide enough that a 25-center fit of a smooth
    // cubic stays below 1e-3 sup error, narrow enough that the Gram system
    // stays solvable to 1e-8 coefficient accuracy
    const double s = (2.2 * d) * (2.2 * d);
    return ReactionTerm(std::move(centers), s, interval);
}

ReactionTerm ReactionTerm::zero(ClampInterval interval, int m) {
    return equispaced(m, interval);
}

double ReactionTerm::basis(int j, double u) const {
    const double d = interval_.clamp(u) - centers_[j];
    return std::exp(-d * d / width_);
}

double ReactionTerm::eval(double u) const {
    const double z = interval_.clamp(u);
    double s = 0.0;
    for (std::size_t j = 0; j < centers_.size(); ++j) {
        const double d = z - centers_[j];
        s += coeffs_[j] * std::exp(-d * d / width_);
    }
    return s;
}

double ReactionTerm::eval_deriv(double u) const {
    if (!interval_.contains(u)) return 0.0;
    double s = 0.0;
    for (std::size_t j = 0; j < centers_.size(); ++j) {
        const double d = u - centers_[j];
        s += coeffs_[j] * std::exp(-d * d / width_) * (-2.0 * d / width_);
    }
    return s;
}

double ReactionTerm::w1inf_norm(int samples) const {
    double m0 = 0.0, m1 = 0.0;
    for (int i = 0; i < samples; ++i) {
        const double u =
            interval_.g_min + (interval_.g_max - interval_.g_min) * i / (samples - 1.0);
        m0 = std::max(m0, std::fabs(eval(u)));
        m1 = std::max(m1, std::fabs(eval_deriv(u)));
    }
    return m0 + m1;
}

double ReactionTerm::sup_distance(const ReactionTerm& other, double lo, double hi,
                                  int samples) const {
    double m = 0.0;
    for (int i = 0; i < samples; ++i) {
        const double u = lo + (hi - lo) * i / (samples - 1.0);
        m = std::max(m, std::fabs(eval(u) - other.eval(u)));
    }
    return m;
}

}  // namespace reactid
