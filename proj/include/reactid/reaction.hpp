#pragma once

#include <stdexcept>
#include <vector>

namespace reactid {

/// Clamp interval I = [g_min, g_max]; the projection P truncates reaction
/// arguments into I so f is only evaluated where the data identifies it.
struct ClampInterval {
    double g_min;
    double g_max;

    ClampInterval(double lo, double hi) : g_min(lo), g_max(hi) {
        if (!(lo <= hi)) throw std::invalid_argument("ClampInterval: g_min must be <= g_max");
    }

    double clamp(double z) const { return z < g_min ? g_min : (z > g_max ? g_max : z); }
    bool contains(double z) const { return z >= g_min && z <= g_max; }

    /// Effectively unclamped interval for plain forward runs.
    static ClampInterval unbounded() { return {-1e300, 1e300}; }
};

/// Reaction term f represented over a Gaussian radial basis
/// b_j(u) = exp(-(u - u_j)^2 / s) with centers u_j inside the clamp interval.
class ReactionTerm {
public:
    ReactionTerm(std::vector<double> centers, double width, ClampInterval interval,
                 std::vector<double> coeffs = {});

    /// m equispaced centers spanning the interval; width (2.2*spacing)^2.
    static ReactionTerm equispaced(int m, ClampInterval interval);

    /// Zero reaction on an unbounded interval (data-generation truths wrap
    /// plain callables instead; see cli builtins).
    static ReactionTerm zero(ClampInterval interval, int m = 25);

    double operator()(double u) const { return eval(u); }
    double eval(double u) const;
    double eval_deriv(double u) const;  // zero outside the interval

    int size() const { return static_cast<int>(centers_.size()); }
    const std::vector<double>& centers() const { return centers_; }
    const std::vector<double>& coeffs() const { return coeffs_; }
    std::vector<double>& coeffs() { return coeffs_; }
    double width() const { return width_; }
    const ClampInterval& interval() const { return interval_; }

    /// Basis element b_j evaluated at (clamped) u.
    double basis(int j, double u) const;

    /// sup_I |f| + sup_I |f'| on a dense sampling of the interval.
    double w1inf_norm(int samples = 512) const;

    /// sup over a dense sampling of |f - other| on [lo, hi].
    double sup_distance(const ReactionTerm& other, double lo, double hi,
                        int samples = 512) const;

private:
    std::vector<double> centers_;
    double width_;
    ClampInterval interval_;
    std::vector<double> coeffs_;
};

}  // namespace reactid
