#pragma once

#include <stdexcept>
#include <vector>

namespace reactid {

/// Uniform 1-D mesh on [x_min, x_max]; the discretization substrate for
/// every field in the toolkit.
struct Grid1D {
    double x_min = 0.0;
    double x_max = 1.0;
    int n = 0;
    std::vector<double> nodes;

    Grid1D() = default;
    Grid1D(double a, double b, int count) : x_min(a), x_max(b), n(count) {
        if (!(a < b)) throw std::invalid_argument("Grid1D: x_min must be < x_max");
        if (count < 3) throw std::invalid_argument("Grid1D: need at least 3 nodes");
        nodes.resize(count);
        const double h = (b - a) / (count - 1);
        for (int i = 0; i < count; ++i) nodes[i] = a + h * i;
        nodes.back() = b;
    }

    double spacing() const { return (x_max - x_min) / (n - 1); }
};

using Field = std::vector<double>;

}  // namespace reactid
