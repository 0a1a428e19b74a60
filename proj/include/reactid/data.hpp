#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "reactid/grid.hpp"
#include "reactid/spectral.hpp"

namespace reactid {

struct DegenerateDataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Final-time measurement bundle: the raw noisy trace g^delta, its noise
/// level, the eigenfunction-smoothed version g~ and the spectrally computed
/// L g~ the reconstruction needs.
struct OverposedData {
    Field raw;           // g^delta on the grid
    double delta = 0.0;  // L2 noise level
    Field smoothed;      // g~
    Field lap_smoothed;  // L g~  (note: L = -A)
    double sigma = 2.0;  // penalty order
    int n_modes = 0;     // eigen-expansion truncation
    double mu = 0.0;     // chosen regularization weight
    std::vector<double> coeffs;  // smoothed modal coefficients g_j
};

/// g^delta = g + e with e i.i.d. uniform per node, rescaled so that
/// ||e||_{L2,h} = level * ||g||_{L2,h} exactly.  Deterministic in the seed.
std::pair<Field, double> add_noise(const EllipticOperator& op, const Field& g, double level,
                                   std::uint64_t seed);

/// Eigenfunction least squares with an H^sigma penalty, the weight chosen by
/// bisection so the misfit lands in [delta, 1.2 delta] (discrepancy
/// principle).  delta = 0 degenerates to the plain projection onto the
/// first n_modes eigenfunctions.
OverposedData smooth_data(const EllipticOperator& op, const Field& gdelta, double delta,
                          double sigma, int n_modes);

/// Default truncation: largest j with lambda_j <= (n/4)^2.
int default_smoothing_modes(const EllipticOperator& op);

/// CSV field IO: header "x,value", one record per node, 17 significant digits.
void write_field_csv(const std::string& path, const Grid1D& grid, const Field& f);
/// Reads "x,value" records; validates the x column against the grid.
Field read_field_csv(const std::string& path, const Grid1D& grid);

}  // namespace reactid
