#pragma once

#include <cstddef>
#include <span>
#include <string_view>

namespace reactid::kern {

/// Vectorized inner loops used by the solvers.  Every operation has a
/// scalar reference implementation plus SIMD variants (AVX2 on x86-64,
/// NEON on aarch64).  The backend is probed once at runtime; tests pin
/// specific backends to verify they agree with the scalar reference.
enum class Backend { Auto, Scalar, Avx2, Neon };

/// Pin the dispatch backend.  Auto re-probes CPU features.
/// Requesting an unsupported backend falls back to Scalar.
void force_backend(Backend b);

/// Name of the backend currently in use ("scalar", "avx2", "neon").
std::string_view active_backend();

/// sum_i x_i * y_i
double dot(std::span<const double> x, std::span<const double> y);

/// sum_i x_i^2
double nrm2_sq(std::span<const double> x);

/// y_i += a * x_i
void axpy(double a, std::span<const double> x, std::span<double> y);

/// y_i = a * x_i + b * y_i
void axpby(double a, std::span<const double> x, double b, std::span<double> y);

/// x_i *= a
void scal(double a, std::span<double> x);

/// max_i |x_i|  (0 for empty input)
double amax(std::span<const double> x);

namespace detail {
struct Vtable {
    double (*dot)(const double*, const double*, std::size_t);
    double (*nrm2_sq)(const double*, std::size_t);
    void (*axpy)(double, const double*, double*, std::size_t);
    void (*axpby)(double, const double*, double, double*, std::size_t);
    void (*scal)(double, double*, std::size_t);
    double (*amax)(const double*, std::size_t);
};
const Vtable& scalar_vtable();
}  // namespace detail

}  // namespace reactid::kern
