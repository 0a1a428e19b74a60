#include "reactid/kernels.hpp"

#include <atomic>
#include <cmath>
#include <cstddef>

#if defined(__aarch64__)
#include <arm_neon.h>
#endif

namespace reactid::kern {

#if defined(__x86_64__)
const detail::Vtable& avx2_vtable();  // defined in kernels_avx2.cpp
#endif

namespace {

// ---------------------------------------------------------------- scalar

double dot_scalar(const double* x, const double* y, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
    return s;
}

double nrm2_sq_scalar(const double* x, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i] * x[i];
    return s;
}

void axpy_scalar(double a, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void axpby_scalar(double a, const double* x, double b, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] = a * x[i] + b * y[i];
}

void scal_scalar(double a, double* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) x[i] *= a;
}

double amax_scalar(const double* x, std::size_t n) {
    double m = 0.0;
    for (std::size_t i = 0; i < n; ++i) m = std::max(m, std::fabs(x[i]));
    return m;
}

constexpr detail::Vtable kScalar = {dot_scalar, nrm2_sq_scalar, axpy_scalar,
                                    axpby_scalar, scal_scalar, amax_scalar};

// ---------------------------------------------------------------- neon

#if defined(__aarch64__)

double dot_neon(const double* x, const double* y, std::size_t n) {
    float64x2_t acc0 = vdupq_n_f64(0.0), acc1 = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc0 = vfmaq_f64(acc0, vld1q_f64(x + i), vld1q_f64(y + i));
        acc1 = vfmaq_f64(acc1, vld1q_f64(x + i + 2), vld1q_f64(y + i + 2));
    }
    double s = vaddvq_f64(acc0) + vaddvq_f64(acc1);
    for (; i < n; ++i) s += x[i] * y[i];
    return s;
}

double nrm2_sq_neon(const double* x, std::size_t n) { return dot_neon(x, x, n); }

void axpy_neon(double a, const double* x, double* y, std::size_t n) {
    float64x2_t va = vdupq_n_f64(a);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2)
        vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
    for (; i < n; ++i) y[i] += a * x[i];
}

void axpby_neon(double a, const double* x, double b, double* y, std::size_t n) {
    float64x2_t va = vdupq_n_f64(a), vb = vdupq_n_f64(b);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        float64x2_t t = vmulq_f64(vb, vld1q_f64(y + i));
        vst1q_f64(y + i, vfmaq_f64(t, va, vld1q_f64(x + i)));
    }
    for (; i < n; ++i) y[i] = a * x[i] + b * y[i];
}

void scal_neon(double a, double* x, std::size_t n) {
    float64x2_t va = vdupq_n_f64(a);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) vst1q_f64(x + i, vmulq_f64(va, vld1q_f64(x + i)));
    for (; i < n; ++i) x[i] *= a;
}

double amax_neon(const double* x, std::size_t n) {
    float64x2_t m = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) m = vmaxq_f64(m, vabsq_f64(vld1q_f64(x + i)));
    double r = vmaxvq_f64(m);
    for (; i < n; ++i) r = std::max(r, std::fabs(x[i]));
    return r;
}

constexpr detail::Vtable kNeon = {dot_neon, nrm2_sq_neon, axpy_neon,
                                  axpby_neon, scal_neon, amax_neon};

#endif  // __aarch64__

// ---------------------------------------------------------------- dispatch

#if defined(__x86_64__)
bool avx2_available() {
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
}
#endif

const detail::Vtable* probe() {
#if defined(__x86_64__)
    if (avx2_available()) return &avx2_vtable();
#elif defined(__aarch64__)
    return &kNeon;
#endif
    return &kScalar;
}

std::atomic<const detail::Vtable*> g_active{nullptr};
std::atomic<const char*> g_name{"scalar"};

const detail::Vtable& active() {
    const detail::Vtable* vt = g_active.load(std::memory_order_acquire);
    if (!vt) {
        vt = probe();
        g_active.store(vt, std::memory_order_release);
        g_name.store(vt == &kScalar ? "scalar"
#if defined(__aarch64__)
                     : vt == &kNeon ? "neon"
#endif
                                    : "avx2");
    }
    return *vt;
}

}  // namespace

namespace detail {
const Vtable& scalar_vtable() { return kScalar; }
}  // namespace detail

void force_backend(Backend b) {
    switch (b) {
        case Backend::Auto:
            g_active.store(nullptr);
            (void)active();
            break;
        case Backend::Scalar:
            g_active.store(&kScalar);
            g_name.store("scalar");
            break;
        case Backend::Avx2: {
#if defined(__x86_64__)
            if (avx2_available()) {
                g_active.store(&avx2_vtable());
                g_name.store("avx2");
                return;
            }
#endif
            g_active.store(&kScalar);
            g_name.store("scalar");
            break;
        }
        case Backend::Neon: {
#if defined(__aarch64__)
            g_active.store(&kNeon);
            g_name.store("neon");
#else
            g_active.store(&kScalar);
            g_name.store("scalar");
#endif
            break;
        }
    }
}

std::string_view active_backend() {
    (void)active();
    return g_name.load();
}

double dot(std::span<const double> x, std::span<const double> y) {
    return active().dot(x.data(), y.data(), std::min(x.size(), y.size()));
}

double nrm2_sq(std::span<const double> x) { return active().nrm2_sq(x.data(), x.size()); }

void axpy(double a, std::span<const double> x, std::span<double> y) {
    active().axpy(a, x.data(), y.data(), std::min(x.size(), y.size()));
}

void axpby(double a, std::span<const double> x, double b, std::span<double> y) {
    active().axpby(a, x.data(), b, y.data(), std::min(x.size(), y.size()));
}

void scal(double a, std::span<double> x) { active().scal(a, x.data(), x.size()); }

double amax(std::span<const double> x) { return active().amax(x.data(), x.size()); }

}  // namespace reactid::kern
