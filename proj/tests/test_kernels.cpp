#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <vector>

#include "reactid/kernels.hpp"

using namespace reactid::kern;

namespace {

std::vector<double> random_vec(std::size_t n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    std::vector<double> v(n);
    for (double& x : v) x = u(rng);
    return v;
}

const std::size_t kLengths[] = {0, 1, 2, 3, 5, 8, 17, 31, 64, 257, 1001};

}  // namespace

TEST_CASE("simd backends agree with the scalar reference") {
    std::mt19937_64 rng(42);
    for (Backend b : {Backend::Avx2, Backend::Neon, Backend::Auto}) {
        force_backend(b);
        INFO("backend: ", active_backend());
        for (std::size_t n : kLengths) {
            auto x = random_vec(n, rng);
            auto y = random_vec(n, rng);

            force_backend(Backend::Scalar);
            const double dot_ref = dot(x, y);
            const double nrm_ref = nrm2_sq(x);
            const double amax_ref = amax(x);
            auto y_ref = y;
            axpy(0.37, x, y_ref);
            auto y_ref2 = y;
            axpby(1.3, x, -0.7, y_ref2);
            auto x_ref = x;
            scal(-2.5, x_ref);

            force_backend(b);
            const double tol = 1e-13 * (1.0 + n);
            CHECK(dot(x, y) == doctest::Approx(dot_ref).epsilon(tol));
            CHECK(nrm2_sq(x) == doctest::Approx(nrm_ref).epsilon(tol));
            CHECK(amax(x) == amax_ref);  // max of |.| is exact
            auto y_simd = y;
            axpy(0.37, x, y_simd);
            auto y_simd2 = y;
            axpby(1.3, x, -0.7, y_simd2);
            auto x_simd = x;
            scal(-2.5, x_simd);
            for (std::size_t i = 0; i < n; ++i) {
                CHECK(y_simd[i] == doctest::Approx(y_ref[i]).epsilon(1e-14));
                CHECK(y_simd2[i] == doctest::Approx(y_ref2[i]).epsilon(1e-14));
                CHECK(x_simd[i] == x_ref[i]);
            }
        }
    }
    force_backend(Backend::Auto);
}

TEST_CASE("edge cases") {
    force_backend(Backend::Auto);
    std::vector<double> empty;
    CHECK(dot(empty, empty) == 0.0);
    CHECK(amax(empty) == 0.0);
    std::vector<double> one{-3.5};
    CHECK(amax(one) == 3.5);
    CHECK(nrm2_sq(one) == doctest::Approx(12.25));
}

TEST_CASE("backend probe names") {
    force_backend(Backend::Auto);
    const auto name = active_backend();
    CHECK((name == "scalar" || name == "avx2" || name == "neon"));
#if defined(__x86_64__)
    force_backend(Backend::Neon);  // unsupported here: falls back
    CHECK(active_backend() == "scalar");
#endif
    force_backend(Backend::Auto);
}
