#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <random>

#include "reactid/data.hpp"

using namespace reactid;

namespace {

EllipticOperator robin_op(int n) {
    Grid1D g(0.0, 1.0, n);
    Field a(n, 1.0), c(n, 0.0);
    return EllipticOperator(std::move(g), std::move(a), std::move(c), BoundarySpec::robin(1.0),
                            BoundarySpec::robin(1.0));
}

Field band_limited(const EllipticOperator& op, int modes, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Field f(op.n_nodes(), 0.0);
    for (int j = 0; j < modes; ++j) {
        const double cj = u(rng);
        for (int i = 0; i < op.n_nodes(); ++i) f[i] += cj * op.eigenvector(j)[i];
    }
    return f;
}

}  // namespace

TEST_CASE("add_noise") {
    auto op = robin_op(201);
    auto g = band_limited(op, 5, 3);

    SUBCASE("level zero is the identity") {
        auto [gd, delta] = add_noise(op, g, 0.0, 42);
        CHECK(delta == 0.0);
        for (std::size_t i = 0; i < g.size(); ++i) CHECK(gd[i] == g[i]);
    }
    SUBCASE("exact noise scaling") {
        auto [gd, delta] = add_noise(op, g, 0.01, 42);
        CHECK(delta == doctest::Approx(0.01 * op.norm(g)).epsilon(1e-12));
        Field e(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) e[i] = gd[i] - g[i];
        CHECK(op.norm(e) == doctest::Approx(delta).epsilon(1e-10));
    }
    SUBCASE("determinism in the seed") {
        auto [g1, d1] = add_noise(op, g, 0.05, 7);
        auto [g2, d2] = add_noise(op, g, 0.05, 7);
        auto [g3, d3] = add_noise(op, g, 0.05, 8);
        CHECK(d1 == d2);
        for (std::size_t i = 0; i < g.size(); ++i) CHECK(g1[i] == g2[i]);
        double diff = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) diff += std::fabs(g1[i] - g3[i]);
        CHECK(diff > 0.0);
    }
}

TEST_CASE("smooth_data") {
    auto op = robin_op(201);

    SUBCASE("noiseless band-limited data reproduces itself") {
        auto g = band_limited(op, 5, 11);
        auto d = smooth_data(op, g, 0.0, 2.0, 30);
        for (int i = 0; i < op.n_nodes(); ++i)
            CHECK(std::fabs(d.smoothed[i] - g[i]) < 1e-10);
        CHECK(d.mu == 0.0);
    }

    SUBCASE("discrepancy bracket") {
        auto g = band_limited(op, 3, 13);
        auto [gd, delta] = add_noise(op, g, 0.01, 5);
        auto d = smooth_data(op, gd, delta, 2.0, 60);
        Field resid(op.n_nodes());
        for (int i = 0; i < op.n_nodes(); ++i) resid[i] = d.smoothed[i] - gd[i];
        const double misfit = op.norm(resid);
        CHECK(misfit >= 0.99 * delta);     // within a hair of the bracket
        CHECK(misfit <= 1.2 * delta * (1.0 + 1e-9));
    }

    SUBCASE("penalty monotonicity over a mu grid") {
        auto g = band_limited(op, 4, 17);
        auto [gd, delta] = add_noise(op, g, 0.05, 21);
        auto coeffs = op.modal_coefficients(gd);
        const int nm = 40;
        double prev_pen = 1e300, prev_misfit = -1.0;
        for (double mu : {1e-8, 1e-6, 1e-4, 1e-2, 1.0}) {
            double pen = 0.0, misfit2 = 0.0;
            for (int j = 0; j < nm; ++j) {
                const double ls = std::pow(op.eigenvalue(j), 2.0);
                const double cj = coeffs[j] / (1.0 + mu * ls);
                pen += ls * cj * cj;
                const double r = coeffs[j] - cj;
                misfit2 += r * r;
            }
            CHECK(pen < prev_pen);
            CHECK(misfit2 > prev_misfit);
            prev_pen = pen;
            prev_misfit = misfit2;
        }
    }

    SUBCASE("limit consistency as delta -> 0") {
        auto g = band_limited(op, 4, 23);
        double prev = 1e300;
        for (double level : {1e-2, 1e-3, 1e-4}) {
            auto [gd, delta] = add_noise(op, g, level, 31);
            auto d = smooth_data(op, gd, delta, 2.0, 60);
            Field err(op.n_nodes());
            for (int i = 0; i < op.n_nodes(); ++i) err[i] = d.smoothed[i] - g[i];
            const double e = op.norm(err);
            CHECK(e < prev);
            prev = e;
        }
        CHECK(prev < 1e-3);
    }

    SUBCASE("L-consistency in the dual norm") {
        auto g = band_limited(op, 6, 29);
        auto [gd, delta] = add_noise(op, g, 0.01, 37);
        auto d = smooth_data(op, gd, delta, 2.0, 50);
        const double lhs = hdot_norm({&op, -2.0}, d.lap_smoothed);
        const double rhs = hdot_norm({&op, 0.0}, d.smoothed);
        CHECK(std::fabs(lhs - rhs) < 1e-8 * (1.0 + rhs));
    }

    SUBCASE("degenerate data error") {
        Field g(op.n_nodes(), 1e-6);
        CHECK_THROWS_AS(smooth_data(op, g, 10.0, 2.0, 30), DegenerateDataError);
    }

    SUBCASE("sigma must exceed 3/2") {
        auto g = band_limited(op, 3, 41);
        CHECK_THROWS_AS(smooth_data(op, g, 0.0, 1.0, 30), std::invalid_argument);
    }
}

TEST_CASE("field csv round trip") {
    auto op = robin_op(33);
    auto g = band_limited(op, 4, 43);
    const std::string path = "/tmp/reactid_test_field.csv";
    write_field_csv(path, op.grid(), g);
    auto back = read_field_csv(path, op.grid());
    for (int i = 0; i < op.n_nodes(); ++i) CHECK(back[i] == g[i]);  // 17 digits round-trip
    std::remove(path.c_str());
}
