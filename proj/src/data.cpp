#include "reactid/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <stdexcept>

#include "reactid/kernels.hpp"

namespace reactid {

std::pair<Field, double> add_noise(const EllipticOperator& op, const Field& g, double level,
                                   std::uint64_t seed) {
    if (level < 0.0) throw std::invalid_argument("add_noise: level must be >= 0");
    if (level == 0.0) return {g, 0.0};

    const int n = static_cast<int>(g.size());
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    Field e(n);
    for (double& ei : e) ei = unif(rng);

    const double target = level * op.norm(g);
    const double enorm = op.norm(e);
    if (enorm == 0.0) return {g, 0.0};
    const double scale = target / enorm;

    Field out(g);
    kern::axpy(scale, e, out);
    return {out, target};
}

int default_smoothing_modes(const EllipticOperator& op) {
    const double cap = std::pow(op.n_nodes() / 4.0, 2.0);
    int j = 0;
    while (j < op.n_modes() && op.eigenvalue(j) <= cap) ++j;
    return std::max(j, 1);
}

OverposedData smooth_data(const EllipticOperator& op, const Field& gdelta, double delta,
                          double sigma, int n_modes) {
    if (n_modes < 1 || n_modes > op.n_modes())
        throw std::invalid_argument("smooth_data: n_modes out of range");
    if (!(sigma > 1.5))
        throw std::invalid_argument("smooth_data: penalty order sigma must exceed 3/2");
    if (delta < 0.0) throw std::invalid_argument("smooth_data: delta must be >= 0");

    const int n = op.n_nodes();
    auto d = op.modal_coefficients(gdelta);

    // Misfit of the filtered coefficients g_j = d_j / (1 + mu lambda_j^sigma):
    // within-band part plus the fixed truncation tail.
    std::vector<double> lam_s(n_modes);
    for (int j = 0; j < n_modes; ++j) lam_s[j] = std::pow(op.eigenvalue(j), sigma);

    double band2 = 0.0;
    for (int j = 0; j < n_modes; ++j) band2 += d[j] * d[j];
    double total2 = op.inner(gdelta, gdelta);
    const double tail2 = std::max(0.0, total2 - band2);

    auto misfit = [&](double mu) {
        double s = tail2;
        for (int j = 0; j < n_modes; ++j) {
            const double resid = d[j] * (1.0 - 1.0 / (1.0 + mu * lam_s[j]));
            s += resid * resid;
        }
        return std::sqrt(s);
    };

    double mu = 0.0;
    if (delta > 0.0) {
        if (std::sqrt(total2) <= delta)
            throw DegenerateDataError("smooth_data: noise level exceeds the data norm");
        const double lo_misfit = misfit(0.0);
        if (lo_misfit < delta) {
            // bisect log(mu) so the misfit lands in [delta, 1.2 delta]
            double mu_lo = 0.0, mu_hi = 1.0;
            while (misfit(mu_hi) < delta && mu_hi < 1e30) mu_hi *= 10.0;
            for (int it = 0; it < 200; ++it) {
                const double mid = mu_lo == 0.0 ? mu_hi * 0.5 : std::sqrt(mu_lo * mu_hi);
                const double f = misfit(mid);
                if (f < delta)
                    mu_lo = mid;
                else
                    mu_hi = mid;
                if (misfit(mu_hi) <= 1.2 * delta) break;
            }
            mu = mu_hi;
        }
        // lo_misfit >= delta: the truncation already discards at least the
        // noise; the plain projection (mu = 0) is the discrepancy solution.
    }

    OverposedData out;
    out.raw = gdelta;
    out.delta = delta;
    out.sigma = sigma;
    out.n_modes = n_modes;
    out.mu = mu;
    out.coeffs.resize(n_modes);
    for (int j = 0; j < n_modes; ++j) out.coeffs[j] = d[j] / (1.0 + mu * lam_s[j]);

    out.smoothed.assign(n, 0.0);
    out.lap_smoothed.assign(n, 0.0);
    for (int j = 0; j < n_modes; ++j) {
        kern::axpy(out.coeffs[j], op.eigenvector(j), out.smoothed);
        kern::axpy(-op.eigenvalue(j) * out.coeffs[j], op.eigenvector(j), out.lap_smoothed);
    }
    return out;
}

void write_field_csv(const std::string& path, const Grid1D& grid, const Field& f) {
    if ((int)f.size() != grid.n)
        throw std::invalid_argument("write_field_csv: field/grid size mismatch");
    std::FILE* fp = std::fopen(path.c_str(), "w");
    if (!fp) throw std::runtime_error("write_field_csv: cannot open " + path);
    std::fprintf(fp, "x,value\n");
    for (int i = 0; i < grid.n; ++i)
        std::fprintf(fp, "%.17g,%.17g\n", grid.nodes[i], f[i]);
    std::fclose(fp);
}

Field read_field_csv(const std::string& path, const Grid1D& grid) {
    std::FILE* fp = std::fopen(path.c_str(), "r");
    if (!fp) throw std::runtime_error("read_field_csv: cannot open " + path);
    Field f;
    f.reserve(grid.n);
    char line[256];
    bool header = true;
    while (std::fgets(line, sizeof line, fp)) {
        if (header) {
            header = false;
            continue;
        }
        double x, v;
        if (std::sscanf(line, "%lf,%lf", &x, &v) != 2) continue;
        const int i = static_cast<int>(f.size());
        if (i >= grid.n) break;
        if (std::fabs(x - grid.nodes[i]) > 1e-9 * (1.0 + std::fabs(grid.nodes[i]))) {
            std::fclose(fp);
            throw std::runtime_error("read_field_csv: node mismatch at row " +
                                     std::to_string(i));
        }
        f.push_back(v);
    }
    std::fclose(fp);
    if ((int)f.size() != grid.n)
        throw std::runtime_error("read_field_csv: wrong record count in " + path);
    return f;
}

}  // namespace reactid
