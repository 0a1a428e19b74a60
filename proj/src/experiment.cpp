#include "reactid/experiment.hpp"

#include <Eigen/Dense>

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <thread>
#include <vector>

#include "reactid/kernels.hpp"

namespace reactid {

namespace fs = std::filesystem;

ScalarFn make_zeldovich(double a) {
    return [a](double u) { return 2.0 * u * (1.0 - u) * (u - a); };
}

ScalarFn make_lipschitz_b() {
    return [](double u) {
        if (u <= 0.5) return 8.0 * u * u;
        return (1.0 + std::cos(5.0 * (u - 0.5))) * std::exp(-(u - 0.5));
    };
}

namespace {

ScalarFn truth_from_config(const ExperimentConfig& cfg) {
    if (cfg.truth == "zeldovich") return make_zeldovich(cfg.zeldovich_a);
    if (cfg.truth == "lipschitz_b") return make_lipschitz_b();
    if (cfg.truth == "zero") return [](double) { return 0.0; };
    // custom RBF table: CSV rows "center,coeff", width from config
    std::FILE* fp = std::fopen(cfg.truth_file.c_str(), "r");
    if (!fp) throw ConfigError("truth.file: cannot open " + cfg.truth_file);
    std::vector<double> centers, coeffs;
    char line[256];
    bool header = true;
    while (std::fgets(line, sizeof line, fp)) {
        double c, v;
        if (std::sscanf(line, "%lf,%lf", &c, &v) == 2) {
            centers.push_back(c);
            coeffs.push_back(v);
        } else if (!header) {
            break;
        }
        header = false;
    }
    std::fclose(fp);
    if (centers.size() < 2) throw ConfigError("truth.file: need at least 2 rows");
    const double width = cfg.truth_width > 0.0
                             ? cfg.truth_width
                             : std::pow(2.0 * (centers[1] - centers[0]), 2);
    auto term = std::make_shared<ReactionTerm>(centers, width,
                                               ClampInterval(centers.front(), centers.back()),
                                               coeffs);
    return [term](double u) { return term->eval(u); };
}

BoundarySpec bc_from_config(const std::string& kind, double gamma) {
    return kind == "dirichlet" ? BoundarySpec::dirichlet() : BoundarySpec::robin(gamma);
}

Field shape_sine(const Grid1D& g, double amplitude) {
    Field f(g.n);
    const double L = g.x_max - g.x_min;
    for (int i = 0; i < g.n; ++i)
        f[i] = amplitude * std::sin(M_PI * (g.nodes[i] - g.x_min) / L);
    return f;
}

void write_kv_report(const std::string& path,
                     const std::vector<std::pair<std::string, std::string>>& rows) {
    std::FILE* fp = std::fopen(path.c_str(), "w");
    if (!fp) throw std::runtime_error("cannot open " + path);
    for (const auto& [k, v] : rows) std::fprintf(fp, "%s = %s\n", k.c_str(), v.c_str());
    std::fclose(fp);
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

ExperimentSetup build_setup(const ExperimentConfig& cfg) {
    ExperimentSetup s;
    s.grid = Grid1D(cfg.x_min, cfg.x_max, cfg.n);
    Field a(cfg.n, cfg.a_const), c(cfg.n, cfg.c_const);
    s.op = std::make_shared<EllipticOperator>(s.grid, a, c,
                                              bc_from_config(cfg.bc_left, cfg.gamma_left),
                                              bc_from_config(cfg.bc_right, cfg.gamma_right),
                                              cfg.shift);
    s.tc.alpha = cfg.alpha;
    s.tc.T = cfg.T;
    s.tc.n_steps = cfg.n_steps;
    if (cfg.scheme == "crank_nicolson")
        s.tc.scheme = Scheme::CrankNicolson;
    else if (cfg.scheme == "fractional_l2")
        s.tc.scheme = Scheme::FractionalL2;
    else
        s.tc.scheme = cfg.alpha == 1.0 ? Scheme::CrankNicolson : Scheme::FractionalL2;

    if (cfg.ic == "zero")
        s.u0.assign(cfg.n, 0.0);
    else if (cfg.ic == "sine")
        s.u0 = shape_sine(s.grid, cfg.ic_amplitude);
    else
        s.u0 = read_field_csv(cfg.ic_file, s.grid);

    if (cfg.source == "zero") {
        s.r = [](double, double) { return 0.0; };
    } else if (cfg.source == "sine") {
        const double amp = cfg.source_amplitude;
        const double xmin = cfg.x_min, L = cfg.x_max - cfg.x_min;
        s.r = [amp, xmin, L](double x, double) { return amp * std::sin(M_PI * (x - xmin) / L); };
    } else {
        auto shape = std::make_shared<Field>(read_field_csv(cfg.source_file, s.grid));
        const Grid1D grid = s.grid;
        s.r = [shape, grid](double x, double) {
            const double h = grid.spacing();
            int i = std::min(grid.n - 1, std::max(0, (int)std::lround((x - grid.x_min) / h)));
            return (*shape)[i];
        };
    }

    if (cfg.data_file.empty()) {
        s.truth = truth_from_config(cfg);
        s.truth_name = cfg.truth;
    }
    return s;
}

ReactionTerm fit_reaction(const ScalarFn& f, const ReactionTerm& basis) {
    const int m = basis.size();
    const auto& I = basis.interval();
    const int pts = 8 * m;
    Eigen::MatrixXd B(pts, m);
    Eigen::VectorXd y(pts);
    for (int i = 0; i < pts; ++i) {
        const double u = I.g_min + (I.g_max - I.g_min) * i / (pts - 1.0);
        y(i) = f(u);
        for (int j = 0; j < m; ++j) B(i, j) = basis.basis(j, u);
    }
    Eigen::MatrixXd G0 = B.transpose() * B;
    Eigen::MatrixXd G = G0;
    G.diagonal().array() += 1e-12 * G0.trace() / m;
    Eigen::VectorXd rhs = B.transpose() * y;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(G);
    Eigen::VectorXd c = ldlt.solve(rhs);
    Eigen::VectorXd r(m);
    for (int sweep = 0; sweep < 3; ++sweep) {  // extended-precision residual
        for (int j = 0; j < m; ++j) {
            long double acc = rhs(j);
            for (int k = 0; k < m; ++k)
                acc -= static_cast<long double>(G0(j, k)) * static_cast<long double>(c(k));
            r(j) = static_cast<double>(acc);
        }
        c += ldlt.solve(r);
    }
    ReactionTerm out = basis;
    out.coeffs().assign(c.data(), c.data() + m);
    return out;
}

namespace {

struct PreparedData {
    OverposedData gdata;
    ClampInterval clamp{0.0, 1.0};
    ReactionTerm basis{std::vector<double>{0.0, 1.0}, 1.0, ClampInterval(0.0, 1.0)};
    Field g_clean;  // empty when external
};

PreparedData prepare_data(const ExperimentConfig& cfg, const ExperimentSetup& s) {
    PreparedData pd;
    Field gdelta;
    double delta = 0.0;
    if (!cfg.data_file.empty()) {
        gdelta = read_field_csv(cfg.data_file, s.grid);
        delta = cfg.noise_level * s.op->norm(gdelta);
    } else {
        auto hist = solve_forward(*s.op, s.tc, s.u0, s.truth, s.r, ClampInterval::unbounded());
        pd.g_clean = hist.states.back();
        auto [gd, d] = add_noise(*s.op, pd.g_clean, cfg.noise_level, cfg.seed);
        gdelta = std::move(gd);
        delta = d;
    }
    const int n_modes = cfg.n_modes > 0 ? cfg.n_modes : default_smoothing_modes(*s.op);
    pd.gdata = smooth_data(*s.op, gdelta, delta, cfg.sigma, n_modes);

    double lo = pd.gdata.smoothed[0], hi = lo;
    for (double v : pd.gdata.smoothed) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    pd.clamp = ClampInterval(lo, hi);
    pd.basis = ReactionTerm::equispaced(cfg.basis_m, pd.clamp);
    return pd;
}

ReactionTerm newton_initial(const ExperimentConfig& cfg, const ReactionTerm& basis) {
    if (cfg.newton_init == "zero") return basis;
    if (cfg.newton_init == "sine_init")
        return fit_reaction([](double u) { return 1.0 + std::sin(4.0 * u); }, basis);
    return fit_reaction([](double u) { return u * (1.0 - u) * (u - 0.25); }, basis);
}

}  // namespace

int cmd_solve(const ExperimentConfig& cfg, const std::string& out_dir) {
    auto s = build_setup(cfg);
    if (!s.truth) throw ConfigError("solve: needs a truth reaction, not external data");
    fs::create_directories(out_dir);

    StateHistory hist;
    try {
        hist = solve_forward(*s.op, s.tc, s.u0, s.truth, s.r, ClampInterval::unbounded());
    } catch (const std::runtime_error& e) {
        std::fprintf(stderr, "solver error: %s\n", e.what());
        return 3;
    }
    write_field_csv(out_dir + "/g.csv", s.grid, hist.states.back());
    if (cfg.write_history) dump_history_csv(hist, out_dir + "/history.csv");

    std::vector<std::pair<std::string, std::string>> rows;
    rows.emplace_back("truth", s.truth_name);
    rows.emplace_back("alpha", fmt(cfg.alpha));
    rows.emplace_back("T", fmt(cfg.T));
    rows.emplace_back("n_steps", fmt(cfg.n_steps));
    rows.emplace_back("n_nodes", fmt(cfg.n));
    rows.emplace_back("kernel_backend", std::string(kern::active_backend()));

    if (s.truth_name == "zero") {
        // Linear problem: compare against the spectral representation.
        Field ref = apply_E(*s.op, s.tc.alpha, s.tc.T, s.u0);
        std::vector<Field> samples(hist.states.size());
        for (std::size_t k = 0; k < samples.size(); ++k) {
            samples[k].resize(s.grid.n);
            for (int i = 0; i < s.grid.n; ++i)
                samples[k][i] = s.r(s.grid.nodes[i], hist.times[k]);
        }
        Field duh = apply_Ebar_convolution(*s.op, s.tc.alpha, s.tc.T, hist.times, samples);
        Field diff(s.grid.n);
        for (int i = 0; i < s.grid.n; ++i)
            diff[i] = hist.states.back()[i] - ref[i] - duh[i];
        const double err = s.op->norm(diff);
        const double ref_norm = std::max(1e-300, s.op->norm(hist.states.back()));
        rows.emplace_back("spectral_check_abs", fmt(err));
        rows.emplace_back("spectral_check_rel", fmt(err / ref_norm));
    }
    write_kv_report(out_dir + "/report.txt", rows);
    return 0;
}

int cmd_reconstruct(const ExperimentConfig& cfg, const std::string& out_dir) {
    auto s = build_setup(cfg);
    fs::create_directories(out_dir);

    PreparedData pd;
    try {
        pd = prepare_data(cfg, s);
    } catch (const BlowUpError& e) {
        std::fprintf(stderr, "solver error: %s\n", e.what());
        return 3;
    } catch (const SolverError& e) {
        std::fprintf(stderr, "solver error: %s\n", e.what());
        return 3;
    }
    write_field_csv(out_dir + "/g_delta.csv", s.grid, pd.gdata.raw);
    write_field_csv(out_dir + "/g_smoothed.csv", s.grid, pd.gdata.smoothed);

    ProblemBundle bundle{s.op.get(), s.tc, s.u0, s.r, pd.clamp};
    const auto mask = coverage_mask(pd.gdata, pd.basis);

    std::vector<std::pair<std::string, std::string>> rows;
    rows.emplace_back("method", cfg.method);
    rows.emplace_back("delta", fmt(pd.gdata.delta));
    rows.emplace_back("smoothing_mu", fmt(pd.gdata.mu));
    rows.emplace_back("coverage_lo", fmt(mask.lo));
    rows.emplace_back("coverage_hi", fmt(mask.hi));

    int exit_code = 0;
    if (cfg.method == "fixedpoint") {
        FixedPointConfig fpc;
        fpc.max_iters = cfg.max_iters;
        fpc.stall_tol = cfg.stall_tol;
        fpc.rho_cap = cfg.rho_cap;
        auto trace = run_fixed_point(fpc, bundle, pd.gdata, pd.basis, s.truth);
        write_trace_csv(out_dir + "/trace.csv", trace);
        for (std::size_t k = 0; k < trace.iterations.size(); ++k)
            write_reaction_csv(out_dir + "/f_iter" + std::to_string(k + 1) + ".csv",
                               trace.iterations[k].f);
        if (!trace.iterations.empty())
            write_reaction_csv(out_dir + "/f_recon.csv", trace.iterations.back().f);
        rows.emplace_back("iterations", std::to_string(trace.iterations.size()));
        rows.emplace_back("converged", trace.converged ? "true" : "false");
        rows.emplace_back("stall_iteration", std::to_string(trace.stall_iteration));
        if (!trace.iterations.empty()) {
            rows.emplace_back("final_residual", fmt(trace.iterations.back().surface_residual));
            rows.emplace_back("final_true_error", fmt(trace.iterations.back().true_error));
        }
        if (!trace.error.empty()) rows.emplace_back("error", trace.error);
        if (!trace.converged) exit_code = 4;
    } else {
        NewtonConfig nc;
        nc.variant = cfg.newton_variant == "ivanov" ? NewtonConfig::Variant::Ivanov
                                                    : NewtonConfig::Variant::Tikhonov;
        nc.gamma0 = cfg.gamma0;
        nc.kappa = cfg.kappa;
        nc.tau = cfg.tau;
        nc.varrho = cfg.varrho;
        nc.max_iters = cfg.newton_max_iters;
        nc.freeze_jacobian = cfg.newton_frozen;
        nc.step_cap = cfg.step_cap;
        nc.eps0 = cfg.eps0;
        nc.eps2 = cfg.eps2;
        auto f0 = newton_initial(cfg, pd.basis);
        auto res = run_newton(nc, bundle, pd.gdata, f0, s.truth);
        write_trace_csv(out_dir + "/trace.csv", res.trace);
        for (std::size_t k = 0; k < res.trace.iterations.size(); ++k)
            write_reaction_csv(out_dir + "/f_iter" + std::to_string(k + 1) + ".csv",
                               res.trace.iterations[k].f);
        if (!res.trace.iterations.empty())
            write_reaction_csv(out_dir + "/f_recon.csv", res.trace.iterations.back().f);
        rows.emplace_back("iterations", std::to_string(res.trace.iterations.size()));
        rows.emplace_back("k_star", std::to_string(res.k_star));
        rows.emplace_back("final_residual", fmt(res.final_residual));
        rows.emplace_back("tau_delta", fmt(cfg.tau * pd.gdata.delta));
        if (!res.trace.iterations.empty())
            rows.emplace_back("final_true_error",
                              fmt(res.trace.iterations.back().true_error));
        if (!res.trace.error.empty()) rows.emplace_back("error", res.trace.error);
        const bool ok = !res.diverged && (pd.gdata.delta == 0.0 || res.k_star >= 0);
        if (!ok) exit_code = 4;
    }
    write_kv_report(out_dir + "/summary.txt", rows);
    return exit_code;
}

int cmd_sweep(const ExperimentConfig& cfg, const std::string& out_dir, int jobs) {
    fs::create_directories(out_dir);
    struct Cell {
        double T, alpha, metric;
    };
    std::vector<Cell> cells;
    for (double a : cfg.sweep_alpha)
        for (double T : cfg.sweep_T)
            cells.push_back({T, a, std::numeric_limits<double>::quiet_NaN()});

    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            const std::size_t idx = next.fetch_add(1);
            if (idx >= cells.size()) return;
            Cell& cell = cells[idx];
            try {
                ExperimentConfig c = cfg;
                c.T = cell.T;
                c.alpha = cell.alpha;
                c.scheme = "auto";
                auto s = build_setup(c);
                auto pd = prepare_data(c, s);
                ProblemBundle bundle{s.op.get(), s.tc, s.u0, s.r, pd.clamp};
                const auto mask = coverage_mask(pd.gdata, pd.basis);

                char sub[64];
                std::snprintf(sub, sizeof sub, "%s/cell_T%g_a%g", out_dir.c_str(), cell.T,
                              cell.alpha);
                fs::create_directories(sub);

                if (c.method == "fixedpoint") {
                    FixedPointConfig fpc;
                    fpc.max_iters = 1;
                    auto trace = run_fixed_point(fpc, bundle, pd.gdata, pd.basis, s.truth);
                    if (!trace.iterations.empty()) {
                        const auto& f1 = trace.iterations.front().f;
                        cell.metric = mask.sup_diff([&](double u) { return f1.eval(u); },
                                                    [&](double u) { return pd.basis.eval(u); });
                        write_trace_csv(std::string(sub) + "/trace.csv", trace);
                    }
                } else {
                    NewtonConfig nc;
                    nc.max_iters = 2;
                    nc.tau = c.tau;
                    nc.gamma0 = c.gamma0;
                    nc.kappa = c.kappa;
                    nc.step_cap = c.step_cap;
                    nc.eps0 = c.eps0;
                    nc.eps2 = c.eps2;
                    nc.freeze_jacobian = c.newton_frozen;
                    auto f0 = newton_initial(c, pd.basis);
                    auto res = run_newton(nc, bundle, pd.gdata, f0, s.truth);
                    if (res.trace.iterations.size() >= 2) {
                        const auto& f1 = res.trace.iterations[1].f;
                        cell.metric = mask.sup_diff([&](double u) { return f1.eval(u); },
                                                    [&](double u) { return f0.eval(u); });
                        write_trace_csv(std::string(sub) + "/trace.csv", res.trace);
                    }
                }
            } catch (const std::exception&) {
                // NaN cell; the sweep continues
            }
        }
    };

    const int nthreads = std::max(1, jobs);
    std::vector<std::thread> pool;
    for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();

    std::FILE* fp = std::fopen((out_dir + "/sweep.csv").c_str(), "w");
    if (!fp) throw std::runtime_error("cannot open sweep.csv");
    std::fprintf(fp, "T,alpha,metric\n");
    for (const auto& cell : cells)
        std::fprintf(fp, "%.17g,%.17g,%.17g\n", cell.T, cell.alpha, cell.metric);
    std::fclose(fp);
    return 0;
}

}  // namespace reactid
