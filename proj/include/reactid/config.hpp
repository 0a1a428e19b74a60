#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace reactid {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Flat "section.key = value" text config; '#' starts a comment.  Unknown
/// keys are rejected up front so typos fail before any solve.
class KeyValueConfig {
public:
    static KeyValueConfig parse_file(const std::string& path);
    static KeyValueConfig parse_string(const std::string& text);

    bool has(const std::string& key) const { return values_.count(key) > 0; }
    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    int get_int(const std::string& key, int fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::vector<double> get_double_list(const std::string& key,
                                        const std::vector<double>& fallback) const;

    /// Throws ConfigError if any key is not in the allowed set.
    void enforce_schema(const std::vector<std::string>& allowed) const;

    const std::map<std::string, std::string>& raw() const { return values_; }

private:
    std::map<std::string, std::string> values_;
};

/// Parsed experiment description; see docs/config.md for the schema.
struct ExperimentConfig {
    // domain
    double x_min = 0.0, x_max = 1.0;
    int n = 401;
    // operator
    double a_const = 1.0, c_const = 0.0;
    std::string bc_left = "dirichlet", bc_right = "dirichlet";
    double gamma_left = 1.0, gamma_right = 1.0;
    double shift = 0.0;
    // time
    double alpha = 1.0, T = 0.5;
    int n_steps = 400;
    std::string scheme = "auto";
    // truth reaction
    std::string truth = "zeldovich";  // zeldovich | lipschitz_b | zero | custom
    double zeldovich_a = 0.75;
    std::string truth_file;
    double truth_width = 0.0;
    // initial condition
    std::string ic = "zero";  // zero | sine | table
    double ic_amplitude = 1.0;
    std::string ic_file;
    // source
    std::string source = "sine";  // zero | sine | table
    double source_amplitude = 25.0;
    std::string source_file;
    // noise
    double noise_level = 0.01;
    std::uint64_t seed = 20240901;
    // external data
    std::string data_file;
    // smoothing
    double sigma = 2.0;
    int n_modes = 0;  // 0 = default rule
    // method
    std::string method = "fixedpoint";  // fixedpoint | newton
    int max_iters = 20;
    double stall_tol = 1e-6;
    std::optional<double> rho_cap;
    int basis_m = 25;
    // newton
    std::string newton_variant = "tikhonov";
    bool newton_frozen = false;
    double gamma0 = 1e-2, kappa = 0.5, tau = 1.5, varrho = 1.0;
    int newton_max_iters = 10;
    double step_cap = 1.0, eps0 = 1e-10, eps2 = 1e-6;
    std::string newton_init = "zeldovich_init";  // zero | zeldovich_init | sine_init
    // sweep
    std::vector<double> sweep_T{0.1, 0.2, 0.5, 1.0, 2.0, 5.0};
    std::vector<double> sweep_alpha{1.0};
    // output
    bool write_history = false;
    std::string out_dir = "out";

    static ExperimentConfig from_kv(const KeyValueConfig& kv);
    void validate() const;
};

}  // namespace reactid
