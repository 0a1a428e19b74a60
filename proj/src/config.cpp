#include "reactid/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace reactid {

namespace {

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    auto e = s.find_last_not_of(" \t\r\n");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

const std::vector<std::string> kSchema = {
    "domain.x_min", "domain.x_max", "domain.n",
    "operator.a", "operator.c", "operator.bc_left", "operator.bc_right",
    "operator.gamma_left", "operator.gamma_right", "operator.shift",
    "time.alpha", "time.T", "time.n_steps", "time.scheme",
    "truth.reaction", "truth.zeldovich_a", "truth.file", "truth.width",
    "ic.kind", "ic.amplitude", "ic.file",
    "source.kind", "source.amplitude", "source.file",
    "noise.level", "noise.seed",
    "data.file",
    "smoothing.sigma", "smoothing.n_modes",
    "method.kind", "method.max_iters", "method.stall_tol", "method.rho_cap",
    "basis.m",
    "newton.variant", "newton.frozen", "newton.gamma0", "newton.kappa", "newton.tau",
    "newton.varrho", "newton.max_iters", "newton.step_cap", "newton.eps0", "newton.eps2",
    "newton.init",
    "sweep.T", "sweep.alpha",
    "output.history", "output.dir",
};

}  // namespace

KeyValueConfig KeyValueConfig::parse_string(const std::string& text) {
    KeyValueConfig cfg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty())
            throw ConfigError("config line " + std::to_string(lineno) + ": empty key or value");
        if (cfg.values_.count(key))
            throw ConfigError("config: duplicate key '" + key + "'");
        cfg.values_[key] = value;
    }
    return cfg;
}

KeyValueConfig KeyValueConfig::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_string(ss.str());
}

std::string KeyValueConfig::get_string(const std::string& key, const std::string& fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    char* end = nullptr;
    double v = std::strtod(it->second.c_str(), &end);
    if (end == it->second.c_str() || *end != '\0')
        throw ConfigError("config: '" + key + "' is not a number: " + it->second);
    return v;
}

int KeyValueConfig::get_int(const std::string& key, int fallback) const {
    double v = get_double(key, fallback);
    int iv = static_cast<int>(v);
    if (v != iv) throw ConfigError("config: '" + key + "' must be an integer");
    return iv;
}

bool KeyValueConfig::get_bool(const std::string& key, bool fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    if (it->second == "true" || it->second == "1" || it->second == "yes") return true;
    if (it->second == "false" || it->second == "0" || it->second == "no") return false;
    throw ConfigError("config: '" + key + "' must be a boolean");
}

std::vector<double> KeyValueConfig::get_double_list(const std::string& key,
                                                    const std::vector<double>& fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    std::vector<double> out;
    std::stringstream ss(it->second);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        tok = trim(tok);
        if (tok.empty()) continue;
        char* end = nullptr;
        double v = std::strtod(tok.c_str(), &end);
        if (end == tok.c_str() || *end != '\0')
            throw ConfigError("config: bad list entry in '" + key + "': " + tok);
        out.push_back(v);
    }
    if (out.empty()) throw ConfigError("config: '" + key + "' is an empty list");
    return out;
}

void KeyValueConfig::enforce_schema(const std::vector<std::string>& allowed) const {
    for (const auto& [k, v] : values_) {
        if (std::find(allowed.begin(), allowed.end(), k) == allowed.end())
            throw ConfigError("config: unknown key '" + k + "'");
    }
}

ExperimentConfig ExperimentConfig::from_kv(const KeyValueConfig& kv) {
    kv.enforce_schema(kSchema);
    ExperimentConfig c;
    c.x_min = kv.get_double("domain.x_min", c.x_min);
    c.x_max = kv.get_double("domain.x_max", c.x_max);
    c.n = kv.get_int("domain.n", c.n);
    c.a_const = kv.get_double("operator.a", c.a_const);
    c.c_const = kv.get_double("operator.c", c.c_const);
    c.bc_left = kv.get_string("operator.bc_left", c.bc_left);
    c.bc_right = kv.get_string("operator.bc_right", c.bc_right);
    c.gamma_left = kv.get_double("operator.gamma_left", c.gamma_left);
    c.gamma_right = kv.get_double("operator.gamma_right", c.gamma_right);
    c.shift = kv.get_double("operator.shift", c.shift);
    c.alpha = kv.get_double("time.alpha", c.alpha);
    c.T = kv.get_double("time.T", c.T);
    c.n_steps = kv.get_int("time.n_steps", c.n_steps);
    c.scheme = kv.get_string("time.scheme", c.scheme);
    c.truth = kv.get_string("truth.reaction", c.truth);
    c.zeldovich_a = kv.get_double("truth.zeldovich_a", c.zeldovich_a);
    c.truth_file = kv.get_string("truth.file", c.truth_file);
    c.truth_width = kv.get_double("truth.width", c.truth_width);
    c.ic = kv.get_string("ic.kind", c.ic);
    c.ic_amplitude = kv.get_double("ic.amplitude", c.ic_amplitude);
    c.ic_file = kv.get_string("ic.file", c.ic_file);
    c.source = kv.get_string("source.kind", c.source);
    c.source_amplitude = kv.get_double("source.amplitude", c.source_amplitude);
    c.source_file = kv.get_string("source.file", c.source_file);
    c.noise_level = kv.get_double("noise.level", c.noise_level);
    c.seed = static_cast<std::uint64_t>(kv.get_double("noise.seed", (double)c.seed));
    c.data_file = kv.get_string("data.file", c.data_file);
    c.sigma = kv.get_double("smoothing.sigma", c.sigma);
    c.n_modes = kv.get_int("smoothing.n_modes", c.n_modes);
    c.method = kv.get_string("method.kind", c.method);
    c.max_iters = kv.get_int("method.max_iters", c.max_iters);
    c.stall_tol = kv.get_double("method.stall_tol", c.stall_tol);
    if (kv.has("method.rho_cap")) c.rho_cap = kv.get_double("method.rho_cap", 0.0);
    c.basis_m = kv.get_int("basis.m", c.basis_m);
    c.newton_variant = kv.get_string("newton.variant", c.newton_variant);
    c.newton_frozen = kv.get_bool("newton.frozen", c.newton_frozen);
    c.gamma0 = kv.get_double("newton.gamma0", c.gamma0);
    c.kappa = kv.get_double("newton.kappa", c.kappa);
    c.tau = kv.get_double("newton.tau", c.tau);
    c.varrho = kv.get_double("newton.varrho", c.varrho);
    c.newton_max_iters = kv.get_int("newton.max_iters", c.newton_max_iters);
    c.step_cap = kv.get_double("newton.step_cap", c.step_cap);
    c.eps0 = kv.get_double("newton.eps0", c.eps0);
    c.eps2 = kv.get_double("newton.eps2", c.eps2);
    c.newton_init = kv.get_string("newton.init", c.newton_init);
    c.sweep_T = kv.get_double_list("sweep.T", c.sweep_T);
    c.sweep_alpha = kv.get_double_list("sweep.alpha", c.sweep_alpha);
    c.write_history = kv.get_bool("output.history", c.write_history);
    c.out_dir = kv.get_string("output.dir", c.out_dir);

    if (const char* env = std::getenv("REACTID_SEED")) {
        char* end = nullptr;
        unsigned long long s = std::strtoull(env, &end, 10);
        if (end != env && *end == '\0') c.seed = s;
    }
    c.validate();
    return c;
}

void ExperimentConfig::validate() const {
    auto fail = [](const std::string& msg) { throw ConfigError("config: " + msg); };
    if (!(x_min < x_max)) fail("domain.x_min must be < domain.x_max");
    if (n < 3) fail("domain.n must be >= 3");
    if (!(a_const > 0.0)) fail("operator.a must be positive");
    if (c_const > 0.0) fail("operator.c must be <= 0");
    for (const std::string* bc : {&bc_left, &bc_right})
        if (*bc != "robin" && *bc != "dirichlet") fail("operator.bc_* must be robin|dirichlet");
    if (gamma_left < 0.0 || gamma_right < 0.0) fail("operator.gamma_* must be >= 0");
    if (!(alpha > 0.0 && alpha <= 1.0)) fail("time.alpha must lie in (0, 1]");
    if (!(T > 0.0)) fail("time.T must be positive");
    if (n_steps < 2) fail("time.n_steps must be >= 2");
    if (scheme != "auto" && scheme != "crank_nicolson" && scheme != "fractional_l2")
        fail("time.scheme must be auto|crank_nicolson|fractional_l2");
    if (scheme == "crank_nicolson" && alpha != 1.0) fail("crank_nicolson requires alpha = 1");
    if (scheme == "fractional_l2" && alpha >= 1.0) fail("fractional_l2 requires alpha < 1");
    if (truth != "zeldovich" && truth != "lipschitz_b" && truth != "zero" && truth != "custom")
        fail("truth.reaction must be zeldovich|lipschitz_b|zero|custom");
    if (truth == "custom" && truth_file.empty()) fail("truth.file required for custom truth");
    if (ic != "zero" && ic != "sine" && ic != "table") fail("ic.kind must be zero|sine|table");
    if (ic == "table" && ic_file.empty()) fail("ic.file required for table ic");
    if (source != "zero" && source != "sine" && source != "table")
        fail("source.kind must be zero|sine|table");
    if (source == "table" && source_file.empty()) fail("source.file required for table source");
    if (noise_level < 0.0) fail("noise.level must be >= 0");
    if (!(sigma > 1.5)) fail("smoothing.sigma must exceed 3/2");
    if (n_modes < 0) fail("smoothing.n_modes must be >= 0");
    if (method != "fixedpoint" && method != "newton") fail("method.kind must be fixedpoint|newton");
    if (max_iters < 1) fail("method.max_iters must be >= 1");
    if (basis_m < 2) fail("basis.m must be >= 2");
    if (newton_variant != "tikhonov" && newton_variant != "ivanov")
        fail("newton.variant must be tikhonov|ivanov");
    if (newton_init != "zero" && newton_init != "zeldovich_init" && newton_init != "sine_init")
        fail("newton.init must be zero|zeldovich_init|sine_init");
    if (sweep_T.empty() || sweep_alpha.empty()) fail("sweep axes must be nonempty");
}

}  // namespace reactid
