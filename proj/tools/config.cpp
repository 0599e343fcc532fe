#include "config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

namespace hjcli {

using hjlab::DomainKind;
using hjlab::GateError;

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double parse_double(const std::string& text, int line) {
    const std::string s = trim(text);
    if (s == "inf") {
        return std::numeric_limits<double>::infinity();
    }
    const auto slash = s.find('/');
    if (slash != std::string::npos) {
        const double num = parse_double(s.substr(0, slash), line);
        const double den = parse_double(s.substr(slash + 1), line);
        if (den == 0.0) {
            throw ConfigError(line, "zero denominator in '" + s + "'");
        }
        return num / den;
    }
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
        throw ConfigError(line, "expected a number, got '" + s + "'");
    }
    return v;
}

long parse_long(const std::string& text, int line) {
    const std::string s = trim(text);
    long v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
        throw ConfigError(line, "expected an integer, got '" + s + "'");
    }
    return v;
}

int parse_int(const std::string& text, int line) {
    const long v = parse_long(text, line);
    if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) {
        throw ConfigError(line, "integer out of range: " + trim(text));
    }
    return static_cast<int>(v);
}

bool parse_bool(const std::string& text, int line) {
    const std::string s = trim(text);
    if (s == "true" || s == "yes" || s == "1") {
        return true;
    }
    if (s == "false" || s == "no" || s == "0") {
        return false;
    }
    throw ConfigError(line, "expected true or false, got '" + s + "'");
}

std::vector<std::string> split_list(const std::string& text) {
    std::string s = text;
    std::replace(s.begin(), s.end(), ',', ' ');
    std::istringstream is(s);
    std::vector<std::string> out;
    std::string tok;
    while (is >> tok) {
        out.push_back(tok);
    }
    return out;
}

std::vector<double> parse_doubles(const std::string& text, int line) {
    std::vector<double> out;
    for (const auto& tok : split_list(text)) {
        out.push_back(parse_double(tok, line));
    }
    if (out.empty()) {
        throw ConfigError(line, "expected a list of numbers");
    }
    return out;
}

std::vector<int> parse_ints(const std::string& text, int line) {
    std::vector<int> out;
    for (const auto& tok : split_list(text)) {
        out.push_back(parse_int(tok, line));
    }
    if (out.empty()) {
        throw ConfigError(line, "expected a list of integers");
    }
    return out;
}

std::string parse_choice(const std::string& text, int line, std::initializer_list<const char*> choices) {
    const std::string s = trim(text);
    for (const char* c : choices) {
        if (s == c) {
            return s;
        }
    }
    std::string all;
    for (const char* c : choices) {
        all += all.empty() ? c : std::string(", ") + c;
    }
    throw ConfigError(line, "'" + s + "' is not one of: " + all);
}

constexpr std::initializer_list<const char*> function_families = {
    "zero", "const", "cos", "sin", "linear", "quadratic", "cos_product", "polar_cubic",
    "trig_mix", "manufactured"};

using Setter = std::function<void(RunConfig&, const std::string&, int)>;
using SectionTable = std::map<std::string, Setter>;

void add_function_keys(SectionTable& t, const std::string& prefix,
                       const std::function<FunctionSpec&(RunConfig&)>& get) {
    t[prefix] = [get](RunConfig& c, const std::string& v, int l) {
        get(c).family = parse_choice(v, l, function_families);
    };
    t[prefix + "_amplitude"] = [get](RunConfig& c, const std::string& v, int l) {
        get(c).amplitude = parse_double(v, l);
    };
    t[prefix + "_axis"] = [get](RunConfig& c, const std::string& v, int l) {
        get(c).axis = parse_int(v, l);
    };
    t[prefix + "_mode"] = [get](RunConfig& c, const std::string& v, int l) {
        get(c).mode = parse_double(v, l);
    };
}

std::map<std::string, SectionTable> build_tables() {
    std::map<std::string, SectionTable> tables;

    auto& dom = tables["domain"];
    dom["kind"] = [](RunConfig& c, const std::string& v, int l) {
        const std::string k = parse_choice(v, l, {"torus", "conformal_torus", "box", "disc"});
        c.domain.kind = k == "torus"             ? DomainKind::torus
                        : k == "conformal_torus" ? DomainKind::conformal_torus
                        : k == "box"             ? DomainKind::box
                                                 : DomainKind::disc;
    };
    dom["dim"] = [](RunConfig& c, const std::string& v, int l) { c.domain.dim = parse_int(v, l); };
    dom["extents"] = [](RunConfig& c, const std::string& v, int l) {
        const auto xs = parse_doubles(v, l);
        if (xs.size() > 3) {
            throw ConfigError(l, "at most three extents");
        }
        for (std::size_t a = 0; a < 3; ++a) {
            c.domain.extents[a] = a < xs.size() ? xs[a] : xs.back();
        }
    };
    dom["resolution"] = [](RunConfig& c, const std::string& v, int l) {
        const auto ns = parse_ints(v, l);
        if (ns.size() > 3) {
            throw ConfigError(l, "at most three resolutions");
        }
        for (std::size_t a = 0; a < 3; ++a) {
            c.domain.resolution[a] = a < ns.size() ? ns[a] : ns.back();
        }
    };
    dom["radius"] = [](RunConfig& c, const std::string& v, int l) {
        c.domain.radius = parse_double(v, l);
    };

    auto& met = tables["metric"];
    met["kind"] = [](RunConfig& c, const std::string& v, int l) {
        c.metric.kind = parse_choice(v, l, {"euclidean", "conformal"});
    };
    met["amplitude"] = [](RunConfig& c, const std::string& v, int l) {
        c.metric.amplitude = parse_double(v, l);
    };
    met["axis"] = [](RunConfig& c, const std::string& v, int l) { c.metric.axis = parse_int(v, l); };
    met["mode"] = [](RunConfig& c, const std::string& v, int l) { c.metric.mode = parse_double(v, l); };
    met["offset"] = [](RunConfig& c, const std::string& v, int l) {
        c.metric.offset = parse_double(v, l);
    };
    met["kappa_bound"] = [](RunConfig& c, const std::string& v, int l) {
        c.metric.kappa_bound = parse_double(v, l);
    };

    auto& prob = tables["problem"];
    prob["gamma"] = [](RunConfig& c, const std::string& v, int l) {
        c.problem.gamma = parse_double(v, l);
    };
    prob["c1"] = [](RunConfig& c, const std::string& v, int l) { c.problem.c1 = parse_double(v, l); };
    prob["ergodic"] = [](RunConfig& c, const std::string& v, int l) {
        c.problem.ergodic = parse_bool(v, l);
    };
    add_function_keys(prob, "f", [](RunConfig& c) -> FunctionSpec& { return c.problem.f; });
    add_function_keys(prob, "b", [](RunConfig& c) -> FunctionSpec& { return c.problem.b; });
    prob["drift"] = [](RunConfig& c, const std::string& v, int l) {
        c.problem.drift.family = parse_choice(v, l, {"zero", "sin"});
    };
    prob["drift_amplitude"] = [](RunConfig& c, const std::string& v, int l) {
        c.problem.drift.amplitude = parse_double(v, l);
    };
    prob["drift_axis"] = [](RunConfig& c, const std::string& v, int l) {
        c.problem.drift.axis = parse_int(v, l);
    };
    prob["drift_direction"] = [](RunConfig& c, const std::string& v, int l) {
        c.problem.drift.direction = parse_int(v, l);
    };
    prob["drift_mode"] = [](RunConfig& c, const std::string& v, int l) {
        c.problem.drift.mode = parse_double(v, l);
    };
    prob["drift_exponent"] = [](RunConfig& c, const std::string& v, int l) {
        c.problem.drift.exponent = parse_double(v, l);
    };

    auto& sol = tables["solver"];
    sol["tolerance"] = [](RunConfig& c, const std::string& v, int l) {
        c.solver.tolerance = parse_double(v, l);
    };
    sol["max_iterations"] = [](RunConfig& c, const std::string& v, int l) {
        c.solver.max_iterations = parse_int(v, l);
    };
    sol["eps_reg"] = [](RunConfig& c, const std::string& v, int l) {
        c.solver.eps_reg = parse_double(v, l);
    };
    sol["min_step"] = [](RunConfig& c, const std::string& v, int l) {
        c.solver.min_step = parse_double(v, l);
    };
    sol["picard_iterations"] = [](RunConfig& c, const std::string& v, int l) {
        c.solver.picard_iterations = parse_int(v, l);
    };
    sol["picard_relaxation"] = [](RunConfig& c, const std::string& v, int l) {
        c.solver.picard_relaxation = parse_double(v, l);
    };

    auto& exp = tables["experiment"];
    exp["amplitudes"] = [](RunConfig& c, const std::string& v, int l) {
        c.experiment.amplitudes = parse_doubles(v, l);
    };
    exp["r"] = [](RunConfig& c, const std::string& v, int l) { c.experiment.r = parse_double(v, l); };
    exp["q"] = [](RunConfig& c, const std::string& v, int l) { c.experiment.q = parse_double(v, l); };
    exp["delta"] = [](RunConfig& c, const std::string& v, int l) {
        c.experiment.delta = parse_double(v, l);
    };
    exp["C"] = [](RunConfig& c, const std::string& v, int l) { c.experiment.C = parse_double(v, l); };
    exp["samples"] = [](RunConfig& c, const std::string& v, int l) {
        c.experiment.samples = parse_long(v, l);
    };
    exp["resolutions"] = [](RunConfig& c, const std::string& v, int l) {
        c.experiment.resolutions = parse_ints(v, l);
    };
    add_function_keys(exp, "u", [](RunConfig& c) -> FunctionSpec& { return c.experiment.u; });
    exp["cz_exponents"] = [](RunConfig& c, const std::string& v, int l) {
        c.experiment.cz_exponents = parse_doubles(v, l);
    };
    exp["cz_samples"] = [](RunConfig& c, const std::string& v, int l) {
        c.experiment.cz_samples = parse_int(v, l);
    };
    exp["level_thresholds"] = [](RunConfig& c, const std::string& v, int l) {
        c.experiment.level_thresholds = parse_int(v, l);
    };
    exp["level_fields"] = [](RunConfig& c, const std::string& v, int l) {
        c.experiment.level_fields = parse_int(v, l);
    };
    exp["parameter_sets"] = [](RunConfig& c, const std::string& v, int l) {
        c.experiment.parameter_sets = parse_int(v, l);
    };

    auto& mfg = tables["mfg"];
    mfg["alpha"] = [](RunConfig& c, const std::string& v, int l) { c.mfg.alpha = parse_double(v, l); };
    mfg["coupling_constant"] = [](RunConfig& c, const std::string& v, int l) {
        c.mfg.coupling_constant = parse_double(v, l);
    };
    mfg["mollifier_width"] = [](RunConfig& c, const std::string& v, int l) {
        c.mfg.mollifier_width = parse_double(v, l);
    };
    mfg["damping"] = [](RunConfig& c, const std::string& v, int l) {
        c.mfg.damping = parse_double(v, l);
    };
    mfg["max_outer"] = [](RunConfig& c, const std::string& v, int l) {
        c.mfg.max_outer = parse_int(v, l);
    };
    mfg["tolerance"] = [](RunConfig& c, const std::string& v, int l) {
        c.mfg.tolerance = parse_double(v, l);
    };
    mfg["continuation_start"] = [](RunConfig& c, const std::string& v, int l) {
        c.mfg.continuation_start = parse_double(v, l);
    };

    auto& out = tables["output"];
    out["dir"] = [](RunConfig& c, const std::string& v, int) { c.out_dir = trim(v); };
    out["seed"] = [](RunConfig& c, const std::string& v, int l) {
        const long s = parse_long(v, l);
        if (s < 0) {
            throw ConfigError(l, "seed must be non-negative");
        }
        c.seed = static_cast<std::uint64_t>(s);
    };
    return tables;
}

/// Structural checks that are not assumptions of the estimates.
void check_shape(RunConfig& c) {
    // a conformal metric lives on the periodic cell; `torus` is accepted as shorthand
    if (c.metric.kind == "conformal" && c.domain.kind == DomainKind::torus) {
        c.domain.kind = DomainKind::conformal_torus;
    }
    if (c.domain.kind == DomainKind::conformal_torus && c.metric.kind != "conformal") {
        throw ConfigError(0, "domain kind conformal_torus needs [metric] kind = conformal");
    }
    const auto& d = c.domain;
    if (d.dim != 2 && d.dim != 3) {
        throw ConfigError(0, "domain.dim must be 2 or 3");
    }
    if (d.kind == DomainKind::disc && d.dim != 2) {
        throw ConfigError(0, "the disc is two-dimensional; set domain.dim = 2");
    }
    for (int a = 0; a < d.dim; ++a) {
        if (d.resolution[a] < 8) {
            throw ConfigError(0, "domain.resolution must be at least 8 per axis");
        }
        if (!(d.extents[a] > 0.0)) {
            throw ConfigError(0, "domain.extents must be positive");
        }
    }
    if (c.metric.kind == "conformal" && d.kind != DomainKind::conformal_torus) {
        throw ConfigError(0, "a conformal metric is available on the torus only");
    }
    auto check_axis = [&](int axis, const char* key) {
        if (axis < 1 || axis > d.dim) {
            throw ConfigError(0, std::string(key) + " must lie in 1.." + std::to_string(d.dim));
        }
    };
    check_axis(c.metric.axis, "metric.axis");
    check_axis(c.problem.f.axis, "problem.f_axis");
    check_axis(c.problem.b.axis, "problem.b_axis");
    check_axis(c.problem.drift.axis, "problem.drift_axis");
    check_axis(c.problem.drift.direction, "problem.drift_direction");
    check_axis(c.experiment.u.axis, "experiment.u_axis");
    if (c.experiment.amplitudes.empty()) {
        throw ConfigError(0, "experiment.amplitudes must not be empty");
    }
    if (c.experiment.samples < 1 || c.experiment.cz_samples < 1 ||
        c.experiment.level_thresholds < 1 || c.experiment.level_fields < 1 ||
        c.experiment.parameter_sets < 1) {
        throw ConfigError(0, "experiment sample counts must be positive");
    }
    for (int n : c.experiment.resolutions) {
        if (n < 8) {
            throw ConfigError(0, "experiment.resolutions entries must be at least 8");
        }
    }
    if (c.solver.max_iterations < 1 || !(c.solver.tolerance > 0.0)) {
        throw ConfigError(0, "solver.max_iterations and solver.tolerance must be positive");
    }
}

/// Assumptions that depend only on the numbers in the config, checked before any grid exists.
void check_analytic_gates(const RunConfig& c) {
    const bool has_mfg = std::find(c.sections.begin(), c.sections.end(), "mfg") != c.sections.end();
    const int d = c.domain.dim;
    const double gamma = c.problem.gamma;
    if (!(gamma > 1.0)) {
        std::ostringstream os;
        os << "gamma > 1 required, got gamma = " << gamma;
        throw GateError("(In1)", os.str());
    }
    if (c.problem.drift.family != "zero" && !(c.problem.drift.exponent > d)) {
        std::ostringstream os;
        os << "drift integrability exponent s = " << c.problem.drift.exponent
           << " must exceed d = " << d;
        throw GateError("(In2)", os.str());
    }
    if (has_mfg) {
        const double alpha = c.mfg.alpha;
        const double cv = c.mfg.coupling_constant;
        if (!(alpha > 0.0) || !(cv > 1.0) || cv < alpha || cv < 1.0 / alpha) {
            std::ostringstream os;
            os << "V(m) = m^alpha with alpha = " << alpha
               << " needs alpha > 0, C_V > 1 and C_V >= max(alpha, 1/alpha); got C_V = " << cv;
            throw GateError("(MFG1)", os.str());
        }
        if (d >= 3) {
            const auto gate = hjlab::exponent_gate(d, gamma, alpha);
            if (!gate.alpha_ok) {
                std::ostringstream os;
                os << "alpha = " << alpha << " must be below gamma'/(d-2-gamma') = "
                   << gate.alpha_threshold << " for d = " << d << ", gamma = " << gamma;
                throw GateError("(MFG3)", os.str());
            }
        }
    }
}

}  // namespace

RunConfig parse_config(const std::string& text) {
    static const auto tables = build_tables();
    RunConfig cfg;
    std::istringstream is(text);
    std::string raw;
    int line = 0;
    const SectionTable* section = nullptr;
    std::string section_name;
    std::set<std::string> seen_keys;
    std::set<std::string> seen_sections;
    while (std::getline(is, raw)) {
        ++line;
        const auto hash = raw.find('#');
        const std::string s = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (s.empty()) {
            continue;
        }
        if (s.front() == '[') {
            if (s.back() != ']') {
                throw ConfigError(line, "unterminated section header '" + s + "'");
            }
            section_name = trim(s.substr(1, s.size() - 2));
            const auto it = tables.find(section_name);
            if (it == tables.end()) {
                throw ConfigError(line, "unknown section [" + section_name + "]");
            }
            if (!seen_sections.insert(section_name).second) {
                throw ConfigError(line, "section [" + section_name + "] appears twice");
            }
            cfg.sections.push_back(section_name);
            section = &it->second;
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(line, "expected 'key = value', got '" + s + "'");
        }
        if (section == nullptr) {
            throw ConfigError(line, "key outside of any [section]");
        }
        const std::string key = trim(s.substr(0, eq));
        const std::string value = trim(s.substr(eq + 1));
        const auto it = section->find(key);
        if (it == section->end()) {
            throw ConfigError(line, "unknown key '" + key + "' in [" + section_name + "]");
        }
        if (!seen_keys.insert(section_name + "." + key).second) {
            throw ConfigError(line, "key '" + key + "' repeated in [" + section_name + "]");
        }
        if (value.empty()) {
            throw ConfigError(line, "missing value for '" + key + "'");
        }
        it->second(cfg, value, line);
    }
    check_analytic_gates(cfg);
    check_shape(cfg);
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) {
        throw ConfigError(0, "cannot read config file " + path);
    }
    std::ostringstream buf;
    buf << is.rdbuf();
    return parse_config(buf.str());
}

hjlab::MetricSpec make_metric(const RunConfig& cfg) {
    if (cfg.metric.kind == "euclidean") {
        return hjlab::MetricSpec::euclidean();
    }
    const int axis = cfg.metric.axis - 1;
    return hjlab::MetricSpec::conformal(hjlab::cosine_factor(
        cfg.metric.amplitude, axis, cfg.metric.mode, cfg.metric.offset, cfg.domain.extents[axis]));
}

hjlab::ScalarFunction make_function(const FunctionSpec& spec, const hjlab::DomainSpec& domain) {
    constexpr double pi = std::numbers::pi;
    const double A = spec.amplitude;
    const double k = spec.mode;
    const int ax = spec.axis - 1;
    const auto L = domain.extents;
    const int dim = domain.dim;
    const double R = domain.radius;
    const std::string& fam = spec.family;
    if (fam == "zero") {
        return [](const Eigen::Vector3d&) { return 0.0; };
    }
    if (fam == "const") {
        return [A](const Eigen::Vector3d&) { return A; };
    }
    if (fam == "cos") {
        return [=](const Eigen::Vector3d& x) { return A * std::cos(2.0 * pi * k * x[ax] / L[ax]); };
    }
    if (fam == "sin") {
        return [=](const Eigen::Vector3d& x) { return A * std::sin(2.0 * pi * k * x[ax] / L[ax]); };
    }
    if (fam == "linear") {
        return [=](const Eigen::Vector3d& x) { return A * x[ax]; };
    }
    if (fam == "quadratic") {
        return [=](const Eigen::Vector3d& x) { return A * x[ax] * x[ax]; };
    }
    if (fam == "cos_product" || fam == "manufactured") {
        return [=](const Eigen::Vector3d& x) {
            double v = A;
            for (int a = 0; a < dim; ++a) {
                v *= std::cos(pi * k * x[a] / L[a]);
            }
            return v;
        };
    }
    if (fam == "polar_cubic") {
        return [=](const Eigen::Vector3d& x) {
            const double r = std::hypot(x[0], x[1]) / R;
            const double c = r > 0.0 ? x[0] / (r * R) : 1.0;
            return A * (3.0 * r * r - 2.0 * r * r * r) * c;
        };
    }
    if (fam == "trig_mix") {
        return [=](const Eigen::Vector3d& x) {
            double v = A * std::sin(2.0 * pi * k * x[0] / L[0]) * std::cos(2.0 * pi * k * x[1] / L[1]);
            if (dim == 3) {
                v *= std::cos(2.0 * pi * k * x[2] / L[2]);
            }
            return v;
        };
    }
    throw ConfigError(0, "unknown function family '" + fam + "'");
}

hjlab::VectorFunction make_drift(const DriftSpec& spec, const hjlab::DomainSpec& domain) {
    if (spec.family == "zero") {
        return {};
    }
    const double A = spec.amplitude;
    const double k = spec.mode;
    const int ax = spec.axis - 1;
    const int dir = spec.direction - 1;
    const double L = domain.extents[ax];
    return [=](const Eigen::Vector3d& x) {
        Eigen::Vector3d b = Eigen::Vector3d::Zero();
        b[dir] = A * std::sin(2.0 * std::numbers::pi * k * x[ax] / L);
        return b;
    };
}

hjlab::MfgSpec make_mfg_spec(const RunConfig& cfg) {
    hjlab::MfgSpec s;
    s.domain = cfg.domain;
    s.gamma = cfg.problem.gamma;
    s.alpha = cfg.mfg.alpha;
    s.coupling_constant = cfg.mfg.coupling_constant;
    if (cfg.problem.b.family != "zero") {
        s.shift_b = make_function(cfg.problem.b, cfg.domain);
    }
    s.mollifier_width = cfg.mfg.mollifier_width;
    s.damping = cfg.mfg.damping;
    s.max_outer = cfg.mfg.max_outer;
    s.tolerance = cfg.mfg.tolerance;
    s.continuation_start = cfg.mfg.continuation_start;
    s.solver = cfg.solver;
    return s;
}

void validate(const RunConfig& cfg, const std::string& command) {
    const int d = cfg.domain.dim;
    const double gamma = cfg.problem.gamma;
    check_analytic_gates(cfg);
    if (cfg.domain.kind == DomainKind::disc && command != "bochner-check") {
        throw GateError("(D1)", "the polar disc is only used by bochner-check; solvers need a "
                                "convex box or a torus");
    }
    if (cfg.metric.kappa_bound) {
        const hjlab::Grid grid = hjlab::build_grid(cfg.domain, make_metric(cfg));
        const double kappa = hjlab::ricci_lower_bound(make_metric(cfg), grid);
        if (kappa > *cfg.metric.kappa_bound) {
            std::ostringstream os;
            os << "Ricci lower bound kappa = " << kappa << " exceeds kappa_bound = "
               << *cfg.metric.kappa_bound;
            throw GateError("(D2)", os.str());
        }
    }
    const bool has_drift = cfg.problem.drift.family != "zero";
    if (command == "thm2-sweep") {
        if (has_drift) {
            throw GateError("(In2~)", "the maximal-regularity sweep requires B = 0");
        }
        hjlab::thm2_gate(d, gamma, cfg.experiment.q);
    }
    if (command == "bernstein-audit") {
        if (!(cfg.experiment.delta > 0.0 && cfg.experiment.delta < 1.0)) {
            throw ConfigError(0, "experiment.delta must lie in (0, 1)");
        }
        hjlab::maxreg_params(std::max(d, 3), gamma, cfg.experiment.q, cfg.experiment.delta);
    }
    if (cfg.problem.f.family == "manufactured" &&
        (cfg.domain.kind != DomainKind::box || has_drift || cfg.problem.b.family != "zero")) {
        throw ConfigError(0, "f = manufactured needs a box domain with b = 0 and no drift");
    }
    if (command == "mfg") {
        if (has_drift) {
            throw ConfigError(0, "the mean field game takes no drift; use problem.b");
        }
        const hjlab::Grid grid = hjlab::build_grid(cfg.domain, make_metric(cfg));
        hjlab::check_mfg_spec(make_mfg_spec(cfg), grid);
    }
}

}  // namespace hjcli
