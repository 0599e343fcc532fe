#pragma once

#include "hjlab/estimates.hpp"
#include "hjlab/mfg.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace hjcli {

/// Syntax or value error in a run config, tied to a line when one is known.
class ConfigError : public std::runtime_error {
public:
    ConfigError(int line, const std::string& what)
        : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
          line_(line) {}
    [[nodiscard]] int line() const noexcept { return line_; }

private:
    int line_;
};

/// A named closed-form scalar function.
///
/// Families (x_k is coordinate `axis`, L_k the extent along it, A the amplitude, k the mode):
///   zero, const (A), cos (A cos(2 pi k x_k / L_k)), sin, linear (A x_k), quadratic (A x_k^2),
///   cos_product (A prod_a cos(pi k x_a / L_a), Neumann-compatible on boxes),
///   polar_cubic (A (3r^2 - 2r^3) cos(theta), for the disc), trig_mix (A sin cos cos on tori).
struct FunctionSpec {
    std::string family = "zero";
    double amplitude = 1.0;
    int axis = 1;
    double mode = 1.0;
};

/// Drift with one non-zero component: B^direction = A sin(2 pi k x_axis / L_axis).
struct DriftSpec {
    std::string family = "zero";
    double amplitude = 1.0;
    int axis = 2;
    int direction = 1;
    double mode = 1.0;
    double exponent = 0.0;  ///< s in ||B||_{L^s}
};

struct MetricConfig {
    std::string kind = "euclidean";
    double amplitude = 0.1;
    int axis = 1;
    double mode = 1.0;
    double offset = 0.0;
    std::optional<double> kappa_bound;
};

struct ProblemConfig {
    double gamma = 2.0;
    double c1 = 1.0;
    bool ergodic = false;
    FunctionSpec f;
    FunctionSpec b;
    DriftSpec drift;
};

struct ExperimentConfig {
    std::vector<double> amplitudes{1.0, 3.0, 10.0, 30.0, 100.0};
    double r = 2.0;
    double q = 2.5;
    double delta = 0.3;
    double C = 0.5;
    long samples = 100000;
    std::vector<int> resolutions;
    FunctionSpec u{"trig_mix", 1.0, 1, 1.0};
    std::vector<double> cz_exponents{2.0, 4.0};
    int cz_samples = 50;
    int level_thresholds = 20;
    int level_fields = 10;
    int parameter_sets = 100;
};

struct MfgConfig {
    double alpha = 1.0;
    double coupling_constant = 2.0;
    double mollifier_width = 0.0;
    double damping = 0.5;
    int max_outer = 200;
    double tolerance = 1e-8;
    double continuation_start = 0.1;
};

struct RunConfig {
    hjlab::DomainSpec domain;
    MetricConfig metric;
    ProblemConfig problem;
    hjlab::SolverConfig solver;
    ExperimentConfig experiment;
    MfgConfig mfg;
    std::string out_dir = "out";
    std::uint64_t seed = 1;
    std::vector<std::string> sections;  ///< sections present in the text, in order
};

/// Parses `key = value` lines grouped under `[section]` headers. `#` starts a comment.
/// Unknown sections or keys, malformed numbers and repeated keys are rejected.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

/// Checks the standing assumptions the chosen subcommand relies on; throws hjlab::GateError.
void validate(const RunConfig& cfg, const std::string& command);

hjlab::MetricSpec make_metric(const RunConfig& cfg);
hjlab::ScalarFunction make_function(const FunctionSpec& spec, const hjlab::DomainSpec& domain);
hjlab::VectorFunction make_drift(const DriftSpec& spec, const hjlab::DomainSpec& domain);
hjlab::MfgSpec make_mfg_spec(const RunConfig& cfg);

}  // namespace hjcli
