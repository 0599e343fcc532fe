#include "commands.hpp"
#include "config.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

using hjcli::ConfigError;
using hjcli::parse_config;
using hjlab::GateError;

namespace {

std::filesystem::path scratch(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("hjlab_cli_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

std::string gate_label(const std::string& text) {
    try {
        parse_config(text);
    } catch (const GateError& e) {
        return e.label();
    } catch (const ConfigError&) {
    }
    return "";
}

int config_error_line(const std::string& text) {
    try {
        parse_config(text);
    } catch (const ConfigError& e) {
        return e.line();
    }
    return -1;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

int run_binary(const std::string& args) {
    const std::string cmd = std::string(HJLAB_BINARY) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(ConfigParser, DefaultsAndValues) {
    const auto cfg = parse_config(
        "# comment line\n"
        "[domain]\n"
        "kind = box\n"
        "dim = 2\n"
        "resolution = 17, 33\n"
        "extents = 1 2\n"
        "[experiment]\n"
        "q = 18/7   # fraction\n"
        "amplitudes = 1, 10, 100\n"
        "[output]\n"
        "seed = 42\n");
    EXPECT_EQ(cfg.domain.kind, hjlab::DomainKind::box);
    EXPECT_EQ(cfg.domain.dim, 2);
    EXPECT_EQ(cfg.domain.resolution[1], 33);
    EXPECT_EQ(cfg.domain.extents[1], 2.0);
    EXPECT_DOUBLE_EQ(cfg.experiment.q, 18.0 / 7.0);
    EXPECT_EQ(cfg.experiment.amplitudes, (std::vector<double>{1.0, 10.0, 100.0}));
    EXPECT_EQ(cfg.seed, 42u);
    EXPECT_EQ(cfg.sections, (std::vector<std::string>{"domain", "experiment", "output"}));
    EXPECT_EQ(cfg.problem.gamma, 2.0);
}

TEST(ConfigParser, ConformalMetricPromotesTheTorus) {
    const auto cfg = parse_config("[domain]\nkind = torus\n[metric]\nkind = conformal\n");
    EXPECT_EQ(cfg.domain.kind, hjlab::DomainKind::conformal_torus);
    EXPECT_THROW(parse_config("[domain]\nkind = box\n[metric]\nkind = conformal\n"), ConfigError);
}

TEST(ConfigParser, SyntaxErrorsCarryLineNumbers) {
    EXPECT_EQ(config_error_line("[domain]\nkind = torus\nbogus = 1\n"), 3);
    EXPECT_EQ(config_error_line("[domain]\n\n[nowhere]\n"), 3);
    EXPECT_EQ(config_error_line("[domain]\ndim = 3\ndim = 3\n"), 3);
    EXPECT_EQ(config_error_line("[problem]\ngamma = two\n"), 2);
    EXPECT_EQ(config_error_line("kind = torus\n"), 1);
    EXPECT_EQ(config_error_line("[domain\n"), 1);
    EXPECT_EQ(config_error_line("[domain]\nkind = sphere\n"), 2);
    EXPECT_EQ(config_error_line("[problem]\ngamma =\n"), 2);
    try {
        parse_config("[domain]\nkind = torus\nbogus = 1\n");
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("line 3: unknown key 'bogus'"), std::string::npos);
    }
}

TEST(ConfigParser, ShapeErrorsAreConfigErrors) {
    EXPECT_THROW(parse_config("[domain]\nresolution = 4\n"), ConfigError);
    EXPECT_THROW(parse_config("[domain]\ndim = 3\n[problem]\nf = cos\nf_axis = 4\n"), ConfigError);
    EXPECT_THROW(parse_config("[domain]\nkind = disc\ndim = 3\n"), ConfigError);
}

TEST(ConfigGates, SubquadraticGammaIsIn1) {
    EXPECT_EQ(gate_label("[problem]\ngamma = 0.9\n"), "(In1)");
    EXPECT_EQ(gate_label("[problem]\ngamma = 1\n"), "(In1)");
}

TEST(ConfigGates, DriftExponentIsIn2) {
    EXPECT_EQ(gate_label("[problem]\ndrift = sin\ndrift_exponent = 3\n"), "(In2)");
    EXPECT_EQ(gate_label("[problem]\ndrift = sin\ndrift_exponent = 4\n"), "");
}

TEST(ConfigGates, CouplingExponentAboveThresholdIsMfg3) {
    const std::string base = "[domain]\ndim = 5\n[problem]\ngamma = 2\n[mfg]\n";
    EXPECT_EQ(gate_label(base + "alpha = 2.1\ncoupling_constant = 3\n"), "(MFG3)");
    // below the threshold the gate passes, and the dimension check rejects d = 5 afterwards
    EXPECT_EQ(gate_label(base + "alpha = 1.9\n"), "");
    EXPECT_THROW(parse_config(base + "alpha = 1.9\n"), ConfigError);
}

TEST(ConfigGates, CouplingConstantIsMfg1) {
    EXPECT_EQ(gate_label("[mfg]\nalpha = 3\ncoupling_constant = 2\n"), "(MFG1)");
    EXPECT_EQ(gate_label("[mfg]\nalpha = 0.25\ncoupling_constant = 2\n"), "(MFG1)");
}

TEST(Validate, CommandSpecificGates) {
    auto disc = parse_config("[domain]\nkind = disc\ndim = 2\nresolution = 32, 64\n");
    EXPECT_NO_THROW(hjcli::validate(disc, "bochner-check"));
    EXPECT_THROW(hjcli::validate(disc, "solve"), GateError);

    auto sweep = parse_config("[problem]\ngamma = 3\n[experiment]\nq = 1.5\n");
    try {
        hjcli::validate(sweep, "thm2-sweep");
        FAIL() << "q = 1.5 accepted";
    } catch (const GateError& e) {
        EXPECT_EQ(e.label(), "(q-range)");
    }

    auto curved = parse_config("[domain]\nresolution = 16\n[metric]\nkind = conformal\n"
                               "amplitude = 0.3\nkappa_bound = 0.5\n");
    try {
        hjcli::validate(curved, "bochner-check");
        FAIL() << "kappa bound ignored";
    } catch (const GateError& e) {
        EXPECT_EQ(e.label(), "(D2)");
    }

    auto flat2d = parse_config("[domain]\ndim = 2\n[problem]\ngamma = 3\n");
    EXPECT_NO_THROW(hjcli::validate(flat2d, "bernstein-audit"));
}

TEST(Commands, ReportShapeForAGateFailure) {
    const auto dir = scratch("gate");
    const auto cfg = parse_config("[problem]\ngamma = 3\n[experiment]\nq = 1.5\n");
    const auto report = hjcli::run_command("thm2-sweep", cfg, dir.string());
    EXPECT_EQ(report["schema"], 1);
    EXPECT_FALSE(report["passed"].get<bool>());
    ASSERT_EQ(report["failures"].size(), 1u);
    EXPECT_EQ(report["failures"][0]["label"], "(q-range)");
    EXPECT_TRUE(std::filesystem::exists(dir / "report.json"));
    std::filesystem::remove_all(dir);
}

TEST(Commands, ManufacturedStudyWritesConvergenceTable) {
    const auto dir = scratch("manufactured");
    const auto cfg = parse_config("[domain]\nkind = box\n[problem]\nf = manufactured\n"
                                  "[experiment]\nresolutions = 9, 17\n");
    const auto report = hjcli::run_command("solve", cfg, dir.string());
    EXPECT_TRUE(report["passed"].get<bool>()) << report["failures"].dump();
    EXPECT_GT(report["results"]["observed_order"].get<double>(), 1.9);
    EXPECT_TRUE(std::filesystem::exists(dir / "convergence.csv"));
    EXPECT_TRUE(std::filesystem::exists(dir / "convergence.svg"));
    const std::string csv = slurp(dir / "convergence.csv");
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "nodes,h,error_inf,order,iterations,residual");
    std::filesystem::remove_all(dir);
}

TEST(Commands, AuditIsDeterministicAndSeedSensitive) {
    const std::string text = "[experiment]\nsamples = 2000\nparameter_sets = 20\n"
                             "level_fields = 2\nlevel_thresholds = 5\n";
    const auto a = scratch("audit_a");
    const auto b = scratch("audit_b");
    const auto c = scratch("audit_c");
    auto cfg = parse_config(text);
    hjcli::run_command("bernstein-audit", cfg, a.string());
    hjcli::run_command("bernstein-audit", cfg, b.string());
    cfg.seed = 2;
    hjcli::run_command("bernstein-audit", cfg, c.string());
    const std::string ra = slurp(a / "report.json");
    EXPECT_EQ(ra, slurp(b / "report.json"));
    EXPECT_NE(ra, slurp(c / "report.json"));
    EXPECT_EQ(ra.find("time"), std::string::npos);
    for (const auto& d : {a, b, c}) {
        std::filesystem::remove_all(d);
    }
}

TEST(Binary, ExitCodes) {
    const auto dir = scratch("binary");
    const auto write = [&](const std::string& name, const std::string& text) {
        std::ofstream(dir / name) << text;
        return (dir / name).string();
    };
    const std::string out = " --out " + (dir / "out").string();
    EXPECT_EQ(run_binary("--help"), 0);
    EXPECT_EQ(run_binary("frobnicate"), 2);
    EXPECT_EQ(run_binary("solve --config " + (dir / "missing.cfg").string()), 2);
    EXPECT_EQ(run_binary("solve --config " + write("bad.cfg", "[domain]\nbogus = 1\n") + out), 2);
    EXPECT_EQ(run_binary("solve --config " + write("g.cfg", "[problem]\ngamma = 0.9\n") + out), 1);
    EXPECT_NE(slurp(dir / "out" / "report.json").find("(In1)"), std::string::npos);
    EXPECT_EQ(run_binary("mfg --config " +
                         write("m.cfg", "[domain]\ndim = 5\n[mfg]\nalpha = 2.1\n"
                                        "coupling_constant = 3\n") + out),
              1);
    EXPECT_NE(slurp(dir / "out" / "report.json").find("(MFG3)"), std::string::npos);
    EXPECT_EQ(run_binary("bernstein-audit --config " +
                         write("a.cfg", "[experiment]\nsamples = 1000\nparameter_sets = 10\n") +
                         out),
              0);
    std::filesystem::remove_all(dir);
}
