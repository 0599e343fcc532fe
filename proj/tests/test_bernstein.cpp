#include "hjlab/bernstein.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace hjlab;

namespace {

constexpr double pi = std::numbers::pi;

DomainSpec cube(DomainKind kind, int n, int dim = 3) {
    DomainSpec s;
    s.kind = kind;
    s.dim = dim;
    s.resolution = {n, n, n};
    return s;
}

double max_interior(const Grid& g, const ScalarField& r) {
    double m = 0.0;
    for (Index k = 0; k < g.size(); ++k) {
        if (!g.boundary[k]) {
            m = std::max(m, std::abs(r[k]));
        }
    }
    return m;
}

}  // namespace

TEST(HFunction, ValuesDerivativesAndInverse) {
    const HFunction hf = HFunction::make(0.3);
    EXPECT_DOUBLE_EQ(hf.h(0.0), 2.0 / 1.3);
    EXPECT_DOUBLE_EQ(hf.dh(0.0), 1.0);
    for (double t : {0.5, 3.0, 1e4}) {
        const double step = 1e-5 * t;
        EXPECT_NEAR(hf.dh(t), (hf.h(t + step) - hf.h(t - step)) / (2.0 * step), 1e-8);
        EXPECT_NEAR(hf.d2h(t), (hf.dh(t + step) - hf.dh(t - step)) / (2.0 * step), 1e-8);
        EXPECT_NEAR(hf.inverse(hf.h(t)), t, 1e-12 * (1.0 + t));
    }
    EXPECT_NEAR(hf.inverse(hf.h(0.0)), 0.0, 1e-15);
    const HFunction lin = HFunction::linear();
    EXPECT_DOUBLE_EQ(lin.h(2.0), 3.0);
    EXPECT_DOUBLE_EQ(lin.d2h(2.0), 0.0);
    EXPECT_THROW(HFunction::make(0.0), Error);
    EXPECT_THROW(HFunction::make(1.0), Error);
}

TEST(HFunction, ToolkitInequalitiesHoldAcrossDelta) {
    for (double delta : {0.01, 0.3, 0.99}) {
        const auto rep = h_toolkit(delta);
        EXPECT_TRUE(rep.passed()) << "delta = " << delta;
        EXPECT_EQ(rep.checks.size(), 4u);
        EXPECT_EQ(rep.checks[0].samples, 2002);
    }
}

TEST(Bochner, PolynomialsAreExactAtInteriorNodes) {
    const Grid g = build_grid(cube(DomainKind::box, 17));
    const ScalarField linear = sample(g, [](const Eigen::Vector3d& x) {
        return 1.0 + 2.0 * x[0] - x[1] + 0.5 * x[2];
    });
    const ScalarField quadratic = sample(g, [](const Eigen::Vector3d& x) {
        return x[0] * x[0] + x[0] * x[1] - 2.0 * x[2] * x[2] + x[1];
    });
    for (const ScalarField* u : {&linear, &quadratic}) {
        EXPECT_LE(max_interior(g, bochner_residual(g, *u)), 1e-12);
        EXPECT_LE(max_interior(g, weighted_bochner_residual(g, *u, 0.3)), 1e-12);
    }
}

TEST(Bochner, WeightedFormWithLinearWeightIsThePlainForm) {
    const Grid g = build_grid(cube(DomainKind::torus, 16));
    const ScalarField u = sample(g, [](const Eigen::Vector3d& x) {
        return std::sin(2.0 * pi * x[0]) * std::cos(2.0 * pi * x[1]) * std::cos(2.0 * pi * x[2]);
    });
    const ScalarField plain = bochner_residual(g, u);
    const ScalarField weighted = weighted_bochner_residual(g, u, HFunction::linear());
    EXPECT_LT((plain - weighted).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Bochner, RefinementOrderOnFlatAndConformalTori) {
    const auto u = [](const Eigen::Vector3d& x) {
        return std::sin(2.0 * pi * x[0]) * std::cos(2.0 * pi * x[1]) * std::cos(2.0 * pi * x[2]);
    };
    const std::vector<DomainSpec> flat{cube(DomainKind::torus, 32), cube(DomainKind::torus, 64)};
    const auto plain = bochner_refinement(flat, MetricSpec::euclidean(), u);
    EXPECT_GT(plain.order, 1.9);
    EXPECT_EQ(plain.resolution, (std::vector<int>{32, 64}));

    const std::vector<DomainSpec> conf{cube(DomainKind::conformal_torus, 32),
                                       cube(DomainKind::conformal_torus, 64)};
    const auto curved =
        bochner_refinement(conf, MetricSpec::conformal(cosine_factor(0.1, 0)), u, 0.3);
    EXPECT_GT(curved.order, 0.9);
    EXPECT_LT(curved.max_residual[1], curved.max_residual[0]);
}

TEST(BoundarySign, DiscMatchesMinusCurvatureTerm) {
    double prev = 0.0;
    for (int nr : {32, 64}) {
        DomainSpec s;
        s.kind = DomainKind::disc;
        s.dim = 2;
        s.resolution = {nr, 4 * nr, 1};
        const Grid g = build_grid(s);
        const ScalarField u = sample(g, [](const Eigen::Vector3d& x) {
            const double r = std::hypot(x[0], x[1]);
            return (3.0 * r * r - 2.0 * r * r * r) * std::cos(std::atan2(x[1], x[0]));
        });
        const auto rep = boundary_sign_check(g, u);
        ASSERT_EQ(rep.nodes.size(), static_cast<std::size_t>(4 * nr));
        double err = 0.0;
        for (std::size_t i = 0; i < rep.nodes.size(); ++i) {
            const auto k = rep.nodes[i];
            const double theta = std::atan2(g.coords(k, 1), g.coords(k, 0));
            const double exact = -std::pow(std::sin(theta), 2);
            EXPECT_NEAR(rep.minus_curvature_term[i], exact, 1e-2);
            err = std::max(err, std::abs(rep.normal_derivative_w[i] - exact));
        }
        if (prev > 0.0) {
            EXPECT_LT(err, 0.5 * prev);
        }
        prev = err;
    }
}

TEST(BoundarySign, BoxNeumannFieldHasNonPositiveNormalDerivative) {
    const Grid g = build_grid(cube(DomainKind::box, 33));
    const ScalarField u = sample(g, [](const Eigen::Vector3d& x) {
        return std::cos(pi * x[0]) * std::cos(pi * x[1]) * std::cos(pi * x[2]);
    });
    const auto rep = boundary_sign_check(g, u);
    EXPECT_EQ(rep.nodes.size(), 6u * 31u * 31u);
    EXPECT_LE(rep.max_normal_derivative, 5.0 * g.h[0] * g.h[0]);
    EXPECT_THROW(boundary_sign_check(build_grid(cube(DomainKind::torus, 8)),
                                     ScalarField::Zero(512)),
                 Error);
}

TEST(InequalitySuite, NoViolationsAndDeterministic) {
    const auto a = pointwise_inequality_suite(7, 20000);
    const auto b = pointwise_inequality_suite(7, 20000);
    EXPECT_TRUE(a.passed());
    ASSERT_EQ(a.checks.size(), 10u);
    for (std::size_t i = 0; i < a.checks.size(); ++i) {
        EXPECT_EQ(a.checks[i].samples, 20000) << a.checks[i].name;
        EXPECT_EQ(a.checks[i].max_violation, b.checks[i].max_violation) << a.checks[i].name;
    }
}

TEST(MaxReg, ClosedFormExponents) {
    // d = 4, gamma = 3, q = 5, delta = 0.2: p = (2/4)(8/3) + (2/4) 5
    const auto m = maxreg_params(4, 3.0, 5.0, 0.2);
    const double p = 4.0 / 3.0 + 2.5;
    EXPECT_NEAR(m.p_formula, p, 1e-14);
    EXPECT_FALSE(m.substituted);
    EXPECT_NEAR(m.beta, (3.0 * (p - 2.0) + 0.8) / 1.2, 1e-14);
    EXPECT_NEAR(m.eta, 5.2 / 1.2, 1e-14);
    EXPECT_NEAR(m.Phi, 0.2 / 72.0 * std::pow(0.6, 5.2 / 1.2), 1e-16);
    EXPECT_NEAR(m.bo1_residual, 0.0, 1e-13);
    EXPECT_NEAR(m.bo2_residual, 0.0, 1e-13);
    EXPECT_DOUBLE_EQ(c_gamma(3.0), 1.0);
    EXPECT_DOUBLE_EQ(c_gamma(10.0), 2.56);

    // p_formula = 2 for (3, 2, 3): replaced by the midpoint of (2, q)
    const auto s = maxreg_params(3, 2.0, 3.0, 0.1);
    EXPECT_TRUE(s.substituted);
    EXPECT_DOUBLE_EQ(s.p, 2.5);
    EXPECT_GT(s.bo2_residual, 0.0);
}

TEST(MaxReg, QRangeGate) {
    try {
        maxreg_params(3, 3.0, 1.5, 0.1);
        FAIL() << "q = 1.5 accepted";
    } catch (const GateError& e) {
        EXPECT_EQ(e.label(), "(q-range)");
    }
    EXPECT_THROW(maxreg_params(3, 3.0, 2.0, 0.1), GateError);
    EXPECT_NO_THROW(maxreg_params(3, 3.0, 2.01, 0.1));
    EXPECT_THROW(maxreg_params(3, 1.0, 3.0, 0.1), GateError);
    EXPECT_THROW(maxreg_params(2, 2.0, 3.0, 0.1), Error);
}

TEST(Continuity, CriticalPointAndRoots) {
    for (int d = 3; d <= 10; ++d) {
        const auto ct = continuity_tools(d, 8.0, 2.0, 0.3, 0.5);
        const double ratio = (d - 2.0) / d;
        // phi'(y) = ((d-2)/d) y^{-2/d} - 1 vanishes at y*
        EXPECT_NEAR(ratio * std::pow(ct.y_star, -2.0 / d) - 1.0, 0.0, 1e-14);
        EXPECT_NEAR(ct.phi_star, std::pow(ct.y_star, ratio) - ct.y_star, 1e-15);
        const double level = 0.3 * ct.phi_star;
        const auto [lo, hi] = ct.roots(level);
        EXPECT_LT(lo, ct.y_star);
        EXPECT_GT(hi, ct.y_star);
        EXPECT_NEAR(ct.phi(lo), level, 1e-12);
        EXPECT_NEAR(ct.phi(hi), level, 1e-12);
        EXPECT_THROW(static_cast<void>(ct.roots(ct.phi_star)), Error);
    }
}

TEST(Continuity, ThresholdExistsOnlyForSmallZetaConstant) {
    const auto small = continuity_tools(3, 3.0, 2.0, 0.01, 1e-3);
    ASSERT_TRUE(small.t_star.has_value());
    EXPECT_LE(*small.t_star, small.phi_star);
    EXPECT_LT(small.zeta(*small.t_star), *small.t_star);
    EXPECT_GT(small.k_star(1.0), HFunction::make(0.01).h(0.0));

    const auto large = continuity_tools(3, 3.0, 2.0, 0.01, 1.0);
    EXPECT_FALSE(large.t_star.has_value());
    EXPECT_THROW(static_cast<void>(large.k_star(1.0)), Error);
}

TEST(LevelSets, VolumesAndChebyshevBound) {
    const Grid g = build_grid(cube(DomainKind::torus, 12));
    const auto params = maxreg_params(3, 2.0, 3.0, 0.3);
    const HFunction hf = HFunction::make(0.3);
    const ScalarField u = sample(g, [](const Eigen::Vector3d& x) {
        return 0.8 * std::sin(2.0 * pi * x[0]) * std::cos(2.0 * pi * x[1]);
    });
    const auto st = bernstein_state(g, u, hf);
    const double k = 0.5 * (st.z.minCoeff() + st.z.maxCoeff());
    const auto ls = level_sets(g, st.z, k, params);
    double volume = 0.0;
    double l1 = 0.0;
    for (Index i = 0; i < g.size(); ++i) {
        if (st.z[i] > k) {
            volume += g.weights[i];
        }
        l1 += g.weights[i] * std::sqrt(st.w[i]);
    }
    EXPECT_NEAR(ls.volume, volume, 1e-15);
    EXPECT_NEAR(ls.z_k.maxCoeff(), st.z.maxCoeff() - k, 1e-14);
    EXPECT_TRUE(ls.chebyshev_holds);
    EXPECT_NEAR(ls.chebyshev_bound, l1 / std::sqrt(hf.inverse(k)), 1e-10 * ls.chebyshev_bound);

    const auto below = level_sets(g, st.z, 0.5 * hf.h(0.0), params);
    EXPECT_TRUE(std::isinf(below.chebyshev_bound));
    EXPECT_THROW(level_sets(g, st.z, -1.0, params), Error);
}

TEST(FittedOrder, ExactPowerLaw) {
    EXPECT_NEAR(fitted_order({0.1, 0.05, 0.025}, {3e-2, 7.5e-3, 1.875e-3}), 2.0, 1e-12);
    EXPECT_THROW(fitted_order({0.1}, {1.0}), Error);
}
