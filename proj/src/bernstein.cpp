#include "hjlab/bernstein.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace hjlab {

HFunction HFunction::make(double delta) {
    if (!(delta > 0.0 && delta < 1.0)) {
        std::ostringstream os;
        os << "h-function: delta must lie in (0, 1), got " << delta;
        throw Error(os.str());
    }
    return {delta, false};
}

HFunction HFunction::linear() { return {1.0, true}; }

double HFunction::h(double t) const {
    if (is_linear) {
        return 1.0 + t;
    }
    return 2.0 / (1.0 + delta) * std::pow(1.0 + t, 0.5 * (1.0 + delta));
}

double HFunction::dh(double t) const {
    if (is_linear) {
        return 1.0;
    }
    return std::pow(1.0 + t, 0.5 * (delta - 1.0));
}

double HFunction::d2h(double t) const {
    if (is_linear) {
        return 0.0;
    }
    return 0.5 * (delta - 1.0) * std::pow(1.0 + t, 0.5 * (delta - 3.0));
}

double HFunction::inverse(double z) const {
    if (is_linear) {
        return z - 1.0;
    }
    return std::pow(0.5 * (1.0 + delta) * z, 2.0 / (1.0 + delta)) - 1.0;
}

BernsteinState bernstein_state(const Grid& grid, const ScalarField& u, const HFunction& hf) {
    BernsteinState st;
    st.u = u;
    st.delta = hf.delta;
    st.w = 0.5 * pointwise_norm(grid, gradient(grid, u)).array().square().matrix();
    st.z = st.w.unaryExpr([&](double t) { return hf.h(t); });
    st.z1 = st.w.unaryExpr([&](double t) { return hf.dh(t); });
    st.z2 = st.w.unaryExpr([&](double t) { return hf.d2h(t); });
    return st;
}

namespace {

/// g(grad Lap u, grad u) + |D^2u|^2 + Ric(grad u, grad u), plus the pieces reused by the
/// weighted identity.
struct BochnerTerms {
    VectorField grad;
    SymTensorField hess;
    ScalarField right;
};

BochnerTerms bochner_terms(const Grid& grid, const ScalarField& u) {
    BochnerTerms t;
    t.grad = gradient(grid, u);
    t.hess = hessian(grid, u);
    const ScalarField lap = laplace_beltrami(grid, u);
    const VectorField grad_lap = gradient(grid, lap);
    const ScalarField hnorm = pointwise_norm(grid, t.hess);
    t.right = inner(grid, grad_lap, t.grad) + hnorm.cwiseAbs2();
    if (grid.is_conformal()) {
        const SymTensorField ric{ricci_tensor(grid)};
        t.right += bilinear(grid, ric, t.grad, t.grad);
    }
    return t;
}

}  // namespace

ScalarField bochner_residual(const Grid& grid, const ScalarField& u) {
    const BochnerTerms t = bochner_terms(grid, u);
    const ScalarField w = 0.5 * inner(grid, t.grad, t.grad);
    return laplace_beltrami(grid, w) - t.right;
}

ScalarField weighted_bochner_residual(const Grid& grid, const ScalarField& u, double delta) {
    return weighted_bochner_residual(grid, u, HFunction::make(delta));
}

ScalarField weighted_bochner_residual(const Grid& grid, const ScalarField& u, const HFunction& hf) {
    const BochnerTerms t = bochner_terms(grid, u);
    const ScalarField w = 0.5 * inner(grid, t.grad, t.grad);
    const ScalarField z1 = w.unaryExpr([&](double s) { return hf.dh(s); });
    const ScalarField z2 = w.unaryExpr([&](double s) { return hf.d2h(s); });
    const VectorField hx = apply(grid, t.hess, t.grad);
    const ScalarField hx2 = inner(grid, hx, hx);
    // Lap z through the chain rule on the discrete Lap w and grad w, so that the residual
    // vanishes identically whenever the plain form does and grad w = D^2u(grad u) exactly
    const VectorField gw = gradient(grid, w);
    const ScalarField lap_z = z1.cwiseProduct(laplace_beltrami(grid, w)) +
                              z2.cwiseProduct(inner(grid, gw, gw));
    return lap_z - z1.cwiseProduct(t.right) - z2.cwiseProduct(hx2);
}

double fitted_order(const std::vector<double>& h, const std::vector<double>& err) {
    if (h.size() != err.size() || h.size() < 2) {
        throw Error("fitted_order: need at least two matching samples");
    }
    const auto n = static_cast<double>(h.size());
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < h.size(); ++i) {
        const double x = std::log(h[i]);
        const double y = std::log(err[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

RefinementStudy bochner_refinement(const std::vector<DomainSpec>& specs, const MetricSpec& metric,
                                   const std::function<double(const Eigen::Vector3d&)>& u,
                                   std::optional<double> delta) {
    RefinementStudy study;
    for (const auto& spec : specs) {
        const Grid grid = build_grid(spec, metric);
        const ScalarField uu = sample(grid, u);
        const ScalarField r = delta ? weighted_bochner_residual(grid, uu, *delta)
                                    : bochner_residual(grid, uu);
        double mx = 0.0;
        for (Index k = 0; k < grid.size(); ++k) {
            if (!grid.boundary[k]) {
                mx = std::max(mx, std::abs(r[k]));
            }
        }
        study.resolution.push_back(spec.resolution[0]);
        study.spacing.push_back(grid.h[0]);
        study.max_residual.push_back(mx);
    }
    if (study.spacing.size() >= 2) {
        study.order = fitted_order(study.spacing, study.max_residual);
    }
    return study;
}

namespace {

/// Fourth-order difference along an axis of a box: centred five-point stencil inside,
/// one-sided five-point stencils on the two layers next to each face.
ScalarField derivative4(const Grid& grid, const ScalarField& u, int axis) {
    Index s = 1;
    for (int a = 0; a < axis; ++a) {
        s *= grid.n[a];
    }
    const int n = grid.n[axis];
    const double c = 1.0 / (12.0 * grid.h[axis]);
    ScalarField out(u.size());
    for (Index k = 0; k < u.size(); ++k) {
        const int i = static_cast<int>((k / s) % n);
        auto at = [&](int j) { return u[k + (j - i) * s]; };
        if (i == 0) {
            out[k] = c * (-25 * at(0) + 48 * at(1) - 36 * at(2) + 16 * at(3) - 3 * at(4));
        } else if (i == 1) {
            out[k] = c * (-3 * at(0) - 10 * at(1) + 18 * at(2) - 6 * at(3) + at(4));
        } else if (i == n - 2) {
            out[k] = c * (-at(n - 5) + 6 * at(n - 4) - 18 * at(n - 3) + 10 * at(n - 2) + 3 * at(n - 1));
        } else if (i == n - 1) {
            out[k] = c * (3 * at(n - 5) - 16 * at(n - 4) + 36 * at(n - 3) - 48 * at(n - 2) +
                          25 * at(n - 1));
        } else {
            out[k] = c * (at(i - 2) - 8 * at(i - 1) + 8 * at(i + 1) - at(i + 2));
        }
    }
    return out;
}

}  // namespace

BoundarySignReport boundary_sign_check(const Grid& grid, const ScalarField& u, double tolerance) {
    if (grid.kind != DomainKind::box && grid.kind != DomainKind::disc) {
        throw Error("boundary_sign_check: domain has no boundary");
    }
    if (u.size() != grid.size()) {
        throw Error("boundary_sign_check: field does not match the grid");
    }
    BoundarySignReport rep;
    if (grid.kind == DomainKind::disc) {
        const ScalarField ur = axis_derivative(grid, u, 0);
        const ScalarField ut = axis_derivative(grid, u, 1);
        ScalarField w(grid.size());
        for (Index k = 0; k < grid.size(); ++k) {
            const double r = (grid.multi_index(k)[0] + 1) * grid.h[0];
            w[k] = 0.5 * (ur[k] * ur[k] + ut[k] * ut[k] / (r * r));
        }
        const ScalarField wr = axis_derivative(grid, w, 0);
        for (Index k = 0; k < grid.size(); ++k) {
            if (!grid.face_interior[k]) {
                continue;
            }
            const double tangential = ut[k] / grid.radius;
            rep.nodes.push_back(k);
            rep.normal_derivative_w.push_back(wr[k]);
            rep.minus_curvature_term.push_back(-tangential * tangential / grid.radius);
        }
    } else {
        // fourth order, so the O(h^2) sign tolerance is not eaten by the face stencils
        ScalarField w = ScalarField::Zero(grid.size());
        for (int a = 0; a < grid.dim; ++a) {
            w += 0.5 * derivative4(grid, u, a).cwiseAbs2();
        }
        std::vector<ScalarField> dw;
        for (int a = 0; a < grid.dim; ++a) {
            dw.push_back(derivative4(grid, w, a));
        }
        for (Index k = 0; k < grid.size(); ++k) {
            if (!grid.face_interior[k]) {
                continue;
            }
            double dnu = 0.0;
            for (int a = 0; a < grid.dim; ++a) {
                dnu += grid.normals(k, a) * dw[a][k];
            }
            rep.nodes.push_back(k);
            rep.normal_derivative_w.push_back(dnu);
            rep.minus_curvature_term.push_back(0.0);
        }
    }
    rep.max_normal_derivative = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < rep.nodes.size(); ++i) {
        const double dnu = rep.normal_derivative_w[i];
        rep.max_discrepancy = std::max(rep.max_discrepancy, std::abs(dnu - rep.minus_curvature_term[i]));
        rep.max_normal_derivative = std::max(rep.max_normal_derivative, dnu);
        if (dnu > tolerance) {
            ++rep.flagged;
        }
    }
    return rep;
}

namespace {

/// Records lhs >= rhs with relative slack.
void record(IdentityCheck& c, double lhs, double rhs, double slack) {
    ++c.samples;
    const double scale = std::max({1.0, std::abs(lhs), std::abs(rhs)});
    const double v = (rhs - lhs) / scale;
    c.max_violation = std::max(c.max_violation, v);
    if (v > slack) {
        ++c.violations;
    }
}

void record_equal(IdentityCheck& c, double a, double b, double slack) {
    ++c.samples;
    const double v = std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
    c.max_violation = std::max(c.max_violation, v);
    if (v > slack) {
        ++c.violations;
    }
}

void record_h(const HFunction& hf, double t, double slack, IdentityCheck& h1, IdentityCheck& h2,
              IdentityCheck& h3, IdentityCheck& neg) {
    const double d = hf.delta;
    record(h1, std::pow(1.0 + t, 0.5 * d), hf.dh(t) * std::sqrt(t), slack);
    record(h2, hf.dh(t) + 2.0 * t * hf.d2h(t), d * hf.dh(t), slack);
    record_equal(h3, hf.dh(t), std::pow(0.5 * (d + 1.0) * hf.h(t), (d - 1.0) / (1.0 + d)), slack);
    ++neg.samples;
    if (!(hf.d2h(t) < 0.0)) {
        ++neg.violations;
        neg.max_violation = std::max(neg.max_violation, hf.d2h(t));
    }
}

}  // namespace

bool HToolkitReport::passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed(); });
}

bool InequalityReport::passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed(); });
}

HToolkitReport h_toolkit(double delta, int samples) {
    HToolkitReport rep;
    rep.hf = HFunction::make(delta);
    IdentityCheck h1{"h1"}, h2{"h2"}, h3{"h3"}, neg{"h_second_negative"};
    const double slack = 1e-12;
    record_h(rep.hf, 0.0, slack, h1, h2, h3, neg);
    for (int i = 0; i < samples; ++i) {
        const double t = std::pow(10.0, -6.0 + 12.0 * i / std::max(1, samples - 1));
        record_h(rep.hf, t, slack, h1, h2, h3, neg);
    }
    rep.checks = {h1, h2, h3, neg};
    return rep;
}

InequalityReport pointwise_inequality_suite(std::uint64_t seed, long samples, double slack) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<int> dims(2, 6);

    auto random_sym = [&](int d, double scale) {
        Eigen::MatrixXd a(d, d);
        for (int i = 0; i < d; ++i) {
            for (int j = i; j < d; ++j) {
                a(i, j) = a(j, i) = scale * normal(rng);
            }
        }
        return a;
    };
    auto log_uniform = [&](double lo, double hi) {
        return std::pow(10.0, lo + (hi - lo) * unit(rng));
    };

    IdentityCheck schw{"schw"}, ab{"ab"}, abp{"ab_prime"}, cs1a{"cs1_trace"}, cs1b{"cs1_equation"};
    IdentityCheck h1{"h1"}, h2{"h2"}, h3{"h3"}, neg{"h_second_negative"}, chain{"h_chain"};

    for (long s = 0; s < samples; ++s) {
        {
            const int d = dims(rng);
            const Eigen::MatrixXd a = random_sym(d, log_uniform(-3, 3));
            const double tr = a.trace();
            record(schw, a.squaredNorm(), tr * tr / d, slack);
        }
        {
            const double a = log_uniform(-4, 4) * unit(rng);
            const double b = log_uniform(-4, 4) * normal(rng);
            const double c = log_uniform(-4, 4) * normal(rng);
            record(ab, (a + b - c) * (a + b - c), a * a - 2.0 * a * (std::abs(b) + std::abs(c)), slack);
        }
        {
            const double a = log_uniform(-4, 4) * normal(rng);
            const double b = log_uniform(-4, 4) * normal(rng);
            record(abp, (a - b) * (a - b), 0.5 * a * a - 2.0 * b * b, slack);
        }
        {
            // Hessian whose trace is fixed by the equation: Lap u = |grad u|^gamma / gamma - f
            const int d = dims(rng);
            const double gamma = 1.0 + 5.0 * unit(rng) + 1e-3;
            const double grad = log_uniform(-3, 1);
            const double f = log_uniform(-3, 3) * normal(rng);
            const double lap = std::pow(grad, gamma) / gamma - f;
            Eigen::MatrixXd a = random_sym(d, log_uniform(-2, 2));
            a.diagonal().array() += (lap - a.trace()) / d;
            record(cs1a, a.squaredNorm(), lap * lap / d, slack);
            record(cs1b, lap * lap / d,
                   std::pow(grad, 2.0 * gamma) / (2.0 * gamma * gamma * d) - 2.0 / d * f * f, slack);
        }
        {
            const HFunction hf = HFunction::make(std::clamp(unit(rng), 1e-6, 1.0 - 1e-6));
            const double t = unit(rng) < 0.01 ? 0.0 : log_uniform(-6, 6);
            record_h(hf, t, slack, h1, h2, h3, neg);
            // z1 |A|^2 + z2 |A X|^2 >= delta z1 |A|^2 with |X|^2 = 2 w
            const int d = dims(rng);
            const Eigen::MatrixXd a = random_sym(d, log_uniform(-2, 2));
            Eigen::VectorXd x(d);
            for (int i = 0; i < d; ++i) {
                x[i] = normal(rng);
            }
            x *= std::sqrt(2.0 * t) / std::max(x.norm(), 1e-300);
            const double a2 = a.squaredNorm();
            record(chain, hf.dh(t) * a2 + hf.d2h(t) * (a * x).squaredNorm(), hf.delta * hf.dh(t) * a2,
                   slack);
        }
    }
    InequalityReport rep;
    rep.slack = slack;
    rep.checks = {schw, ab, abp, cs1a, cs1b, h1, h2, h3, neg, chain};
    return rep;
}

double c_gamma(double gamma) {
    return std::max(1.0, std::pow(2.0, gamma - 2.0) / (gamma * gamma));
}

MaxRegParams maxreg_params(int d, double gamma, double q, double delta) {
    if (d < 3) {
        throw Error("maxreg_params: dimension must be at least 3");
    }
    if (!(gamma > 1.0)) {
        throw GateError("(In1)", "gamma > 1 required");
    }
    if (!(delta > 0.0 && delta < 1.0)) {
        throw Error("maxreg_params: delta must lie in (0, 1)");
    }
    const double lower = std::max(d * (gamma - 1.0) / gamma, 2.0);
    if (!(q > lower)) {
        std::ostringstream os;
        os << "q > max{d(gamma-1)/gamma, 2} = " << lower << " required (got q = " << q << ")";
        throw GateError("(q-range)", os.str());
    }
    MaxRegParams m;
    m.d = d;
    m.gamma = gamma;
    m.q = q;
    m.delta = delta;
    m.p_formula = 2.0 / d * (d * (gamma - 1.0) / gamma) + (d - 2.0) / d * q;
    m.p = m.p_formula;
    if (m.p <= 2.0) {
        m.p = 0.5 * (std::max(2.0, m.p) + q);
        m.substituted = true;
    }
    const double p = m.p;
    m.beta = (gamma * (p - 2.0) + 1.0 - delta) / (1.0 + delta);
    m.eta = (2.0 * gamma + delta - 1.0) / (1.0 + delta);
    m.Phi = delta / (2.0 * gamma * gamma * d) *
            std::pow(0.5 * (delta + 1.0), (2.0 * gamma + delta - 1.0) / (delta + 1.0));
    m.c_gamma = c_gamma(gamma);
    m.bo1_residual = m.eta - ((delta - 1.0) / (1.0 + delta) * p / (p - 2.0) + m.beta * 2.0 / (p - 2.0));
    m.bo2_residual = (m.beta + 1.0) * d / (d - 2.0) - gamma * q / (1.0 + delta);
    return m;
}

LevelSetData level_sets(const Grid& grid, const ScalarField& z, double k, const MaxRegParams& params) {
    if (!(k >= 0.0)) {
        throw Error("level_sets: threshold must be nonnegative");
    }
    if (z.size() != grid.size()) {
        throw Error("level_sets: field does not match the grid");
    }
    const HFunction hf = HFunction::make(params.delta);
    const double expo = params.q * params.gamma / (1.0 + params.delta);
    LevelSetData out;
    out.k = k;
    out.mask.assign(z.size(), 0);
    out.z_k = (z.array() - k).max(0.0).matrix();
    double sqrt_w_l1 = 0.0;
    for (Index i = 0; i < z.size(); ++i) {
        sqrt_w_l1 += grid.weights[i] * std::sqrt(std::max(0.0, hf.inverse(z[i])));
        if (z[i] > k) {
            out.mask[i] = 1;
            out.volume += grid.weights[i];
            out.y_k += grid.weights[i] * std::pow(out.z_k[i], expo);
        }
    }
    const double denom = std::pow(0.5 * (1.0 + params.delta) * k, 2.0 / (1.0 + params.delta)) - 1.0;
    out.chebyshev_bound = denom > 0.0 ? sqrt_w_l1 / std::sqrt(denom)
                                      : std::numeric_limits<double>::infinity();
    out.chebyshev_holds = out.volume <= out.chebyshev_bound * (1.0 + 1e-12);
    return out;
}

double ContinuityTools::phi(double y) const {
    return std::pow(y, (d - 2.0) / d) - y;
}

double ContinuityTools::zeta(double t) const {
    const double e1 = (params.q - params.p) / params.q;
    const double e2 = e1 - params.p * params.delta;
    return C * (t + std::pow(t, e1) + std::pow(t, e2));
}

std::pair<double, double> ContinuityTools::roots(double zeta_bar) const {
    if (!(zeta_bar >= 0.0) || zeta_bar >= phi_star) {
        std::ostringstream os;
        os << "continuity_tools: level " << zeta_bar << " outside [0, phi*) with phi* = " << phi_star;
        throw Error(os.str());
    }
    if (zeta_bar == 0.0) {
        return {0.0, 1.0};
    }
    auto bisect = [&](double lo, double hi, bool increasing) {
        for (int it = 0; it < 400; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (mid == lo || mid == hi) {
                break;
            }
            const bool below = phi(mid) < zeta_bar;
            if (below == increasing) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        return std::abs(phi(lo) - zeta_bar) <= std::abs(phi(hi) - zeta_bar) ? lo : hi;
    };
    return {bisect(0.0, y_star, true), bisect(y_star, 1.0, false)};
}

double ContinuityTools::k_star(double grad_l1) const {
    if (!t_star) {
        throw Error("continuity_tools: t* does not exist for this zeta constant");
    }
    const double r = grad_l1 / *t_star;
    return 2.0 / (1.0 + params.delta) * std::pow(1.0 + 0.5 * r * r, 0.5 * (1.0 + params.delta));
}

ContinuityTools continuity_tools(int d, double q, double gamma, double delta, double C) {
    if (d < 3) {
        throw Error("continuity_tools: dimension must be at least 3");
    }
    if (!(C > 0.0)) {
        throw Error("continuity_tools: the zeta constant must be positive");
    }
    ContinuityTools ct;
    ct.d = d;
    ct.C = C;
    ct.params = maxreg_params(d, gamma, q, delta);
    ct.y_star = std::pow((d - 2.0) / d, 0.5 * d);
    ct.phi_star = ct.phi(ct.y_star);

    // Largest t <= cap with sup_{s <= t} zeta(s) < t: log scan, then bisection on the last gap.
    const double cap = ct.phi_star * (1.0 - 1e-6);
    constexpr int scan = 10000;
    std::vector<double> ts(scan);
    std::vector<double> running(scan);
    double sup = ct.zeta(0.0);
    int last = -1;
    for (int i = 0; i < scan; ++i) {
        ts[i] = cap * std::pow(10.0, -12.0 + 12.0 * i / (scan - 1));
        sup = std::max(sup, ct.zeta(ts[i]));
        running[i] = sup;
        if (sup < ts[i]) {
            last = i;
        }
    }
    if (last < 0) {
        return ct;
    }
    if (last == scan - 1) {
        ct.t_star = cap;
        return ct;
    }
    double lo = ts[last];
    double hi = ts[last + 1];
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (std::max(running[last], ct.zeta(mid)) < mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    ct.t_star = lo;
    return ct;
}

}  // namespace hjlab
