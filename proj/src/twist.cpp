#include "twistband/twist.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace twistband {

void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
    if (n < 1) throw std::invalid_argument("gauss_legendre: order must be >= 1");
    nodes.resize(n);
    weights.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        // Newton iteration from the Chebyshev-based initial guess.
        double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
}

namespace {

double dense_max_abs_beta(const TwistProfile& p) {
    double m = 0.0;
    const int n = 4096;
    for (int i = 0; i <= n; ++i)
        m = std::max(m, std::abs(p.beta(-p.s0 + 2.0 * p.s0 * i / n)));
    return m;
}

}  // namespace

double TwistProfile::beta(double s) const {
    if (std::abs(s) >= s0) return 0.0;
    switch (kind) {
        case Kind::CosineBump:
            return c1 * 0.5 * (1.0 + std::cos(M_PI * s / s0));
        case Kind::HalfCosine:
            return c1 * std::cos(M_PI * s / (2.0 * s0));
        case Kind::Mixed:
            return c1 * std::cos(M_PI * s / (2.0 * s0)) - c2 * std::sin(M_PI * s / s0);
        case Kind::Tent:
            return c1 * (1.0 - std::abs(s) / s0);
    }
    return 0.0;
}

double TwistProfile::beta_prime(double s) const {
    if (std::abs(s) >= s0) return 0.0;
    switch (kind) {
        case Kind::CosineBump:
            return -c1 * 0.5 * (M_PI / s0) * std::sin(M_PI * s / s0);
        case Kind::HalfCosine:
            return -c1 * (M_PI / (2.0 * s0)) * std::sin(M_PI * s / (2.0 * s0));
        case Kind::Mixed:
            return -c1 * (M_PI / (2.0 * s0)) * std::sin(M_PI * s / (2.0 * s0)) -
                   c2 * (M_PI / s0) * std::cos(M_PI * s / s0);
        case Kind::Tent:
            return s >= 0.0 ? -c1 / s0 : c1 / s0;
    }
    return 0.0;
}

double TwistProfile::theta(double s) const {
    // theta(s) = beta0*s - int_0^s beta, with theta(0) = 0.
    const double sc = std::clamp(s, -s0, s0);
    double accumulated = 0.0;  // int_0^{sc} beta, closed form per family
    switch (kind) {
        case Kind::CosineBump:
            accumulated = 0.5 * c1 * (sc + (s0 / M_PI) * std::sin(M_PI * sc / s0));
            break;
        case Kind::HalfCosine:
            accumulated = c1 * (2.0 * s0 / M_PI) * std::sin(M_PI * sc / (2.0 * s0));
            break;
        case Kind::Mixed:
            accumulated = c1 * (2.0 * s0 / M_PI) * std::sin(M_PI * sc / (2.0 * s0)) +
                          c2 * (s0 / M_PI) * (std::cos(M_PI * sc / s0) - 1.0);
            break;
        case Kind::Tent:
            accumulated = c1 * (sc - sc * std::abs(sc) / (2.0 * s0));
            break;
    }
    return beta0 * s - accumulated;
}

double TwistProfile::integral_beta() const {
    switch (kind) {
        case Kind::CosineBump:
            return c1 * s0;
        case Kind::HalfCosine:
            return c1 * 4.0 * s0 / M_PI;
        case Kind::Mixed:
            return c1 * 4.0 * s0 / M_PI;  // the odd sine part integrates to zero
        case Kind::Tent:
            return c1 * s0;
    }
    return 0.0;
}

double TwistProfile::integral_beta_sq() const {
    switch (kind) {
        case Kind::CosineBump:
            return 0.75 * c1 * c1 * s0;
        case Kind::HalfCosine:
            return c1 * c1 * s0;
        case Kind::Mixed:
            return (c1 * c1 + c2 * c2) * s0;
        case Kind::Tent:
            return 2.0 * c1 * c1 * s0 / 3.0;
    }
    return 0.0;
}

double TwistProfile::integral_theta_ddot_sq() const {
    if (!has_l2_second_derivative)
        throw std::domain_error("theta_ddot is not square-integrable for this family");
    switch (kind) {
        case Kind::CosineBump:
            return c1 * c1 * M_PI * M_PI / (4.0 * s0);
        case Kind::HalfCosine:
            return c1 * c1 * M_PI * M_PI / (4.0 * s0);
        case Kind::Mixed:
            return c1 * c1 * M_PI * M_PI / (4.0 * s0) + c2 * c2 * M_PI * M_PI / s0;
        case Kind::Tent:
            break;
    }
    throw std::domain_error("theta_ddot is not square-integrable for this family");
}

double TwistProfile::reversion_margin() const { return 2.0 * beta0 - dense_max_abs_beta(*this); }

std::string to_string(TwistProfile::Kind kind) {
    switch (kind) {
        case TwistProfile::Kind::CosineBump: return "cosine_bump";
        case TwistProfile::Kind::HalfCosine: return "half_cosine";
        case TwistProfile::Kind::Mixed: return "mixed";
        case TwistProfile::Kind::Tent: return "tent";
    }
    return "?";
}

TwistProfile::Kind profile_kind_from_string(const std::string& name) {
    if (name == "cosine_bump") return TwistProfile::Kind::CosineBump;
    if (name == "half_cosine") return TwistProfile::Kind::HalfCosine;
    if (name == "mixed") return TwistProfile::Kind::Mixed;
    if (name == "tent") return TwistProfile::Kind::Tent;
    throw std::invalid_argument("unknown twist profile kind: " + name);
}

TwistProfile make_profile(TwistProfile::Kind kind, double beta0, double s0,
                          double c1, double c2) {
    if (!(s0 > 0.0)) throw std::invalid_argument("s0 must be positive");
    if (!(beta0 >= 0.0)) throw std::invalid_argument("beta0 must be >= 0");
    if (!std::isfinite(c1) || !std::isfinite(c2))
        throw std::invalid_argument("non-finite profile amplitude");
    TwistProfile p;
    p.kind = kind;
    p.beta0 = beta0;
    p.s0 = s0;
    p.c1 = c1;
    p.c2 = (kind == TwistProfile::Kind::Mixed) ? c2 : 0.0;
    p.has_l2_second_derivative = kind != TwistProfile::Kind::Tent;
    p.max_abs_beta = dense_max_abs_beta(p);
    return p;
}

ThetaSample sample_theta(const TwistProfile& profile, double s) {
    ThetaSample out;
    out.theta = profile.theta(s);
    out.theta_dot = profile.theta_dot(s);
    if (profile.has_l2_second_derivative)
        out.theta_ddot = -profile.beta_prime(s);
    return out;
}

std::string to_string(DeficitClass c) {
    switch (c) {
        case DeficitClass::Attractive: return "attractive";
        case DeficitClass::Critical: return "critical";
        case DeficitClass::Repulsive: return "repulsive";
    }
    return "?";
}

DeficitReport twist_deficit(const TwistProfile& profile, int quadrature_order) {
    DeficitReport r;
    const double b0 = profile.beta0, s0 = profile.s0;
    r.deficit = integrate(
        [&](double s) {
            const double td = profile.theta_dot(s);
            return td * td - b0 * b0;
        },
        -s0, s0, std::max(8, quadrature_order), 8);
    // I = int (-2 beta0 beta + beta^2), from theta_dot = beta0 - beta.
    r.deficit_closed_form =
        -2.0 * b0 * profile.integral_beta() + profile.integral_beta_sq();
    r.reversion_margin = profile.reversion_margin();
    r.tolerance = 1e-10 * (b0 * b0 * 2.0 * s0 + 1.0);
    if (std::abs(r.deficit) <= r.tolerance)
        r.classification = DeficitClass::Critical;
    else
        r.classification =
            r.deficit < 0.0 ? DeficitClass::Attractive : DeficitClass::Repulsive;
    return r;
}

TwistProfile critical_solve(TwistProfile::Kind kind, double beta0, double s0,
                            double fixed_c1) {
    if (!(s0 > 0.0)) throw std::invalid_argument("s0 must be positive");
    // I(amplitude) is quadratic: I = q2*x^2 + q1*x + q0 with x the free
    // amplitude.
    double root = 0.0;
    if (kind == TwistProfile::Kind::Mixed) {
        // I = -2*beta0*c1*(4 s0/pi) + (c1^2 + c2^2) s0, solve for c2.
        const double rhs = 8.0 * beta0 * fixed_c1 / M_PI - fixed_c1 * fixed_c1;
        if (rhs <= 0.0)
            throw std::invalid_argument(
                "critical_solve: no positive root for c2 at this c1");
        root = std::sqrt(rhs);
    } else {
        // Single-amplitude families: I = c^2 * q2 - 2*beta0*c * q1 with
        // q1 = integral of the unit-amplitude beta, q2 = integral of its
        // square. Nonzero root c = 2*beta0*q1/q2.
        TwistProfile unit = make_profile(kind, beta0, s0, 1.0);
        const double q1 = unit.integral_beta();
        const double q2 = unit.integral_beta_sq();
        if (beta0 <= 0.0 || q1 <= 0.0)
            throw std::invalid_argument("critical_solve: no positive root");
        root = 2.0 * beta0 * q1 / q2;
    }
    TwistProfile p = (kind == TwistProfile::Kind::Mixed)
                         ? make_profile(kind, beta0, s0, fixed_c1, root)
                         : make_profile(kind, beta0, s0, root);
    const DeficitReport dr = twist_deficit(p);
    if (std::abs(dr.deficit) > 1e-12 * std::max(1.0, beta0 * beta0 * 2.0 * s0))
        throw std::logic_error("critical_solve: residual deficit after root solve");
    if (!(dr.reversion_margin > 0.0))
        throw std::invalid_argument(
            "critical_solve: root violates the reversion margin; for any "
            "one-signed slowdown 0 < beta < 2*beta0 the pointwise inequality "
            "beta^2 < 2*beta0*beta forces a negative deficit, so such a "
            "profile can never be critical");
    if (!p.has_l2_second_derivative)
        throw std::invalid_argument(
            "critical_solve: family lacks a square-integrable theta_ddot");
    return p;
}

ProfileValidation validate_profile(const TwistProfile& profile, TheoremKind theorem) {
    ProfileValidation v;
    const DeficitReport dr = twist_deficit(profile);
    if (theorem == TheoremKind::Main) {
        if (dr.classification != DeficitClass::Attractive)
            v.failures.push_back("deficit not negative");
    } else {
        if (dr.classification != DeficitClass::Critical)
            v.failures.push_back("deficit nonzero");
        if (!(dr.reversion_margin > 0.0))
            v.failures.push_back("twist fully reverted (reversion margin <= 0)");
        if (!profile.has_l2_second_derivative)
            v.failures.push_back("second derivative not square-integrable");
    }
    v.pass = v.failures.empty();
    return v;
}

}  // namespace twistband
