#include "twistband/certifier.hpp"

#include <cmath>
#include <cstdio>
#include <functional>
#include <nlohmann/json.hpp>
#include <stdexcept>

namespace twistband {

namespace {

const char* kSignNote =
    "sign convention: shifted_quotient = (delta*norm_f_sq + "
    "angular_energy*deficit) / norm_psi_sq; the plus sign in front of the "
    "deficit term is the unique choice consistent with the small-delta "
    "ratio expansion delta*(angular_energy/norm_f_sq)*deficit + O(delta^2). "
    "Derivations of this quotient sometimes display a minus sign in an "
    "intermediate step; that sign contradicts the expansion and is treated "
    "as a typo here.";

// int over the support of (theta_dot - beta0)^2 (theta_dot + beta0)
//   = int beta^2 (2 beta0 - beta).
double reversion_cube(const TwistProfile& prof) {
    return integrate(
        [&](double s) {
            const double b = prof.beta(s);
            return b * b * (2.0 * prof.beta0 - b);
        },
        -prof.s0, prof.s0, 32, 64);
}

void require_delta(double delta) {
    if (!(delta > 0.0))
        throw std::invalid_argument("trial function: delta must be > 0");
}

}  // namespace

Certificate rayleigh_main(const GroundState& gs, const TwistProfile& profile,
                          double delta) {
    require_delta(delta);
    if (!gs.converged)
        throw std::invalid_argument("rayleigh_main: ground state not converged");
    auto report = twist_deficit(profile);
    if (report.classification == DeficitClass::Repulsive)
        throw std::invalid_argument(
            "rayleigh_main: profile is repulsive (positive deficit)");

    const double nf = gs.norm_sq;
    const double aE = gs.angular_energy;
    const double I = report.deficit;
    const double num = delta * nf + aE * I;
    const double den = (1.0 / delta + 2.0 * profile.s0) * nf;

    Certificate cert;
    cert.params = {delta, 0.0, profile.s0};
    cert.shifted_quotient = num / den;
    cert.sign_note = kSignNote;
    cert.ingredients["norm_f_sq"] = nf;
    cert.ingredients["angular_energy"] = aE;
    cert.ingredients["deficit"] = I;
    cert.ingredients["deficit_closed_form"] = report.deficit_closed_form;
    cert.ingredients["int_theta_ddot_sq"] =
        profile.has_l2_second_derivative ? profile.integral_theta_ddot_sq() : 0.0;
    cert.ingredients["int_reversion_cube"] = reversion_cube(profile);
    cert.ingredients["norm_psi_sq"] = den;
    cert.error_budget =
        (1e-12 * (delta * nf + aE * std::abs(I)) + report.tolerance * aE) / den +
        gs.residual * aE / nf;
    cert.bound_state_certified = cert.shifted_quotient < -cert.error_budget;
    cert.reason = cert.bound_state_certified
                      ? "shifted quotient negative beyond the error budget"
                      : "shifted quotient not negative beyond the error budget";
    return cert;
}

Certificate rayleigh_critical(const GroundState& gs,
                              const TwistProfile& profile, double delta,
                              double gamma) {
    require_delta(delta);
    if (!(gamma >= 0.0))
        throw std::invalid_argument("rayleigh_critical: gamma must be >= 0");
    if (!gs.converged)
        throw std::invalid_argument(
            "rayleigh_critical: ground state not converged");
    auto check = validate_profile(profile, TheoremKind::Critical);
    if (!check.pass) {
        std::string msg = "rayleigh_critical: profile fails critical validation:";
        for (const auto& f : check.failures) msg += " " + f;
        throw std::invalid_argument(msg);
    }

    const double nf = gs.norm_sq;
    const double aE = gs.angular_energy;
    const double s0 = profile.s0;
    const double itdd = profile.integral_theta_ddot_sq();

    const auto phi = [&](double s) {
        return 1.0 + gamma * (profile.beta0 - profile.theta_dot(s));
    };
    const double phi_sq = integrate(
        [&](double s) { const double v = phi(s); return v * v; }, -s0, s0, 32, 64);
    // Closed form 2 s0 + 2 gamma int beta + gamma^2 int beta^2 as a
    // quadrature guard.
    const double phi_sq_cf = 2.0 * s0 + 2.0 * gamma * profile.integral_beta() +
                             gamma * gamma * profile.integral_beta_sq();
    const double deficit_weighted = integrate(
        [&](double s) {
            const double td = profile.theta_dot(s);
            const double v = phi(s);
            return (td * td - profile.beta0 * profile.beta0) * v * v;
        },
        -s0, s0, 32, 64);

    const double num = nf * (delta + gamma * gamma * itdd) + aE * deficit_weighted;
    const double den = nf * (1.0 / delta + phi_sq);

    Certificate cert;
    cert.params = {delta, gamma, s0};
    cert.shifted_quotient = num / den;
    cert.sign_note = kSignNote;
    cert.ingredients["norm_f_sq"] = nf;
    cert.ingredients["angular_energy"] = aE;
    cert.ingredients["deficit"] = twist_deficit(profile).deficit;
    cert.ingredients["deficit_weighted"] = deficit_weighted;
    cert.ingredients["int_theta_ddot_sq"] = itdd;
    cert.ingredients["int_reversion_cube"] = reversion_cube(profile);
    cert.ingredients["int_phi_sq"] = phi_sq;
    cert.ingredients["norm_psi_sq"] = den;
    const double num_scale =
        delta * nf + gamma * gamma * itdd * nf + aE * std::abs(deficit_weighted);
    cert.error_budget =
        (1e-12 * num_scale + std::abs(phi_sq - phi_sq_cf) * aE) / den +
        gs.residual * aE / nf;
    cert.bound_state_certified = cert.shifted_quotient < -cert.error_budget;
    cert.reason = cert.bound_state_certified
                      ? "shifted quotient negative beyond the error budget"
                      : "shifted quotient not negative beyond the error budget";
    return cert;
}

namespace {

// Golden-section minimum of fn over [lo, hi].
double golden_min(const std::function<double(double)>& fn, double lo, double hi,
                  int iters = 80) {
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = lo, b = hi;
    double x1 = b - g * (b - a), x2 = a + g * (b - a);
    double f1 = fn(x1), f2 = fn(x2);
    for (int i = 0; i < iters; ++i) {
        if (f1 < f2) {
            b = x2; x2 = x1; f2 = f1;
            x1 = b - g * (b - a); f1 = fn(x1);
        } else {
            a = x1; x1 = x2; f1 = f2;
            x2 = a + g * (b - a); f2 = fn(x2);
        }
    }
    return f1 < f2 ? x1 : x2;
}

}  // namespace

Certificate certify(const GroundState& gs, const TwistProfile& profile,
                    double angular_energy_floor) {
    auto report = twist_deficit(profile);

    const auto fail = [&](const std::string& reason) {
        Certificate cert;
        cert.params = {0.0, 0.0, profile.s0};
        cert.bound_state_certified = false;
        cert.reason = reason;
        cert.sign_note = kSignNote;
        cert.ingredients["norm_f_sq"] = gs.norm_sq;
        cert.ingredients["angular_energy"] = gs.angular_energy;
        cert.ingredients["deficit"] = report.deficit;
        return cert;
    };

    if (report.classification == DeficitClass::Repulsive)
        return fail("no certificate from this trial family");
    if (profile.max_abs_beta == 0.0)
        return fail("zero deficit, zero deformation");
    if (gs.angular_energy <= angular_energy_floor)
        return fail(
            "angular energy below the resolution floor; the negative term "
            "is indistinguishable from mesh error");

    const bool critical = report.classification == DeficitClass::Critical;
    if (critical) {
        auto check = validate_profile(profile, TheoremKind::Critical);
        if (!check.pass) {
            std::string why = "critical profile fails validation:";
            for (const auto& f : check.failures) why += " " + f;
            return fail(why);
        }
    }

    const auto quotient_at = [&](double log10_delta) {
        const double delta = std::pow(10.0, log10_delta);
        return critical
                   ? rayleigh_critical(gs, profile, delta, std::sqrt(delta))
                         .shifted_quotient
                   : rayleigh_main(gs, profile, delta).shifted_quotient;
    };
    const double best_log = golden_min(quotient_at, -12.0, 0.0);
    const double delta = std::pow(10.0, best_log);

    Certificate cert = critical
                           ? rayleigh_critical(gs, profile, delta,
                                               std::sqrt(delta))
                           : rayleigh_main(gs, profile, delta);
    cert.ingredients["search_log10_delta_lo"] = -12.0;
    cert.ingredients["search_log10_delta_hi"] = 0.0;
    cert.required_margin = 1e-3 * delta * gs.angular_energy / gs.norm_sq;
    cert.bound_state_certified =
        cert.shifted_quotient < -(cert.error_budget + cert.required_margin);
    cert.reason = cert.bound_state_certified
                      ? "shifted quotient negative beyond budget and margin"
                      : "best quotient not negative beyond budget and margin";
    return cert;
}

std::string certificate_sweep_csv(const GroundState& gs,
                                  const TwistProfile& profile,
                                  const std::vector<double>& deltas) {
    const bool critical =
        twist_deficit(profile).classification == DeficitClass::Critical;
    std::string out = "delta,gamma,shifted_quotient\n";
    char buf[128];
    for (double d : deltas) {
        const double gamma = critical ? std::sqrt(d) : 0.0;
        const Certificate cert = critical
                                     ? rayleigh_critical(gs, profile, d, gamma)
                                     : rayleigh_main(gs, profile, d);
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g\n", d, gamma,
                      cert.shifted_quotient);
        out += buf;
    }
    return out;
}

std::string Certificate::to_json() const {
    nlohmann::json j;
    j["shifted_quotient"] = shifted_quotient;
    j["params"] = {{"delta", params.delta},
                   {"gamma", params.gamma},
                   {"s0", params.s0}};
    j["ingredients"] = ingredients;
    j["bound_state_certified"] = bound_state_certified;
    j["reason"] = reason;
    j["error_budget"] = error_budget;
    j["required_margin"] = required_margin;
    j["sign_note"] = sign_note;
    return j.dump(2);
}

}  // namespace twistband
