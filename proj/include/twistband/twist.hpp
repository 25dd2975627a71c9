#pragma once

#include <optional>
#include <string>
#include <vector>

namespace twistband {

// Twist velocity theta_dot(s) = beta0 - beta(s) with compactly supported
// perturbation beta on [-s0, s0], beta(+-s0) = 0.
struct TwistProfile {
    enum class Kind {
        CosineBump,   // beta(s) = c * (1 + cos(pi s / s0)) / 2
        HalfCosine,   // beta(s) = c * cos(pi s / (2 s0))
        Mixed,        // beta(s) = c1 * cos(pi s / (2 s0)) - c2 * sin(pi s / s0)
        Tent,         // beta(s) = c * (1 - |s| / s0)
    };

    Kind kind = Kind::CosineBump;
    double beta0 = 0.0;
    double s0 = 1.0;
    double c1 = 0.0;  // amplitude (c for single-parameter families)
    double c2 = 0.0;  // second amplitude, Mixed only

    bool has_l2_second_derivative = true;  // false for Tent
    double max_abs_beta = 0.0;

    double beta(double s) const;
    double beta_prime(double s) const;        // -theta_ddot
    double theta(double s) const;             // beta0*s - int_0^s beta
    double theta_dot(double s) const { return beta0 - beta(s); }

    // Closed-form integrals over [-s0, s0].
    double integral_beta() const;
    double integral_beta_sq() const;
    double integral_theta_ddot_sq() const;    // throws for Tent

    // min over the support of (theta_dot + beta0) = 2*beta0 - max beta.
    double reversion_margin() const;
};

std::string to_string(TwistProfile::Kind kind);
TwistProfile::Kind profile_kind_from_string(const std::string& name);

// Builds and validates a profile. Throws std::invalid_argument for
// s0 <= 0 or non-finite parameters.
TwistProfile make_profile(TwistProfile::Kind kind, double beta0, double s0,
                          double c1, double c2 = 0.0);

struct ThetaSample {
    double theta;
    double theta_dot;
    std::optional<double> theta_ddot;  // absent for families without L^2 theta_ddot
};

ThetaSample sample_theta(const TwistProfile& profile, double s);

enum class DeficitClass { Attractive, Critical, Repulsive };

struct DeficitReport {
    double deficit = 0.0;           // I = int (theta_dot^2 - beta0^2) ds
    double deficit_closed_form = 0.0;
    double reversion_margin = 0.0;  // min (theta_dot + beta0) on the support
    double tolerance = 0.0;
    DeficitClass classification = DeficitClass::Critical;
};

std::string to_string(DeficitClass c);

// Composite Gauss-Legendre evaluation of the twist deficit, cross-checked
// against the family's closed form.
DeficitReport twist_deficit(const TwistProfile& profile, int quadrature_order = 16);

// Solves for the free amplitude making the deficit vanish. For CosineBump,
// HalfCosine and Tent the free amplitude is c1; for Mixed, c1 is kept and
// c2 is solved for. Throws std::invalid_argument when no admissible
// critical profile exists (no positive root, reversion margin violated,
// or theta_ddot not square-integrable).
TwistProfile critical_solve(TwistProfile::Kind kind, double beta0, double s0,
                            double fixed_c1 = 0.0);

enum class TheoremKind { Main, Critical };

struct ProfileValidation {
    bool pass = true;
    std::vector<std::string> failures;  // one entry per violated hypothesis
};

ProfileValidation validate_profile(const TwistProfile& profile, TheoremKind theorem);

// Gauss-Legendre nodes/weights on [-1, 1].
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights);

// Composite Gauss-Legendre integral of fn over [a, b] with n_panels panels
// of the given order.
template <class F>
double integrate(F&& fn, double a, double b, int order, int n_panels) {
    std::vector<double> x, w;
    gauss_legendre(order, x, w);
    double sum = 0.0;
    const double panel = (b - a) / n_panels;
    for (int p = 0; p < n_panels; ++p) {
        const double mid = a + (p + 0.5) * panel;
        const double half = 0.5 * panel;
        for (std::size_t q = 0; q < x.size(); ++q)
            sum += half * w[q] * fn(mid + half * x[q]);
    }
    return sum;
}

}  // namespace twistband
