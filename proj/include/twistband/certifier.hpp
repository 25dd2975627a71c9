#pragma once

#include <map>
#include <string>
#include <vector>

#include "twistband/band.hpp"
#include "twistband/twist.hpp"

namespace twistband {

struct TrialParams {
    double delta = 0.0;  // exponential tail rate, > 0
    double gamma = 0.0;  // deformation amplitude, >= 0 (0 for plain trials)
    double s0 = 0.0;     // support half-width, copied from the profile
};

// Variational binding certificate: a strictly negative shifted Rayleigh
// quotient (Q[Psi] - E ||Psi||^2) / ||Psi||^2 proves an eigenvalue below
// the threshold E.
struct Certificate {
    double shifted_quotient = 0.0;
    TrialParams params;
    std::map<std::string, double> ingredients;
    bool bound_state_certified = false;
    std::string reason;
    double error_budget = 0.0;
    double required_margin = 0.0;
    std::string sign_note;
    std::string to_json() const;
};

// Plain trial Psi_delta = f(t) * phi_delta(s) with phi == 1 on the support
// and exponential tails:
//   shifted_quotient = (delta ||f||^2 + ||f'_tau||^2 I) /
//                      ((1/delta + 2 s0) ||f||^2)
// where I is the twist deficit.
Certificate rayleigh_main(const GroundState& gs, const TwistProfile& profile,
                          double delta);

// Deformed trial for zero-deficit profiles, phi_gamma = 1 + gamma (beta0 -
// theta_dot) on the support; all s-integrals evaluated by quadrature.
Certificate rayleigh_critical(const GroundState& gs,
                              const TwistProfile& profile, double delta,
                              double gamma);

// Minimizes the shifted quotient over delta (golden section on log10 delta
// in [-12, 0]); critical profiles use gamma = sqrt(delta). Repulsive
// profiles return verdict false without claiming absence of a bound state.
// angular_energy_floor is the caller's resolution estimate for
// ||f'_tau||^2 (e.g. a refinement difference); a ground state whose
// angular energy does not exceed it cannot certify, since the only
// negative term would be indistinguishable from mesh error.
Certificate certify(const GroundState& gs, const TwistProfile& profile,
                    double angular_energy_floor = 0.0);

// CSV "delta,gamma,shifted_quotient" over the given delta values.
std::string certificate_sweep_csv(const GroundState& gs,
                                  const TwistProfile& profile,
                                  const std::vector<double>& deltas);

}  // namespace twistband
