#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "twistband/eigensolve.hpp"
#include "twistband/fiber.hpp"

namespace twistband {

// Ground state of the p = 0 fiber (K + beta0^2 A) f = E M f.
struct GroundState {
    double E = 0.0;
    Eigen::VectorXd f;           // interior nodal values, M-normalized,
                                 // sign-flipped so the M-weighted mean is > 0
    double norm_sq = 0.0;        // f^T M f (1 after normalization)
    double angular_energy = 0.0; // f^T A f
    bool positivity_ok = false;  // all interior nodal values strictly positive
    std::vector<int> negative_dofs;  // interior indices violating positivity
    double residual = 0.0;
    bool converged = false;
};

GroundState ground_state(const FiberMatrices& mats, double beta0,
                         double tol = 1e-9);

// Maps the interior dof indices in gs.negative_dofs back to mesh
// coordinates, one "(t2, t3)" entry per offending node.
std::string positivity_report(const GroundState& gs, const Mesh& mesh);

// Band functions eps_n(p_j) over a symmetric wavenumber grid.
struct BandData {
    std::vector<double> p_grid;       // ascending, symmetric, contains 0
    Eigen::MatrixXd bands;            // row j = eps_1..eps_n at p_grid[j]
    Eigen::MatrixXd vectors_at_zero;  // eigenvectors of the p = 0 fiber
    double beta0 = 0.0;
    std::uint64_t fingerprint = 0;    // hash of the assembled matrices
    std::vector<std::uint8_t> converged;  // per grid point
};

// 41 points on [-5(1 + a beta0), 5(1 + a beta0)].
std::vector<double> default_p_grid(double beta0, double a, int n_points = 41);

std::uint64_t matrices_fingerprint(const FiberMatrices& mats);

// Solves the Hermitian fiber pencil at every grid point (via the doubled
// real embedding for p != 0). Failed points are flagged in `converged` and
// filled with NaN instead of aborting the sweep.
BandData compute_bands(const FiberMatrices& mats, double beta0,
                       const std::vector<double>& p_grid, int n_bands,
                       double tol = 1e-9);

struct BandDiagnostics {
    double evenness_defect = 0.0;   // max_{n,j} |eps_n(p_j) - eps_n(-p_j)|
    bool evenness_ok = false;       // defect <= 1e-8 * max|eps|
    double lower_bound_margin = 0.0;  // min_j eps_1(p_j) - p_j^2/(1+a^2 b0^2)
    bool lower_bound_ok = false;
    bool monotone_tail_ok = false;  // eps_1 non-decreasing on the outer half
    int argmin_index = -1;
    double argmin_p = 0.0;
    bool argmin_at_zero = false;
    std::string to_json() const;
};

BandDiagnostics band_diagnostics(const BandData& band, double a);

// CSV with header "p,eps_1,...,eps_n".
std::string bands_to_csv(const BandData& band);

// CSV with header "node_t2,node_t3,f_value" over interior nodes.
std::string ground_state_to_csv(const GroundState& gs, const Mesh& mesh);

}  // namespace twistband
