#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <cstdint>
#include <functional>
#include <vector>

#include "twistband/fiber.hpp"

namespace twistband {

// Lowest eigenpairs of a symmetric pencil S x = eps M x.
struct EigenResult {
    std::vector<double> values;      // ascending
    Eigen::MatrixXd vectors;         // columns, M-orthonormal
    std::vector<double> residuals;   // ||S x - eps M x|| / (1 + |eps|)
    int iterations = 0;
    std::uint64_t seed = 0;
    bool converged = true;
};

// Shift-invert Lanczos with a positive-definite shifted factorization; the
// shift is certified below the spectrum by Cholesky success. Falls back to
// a dense solve for small or stubborn problems. Deterministic for fixed
// inputs and seed.
EigenResult solve_lowest(const SparseMat& S, const SparseMat& M, int k,
                         double tol = 1e-8, std::uint64_t seed = 0);

double rayleigh_quotient(const SparseMat& S, const SparseMat& M,
                         const Eigen::VectorXd& x);

// Lowest k eigenpairs of the Hermitian fiber pencil through its doubled
// real embedding. Every eigenvalue of the embedding is exactly doubled, and
// a single-vector Krylov iteration sees each eigenspace only once, so this
// uses a block method (with a Cholesky preconditioner built from the
// symmetric part) that resolves the multiplicities; the doubled spectrum is
// then merged. Returned vectors are the doubled-embedding representatives.
EigenResult solve_hermitian_fiber(const FiberMatrix& fm, const SparseMat& M,
                                  int k, double tol = 1e-8,
                                  std::uint64_t seed = 0);

// Collapses the duplicated spectrum of a doubled real embedding by pairing
// an ascending sweep; throws when a value fails to pair (odd multiplicity
// signals a tolerance misconfiguration).
EigenResult merge_doubled_pairs(const EigenResult& doubled, double pair_tol = 1e-9);

// Block preconditioned conjugate-gradient eigensolver over abstract
// operators; used for pencils applied matrix-free.
using BlockOp = std::function<Eigen::MatrixXd(const Eigen::MatrixXd&)>;

struct LobpcgOptions {
    int k = 1;
    int block_extra = 4;
    double tol = 1e-8;
    int max_iter = 1000;
    std::uint64_t seed = 0;
};

EigenResult lobpcg(int n, const BlockOp& apply_s, const BlockOp& apply_m,
                   const BlockOp& precond, const LobpcgOptions& opts,
                   const Eigen::MatrixXd* initial_guess = nullptr);

}  // namespace twistband
