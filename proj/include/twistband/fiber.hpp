#pragma once

#include <Eigen/Sparse>
#include <string>

#include "twistband/geometry.hpp"

namespace twistband {

using SparseMat = Eigen::SparseMatrix<double>;

// P1 finite-element matrices on the interior degrees of freedom of a
// cross-section mesh (Dirichlet condition imposed by elimination):
//   M  mass                  int u v
//   K  stiffness             int grad u . grad v
//   A  angular stiffness     int u'_tau v'_tau
//   D  angular coupling      int u'_tau v   (real antisymmetric)
// with u'_tau = t2 d/dt3 u - t3 d/dt2 u.
struct FiberMatrices {
    SparseMat M, K, A, D;
    int n() const { return static_cast<int>(M.rows()); }
};

// Element-wise assembly with the 3-point edge-midpoint Gauss rule, exact
// for the quadratic integrands of M, A and D on affine elements. Throws
// when the mesh has no interior node.
FiberMatrices assemble_matrices(const Mesh& mesh);

// Hermitian fiber matrix H(p) = K + beta0^2 A + p^2 M - 2 p beta0 (iD),
// stored as its real and imaginary parts: H = S + i C with S symmetric
// and C = -2 p beta0 D antisymmetric.
struct FiberMatrix {
    SparseMat hermitian_part_real;  // K + beta0^2 A + p^2 M
    SparseMat hermitian_part_imag;  // -2 p beta0 D
    double p = 0.0;
    double beta0 = 0.0;
};

FiberMatrix fiber_matrix(const FiberMatrices& mats, double p, double beta0);

// Doubled real-symmetric embedding of the Hermitian pencil: acting on
// (Re x, Im x), [[S, -C], [C, S]] with mass blkdiag(M, M). Every
// eigenvalue of H appears twice.
SparseMat doubled_real_embedding(const FiberMatrix& fm);
SparseMat doubled_mass(const SparseMat& M);

// Coordinate-format JSON {"rows": [...], "cols": [...], "vals": [...], "n": N}.
std::string sparse_to_coo_json(const SparseMat& mat);

}  // namespace twistband
