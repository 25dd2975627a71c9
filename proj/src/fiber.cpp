#include "twistband/fiber.hpp"

#include <nlohmann/json.hpp>
#include <stdexcept>
#include <vector>

namespace twistband {

FiberMatrices assemble_matrices(const Mesh& mesh) {
    if (mesh.n_interior < 1)
        throw std::invalid_argument("assemble_matrices: mesh has no interior node");

    using T = Eigen::Triplet<double>;
    std::vector<T> tm, tk, ta, td;
    tm.reserve(mesh.triangles.size() * 9);
    tk.reserve(mesh.triangles.size() * 9);
    ta.reserve(mesh.triangles.size() * 9);
    td.reserve(mesh.triangles.size() * 9);

    for (const auto& tri : mesh.triangles) {
        const Eigen::Vector2d& p0 = mesh.nodes[tri[0]];
        const Eigen::Vector2d& p1 = mesh.nodes[tri[1]];
        const Eigen::Vector2d& p2 = mesh.nodes[tri[2]];
        const Eigen::Vector2d e1 = p1 - p0, e2 = p2 - p0;
        const double det = e1.x() * e2.y() - e1.y() * e2.x();
        const double area2 = det;  // positive orientation
        const double tri_area = 0.5 * area2;

        // Constant P1 gradients.
        Eigen::Matrix<double, 2, 3> grad;
        grad.col(0) = Eigen::Vector2d(p1.y() - p2.y(), p2.x() - p1.x()) / area2;
        grad.col(1) = Eigen::Vector2d(p2.y() - p0.y(), p0.x() - p2.x()) / area2;
        grad.col(2) = Eigen::Vector2d(p0.y() - p1.y(), p1.x() - p0.x()) / area2;

        // Edge-midpoint rule: exact for quadratics.
        const Eigen::Vector2d q[3] = {0.5 * (p0 + p1), 0.5 * (p1 + p2),
                                      0.5 * (p2 + p0)};
        // phi_i at the midpoints (q[0] = m01, q[1] = m12, q[2] = m20).
        const double phi[3][3] = {{0.5, 0.0, 0.5}, {0.5, 0.5, 0.0}, {0.0, 0.5, 0.5}};
        const double wq = tri_area / 3.0;

        double me[3][3] = {}, ae[3][3] = {}, de[3][3] = {};
        for (int qi = 0; qi < 3; ++qi) {
            double g[3];  // u'_tau of each basis function at the point
            for (int i = 0; i < 3; ++i)
                g[i] = q[qi].x() * grad(1, i) - q[qi].y() * grad(0, i);
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) {
                    me[i][j] += wq * phi[i][qi] * phi[j][qi];
                    ae[i][j] += wq * g[i] * g[j];
                    de[i][j] += wq * g[j] * phi[i][qi];
                }
        }

        for (int i = 0; i < 3; ++i) {
            const int gi = mesh.interior_map[tri[i]];
            if (gi < 0) continue;
            for (int j = 0; j < 3; ++j) {
                const int gj = mesh.interior_map[tri[j]];
                if (gj < 0) continue;
                tm.emplace_back(gi, gj, me[i][j]);
                tk.emplace_back(gi, gj, tri_area * grad.col(i).dot(grad.col(j)));
                ta.emplace_back(gi, gj, ae[i][j]);
                td.emplace_back(gi, gj, de[i][j]);
            }
        }
    }

    FiberMatrices out;
    const int n = mesh.n_interior;
    out.M.resize(n, n);
    out.K.resize(n, n);
    out.A.resize(n, n);
    out.D.resize(n, n);
    out.M.setFromTriplets(tm.begin(), tm.end());
    out.K.setFromTriplets(tk.begin(), tk.end());
    out.A.setFromTriplets(ta.begin(), ta.end());
    out.D.setFromTriplets(td.begin(), td.end());
    return out;
}

FiberMatrix fiber_matrix(const FiberMatrices& mats, double p, double beta0) {
    if (!(beta0 >= 0.0)) throw std::invalid_argument("fiber_matrix: beta0 must be >= 0");
    FiberMatrix fm;
    fm.p = p;
    fm.beta0 = beta0;
    fm.hermitian_part_real = mats.K + beta0 * beta0 * mats.A + p * p * mats.M;
    fm.hermitian_part_imag = (-2.0 * p * beta0) * mats.D;
    fm.hermitian_part_imag.prune(0.0, 0.0);
    return fm;
}

SparseMat doubled_real_embedding(const FiberMatrix& fm) {
    const SparseMat& S = fm.hermitian_part_real;
    const SparseMat& C = fm.hermitian_part_imag;
    const int n = static_cast<int>(S.rows());
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(2 * (S.nonZeros() + C.nonZeros()));
    for (int k = 0; k < S.outerSize(); ++k)
        for (SparseMat::InnerIterator it(S, k); it; ++it) {
            trips.emplace_back(it.row(), it.col(), it.value());
            trips.emplace_back(n + it.row(), n + it.col(), it.value());
        }
    for (int k = 0; k < C.outerSize(); ++k)
        for (SparseMat::InnerIterator it(C, k); it; ++it) {
            trips.emplace_back(it.row(), n + it.col(), -it.value());
            trips.emplace_back(n + it.row(), it.col(), it.value());
        }
    SparseMat out(2 * n, 2 * n);
    out.setFromTriplets(trips.begin(), trips.end());
    return out;
}

SparseMat doubled_mass(const SparseMat& M) {
    const int n = static_cast<int>(M.rows());
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(2 * M.nonZeros());
    for (int k = 0; k < M.outerSize(); ++k)
        for (SparseMat::InnerIterator it(M, k); it; ++it) {
            trips.emplace_back(it.row(), it.col(), it.value());
            trips.emplace_back(n + it.row(), n + it.col(), it.value());
        }
    SparseMat out(2 * n, 2 * n);
    out.setFromTriplets(trips.begin(), trips.end());
    return out;
}

std::string sparse_to_coo_json(const SparseMat& mat) {
    nlohmann::json j;
    j["n"] = mat.rows();
    auto& rows = j["rows"] = nlohmann::json::array();
    auto& cols = j["cols"] = nlohmann::json::array();
    auto& vals = j["vals"] = nlohmann::json::array();
    for (int k = 0; k < mat.outerSize(); ++k)
        for (SparseMat::InnerIterator it(mat, k); it; ++it) {
            rows.push_back(it.row());
            cols.push_back(it.col());
            vals.push_back(it.value());
        }
    return j.dump();
}

}  // namespace twistband
