#include "twistband/eigensolve.hpp"

#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace twistband {

namespace {

Eigen::VectorXd random_vector(int n, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = gauss(rng);
    return v;
}

double pencil_residual(const SparseMat& S, const SparseMat& M,
                       const Eigen::VectorXd& x, double eps) {
    return (S * x - eps * (M * x)).norm() / (1.0 + std::abs(eps));
}

EigenResult dense_solve(const SparseMat& S, const SparseMat& M, int k,
                        std::uint64_t seed) {
    Eigen::MatrixXd Sd = Eigen::MatrixXd(S);
    Eigen::MatrixXd Md = Eigen::MatrixXd(M);
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(Sd, Md);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("solve_lowest: dense generalized eigensolver failed "
                                 "(mass matrix not positive definite?)");
    EigenResult out;
    out.seed = seed;
    out.iterations = 0;
    out.values.assign(es.eigenvalues().data(), es.eigenvalues().data() + k);
    out.vectors = es.eigenvectors().leftCols(k);
    for (int j = 0; j < k; ++j)
        out.residuals.push_back(
            pencil_residual(S, M, out.vectors.col(j), out.values[j]));
    return out;
}

}  // namespace

EigenResult solve_lowest(const SparseMat& S, const SparseMat& M, int k,
                         double tol, std::uint64_t seed) {
    const int n = static_cast<int>(S.rows());
    if (M.rows() != n || S.cols() != n || M.cols() != n)
        throw std::invalid_argument("solve_lowest: dimension mismatch");
    if (k < 1 || k > n) throw std::invalid_argument("solve_lowest: bad k");

    if (n <= 200) return dense_solve(S, M, k, seed);

    std::mt19937_64 rng(seed);

    // Shift certified below the spectrum: S - sigma*M admits a Cholesky
    // factorization iff sigma < lambda_min.
    double sigma = 0.0;
    Eigen::SimplicialLLT<SparseMat> llt;
    llt.compute(S);
    bool factored = llt.info() == Eigen::Success;
    if (!factored) {
        // S is indefinite; push the shift below the spectrum, certified by
        // Cholesky success on S - sigma*M.
        double rho = std::numeric_limits<double>::infinity();
        for (int trial = 0; trial < 3; ++trial) {
            const Eigen::VectorXd v = random_vector(n, rng);
            rho = std::min(rho, v.dot(S * v) / v.dot(M * v));
        }
        sigma = rho - 0.1 * (1.0 + std::abs(rho));
        for (int attempt = 0; attempt < 60; ++attempt) {
            SparseMat shifted = S - sigma * M;
            llt.compute(shifted);
            if (llt.info() == Eigen::Success) {
                factored = true;
                break;
            }
            sigma -= std::ldexp(1.0 + std::abs(sigma), attempt);
        }
    }
    if (!factored) {
        if (n <= 4000) return dense_solve(S, M, k, seed);
        throw std::runtime_error("solve_lowest: could not bracket the spectrum");
    }

    // Lanczos on (S - sigma M)^{-1} M, self-adjoint in the M inner product,
    // with full reorthogonalization.
    const int m_cap = std::min(n, std::max(4 * k + 40, 120));
    Eigen::MatrixXd V(n, m_cap);
    std::vector<double> alpha, beta;  // tridiagonal coefficients

    Eigen::VectorXd v = random_vector(n, rng);
    v /= std::sqrt(v.dot(M * v));
    V.col(0) = v;
    Eigen::VectorXd prev = Eigen::VectorXd::Zero(n);
    double beta_prev = 0.0;

    EigenResult out;
    out.seed = seed;
    int built = 0;
    const auto extract = [&](int m, EigenResult& res) {
        Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m, m);
        for (int i = 0; i < m; ++i) {
            T(i, i) = alpha[i];
            if (i + 1 < m) T(i, i + 1) = T(i + 1, i) = beta[i];
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
        // Largest nu correspond to eigenvalues nearest above sigma.
        res.values.clear();
        res.residuals.clear();
        res.vectors.resize(n, k);
        std::vector<std::pair<double, int>> order;
        for (int i = 0; i < m; ++i) order.push_back({es.eigenvalues()[i], i});
        std::sort(order.rbegin(), order.rend());
        for (int j = 0; j < k; ++j) {
            const double nu = order[j].first;
            const double eps = sigma + 1.0 / nu;
            Eigen::VectorXd x = V.leftCols(m) * es.eigenvectors().col(order[j].second);
            x /= std::sqrt(x.dot(M * x));
            res.values.push_back(eps);
            res.vectors.col(j) = x;
            res.residuals.push_back(pencil_residual(S, M, x, eps));
        }
        // Ascending output; nu descending already maps to eps ascending
        // when all nu > 0, which holds since sigma is below the spectrum.
    };

    for (int j = 0; j < m_cap; ++j) {
        Eigen::VectorXd w = llt.solve(M * V.col(j));
        const double a = w.dot(M * V.col(j));
        w -= a * V.col(j);
        if (j > 0) w -= beta_prev * prev;
        // Full reorthogonalization, twice.
        for (int pass = 0; pass < 2; ++pass) {
            Eigen::VectorXd coeffs = V.leftCols(j + 1).transpose() * (M * w);
            w -= V.leftCols(j + 1) * coeffs;
        }
        alpha.push_back(a);
        double b = std::sqrt(std::max(0.0, w.dot(M * w)));
        built = j + 1;

        const bool basis_full = (j + 1 == m_cap);
        if ((j + 1 >= std::max(2 * k, k + 8) && (j + 1) % 10 == 0) || basis_full ||
            b < 1e-13) {
            extract(built, out);
            out.iterations = built;
            bool ok = true;
            for (double r : out.residuals) ok = ok && r <= tol;
            if (ok) {
                out.converged = true;
                return out;
            }
        }
        if (b < 1e-13) {
            // Invariant subspace hit; restart direction.
            Eigen::VectorXd fresh = random_vector(n, rng);
            for (int pass = 0; pass < 2; ++pass) {
                Eigen::VectorXd coeffs = V.leftCols(j + 1).transpose() * (M * fresh);
                fresh -= V.leftCols(j + 1) * coeffs;
            }
            b = std::sqrt(fresh.dot(M * fresh));
            if (b < 1e-13) break;  // exhausted the space
            w = fresh;
        }
        if (j + 1 < m_cap) {
            beta.push_back(b);
            beta_prev = b;
            prev = V.col(j);
            V.col(j + 1) = w / b;
        }
    }

    extract(built, out);
    out.iterations = built;
    out.converged = true;
    for (double r : out.residuals) out.converged = out.converged && r <= tol;
    if (!out.converged && n <= 4000) return dense_solve(S, M, k, seed);
    return out;
}

EigenResult solve_hermitian_fiber(const FiberMatrix& fm, const SparseMat& M,
                                  int k, double tol, std::uint64_t seed) {
    const int n = static_cast<int>(M.rows());
    if (k < 1 || k > n)
        throw std::invalid_argument("solve_hermitian_fiber: bad k");
    const SparseMat H2 = doubled_real_embedding(fm);
    const SparseMat M2 = doubled_mass(M);

    if (2 * n <= 400) return merge_doubled_pairs(dense_solve(H2, M2, 2 * k, seed));

    // Single-vector Krylov iterations see each doubled eigenspace only once
    // (the operator acts as a scalar there), so a block method with a random
    // block is required to recover both copies. The symmetric part
    // K + beta0^2 A + p^2 M is positive definite and preconditions well.
    Eigen::SimplicialLLT<SparseMat> llt(fm.hermitian_part_real);
    if (llt.info() != Eigen::Success) {
        if (2 * n <= 4000) return merge_doubled_pairs(dense_solve(H2, M2, 2 * k, seed));
        throw std::runtime_error(
            "solve_hermitian_fiber: symmetric part not positive definite");
    }

    const auto apply_s = [&](const Eigen::MatrixXd& X) -> Eigen::MatrixXd {
        return H2 * X;
    };
    const auto apply_m = [&](const Eigen::MatrixXd& X) -> Eigen::MatrixXd {
        return M2 * X;
    };
    const auto precond = [&](const Eigen::MatrixXd& R) -> Eigen::MatrixXd {
        Eigen::MatrixXd Y(2 * n, R.cols());
        Y.topRows(n) = llt.solve(R.topRows(n));
        Y.bottomRows(n) = llt.solve(R.bottomRows(n));
        return Y;
    };

    LobpcgOptions opts;
    opts.k = 2 * k;
    opts.block_extra = std::max(4, k);
    opts.tol = tol;
    opts.max_iter = 500;
    opts.seed = seed;
    auto res = lobpcg(2 * n, apply_s, apply_m, precond, opts);
    if (!res.converged && 2 * n <= 4000)
        return merge_doubled_pairs(dense_solve(H2, M2, 2 * k, seed));
    return merge_doubled_pairs(res);
}

double rayleigh_quotient(const SparseMat& S, const SparseMat& M,
                         const Eigen::VectorXd& x) {
    const double denom = x.dot(M * x);
    if (!(denom > 0.0))
        throw std::invalid_argument("rayleigh_quotient: zero (or M-null) vector");
    return x.dot(S * x) / denom;
}

EigenResult merge_doubled_pairs(const EigenResult& doubled, double pair_tol) {
    EigenResult out;
    out.seed = doubled.seed;
    out.iterations = doubled.iterations;
    out.converged = doubled.converged;
    const int m = static_cast<int>(doubled.values.size());
    if (m % 2 != 0)
        throw std::runtime_error("merge_doubled_pairs: odd eigenvalue count");
    out.vectors.resize(doubled.vectors.rows(), m / 2);
    for (int i = 0; i < m; i += 2) {
        const double a = doubled.values[i], b = doubled.values[i + 1];
        if (std::abs(a - b) > pair_tol * (1.0 + std::abs(a)))
            throw std::runtime_error(
                "merge_doubled_pairs: unpaired eigenvalue (odd multiplicity in the "
                "doubled embedding; check solver tolerance)");
        out.values.push_back(0.5 * (a + b));
        out.vectors.col(i / 2) = doubled.vectors.col(i);
        out.residuals.push_back(
            std::max(doubled.residuals[i], doubled.residuals[i + 1]));
    }
    return out;
}


EigenResult lobpcg(int n, const BlockOp& apply_s, const BlockOp& apply_m,
                   const BlockOp& precond, const LobpcgOptions& opts,
                   const Eigen::MatrixXd* initial_guess) {
    using Eigen::MatrixXd;
    const int k = opts.k;
    const int m = std::min(n, k + opts.block_extra);
    std::mt19937_64 rng(opts.seed);

    // M-orthonormalizes a block in place (Gram eigendecomposition with
    // dropping of near-dependent directions); returns M * block.
    const auto b_orthonormalize = [&](MatrixXd& Z) {
        MatrixXd MZ = apply_m(Z);
        MatrixXd G = Z.transpose() * MZ;
        G = 0.5 * (G + G.transpose()).eval();
        Eigen::SelfAdjointEigenSolver<MatrixXd> es(G);
        const double cutoff = 1e-14 * std::max(1e-300, es.eigenvalues().maxCoeff());
        int keep = 0;
        for (int i = 0; i < G.rows(); ++i)
            if (es.eigenvalues()[i] > cutoff) ++keep;
        MatrixXd Wh(G.rows(), keep);
        int c = 0;
        for (int i = 0; i < G.rows(); ++i)
            if (es.eigenvalues()[i] > cutoff)
                Wh.col(c++) = es.eigenvectors().col(i) / std::sqrt(es.eigenvalues()[i]);
        Z = (Z * Wh).eval();
        MZ = (MZ * Wh).eval();
        return MZ;
    };

    MatrixXd X(n, m);
    if (initial_guess && initial_guess->rows() == n && initial_guess->cols() > 0) {
        const int given = std::min<int>(m, initial_guess->cols());
        X.leftCols(given) = initial_guess->leftCols(given);
        for (int j = given; j < m; ++j) X.col(j) = random_vector(n, rng);
    } else {
        for (int j = 0; j < m; ++j) X.col(j) = random_vector(n, rng);
    }
    MatrixXd MX = b_orthonormalize(X);
    MatrixXd SX = apply_s(X);
    MatrixXd P(n, 0), SP(n, 0), MP(n, 0);

    EigenResult out;
    out.seed = opts.seed;
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(m);

    for (int iter = 0; iter < opts.max_iter; ++iter) {
        // Rayleigh-Ritz on the M-orthonormal X block.
        {
            MatrixXd G = X.transpose() * SX;
            G = 0.5 * (G + G.transpose()).eval();
            Eigen::SelfAdjointEigenSolver<MatrixXd> es(G);
            X = (X * es.eigenvectors()).eval();
            SX = (SX * es.eigenvectors()).eval();
            MX = (MX * es.eigenvectors()).eval();
            theta = es.eigenvalues();
        }

        MatrixXd R = SX - MX * theta.asDiagonal();
        bool all_ok = true;
        out.values.assign(theta.data(), theta.data() + k);
        out.residuals.clear();
        for (int j = 0; j < k; ++j) {
            const double r = R.col(j).norm() / (1.0 + std::abs(theta[j]));
            out.residuals.push_back(r);
            all_ok = all_ok && r <= opts.tol;
        }
        out.iterations = iter;
        if (all_ok) {
            out.vectors = X.leftCols(k);
            out.converged = true;
            return out;
        }

        MatrixXd W = precond ? precond(R) : R;
        // Orthogonalize the search block against X and P in the M inner
        // product, twice for stability, then orthonormalize it.
        for (int pass = 0; pass < 2; ++pass) {
            W -= X * (MX.transpose() * W);
            if (P.cols() > 0) W -= P * (MP.transpose() * W);
        }
        b_orthonormalize(W);
        MatrixXd SW = apply_s(W);

        const int zc = static_cast<int>(X.cols() + W.cols() + P.cols());
        MatrixXd Z(n, zc), SZ(n, zc), MZ(n, zc);
        Z << X, W, P;
        SZ.leftCols(X.cols()) = SX;
        SZ.middleCols(X.cols(), W.cols()) = SW;
        if (P.cols() > 0) SZ.rightCols(P.cols()) = SP;
        MZ = apply_m(Z);

        MatrixXd GB = Z.transpose() * MZ;
        GB = 0.5 * (GB + GB.transpose()).eval();
        Eigen::SelfAdjointEigenSolver<MatrixXd> esb(GB);
        const double cutoff = 1e-12 * std::max(1e-300, esb.eigenvalues().maxCoeff());
        int keep = 0;
        for (int i = 0; i < GB.rows(); ++i)
            if (esb.eigenvalues()[i] > cutoff) ++keep;
        MatrixXd Wh(GB.rows(), keep);
        int c = 0;
        for (int i = 0; i < GB.rows(); ++i)
            if (esb.eigenvalues()[i] > cutoff)
                Wh.col(c++) = esb.eigenvectors().col(i) / std::sqrt(esb.eigenvalues()[i]);

        MatrixXd GA = Wh.transpose() * (Z.transpose() * SZ) * Wh;
        GA = 0.5 * (GA + GA.transpose()).eval();
        Eigen::SelfAdjointEigenSolver<MatrixXd> esa(GA);
        const int mm = std::min<int>(m, keep);
        MatrixXd C = Wh * esa.eigenvectors().leftCols(mm);

        // New conjugate directions: the W/P components of the update.
        MatrixXd Cwp = C.bottomRows(zc - X.cols());
        MatrixXd ZWP(n, zc - X.cols()), SZWP(n, zc - X.cols()), MZWP(n, zc - X.cols());
        ZWP << W, P;
        SZWP.leftCols(W.cols()) = SW;
        MZWP.leftCols(W.cols()) = MZ.middleCols(X.cols(), W.cols());
        if (P.cols() > 0) {
            SZWP.rightCols(P.cols()) = SP;
            MZWP.rightCols(P.cols()) = MZ.rightCols(P.cols());
        }
        P = ZWP * Cwp;
        SP = SZWP * Cwp;
        MP = MZWP * Cwp;

        X = Z * C;
        SX = SZ * C;
        MX = MZ * C;

        // Periodic refresh against drift in the recombined products.
        if ((iter + 1) % 25 == 0) {
            MX = b_orthonormalize(X);
            SX = apply_s(X);
            P.resize(n, 0);
            SP.resize(n, 0);
            MP.resize(n, 0);
        }
    }

    out.vectors = X.leftCols(k);
    out.converged = false;
    return out;
}

}  // namespace twistband
