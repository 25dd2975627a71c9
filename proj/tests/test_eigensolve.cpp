#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "twistband/eigensolve.hpp"
#include "twistband/fiber.hpp"
#include "twistband/geometry.hpp"

using namespace twistband;

namespace {

SparseMat diag(const std::vector<double>& d) {
    SparseMat m(d.size(), d.size());
    for (int i = 0; i < static_cast<int>(d.size()); ++i) m.insert(i, i) = d[i];
    m.makeCompressed();
    return m;
}

SparseMat identity(int n) {
    SparseMat m(n, n);
    m.setIdentity();
    return m;
}

FiberMatrices square_mats(double h) {
    auto spec = validate_spec(CrossSectionSpec::rectangle(1.0, 1.0));
    return assemble_matrices(triangulate(spec, h));
}

}  // namespace

TEST_CASE("diagonal pencil") {
    auto res = solve_lowest(diag({1, 2, 3}), identity(3), 2, 1e-10, 0);
    REQUIRE(res.values.size() == 2);
    CHECK(res.values[0] == doctest::Approx(1.0));
    CHECK(res.values[1] == doctest::Approx(2.0));
}

TEST_CASE("square stiffness pencil reproduces the analytic eigenvalue") {
    auto mats = square_mats(0.05);
    auto res = solve_lowest(mats.K, mats.M, 1, 1e-9, 7);
    CHECK(res.converged);
    CHECK(res.values[0] == doctest::Approx(2.0 * M_PI * M_PI).epsilon(5e-3));
    CHECK(res.residuals[0] <= 1e-9);
}

TEST_CASE("pencil shift identity") {
    auto mats = square_mats(0.08);
    const double c = 3.25;
    auto base = solve_lowest(mats.K, mats.M, 3, 1e-11, 21);
    SparseMat shifted = mats.K + c * mats.M;
    auto res = solve_lowest(shifted, mats.M, 3, 1e-11, 21);
    for (int j = 0; j < 3; ++j)
        CHECK(std::abs(res.values[j] - base.values[j] - c) <
              1e-11 * (1.0 + std::abs(base.values[j])));
}

TEST_CASE("negative shifts make the matrix indefinite but still solve") {
    auto mats = square_mats(0.1);
    const double c = -25.0;
    auto base = solve_lowest(mats.K, mats.M, 2, 1e-11, 5);
    SparseMat shifted = mats.K + c * mats.M;
    auto res = solve_lowest(shifted, mats.M, 2, 1e-10, 5);
    for (int j = 0; j < 2; ++j)
        CHECK(res.values[j] == doctest::Approx(base.values[j] + c).epsilon(1e-9));
}

TEST_CASE("eigenvectors are M-orthonormal with certified residuals") {
    auto mats = square_mats(0.06);
    auto res = solve_lowest(mats.K, mats.M, 4, 1e-9, 99);
    REQUIRE(res.vectors.cols() == 4);
    Eigen::MatrixXd G = res.vectors.transpose() * (mats.M * res.vectors);
    CHECK((G - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-10);
    for (int j = 0; j < 4; ++j) {
        const double r = (mats.K * res.vectors.col(j) -
                          res.values[j] * (mats.M * res.vectors.col(j)))
                             .norm() /
                         (1.0 + std::abs(res.values[j]));
        CHECK(r == doctest::Approx(res.residuals[j]).epsilon(1e-6));
        CHECK(r <= 1e-9);
    }
    CHECK(std::is_sorted(res.values.begin(), res.values.end()));
}

TEST_CASE("rayleigh quotient of an eigenvector returns its eigenvalue") {
    auto mats = square_mats(0.08);
    auto res = solve_lowest(mats.K, mats.M, 2, 1e-10, 17);
    CHECK(rayleigh_quotient(mats.K, mats.M, res.vectors.col(0)) ==
          doctest::Approx(res.values[0]).epsilon(1e-10));
}

TEST_CASE("rayleigh quotient obeys the minimax lower bound") {
    auto mats = square_mats(0.1);
    auto res = solve_lowest(mats.K, mats.M, 1, 1e-10, 3);
    std::mt19937_64 rng(31);
    std::normal_distribution<double> gauss;
    for (int trial = 0; trial < 25; ++trial) {
        Eigen::VectorXd x(mats.n());
        for (int i = 0; i < mats.n(); ++i) x[i] = gauss(rng);
        CHECK(rayleigh_quotient(mats.K, mats.M, x) >=
              res.values[0] * (1.0 - 1e-12));
    }
}

TEST_CASE("two-term rayleigh identity") {
    auto mats = square_mats(0.08);
    auto res = solve_lowest(mats.K, mats.M, 2, 1e-11, 23);
    const Eigen::VectorXd x = res.vectors.col(0) + res.vectors.col(1);
    CHECK(rayleigh_quotient(mats.K, mats.M, x) ==
          doctest::Approx(0.5 * (res.values[0] + res.values[1])).epsilon(1e-10));
}

TEST_CASE("rayleigh quotient rejects the zero vector") {
    auto mats = square_mats(0.2);
    CHECK_THROWS_AS(rayleigh_quotient(mats.K, mats.M,
                                      Eigen::VectorXd::Zero(mats.n())),
                    std::invalid_argument);
}

TEST_CASE("adding a positive semidefinite term never lowers eigenvalues") {
    auto mats = square_mats(0.09);
    auto base = solve_lowest(mats.K, mats.M, 3, 1e-10, 2);
    for (double w : {0.1, 1.0, 5.0}) {
        SparseMat S = mats.K + w * mats.A;
        auto res = solve_lowest(S, mats.M, 3, 1e-10, 2);
        for (int j = 0; j < 3; ++j)
            CHECK(res.values[j] >= base.values[j] - 1e-10 * (1 + base.values[j]));
    }
}

TEST_CASE("determinism for fixed seed") {
    auto mats = square_mats(0.07);
    auto a = solve_lowest(mats.K, mats.M, 2, 1e-9, 1234);
    auto b = solve_lowest(mats.K, mats.M, 2, 1e-9, 1234);
    for (int j = 0; j < 2; ++j)
        CHECK(std::abs(a.values[j] - b.values[j]) <=
              1e-13 * (1.0 + std::abs(a.values[j])));
    CHECK(a.iterations == b.iterations);
}

TEST_CASE("merge rejects unpaired spectra") {
    EigenResult fake;
    fake.values = {1.0, 1.0 + 1e-3, 2.0, 5.0};
    fake.vectors = Eigen::MatrixXd::Identity(4, 4);
    fake.residuals = {0, 0, 0, 0};
    CHECK_THROWS_AS(merge_doubled_pairs(fake), std::runtime_error);
    EigenResult odd;
    odd.values = {1.0};
    odd.vectors = Eigen::MatrixXd::Identity(1, 1);
    odd.residuals = {0};
    CHECK_THROWS_AS(merge_doubled_pairs(odd), std::runtime_error);
}

TEST_CASE("lobpcg matches the direct solver on a sparse pencil") {
    auto mats = square_mats(0.06);
    auto direct = solve_lowest(mats.K, mats.M, 3, 1e-10, 4);

    // Jacobi-style preconditioner from the stiffness diagonal.
    Eigen::VectorXd dinv(mats.n());
    for (int i = 0; i < mats.n(); ++i) dinv[i] = 1.0 / mats.K.coeff(i, i);
    LobpcgOptions opts;
    opts.k = 3;
    opts.block_extra = 5;
    opts.tol = 1e-8;
    opts.max_iter = 2000;
    opts.seed = 4;
    auto iter = lobpcg(
        mats.n(), [&](const Eigen::MatrixXd& x) { return mats.K * x; },
        [&](const Eigen::MatrixXd& x) { return mats.M * x; },
        [&](const Eigen::MatrixXd& x) { return dinv.asDiagonal() * x; }, opts);
    CHECK(iter.converged);
    for (int j = 0; j < 3; ++j)
        CHECK(iter.values[j] == doctest::Approx(direct.values[j]).epsilon(1e-7));
}

TEST_CASE("lobpcg benefits from a warm start") {
    auto mats = square_mats(0.08);
    LobpcgOptions opts;
    opts.k = 1;
    opts.block_extra = 3;
    opts.tol = 1e-9;
    opts.max_iter = 3000;
    opts.seed = 8;
    const auto applyS = [&](const Eigen::MatrixXd& x) { return mats.K * x; };
    const auto applyM = [&](const Eigen::MatrixXd& x) { return mats.M * x; };
    auto cold = lobpcg(mats.n(), applyS, applyM, nullptr, opts);
    REQUIRE(cold.converged);
    Eigen::MatrixXd guess = cold.vectors;
    auto warm = lobpcg(mats.n(), applyS, applyM, nullptr, opts, &guess);
    CHECK(warm.converged);
    CHECK(warm.iterations <= cold.iterations);
    CHECK(warm.values[0] == doctest::Approx(cold.values[0]).epsilon(1e-8));
}
