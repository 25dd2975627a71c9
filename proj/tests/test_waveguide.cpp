#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <nlohmann/json.hpp>
#include <random>

#include "twistband/band.hpp"
#include "twistband/certifier.hpp"
#include "twistband/fiber.hpp"
#include "twistband/geometry.hpp"
#include "twistband/waveguide.hpp"

using namespace twistband;

namespace {

CrossSectionSpec rect21() {
    return validate_spec(CrossSectionSpec::rectangle(2.0, 1.0));
}

TwistProfile bump(double c) {
    return make_profile(TwistProfile::Kind::CosineBump, 1.0, 1.0, c);
}

struct Setup {
    Mesh mesh;
    FiberMatrices mats;
    GroundState gs;
};

Setup rect_setup(double h, double beta0 = 1.0) {
    Setup s;
    s.mesh = triangulate(rect21(), h);
    s.mats = assemble_matrices(s.mesh);
    s.gs = ground_state(s.mats, beta0, 1e-10);
    return s;
}

}  // namespace

TEST_CASE("strip construction and validation") {
    auto strip = make_strip(8.0, 0.1, 1.0);
    CHECK(strip.n_s == 160);
    CHECK(strip.ds() == doctest::Approx(0.1));
    CHECK(strip.n_axial_dofs() == 159);
    CHECK(strip.s_node(0) == doctest::Approx(-8.0));
    CHECK(strip.s_node(160) == doctest::Approx(8.0));
    CHECK_THROWS_AS(make_strip(0.5, 0.1, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(make_strip(8.0, 0.0, 1.0), std::invalid_argument);
}

TEST_CASE("separable case: eigenvalues are exact sums of 1-D and 2-D modes") {
    auto spec = validate_spec(CrossSectionSpec::rectangle(1.0, 1.0));
    auto mats = assemble_matrices(triangulate(spec, 0.2));
    auto flat = make_profile(TwistProfile::Kind::CosineBump, 0.0, 1.0, 0.0);
    auto strip = make_strip(4.0, 0.2, 1.0);
    auto op = make_waveguide(mats, flat, strip);
    auto res = solve_waveguide(op, 1, 1e-10);
    // Lowest discrete axial mode of the uniform P1 pencil.
    const double th = M_PI / strip.n_s;
    const double kappa = (2.0 - 2.0 * std::cos(th)) / strip.ds() /
                         (strip.ds() * (4.0 + 2.0 * std::cos(th)) / 6.0);
    auto base = solve_lowest(mats.K, mats.M, 1, 1e-10, 0);
    CHECK(res.values[0] ==
          doctest::Approx(base.values[0] + kappa).epsilon(1e-9));
    // And the axial mode itself approximates (pi / 2L)^2.
    CHECK(kappa == doctest::Approx(std::pow(M_PI / 8.0, 2)).epsilon(1e-3));
}

TEST_CASE("assembled operator is exactly symmetric") {
    auto s = rect_setup(0.3);
    auto op = make_waveguide(s.mats, bump(0.5), make_strip(4.0, 0.25, 1.0));
    auto [H, M] = assemble_waveguide(op);
    const double scale = Eigen::MatrixXd(H).cwiseAbs().maxCoeff();
    const double defect =
        Eigen::MatrixXd(SparseMat(H - SparseMat(H.transpose())))
            .cwiseAbs()
            .maxCoeff();
    CHECK(defect <= 1e-13 * scale);
}

TEST_CASE("matrix-free apply matches the assembled pencil") {
    auto s = rect_setup(0.3);
    auto op = make_waveguide(s.mats, bump(0.5), make_strip(3.0, 0.3, 1.0));
    auto [H, M] = assemble_waveguide(op);
    std::mt19937_64 rng(17);
    std::normal_distribution<double> gauss;
    Eigen::MatrixXd x(op.dim, 3);
    for (int i = 0; i < x.size(); ++i) x.data()[i] = gauss(rng);
    const Eigen::MatrixXd hx = op.apply_h(x);
    const Eigen::MatrixXd mx = op.apply_m(x);
    const double hs = hx.cwiseAbs().maxCoeff();
    CHECK((hx - H * x).cwiseAbs().maxCoeff() <= 1e-12 * hs);
    CHECK((mx - M * x).cwiseAbs().maxCoeff() <=
          1e-12 * mx.cwiseAbs().maxCoeff());
}

TEST_CASE("unperturbed waveguide converges to the fiber threshold from above") {
    auto s = rect_setup(0.25);
    auto flat = make_profile(TwistProfile::Kind::CosineBump, 1.0, 1.0, 0.0);
    double prev = 1e300;
    for (double L : {4.0, 8.0}) {
        auto op = make_waveguide(s.mats, flat, make_strip(L, 0.2, 1.0));
        auto res = solve_waveguide(op, 1, 1e-9);
        CHECK(res.values[0] > s.gs.E);
        CHECK(res.values[0] < prev);
        prev = res.values[0];
    }
    CHECK(prev - s.gs.E < 0.05);
    // And no bound-state candidate is reported.
    auto op = make_waveguide(s.mats, flat, make_strip(8.0, 0.2, 1.0));
    auto rep = solve_bound_states(op, s.gs.E, 2, 1e-9);
    CHECK(rep.eigenvalues_below_E.empty());
    CHECK(rep.status == "no eigenvalue below the threshold");
}

TEST_CASE("slowdown bump binds a state below the threshold") {
    auto s = rect_setup(0.15);
    auto prof = bump(0.5);
    auto op = make_waveguide(s.mats, prof, make_strip(8.0, 0.1, 1.0));
    auto rep = solve_bound_states(op, s.gs.E, 2, 1e-9);
    REQUIRE(!rep.eigenvalues_below_E.empty());
    CHECK(rep.gaps[0] > 0.01);
    // Certifier dominance: the eigenvalue sits below the variational
    // upper bound E + best shifted quotient.
    auto cert = certify(s.gs, prof);
    CHECK(rep.eigenvalues_below_E[0] <=
          s.gs.E + cert.shifted_quotient + 1e-6);
}

TEST_CASE("repulsive speedup does not bind at desk scale") {
    auto s = rect_setup(0.2);
    auto speedup = make_profile(TwistProfile::Kind::Mixed, 1.0, 1.0, 0.0, 0.4);
    auto op = make_waveguide(s.mats, speedup, make_strip(6.0, 0.2, 1.0));
    auto rep = solve_bound_states(op, s.gs.E, 2, 1e-9);
    CHECK(rep.eigenvalues_below_E.empty());
}

TEST_CASE("Dirichlet truncation is monotone in L") {
    auto s = rect_setup(0.2);
    auto prof = bump(0.5);
    double prev = 1e300;
    for (double L : {4.0, 6.0, 8.0}) {
        auto op = make_waveguide(s.mats, prof, make_strip(L, 0.2, 1.0));
        auto res = solve_waveguide(op, 1, 1e-10);
        CHECK(res.values[0] <= prev + 1e-10);
        prev = res.values[0];
    }
}

TEST_CASE("matrix-free solve with the tensor preconditioner matches") {
    auto s = rect_setup(0.2);
    auto prof = bump(0.5);
    auto op = make_waveguide(s.mats, prof, make_strip(6.0, 0.2, 1.0));
    auto direct = solve_waveguide(op, 2, 1e-9);
    // Force the iterative path.
    auto iter = solve_waveguide(op, 2, 1e-8, nullptr, 0);
    CHECK(iter.converged);
    for (int j = 0; j < 2; ++j)
        CHECK(iter.values[j] == doctest::Approx(direct.values[j]).epsilon(1e-7));
    TensorPreconditioner precond(op);
    CHECK(precond.n_factorizations() <= 50);
    CHECK(precond.n_factorizations() >= 1);
}

TEST_CASE("warm starts cut the iteration count") {
    auto s = rect_setup(0.25);
    auto prof = bump(0.5);
    auto op = make_waveguide(s.mats, prof, make_strip(6.0, 0.2, 1.0));
    auto cold = solve_waveguide(op, 1, 1e-8, nullptr, 0);
    REQUIRE(cold.converged);
    Eigen::MatrixXd guess = cold.vectors;
    auto warm = solve_waveguide(op, 1, 1e-8, &guess, 0);
    CHECK(warm.converged);
    CHECK(warm.iterations <= cold.iterations);
    CHECK(warm.values[0] == doctest::Approx(cold.values[0]).epsilon(1e-8));
}

TEST_CASE("trial vector quotient is consistent with the certificate") {
    auto s = rect_setup(0.15);
    auto prof = bump(0.5);
    const double delta = 0.05;
    const double L = 20.0, ds = 0.1;
    auto op = make_waveguide(s.mats, prof, make_strip(L, ds, 1.0));
    const double rq = trial_quotient(op, s.gs, delta);
    const double closed =
        s.gs.E + rayleigh_main(s.gs, prof, delta).shifted_quotient;
    const double tolerance = 2.0 * (s.mesh.h_max * s.mesh.h_max + ds * ds +
                                    std::exp(-2.0 * delta * L));
    CHECK(std::abs(rq - closed) <= tolerance);
    // The trial is admissible, so it dominates the lowest eigenvalue.
    auto res = solve_waveguide(op, 1, 1e-9);
    CHECK(rq >= res.values[0] - 1e-10);
}

TEST_CASE("bound-state vector is positive and localized") {
    auto s = rect_setup(0.2);
    auto prof = bump(0.5);
    auto op = make_waveguide(s.mats, prof, make_strip(8.0, 0.2, 1.0));
    auto res = solve_waveguide(op, 1, 1e-10);
    REQUIRE(res.values[0] < s.gs.E);
    Eigen::VectorXd v = res.vectors.col(0);
    if (v.sum() < 0) v = -v;
    CHECK(v.minCoeff() > 0.0);
    auto mass = slab_mass_profile(op, v, 2.0);
    REQUIRE(mass.size() == 4);
    for (std::size_t i = 1; i < mass.size(); ++i) CHECK(mass[i] < mass[i - 1]);
    const std::string csv = eigenvector_slice_csv(op, s.mesh, v, 8, 5);
    CHECK(csv.rfind("s,t2,t3,value\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') > 10);
}

TEST_CASE("dimension cap guard") {
    auto s = rect_setup(0.3);
    CHECK_THROWS_AS(
        make_waveguide(s.mats, bump(0.5), make_strip(6.0, 0.2, 1.0), 100),
        std::length_error);
}

TEST_CASE("prolongation transfers a ground state across refinement") {
    auto spec = rect21();
    Mesh coarse = triangulate(spec, 0.25);
    Mesh fine = refine(coarse, spec);
    auto cm = assemble_matrices(coarse);
    auto fm = assemble_matrices(fine);
    auto gs = ground_state(cm, 1.0);
    Eigen::VectorXd lifted = prolong_interior(fine, coarse, gs.f);
    SparseMat S = fm.K + fm.A;
    const double rq = rayleigh_quotient(S, fm.M, lifted);
    CHECK(rq == doctest::Approx(gs.E).epsilon(0.02));
    CHECK_THROWS_AS(prolong_interior(coarse, coarse, gs.f),
                    std::invalid_argument);
}

TEST_CASE("convergence study certifies the attractive bump") {
    StudyConfig cfg;
    cfg.base_h = 0.25;
    cfg.n_mesh_levels = 2;
    cfg.L_list = {6.0, 12.0, 24.0};
    cfg.ds = 0.2;
    cfg.tol = 1e-9;
    auto rep = convergence_study(rect21(), bump(0.5), cfg);
    REQUIRE(rep.mesh_table.size() == 2);
    REQUIRE(rep.truncation_table.size() == 3);
    CHECK(rep.truncation_table[0].second >=
          rep.truncation_table[1].second - 1e-10);
    CHECK(rep.truncation_table[1].second >=
          rep.truncation_table[2].second - 1e-10);
    CHECK_FALSE(rep.inconclusive);
    CHECK(rep.certified);
    CHECK(rep.extrapolated_gap > rep.error_budget);
    CHECK(!rep.eigenvalues_below_E.empty());
    auto j = nlohmann::json::parse(rep.to_json());
    CHECK(j["certified"].get<bool>());
    CHECK(j["truncation_table"].size() == 3);
}

TEST_CASE("non-saturated truncation sweep reports inconclusive") {
    StudyConfig cfg;
    cfg.base_h = 0.3;
    cfg.n_mesh_levels = 2;
    cfg.L_list = {3.0, 4.0};
    cfg.ds = 0.25;
    cfg.tol = 1e-9;
    cfg.saturation_tol = 1e-9;  // unreachable on purpose
    auto rep = convergence_study(rect21(), bump(0.5), cfg);
    CHECK(rep.inconclusive);
    CHECK_FALSE(rep.certified);
    CHECK(rep.status.find("inconclusive") != std::string::npos);
    CHECK(rep.truncation_table.size() == 2);  // raw table still exposed
}
