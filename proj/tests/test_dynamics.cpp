#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <limits>
#include <random>

#include "oracles.hpp"
#include "symporb/dynamics.hpp"

using namespace symporb;

TEST_CASE("model construction validates the mass ratio") {
    CHECK_THROWS_AS(Model::crtbp(0.0), std::invalid_argument);
    CHECK_THROWS_AS(Model::crtbp(0.5), std::invalid_argument);
    CHECK_THROWS_AS(Model::crtbp(-1.0), std::invalid_argument);
    CHECK(Model::jupiter_europa().mu == 2.5266448850435e-05);
    CHECK(Model::hill().is_hill());
}

TEST_CASE("canonical conversion is an involutive bijection") {
    std::mt19937 rng(7);
    for (int i = 0; i < 100; ++i) {
        const Vec6 s = oracles::random_state(rng);
        const Vec6 back = from_canonical(to_canonical(s));
        // one rounding each way: (vx - y) + y
        CHECK((back - s).cwiseAbs().maxCoeff() < 4 * std::numeric_limits<double>::epsilon());
    }
    CHECK((canonical_from_pv() * pv_from_canonical() - Mat6::Identity()).norm() == 0.0);
}

TEST_CASE("vector field vanishes at a libration point") {
    const Model m = Model::jupiter_europa();
    const double x1 = oracles::collinear_libration_x(m, 1);
    Vec6 s = Vec6::Zero();
    s[0] = x1;
    const Vec6 f = vector_field(m, s);
    CHECK(f.cwiseAbs().maxCoeff() < 1e-12);

    const double x2 = oracles::collinear_libration_x(m, 2);
    s[0] = x2;
    CHECK(vector_field(m, s).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("small-mu circular state has zero radial acceleration") {
    // rotating Kepler closed form: the CRTBP field at mu -> 0 reduces to it
    const Model m = Model::crtbp(1e-13);
    const double r = 0.8;
    Vec6 s = oracles::kepler_circular_state(r);
    const Vec6 f = vector_field(m, s);
    CHECK(std::abs(f[3]) < 1e-10);  // xddot ~ 0 up to the tiny secondary pull
    CHECK(std::abs(f[5]) < 1e-15);
}

TEST_CASE("Hill field at q=(1,0,0), p=0 gives velocity (0,-1,0)") {
    const Model m = Model::hill();
    Vec6 qp = Vec6::Zero();
    qp[0] = 1.0;
    const Vec6 pv = from_canonical(qp);
    CHECK(pv[3] == 0.0);
    CHECK(pv[4] == -1.0);
    CHECK(pv[5] == 0.0);
    // and the flow moves it accordingly
    const Vec6 f = vector_field(m, pv);
    CHECK(f[0] == 0.0);
    CHECK(f[1] == -1.0);
}

TEST_CASE("jacobi gamma reproduces the tabulated DPO value") {
    // Table: Gamma = 3.00374605 at x=1.00900895, ydot=0.04460670
    const Model m = Model::jupiter_europa();
    Vec6 s = Vec6::Zero();
    s[0] = 1.00900895;
    s[4] = 0.04460670;
    CHECK(std::abs(jacobi_gamma(m, s) - 3.00374605) < 1e-7);
}

TEST_CASE("gamma is symmetry invariant") {
    std::mt19937 rng(11);
    const Model m = Model::jupiter_europa();
    const Model h = Model::hill();
    for (int i = 0; i < 50; ++i) {
        const Vec6 s = oracles::random_state(rng);
        for (SymmetryName n : {SymmetryName::rho, SymmetryName::rho_tilde, SymmetryName::sigma}) {
            CHECK(std::abs(hamiltonian(m, apply_symmetry(n, s)) - hamiltonian(m, s)) <
                  1e-13 * std::abs(hamiltonian(m, s)));
        }
        for (SymmetryName n : all_symmetries()) {
            CHECK(std::abs(hamiltonian(h, apply_symmetry(n, s)) - hamiltonian(h, s)) <
                  1e-13 * std::abs(hamiltonian(h, s)));
        }
    }
}

TEST_CASE("collision proximity is rejected") {
    const Model m = Model::jupiter_europa();
    Vec6 s = Vec6::Zero();
    s[0] = 1.0 - m.mu + 1e-9;
    CHECK_THROWS_AS(vector_field(m, s), CollisionProximity);
    CHECK_THROWS_AS(jacobi_gamma(m, s), CollisionProximity);
}

TEST_CASE("variational matrix matches central finite differences") {
    const Model m = Model::jupiter_europa();
    Vec6 s = Vec6::Zero();
    s[0] = 1.00900895;
    s[4] = 0.04460670;
    const Mat6 a = variational_matrix(m, s);
    const Mat6 fd = oracles::central_difference_jacobian(
        [&](const Vec6& q) { return vector_field(m, q); }, s, 1e-7);
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j) {
            const double scale = std::max(1.0, std::abs(fd(i, j)));
            CHECK(std::abs(a(i, j) - fd(i, j)) / scale < 1e-6);
        }
}

TEST_CASE("variational matrix is trace free and has the Coriolis coupling") {
    std::mt19937 rng(3);
    const Model m = Model::jupiter_europa();
    for (int i = 0; i < 20; ++i) {
        const Vec6 s = oracles::random_state(rng);
        const Mat6 a = variational_matrix(m, s);
        CHECK(std::abs(a.trace()) < 1e-12);
    }
    // at a libration point the velocity rows carry +-2 from the Coriolis force
    Vec6 s = Vec6::Zero();
    s[0] = oracles::collinear_libration_x(m, 1);
    const Mat6 a = variational_matrix(m, s);
    CHECK(a(3, 4) == 2.0);
    CHECK(a(4, 3) == -2.0);
}

TEST_CASE("canonical variational matrix is Hamiltonian (J*A symmetric)") {
    std::mt19937 rng(5);
    for (const Model& m : {Model::jupiter_europa(), Model::hill()}) {
        for (int i = 0; i < 20; ++i) {
            const Vec6 s = oracles::random_state(rng);
            const Mat6 a = variational_matrix_canonical(m, s);
            const Mat6 ja = symplectic_form() * a;
            CHECK((ja - ja.transpose()).cwiseAbs().maxCoeff() < 1e-12);
        }
    }
}

TEST_CASE("symmetries square to the identity and act as stated") {
    std::mt19937 rng(13);
    for (SymmetryName n : all_symmetries()) {
        for (int i = 0; i < 20; ++i) {
            const Vec6 s = oracles::random_state(rng);
            CHECK((apply_symmetry(n, apply_symmetry(n, s)) - s).cwiseAbs().maxCoeff() == 0.0);
        }
    }
    // sigma = rho o rho~ exactly
    for (int i = 0; i < 100; ++i) {
        const Vec6 s = oracles::random_state(rng);
        const Vec6 a = apply_symmetry(SymmetryName::sigma, s);
        const Vec6 b = apply_symmetry(SymmetryName::rho, apply_symmetry(SymmetryName::rho_tilde, s));
        CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("fixed locus points are fixed") {
    Vec6 s = Vec6::Zero();
    s[0] = 1.002;
    s[4] = 0.05;  // on L: y = z = vx = 0
    CHECK(fixed_locus_distance(SymmetryName::rho, s) == 0.0);
    CHECK((apply_symmetry(SymmetryName::rho, s) - s).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("kappa symmetries are Hill only") {
    const Model m = Model::jupiter_europa();
    std::mt19937 rng(1);
    const Vec6 s = oracles::random_state(rng);
    CHECK_THROWS_AS(apply_symmetry_checked(m, SymmetryName::kappa, s), SymmetryNotApplicable);
    CHECK_NOTHROW(apply_symmetry_checked(Model::hill(), SymmetryName::kappa, s));
}

TEST_CASE("vector field is rho reversible") {
    // d rho (X_H(s)) = -X_H(rho(s))
    std::mt19937 rng(17);
    for (const Model& m : {Model::jupiter_europa(), Model::hill()}) {
        for (int i = 0; i < 30; ++i) {
            const Vec6 s = oracles::random_state(rng);
            const Vec6 lhs = apply_symmetry(SymmetryName::rho, vector_field(m, s));
            const Vec6 rhs = -vector_field(m, apply_symmetry(SymmetryName::rho, s));
            CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-13 * std::max(1.0, rhs.norm()));
        }
    }
}

TEST_CASE("antisymplectic flags match the sign action on J") {
    for (SymmetryName n : all_symmetries()) {
        const Symmetry& sym = symmetry(n);
        const Mat6 r = sym.signs_canonical.asDiagonal();
        const Mat6 rjr = r.transpose() * symplectic_form() * r;
        const double sign = sym.antisymplectic ? -1.0 : 1.0;
        CHECK((rjr - sign * symplectic_form()).cwiseAbs().maxCoeff() == 0.0);
    }
}
