#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "kpls/errors.hpp"
#include "kpls/krylov.hpp"
#include "kpls/linalg.hpp"
#include "kpls/rng.hpp"

using Eigen::MatrixXd;
using Eigen::VectorXd;
using namespace kpls;

namespace {

MatrixXd projector(const MatrixXd& basis) { return basis * basis.transpose(); }

VectorXd vec2(double a, double b) {
    VectorXd v(2);
    v << a, b;
    return v;
}

}  // namespace

TEST_CASE("build_krylov breaks down immediately on the identity") {
    const PsdMatrix a = PsdMatrix::identity(5);
    RandomStream rng(3, 0);
    const VectorXd b = rng.gaussian_vector(5);
    const KrylovBasis kb = build_krylov(a, b, 5);
    CHECK(kb.effective_dim == 1);
    CHECK(kb.breakdown);
    CHECK((kb.basis.col(0) - b / b.norm()).norm() < 1e-14);
    CHECK(kb.tridiag(0, 0) == doctest::Approx(1.0));
}

TEST_CASE("build_krylov matches explicit Gram-Schmidt on diag(2,1)") {
    const PsdMatrix a = PsdMatrix::diagonal(vec2(2.0, 1.0));
    const VectorXd b = vec2(2.0, 1.0);
    const KrylovBasis kb = build_krylov(a, b, 2);
    REQUIRE(kb.effective_dim == 2);
    CHECK((kb.basis.col(0) - b / std::sqrt(5.0)).norm() < 1e-14);
    // Gram-Schmidt of {b, Ab}: second direction (1,-2)/sqrt(5), flipped so
    // the largest-magnitude entry is positive.
    VectorXd q2 = vec2(-1.0, 2.0) / std::sqrt(5.0);
    CHECK((kb.basis.col(1) - q2).norm() < 1e-12);
    CHECK(kb.seed_norm == doctest::Approx(std::sqrt(5.0)));
}

TEST_CASE("full Krylov space reproduces the active spectrum") {
    VectorXd d(3);
    d << 3.0, 2.0, 1.0;
    const PsdMatrix a = PsdMatrix::diagonal(d);
    const VectorXd b = VectorXd::Ones(3);
    const KrylovBasis kb = build_krylov(a, b, 3);
    REQUIRE(kb.effective_dim == 3);
    auto e = sym_eigen(PsdMatrix(kb.tridiag));
    CHECK(e.eigenvalues[0] == doctest::Approx(3.0).epsilon(1e-10));
    CHECK(e.eigenvalues[1] == doctest::Approx(2.0).epsilon(1e-10));
    CHECK(e.eigenvalues[2] == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("projected matrix agrees with K^T A K") {
    RandomStream rng(17, 0);
    MatrixXd g = rng.gaussian_matrix(8, 8);
    const PsdMatrix a(MatrixXd(g * g.transpose() / 8.0));
    const VectorXd b = rng.gaussian_vector(8);
    const KrylovBasis kb = build_krylov(a, b, 6);
    const MatrixXd t_direct = kb.basis.transpose() * a.mat() * kb.basis;
    CHECK(spectral_norm(t_direct - kb.tridiag) <= 1e-8 * (1.0 + operator_norm(a)));
    CHECK((kb.basis.transpose() * kb.basis -
           MatrixXd::Identity(kb.effective_dim, kb.effective_dim))
              .cwiseAbs()
              .maxCoeff() < 1e-10);
    // Entries beyond the three central diagonals are exactly zero.
    for (Eigen::Index i = 0; i < kb.tridiag.rows(); ++i)
        for (Eigen::Index j = 0; j < kb.tridiag.cols(); ++j)
            if (std::abs(i - j) > 1) CHECK(kb.tridiag(i, j) == 0.0);
}

TEST_CASE("krylov_dimension") {
    CHECK(krylov_dimension(PsdMatrix::identity(4), VectorXd::Ones(4)) == 1);

    VectorXd d(4);
    d << 1.0, 2.0, 3.0, 4.0;
    VectorXd b = VectorXd::Zero(4);
    b[0] = 1.0;
    b[1] = 1.0;
    const PsdMatrix a = PsdMatrix::diagonal(d);
    CHECK(krylov_dimension(a, b) == 2);

    // Oracle: rank of the Krylov matrix [b, Ab, A^2 b, A^3 b].
    MatrixXd km(4, 4);
    VectorXd w = b;
    for (int j = 0; j < 4; ++j) {
        km.col(j) = w;
        w = a.mat() * w;
    }
    CHECK(orthonormalize(km).cols() == 2);

    // m distinct eigenvalues active in b -> dimension m.
    VectorXd ball = VectorXd::Ones(4);
    CHECK(krylov_dimension(a, ball) == 4);
}

TEST_CASE("projected_system") {
    const PsdMatrix id3 = PsdMatrix::identity(3);
    VectorXd e1 = VectorXd::Zero(3);
    e1[0] = 1.0;
    const KrylovBasis kb1 = build_krylov(id3, e1, 3);
    auto [t1, b1] = projected_system(id3, e1, kb1);
    REQUIRE(t1.dim() == 1);
    CHECK(t1.mat()(0, 0) == doctest::Approx(1.0));
    CHECK(b1[0] == doctest::Approx(1.0));

    const PsdMatrix a = PsdMatrix::diagonal(vec2(2.0, 1.0));
    const VectorXd b = vec2(2.0, 1.0);
    const KrylovBasis kb = build_krylov(a, b, 2);
    auto [t, bm] = projected_system(a, b, kb);
    CHECK(bm[0] == doctest::Approx(std::sqrt(5.0)).epsilon(1e-12));
    CHECK(std::abs(bm[1]) < 1e-12);
    // Reconstruction equals the projection of b onto the Krylov space.
    CHECK((kb.basis * bm - projector(kb.basis) * b).norm() < 1e-10);
}

TEST_CASE("subspace_distance") {
    RandomStream rng(23, 0);
    MatrixXd b1 = orthonormalize(rng.gaussian_matrix(5, 2));
    CHECK(subspace_distance(b1, b1) == doctest::Approx(0.0));

    MatrixXd ea = MatrixXd::Identity(4, 2);
    MatrixXd eb = MatrixXd::Zero(4, 2);
    eb(2, 0) = 1.0;
    eb(3, 1) = 1.0;
    CHECK(subspace_distance(ea, eb) == doctest::Approx(M_PI / 2));

    MatrixXd e1 = MatrixXd::Identity(2, 1);
    MatrixXd rot(2, 1);
    rot << std::cos(0.2), std::sin(0.2);
    CHECK(subspace_distance(e1, rot) == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("subspace_distance is a pseudo-metric on random triples") {
    for (std::uint64_t s = 0; s < 20; ++s) {
        RandomStream rng(100 + s, 0);
        MatrixXd b1 = orthonormalize(rng.gaussian_matrix(6, 2));
        MatrixXd b2 = orthonormalize(rng.gaussian_matrix(6, 2));
        MatrixXd b3 = orthonormalize(rng.gaussian_matrix(6, 2));
        const double d12 = subspace_distance(b1, b2);
        const double d21 = subspace_distance(b2, b1);
        const double d13 = subspace_distance(b1, b3);
        const double d23 = subspace_distance(b2, b3);
        CHECK(d12 == doctest::Approx(d21).epsilon(1e-12));
        CHECK(d13 <= d12 + d23 + 1e-9);
    }
}

TEST_CASE("projection invariance of Krylov spaces") {
    for (std::uint64_t s = 0; s < 10; ++s) {
        RandomStream rng(200 + s, 0);
        const int m = 3, p = 7;
        MatrixXd g = rng.gaussian_matrix(m, m);
        const PsdMatrix a(MatrixXd(g * g.transpose() + MatrixXd::Identity(m, m)));
        const VectorXd b = rng.gaussian_vector(m);
        const MatrixXd pm = orthonormalize(rng.gaussian_matrix(p, m));

        const KrylovBasis small = build_krylov(a, b, m);
        const PsdMatrix big(MatrixXd(pm * a.mat() * pm.transpose()));
        const KrylovBasis lifted = build_krylov(big, Eigen::VectorXd(pm * b), m);
        REQUIRE(small.effective_dim == lifted.effective_dim);
        const MatrixXd want = pm * projector(small.basis) * pm.transpose();
        CHECK(spectral_norm(projector(lifted.basis) - want) < 1e-8);
    }
}

TEST_CASE("orthogonal-shift invariance of Krylov spaces") {
    for (std::uint64_t s = 0; s < 10; ++s) {
        RandomStream rng(300 + s, 0);
        const int p = 8, k = 4;
        const MatrixXd q = orthonormalize(rng.gaussian_matrix(p, p));
        REQUIRE(q.cols() == p);
        const MatrixXd q1 = q.leftCols(k);
        const MatrixXd q2 = q.rightCols(p - k);
        VectorXd d1(k), d2(p - k);
        for (int i = 0; i < k; ++i) d1[i] = 1.0 + rng.uniform() * 4.0;
        for (int i = 0; i < p - k; ++i) d2[i] = rng.uniform() * 10.0;
        const PsdMatrix a(MatrixXd(q1 * d1.asDiagonal() * q1.transpose()));
        const PsdMatrix psi(MatrixXd(q2 * d2.asDiagonal() * q2.transpose()));
        const VectorXd b = q1 * rng.gaussian_vector(k);

        CHECK(spectral_norm(a.mat() * psi.mat()) < 1e-10);
        CHECK((psi.mat() * b).norm() < 1e-10);

        const PsdMatrix shifted(MatrixXd(a.mat() + psi.mat()));
        const Eigen::Index m = krylov_dimension(a, b);
        for (Eigen::Index sdim = 1; sdim <= m; ++sdim) {
            const KrylovBasis kb0 = build_krylov(a, b, sdim);
            const KrylovBasis kb1 = build_krylov(shifted, b, sdim);
            REQUIRE(kb0.effective_dim == kb1.effective_dim);
            CHECK(spectral_norm(projector(kb0.basis) - projector(kb1.basis)) < 1e-8);
        }
        CHECK(krylov_dimension(shifted, b) == m);
    }
}

TEST_CASE("natural_basis_distance sees in-span rotations") {
    RandomStream rng(41, 0);
    MatrixXd k1 = orthonormalize(rng.gaussian_matrix(5, 2));
    CHECK(natural_basis_distance(k1, k1) == doctest::Approx(0.0));
    // Sign flips do not count as rotation.
    MatrixXd flipped = k1;
    flipped.col(1) = -flipped.col(1);
    CHECK(natural_basis_distance(k1, flipped) == doctest::Approx(0.0));

    const double t = 0.15;
    MatrixXd rot(2, 2);
    rot << std::cos(t), -std::sin(t), std::sin(t), std::cos(t);
    CHECK(natural_basis_distance(k1, MatrixXd(k1 * rot)) == doctest::Approx(t).epsilon(1e-10));

    // Span motion is seen as well.
    MatrixXd dir = rng.gaussian_matrix(5, 2);
    dir -= k1 * (k1.transpose() * dir);
    MatrixXd moved = orthonormalize(k1 + 0.05 * dir);
    CHECK(natural_basis_distance(k1, moved) > 0.0);
    CHECK(natural_basis_distance(k1, moved) < 0.5);
}

TEST_CASE("estimate_kappa_b on a one-dimensional Krylov problem") {
    const PsdMatrix a = PsdMatrix::diagonal(vec2(10.0, 1.0));
    VectorXd b = vec2(1.0, 0.0);
    const auto est = estimate_kappa_b(a, b, 1, {1e-3, 1e-4}, 64, 11);
    // The basis is b~/||b~||, insensitive to dA; the angle is at most
    // arcsin of the relative seed perturbation.
    CHECK(est.value <= 1.1);
    CHECK(est.converged);
    CHECK(est.trials == 64);
}

TEST_CASE("estimate_kappa_b is reproducible across seeds within 30%") {
    VectorXd d(3);
    d << 4.0, 2.0, 1.0;
    const PsdMatrix a = PsdMatrix::diagonal(d);
    const VectorXd b = VectorXd::Ones(3);
    const auto e1 = estimate_kappa_b(a, b, 3, {1e-3, 3e-4}, 128, 7);
    const auto e2 = estimate_kappa_b(a, b, 3, {1e-3, 3e-4}, 128, 8);
    CHECK(std::isfinite(e1.value));
    CHECK(e1.value > 0.0);
    CHECK(std::abs(e1.value - e2.value) <= 0.3 * std::max(e1.value, e2.value));

    // Same seed reproduces exactly.
    const auto e3 = estimate_kappa_b(a, b, 3, {1e-3, 3e-4}, 128, 7);
    CHECK(e1.value == e3.value);
}

TEST_CASE("build_krylov rejects an empty seed") {
    CHECK_THROWS_AS(build_krylov(PsdMatrix::identity(3), VectorXd::Zero(3), 2), NumericError);
}
