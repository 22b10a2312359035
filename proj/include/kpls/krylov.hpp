#ifndef KPLS_KRYLOV_HPP
#define KPLS_KRYLOV_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <vector>

#include "kpls/linalg.hpp"

namespace kpls {

inline constexpr double kBreakdownTol = 1e-10;

// Symmetric PSD operator presented through matvecs, so that covariance
// matrices available in factored form (X^T X / n with p >> n) never have
// to be applied densely.
struct SymmetricOp {
    Eigen::Index dim = 0;
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> apply;
    double op_norm_estimate = 0.0;

    static SymmetricOp dense(const PsdMatrix& a);
};

// Natural orthonormal basis of a Krylov space, Lanczos order. Column 1 is
// b / ||b||_2; columns 2..s carry the sign that makes their entry of
// largest magnitude positive. tridiag is the projected matrix K^T A K,
// exactly tridiagonal by construction.
struct KrylovBasis {
    Eigen::MatrixXd basis;
    Eigen::MatrixXd tridiag;
    Eigen::Index effective_dim = 0;
    bool breakdown = false;
    double seed_norm = 0.0;
};

KrylovBasis build_krylov(const SymmetricOp& a, const Eigen::VectorXd& b,
                         Eigen::Index s, double breakdown_tol = kBreakdownTol);
KrylovBasis build_krylov(const PsdMatrix& a, const Eigen::VectorXd& b,
                         Eigen::Index s, double breakdown_tol = kBreakdownTol);

Eigen::Index krylov_dimension(const PsdMatrix& a, const Eigen::VectorXd& b,
                              double breakdown_tol = kBreakdownTol);

// (K_s^T A K_s, K_s^T b); the second component is ||b||_2 e_1 by the
// natural-basis property.
std::pair<PsdMatrix, Eigen::VectorXd> projected_system(const PsdMatrix& a,
                                                       const Eigen::VectorXd& b,
                                                       const KrylovBasis& kb);

// Largest canonical angle between equal-dimension spans; pi/2 for
// orthogonal subspaces.
double subspace_distance(const Eigen::MatrixXd& b1, const Eigen::MatrixXd& b2);

// Distance between two natural bases as frames, not spans: the largest
// rotation angle of a minimal orthogonal transformation carrying one frame
// onto the other (sign flips excluded). Detects in-span basis rotation,
// which the canonical angles cannot see when the spans coincide.
double natural_basis_distance(const Eigen::MatrixXd& k1, const Eigen::MatrixXd& k2);

struct KappaBEstimate {
    double value = 0.0;
    std::vector<double> epsilons;
    std::vector<double> max_ratio_per_epsilon;
    std::vector<int> admissible_per_epsilon;
    int trials = 0;
    bool converged = false;
};

// Monte-Carlo estimate of the Krylov-space condition number: for each eps
// in the (decreasing) grid, draws random symmetric/vector perturbations of
// relative size eps, rebuilds the natural basis and records the ratio
// basis-distance / eps. Draws whose perturbed Krylov dimension falls below
// m are discarded and counted. The reported value is the maximum ratio at
// the smallest eps retaining at least trials/2 admissible draws.
KappaBEstimate estimate_kappa_b(const PsdMatrix& a, const Eigen::VectorXd& b,
                                Eigen::Index m, const std::vector<double>& eps_grid,
                                int trials, std::uint64_t seed);

}  // namespace kpls

#endif
