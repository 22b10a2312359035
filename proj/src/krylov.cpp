#include "kpls/krylov.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

#include "kpls/errors.hpp"
#include "kpls/parallel.hpp"
#include "kpls/rng.hpp"

namespace kpls {

SymmetricOp SymmetricOp::dense(const PsdMatrix& a) {
    SymmetricOp op;
    op.dim = a.dim();
    op.apply = [&a](const Eigen::VectorXd& v) { return Eigen::VectorXd(a.mat() * v); };
    op.op_norm_estimate = operator_norm_estimate(a);
    return op;
}

KrylovBasis build_krylov(const SymmetricOp& a, const Eigen::VectorXd& b,
                         Eigen::Index s, double breakdown_tol) {
    if (b.size() != a.dim) throw std::invalid_argument("build_krylov: dimension mismatch");
    const double bnorm = b.norm();
    if (bnorm == 0.0) throw NumericError("build_krylov: empty Krylov seed");
    if (s < 1 || s > a.dim)
        throw std::invalid_argument("build_krylov: requested dimension out of range");

    const double scale = breakdown_tol * std::max(a.op_norm_estimate, 1e-300) * bnorm;
    Eigen::MatrixXd q(b.size(), s);
    Eigen::VectorXd alpha(s), beta(s);  // beta[j] couples columns j and j+1
    q.col(0) = b / bnorm;

    Eigen::Index built = 1;
    bool broke = false;
    for (Eigen::Index j = 0; j < s; ++j) {
        Eigen::VectorXd w = a.apply(q.col(j));
        alpha[j] = q.col(j).dot(w);
        // Full re-orthogonalization, two passes.
        for (int pass = 0; pass < 2; ++pass)
            for (Eigen::Index i = 0; i < built; ++i) w -= q.col(i).dot(w) * q.col(i);
        const double res = w.norm();
        if (j + 1 == s) break;
        if (res <= scale) {
            broke = true;
            break;
        }
        beta[j] = res;
        q.col(j + 1) = w / res;
        ++built;
    }

    KrylovBasis kb;
    kb.effective_dim = built;
    kb.breakdown = broke;
    kb.seed_norm = bnorm;
    kb.basis = q.leftCols(built);

    // Sign convention: column 1 stays b/||b||; later columns are flipped so
    // their entry of largest magnitude is positive. Off-diagonal entries of
    // the projected matrix pick up the product of adjacent signs.
    Eigen::VectorXd sign = Eigen::VectorXd::Ones(built);
    for (Eigen::Index j = 1; j < built; ++j) {
        Eigen::Index imax = 0;
        kb.basis.col(j).cwiseAbs().maxCoeff(&imax);
        if (kb.basis(imax, j) < 0.0) {
            kb.basis.col(j) = -kb.basis.col(j);
            sign[j] = -1.0;
        }
    }
    kb.tridiag = Eigen::MatrixXd::Zero(built, built);
    for (Eigen::Index j = 0; j < built; ++j) {
        kb.tridiag(j, j) = alpha[j];
        if (j + 1 < built) {
            const double off = beta[j] * sign[j] * sign[j + 1];
            kb.tridiag(j, j + 1) = off;
            kb.tridiag(j + 1, j) = off;
        }
    }
    return kb;
}

KrylovBasis build_krylov(const PsdMatrix& a, const Eigen::VectorXd& b,
                         Eigen::Index s, double breakdown_tol) {
    return build_krylov(SymmetricOp::dense(a), b, s, breakdown_tol);
}

Eigen::Index krylov_dimension(const PsdMatrix& a, const Eigen::VectorXd& b,
                              double breakdown_tol) {
    return build_krylov(a, b, a.dim(), breakdown_tol).effective_dim;
}

std::pair<PsdMatrix, Eigen::VectorXd> projected_system(const PsdMatrix& a,
                                                       const Eigen::VectorXd& b,
                                                       const KrylovBasis& kb) {
    if (kb.basis.rows() != a.dim() || b.size() != a.dim())
        throw std::invalid_argument("projected_system: dimension mismatch");
    const double bnorm = b.norm();
    if ((kb.basis.col(0) * bnorm - b).norm() > 1e-8 * bnorm)
        throw std::invalid_argument("projected_system: basis was not built from this seed");
    return {PsdMatrix(kb.tridiag), Eigen::VectorXd(kb.basis.transpose() * b)};
}

double subspace_distance(const Eigen::MatrixXd& b1, const Eigen::MatrixXd& b2) {
    const Eigen::VectorXd angles = principal_angles(b1, b2);
    return angles[angles.size() - 1];
}

namespace {

// Orthonormal completion of an orthonormal k x m frame to a basis of R^k.
Eigen::MatrixXd complete_frame(const Eigen::MatrixXd& f) {
    const Eigen::Index k = f.rows();
    const Eigen::Index m = f.cols();
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(f);
    Eigen::MatrixXd q = qr.householderQ();
    return q.rightCols(k - m);
}

// Largest rotation angle in the spectrum of an orthogonal matrix, real
// eigenvalues (+-1, i.e. fixed points and pure flips) excluded.
double max_rotation_angle(const Eigen::MatrixXd& u) {
    Eigen::EigenSolver<Eigen::MatrixXd> es(u, false);
    if (es.info() != Eigen::Success)
        throw NumericError("natural_basis_distance: eigenvalue computation failed");
    double rho = 0.0;
    const auto& vals = es.eigenvalues();
    for (Eigen::Index i = 0; i < vals.size(); ++i) {
        if (std::abs(vals[i].imag()) <= 1e-12) continue;
        rho = std::max(rho, std::abs(std::atan2(vals[i].imag(), vals[i].real())));
    }
    return rho;
}

}  // namespace

double natural_basis_distance(const Eigen::MatrixXd& k1, const Eigen::MatrixXd& k2) {
    if (k1.rows() != k2.rows() || k1.cols() != k2.cols())
        throw std::invalid_argument("natural_basis_distance: frames must have equal shapes");
    const Eigen::Index m = k1.cols();

    // Natural bases are unique up to signs: match each column's sign first.
    Eigen::MatrixXd k2s = k2;
    for (Eigen::Index j = 0; j < m; ++j)
        if (k1.col(j).dot(k2.col(j)) < 0.0) k2s.col(j) = -k2s.col(j);

    // Work inside span(k1) + span(k2).
    Eigen::MatrixXd joint(k1.rows(), 2 * m);
    joint << k1, k2s;
    const Eigen::MatrixXd v = orthonormalize(joint);
    const Eigen::Index k = v.cols();
    Eigen::MatrixXd f1 = v.transpose() * k1;
    Eigen::MatrixXd f2 = v.transpose() * k2s;

    if (k == m) {
        // Equal spans: the connecting transformation restricted to the span
        // is fixed, identity elsewhere.
        return max_rotation_angle(f1.transpose() * f2);
    }

    // Among all orthogonal Q with Q f1 = f2, pick the completion pairing
    // closest to the identity (orthogonal Procrustes on the complements).
    const Eigen::MatrixXd c1 = complete_frame(f1);
    const Eigen::MatrixXd c2 = complete_frame(f2);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(c2.transpose() * c1,
                                          Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Eigen::MatrixXd r = svd.matrixU() * svd.matrixV().transpose();
    const Eigen::MatrixXd q = f2 * f1.transpose() + c2 * r * c1.transpose();
    return max_rotation_angle(q);
}

KappaBEstimate estimate_kappa_b(const PsdMatrix& a, const Eigen::VectorXd& b,
                                Eigen::Index m, const std::vector<double>& eps_grid,
                                int trials, std::uint64_t seed) {
    if (eps_grid.empty()) throw std::invalid_argument("estimate_kappa_b: empty epsilon grid");
    for (std::size_t i = 0; i + 1 < eps_grid.size(); ++i)
        if (eps_grid[i] <= eps_grid[i + 1])
            throw std::invalid_argument("estimate_kappa_b: epsilon grid must be strictly decreasing");
    if (trials < 1) throw std::invalid_argument("estimate_kappa_b: trials must be >= 1");

    const KrylovBasis base = build_krylov(a, b, m);
    if (base.effective_dim < m)
        throw std::invalid_argument(
            "estimate_kappa_b: m exceeds the Krylov dimension of the problem");
    const double anorm = operator_norm(a);
    const double bnorm = b.norm();

    KappaBEstimate est;
    est.trials = trials;
    est.epsilons = eps_grid;
    est.max_ratio_per_epsilon.assign(eps_grid.size(), 0.0);
    est.admissible_per_epsilon.assign(eps_grid.size(), 0);

    for (std::size_t ei = 0; ei < eps_grid.size(); ++ei) {
        const double eps = eps_grid[ei];
        if (eps <= 0.0) throw std::invalid_argument("estimate_kappa_b: epsilons must be positive");
        std::vector<double> ratios(static_cast<std::size_t>(trials), -1.0);
        parallel_for(trials, [&](int t) {
            RandomStream rng(seed, (static_cast<std::uint64_t>(ei) << 32) + static_cast<std::uint64_t>(t));
            Eigen::MatrixXd da = rng.symmetric_gaussian(a.dim());
            const double danorm = spectral_norm(da);
            if (danorm == 0.0) return;
            da *= eps * anorm / danorm;
            Eigen::VectorXd db = rng.gaussian_vector(b.size());
            const double dbnorm = db.norm();
            if (dbnorm == 0.0) return;
            db *= eps * bnorm / dbnorm;

            const PsdMatrix at(Eigen::MatrixXd(a.mat() + da));
            const Eigen::VectorXd bt = b + db;
            const KrylovBasis pert = build_krylov(at, bt, m);
            if (pert.effective_dim < m) return;  // inadmissible draw
            ratios[static_cast<std::size_t>(t)] =
                natural_basis_distance(base.basis, pert.basis) / eps;
        });
        int adm = 0;
        double mx = 0.0;
        for (double r : ratios)
            if (r >= 0.0) {
                ++adm;
                mx = std::max(mx, r);
            }
        est.admissible_per_epsilon[ei] = adm;
        est.max_ratio_per_epsilon[ei] = mx;
    }

    // Smallest epsilon with at least half the draws admissible carries the
    // estimate (the definition takes eps -> 0).
    int chosen = -1;
    for (int ei = static_cast<int>(eps_grid.size()) - 1; ei >= 0; --ei) {
        if (est.admissible_per_epsilon[static_cast<std::size_t>(ei)] * 2 >= trials) {
            chosen = ei;
            break;
        }
    }
    if (chosen < 0) {
        bool any = false;
        for (int adm : est.admissible_per_epsilon) any = any || adm > 0;
        throw NumericError(any ? "estimate_kappa_b: perturbation grid too coarse (no epsilon "
                                 "retained half of its draws)"
                               : "estimate_kappa_b: perturbation grid too coarse (all draws "
                                 "inadmissible at every epsilon)");
    }
    est.value = est.max_ratio_per_epsilon[static_cast<std::size_t>(chosen)];
    if (chosen >= 1 &&
        est.admissible_per_epsilon[static_cast<std::size_t>(chosen - 1)] * 2 >= trials) {
        const double prev = est.max_ratio_per_epsilon[static_cast<std::size_t>(chosen - 1)];
        const double denom = std::max({est.value, prev, 1e-300});
        est.converged = std::abs(est.value - prev) <= 0.20 * denom;
    }
    return est;
}

}  // namespace kpls
