#ifndef KPLS_LINALG_HPP
#define KPLS_LINALG_HPP

#include <Eigen/Dense>

namespace kpls {

// Relative tolerance for clamping small negative eigenvalues of nominally
// PSD matrices (sample covariances are PSD in exact arithmetic only).
inline constexpr double kPsdClampTol = 1e-10;

// Dense symmetric positive-semidefinite matrix. Construction symmetrizes
// (A + A^T)/2 after checking the input is symmetric to 1e-12 relative;
// eigenvalue clamping happens inside the spectral routines below.
class PsdMatrix {
  public:
    PsdMatrix() = default;
    explicit PsdMatrix(const Eigen::MatrixXd& a);

    Eigen::Index dim() const { return mat_.rows(); }
    const Eigen::MatrixXd& mat() const { return mat_; }

    static PsdMatrix diagonal(const Eigen::VectorXd& d);
    static PsdMatrix identity(Eigen::Index n);

  private:
    Eigen::MatrixXd mat_;
};

struct EigenDecomposition {
    Eigen::VectorXd eigenvalues;   // non-increasing
    Eigen::MatrixXd eigenvectors;  // column i pairs with eigenvalue i
};

// Spectral decomposition of a PSD matrix. Cyclic Jacobi for dim <= 64
// (high relative accuracy on the near-singular spectra this project lives
// on), tridiagonalization + implicit-shift QR above. Eigenvalues within
// kPsdClampTol * lambda_max of zero from below are clamped to 0; each
// eigenvector is scaled so its entry of largest magnitude is positive.
EigenDecomposition sym_eigen(const PsdMatrix& a);

double default_rank_tol(Eigen::Index dim);

PsdMatrix pseudo_inverse(const PsdMatrix& a, double rank_tol = 0.0);

// kappa_2(A) = ||A||_op * ||A^+||_op = lambda_max / lambda_min^+ where
// lambda_min^+ is the smallest eigenvalue above rank_tol * lambda_max.
double condition_number_psd(const PsdMatrix& a, double rank_tol = 0.0);

// Condition number of the columnwise centered/scaled data matrix's
// covariance. Zero-variance columns are dropped; rank deficiency after
// scaling is reported as +infinity rather than an error.
double standardized_condition_number(const Eigen::MatrixXd& x);

// Largest eigenvalue (exact, via sym_eigen).
double operator_norm(const PsdMatrix& a);

// Power-iteration estimate of the largest eigenvalue, deterministic start.
// Only used where the norm sets a breakdown scale, never inside a bound.
double operator_norm_estimate(const PsdMatrix& a);

// Spectral norm of a general rectangular matrix.
double spectral_norm(const Eigen::MatrixXd& m);

// Modified Gram-Schmidt with one full re-orthogonalization pass. Columns
// whose residual norm falls below 1e-12 times the input column norm are
// dropped, so the output can have fewer columns than the input.
Eigen::MatrixXd orthonormalize(const Eigen::MatrixXd& v);

// Canonical angles between two equal-dimension subspaces given by
// orthonormal bases, non-decreasing in [0, pi/2]. Angles below pi/4 are
// refined through the sine route so that near-identical subspaces resolve
// well below the arccos noise floor of ~1.5e-8.
Eigen::VectorXd principal_angles(const Eigen::MatrixXd& b1, const Eigen::MatrixXd& b2);

}  // namespace kpls

#endif
