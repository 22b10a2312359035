#include "kpls/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "kpls/errors.hpp"

namespace kpls {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

// Largest-magnitude entry positive; ties broken by the first such entry.
void normalize_column_signs(Eigen::MatrixXd& v) {
    for (Eigen::Index j = 0; j < v.cols(); ++j) {
        Eigen::Index imax = 0;
        double amax = -1.0;
        for (Eigen::Index i = 0; i < v.rows(); ++i) {
            const double a = std::abs(v(i, j));
            if (a > amax) {
                amax = a;
                imax = i;
            }
        }
        if (v(imax, j) < 0.0) v.col(j) = -v.col(j);
    }
}

void sort_descending(Eigen::VectorXd& vals, Eigen::MatrixXd& vecs) {
    const Eigen::Index n = vals.size();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return vals[a] > vals[b]; });
    Eigen::VectorXd sv(n);
    Eigen::MatrixXd sm(vecs.rows(), n);
    for (Eigen::Index k = 0; k < n; ++k) {
        sv[k] = vals[order[static_cast<std::size_t>(k)]];
        sm.col(k) = vecs.col(order[static_cast<std::size_t>(k)]);
    }
    vals = sv;
    vecs = sm;
}

// Cyclic Jacobi with a per-sweep rotation threshold. Converges in a handful
// of sweeps for the dimensions it is used on (<= 64).
void jacobi_eigen(const Eigen::MatrixXd& input, Eigen::VectorXd& vals,
                  Eigen::MatrixXd& vecs) {
    const Eigen::Index n = input.rows();
    Eigen::MatrixXd a = input;
    vecs = Eigen::MatrixXd::Identity(n, n);
    const int max_sweeps = 64;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = i + 1; j < n; ++j) off += a(i, j) * a(i, j);
        if (std::sqrt(2.0 * off) <= 1e-300 ||
            std::sqrt(2.0 * off) <= 64.0 * kEps * std::max(1.0, a.diagonal().cwiseAbs().maxCoeff())) {
            vals = a.diagonal();
            return;
        }
        for (Eigen::Index p = 0; p < n; ++p) {
            for (Eigen::Index q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                const double scale = std::abs(a(p, p)) + std::abs(a(q, q));
                if (std::abs(apq) <= kEps * scale || apq == 0.0) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (Eigen::Index k = 0; k < n; ++k) {
                    const double akp = a(k, p);
                    const double akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (Eigen::Index k = 0; k < n; ++k) {
                    const double apk = a(p, k);
                    const double aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                for (Eigen::Index k = 0; k < n; ++k) {
                    const double vkp = vecs(k, p);
                    const double vkq = vecs(k, q);
                    vecs(k, p) = c * vkp - s * vkq;
                    vecs(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }
    throw NumericError("sym_eigen: Jacobi iteration did not converge for dimension " +
                       std::to_string(n));
}

}  // namespace

PsdMatrix::PsdMatrix(const Eigen::MatrixXd& a) {
    if (a.rows() != a.cols())
        throw std::invalid_argument("PsdMatrix: matrix must be square");
    if (a.rows() == 0) throw std::invalid_argument("PsdMatrix: empty matrix");
    const double scale = 1.0 + a.cwiseAbs().maxCoeff();
    const double asym = (a - a.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-12 * scale)
        throw std::invalid_argument("PsdMatrix: input is not symmetric (relative asymmetry " +
                                    std::to_string(asym / scale) + ")");
    mat_ = 0.5 * (a + a.transpose());
}

PsdMatrix PsdMatrix::diagonal(const Eigen::VectorXd& d) {
    return PsdMatrix(Eigen::MatrixXd(d.asDiagonal()));
}

PsdMatrix PsdMatrix::identity(Eigen::Index n) {
    return PsdMatrix(Eigen::MatrixXd::Identity(n, n));
}

EigenDecomposition sym_eigen(const PsdMatrix& a) {
    if (a.dim() < 1) throw std::invalid_argument("sym_eigen: dimension must be >= 1");
    EigenDecomposition d;
    if (a.dim() <= 64) {
        jacobi_eigen(a.mat(), d.eigenvalues, d.eigenvectors);
    } else {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a.mat());
        if (solver.info() != Eigen::Success)
            throw NumericError("sym_eigen: QR iteration did not converge for dimension " +
                               std::to_string(a.dim()));
        d.eigenvalues = solver.eigenvalues();
        d.eigenvectors = solver.eigenvectors();
    }
    sort_descending(d.eigenvalues, d.eigenvectors);
    const double lam_max = std::max(0.0, d.eigenvalues[0]);
    for (Eigen::Index i = 0; i < d.eigenvalues.size(); ++i) {
        if (d.eigenvalues[i] < 0.0 && d.eigenvalues[i] >= -kPsdClampTol * lam_max)
            d.eigenvalues[i] = 0.0;
    }
    normalize_column_signs(d.eigenvectors);
    return d;
}

double default_rank_tol(Eigen::Index dim) {
    return static_cast<double>(dim) * kEps;
}

PsdMatrix pseudo_inverse(const PsdMatrix& a, double rank_tol) {
    if (rank_tol == 0.0) rank_tol = default_rank_tol(a.dim());
    if (rank_tol <= 0.0 || rank_tol >= 1.0)
        throw std::invalid_argument("pseudo_inverse: rank_tol must lie in (0,1)");
    const EigenDecomposition d = sym_eigen(a);
    const double cutoff = rank_tol * std::max(0.0, d.eigenvalues[0]);
    Eigen::VectorXd inv = Eigen::VectorXd::Zero(d.eigenvalues.size());
    for (Eigen::Index i = 0; i < d.eigenvalues.size(); ++i)
        if (d.eigenvalues[i] > cutoff) inv[i] = 1.0 / d.eigenvalues[i];
    return PsdMatrix(d.eigenvectors * inv.asDiagonal() * d.eigenvectors.transpose());
}

double condition_number_psd(const PsdMatrix& a, double rank_tol) {
    if (rank_tol == 0.0) rank_tol = default_rank_tol(a.dim());
    const EigenDecomposition d = sym_eigen(a);
    const double lam_max = d.eigenvalues[0];
    if (lam_max <= 0.0)
        throw NumericError("condition_number_psd: undefined condition number for the zero matrix");
    const double cutoff = rank_tol * lam_max;
    double lam_min = lam_max;
    for (Eigen::Index i = 0; i < d.eigenvalues.size(); ++i)
        if (d.eigenvalues[i] > cutoff) lam_min = d.eigenvalues[i];
    return lam_max / lam_min;
}

double standardized_condition_number(const Eigen::MatrixXd& x) {
    const Eigen::Index n = x.rows();
    const Eigen::Index p = x.cols();
    if (n < 2) throw std::invalid_argument("standardized_condition_number: need n >= 2 rows");
    std::vector<Eigen::Index> keep;
    Eigen::MatrixXd z(n, p);
    Eigen::Index k = 0;
    for (Eigen::Index j = 0; j < p; ++j) {
        const double mean = x.col(j).mean();
        Eigen::VectorXd c = x.col(j).array() - mean;
        const double sd = std::sqrt(c.squaredNorm() / static_cast<double>(n - 1));
        const double rms = x.col(j).norm() / std::sqrt(static_cast<double>(n));
        if (sd <= 1e-13 * std::max(1.0, rms)) continue;  // constant column
        z.col(k++) = c / sd;
    }
    if (k == 0)
        throw NumericError("standardized_condition_number: all columns are constant");
    const Eigen::MatrixXd zz = z.leftCols(k);
    PsdMatrix cov(Eigen::MatrixXd(zz.transpose() * zz / static_cast<double>(n - 1)));
    const EigenDecomposition d = sym_eigen(cov);
    const double lam_max = d.eigenvalues[0];
    const double lam_min = d.eigenvalues[d.eigenvalues.size() - 1];
    if (lam_min <= default_rank_tol(k) * lam_max)
        return std::numeric_limits<double>::infinity();
    return lam_max / lam_min;
}

double operator_norm(const PsdMatrix& a) {
    return std::max(0.0, sym_eigen(a).eigenvalues[0]);
}

double operator_norm_estimate(const PsdMatrix& a) {
    const Eigen::Index n = a.dim();
    Eigen::VectorXd v = Eigen::VectorXd::Ones(n);
    v[0] += 0.5;  // break symmetry against the ones vector being orthogonal to the top eigenvector
    v.normalize();
    double lam = 0.0;
    for (int it = 0; it < 60; ++it) {
        Eigen::VectorXd w = a.mat() * v;
        const double norm = w.norm();
        if (norm == 0.0) return 0.0;
        const double next = v.dot(w);
        v = w / norm;
        if (it > 4 && std::abs(next - lam) <= 1e-8 * std::max(1.0, std::abs(next))) {
            lam = next;
            break;
        }
        lam = next;
    }
    return std::abs(lam);
}

double spectral_norm(const Eigen::MatrixXd& m) {
    if (m.size() == 0) return 0.0;
    const bool tall = m.rows() >= m.cols();
    const Eigen::MatrixXd gram = tall ? Eigen::MatrixXd(m.transpose() * m)
                                      : Eigen::MatrixXd(m * m.transpose());
    const EigenDecomposition d = sym_eigen(PsdMatrix(gram));
    return std::sqrt(std::max(0.0, d.eigenvalues[0]));
}

Eigen::MatrixXd orthonormalize(const Eigen::MatrixXd& v) {
    const Eigen::Index p = v.rows();
    const Eigen::Index k = v.cols();
    Eigen::MatrixXd q(p, k);
    Eigen::Index kept = 0;
    for (Eigen::Index j = 0; j < k; ++j) {
        Eigen::VectorXd w = v.col(j);
        const double input_norm = w.norm();
        for (int pass = 0; pass < 2; ++pass)
            for (Eigen::Index i = 0; i < kept; ++i) w -= q.col(i).dot(w) * q.col(i);
        const double res = w.norm();
        if (res <= 1e-12 * input_norm || res == 0.0) continue;
        q.col(kept++) = w / res;
    }
    return q.leftCols(kept);
}

Eigen::VectorXd principal_angles(const Eigen::MatrixXd& b1, const Eigen::MatrixXd& b2) {
    if (b1.rows() != b2.rows() || b1.cols() != b2.cols())
        throw std::invalid_argument("principal_angles: bases must have equal shapes");
    const Eigen::Index m = b1.cols();
    if (m == 0) throw std::invalid_argument("principal_angles: empty bases");
    const double o1 = (b1.transpose() * b1 - Eigen::MatrixXd::Identity(m, m)).cwiseAbs().maxCoeff();
    const double o2 = (b2.transpose() * b2 - Eigen::MatrixXd::Identity(m, m)).cwiseAbs().maxCoeff();
    if (o1 > 1e-10 || o2 > 1e-10)
        throw std::invalid_argument("principal_angles: inputs are not orthonormal");

    const Eigen::MatrixXd cross = b1.transpose() * b2;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(cross);
    Eigen::VectorXd cosines = svd.singularValues();  // non-increasing
    Eigen::VectorXd angles(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        const double c = std::min(1.0, std::max(0.0, cosines[i]));
        angles[i] = std::acos(c);
    }
    // Small angles (cos > 1/sqrt(2)): the sine route keeps full precision.
    const Eigen::MatrixXd resid = b2 - b1 * cross;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd_s(resid.transpose() * resid);
    Eigen::VectorXd s2 = svd_s.singularValues();  // sin^2, non-increasing
    const double inv_sqrt2 = 0.70710678118654752440;
    for (Eigen::Index i = 0; i < m; ++i) {
        if (cosines[i] > inv_sqrt2) {
            // cosines descend while sines ascend: pair i with m-1-i.
            const double s = std::sqrt(std::max(0.0, s2[m - 1 - i]));
            angles[i] = std::asin(std::min(1.0, s));
        }
    }
    std::sort(angles.data(), angles.data() + m);
    return angles;
}

}  // namespace kpls
