#include "midlab/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace midl {

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows())
        throw ShapeError("matmul: " + shape_str(a) + " x " + shape_str(b));
    Matrix c(a.rows(), b.cols());
    const std::size_t n = a.rows(), m = b.cols(), k = a.cols();
    for (std::size_t i = 0; i < n; ++i) {
        double* ci = c.row_ptr(i);
        const double* ai = a.row_ptr(i);
        for (std::size_t l = 0; l < k; ++l) {
            const double ail = ai[l];
            const double* bl = b.row_ptr(l);
            for (std::size_t j = 0; j < m; ++j) ci[j] += ail * bl[j];
        }
    }
    return c;
}

Vector matvec(const Matrix& a, const Vector& v) {
    if (a.cols() != v.size())
        throw ShapeError("matvec: " + shape_str(a) + " x vector of length " +
                         std::to_string(v.size()));
    Vector out(a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double* ai = a.row_ptr(i);
        double s = 0.0;
        for (std::size_t j = 0; j < a.cols(); ++j) s += ai[j] * v[j];
        out[i] = s;
    }
    return out;
}

Matrix add(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw ShapeError("add: " + shape_str(a) + " vs " + shape_str(b));
    Matrix c = a;
    for (std::size_t i = 0; i < c.size(); ++i) c.raw()[i] += b.raw()[i];
    return c;
}

Matrix sub(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw ShapeError("sub: " + shape_str(a) + " vs " + shape_str(b));
    Matrix c = a;
    for (std::size_t i = 0; i < c.size(); ++i) c.raw()[i] -= b.raw()[i];
    return c;
}

Matrix scale(const Matrix& a, double s) {
    Matrix c = a;
    for (double& v : c.raw()) v *= s;
    return c;
}

namespace {

double off_diag_norm(const Matrix& a) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j)
            if (i != j) s += a(i, j) * a(i, j);
    return std::sqrt(s);
}

double frobenius(const Matrix& a) {
    double s = 0.0;
    for (double v : a.raw()) s += v * v;
    return std::sqrt(s);
}

} // namespace

SymEig sym_eig(const Matrix& s) {
    if (s.rows() != s.cols()) throw ShapeError("sym_eig: matrix is " + shape_str(s));
    const std::size_t n = s.rows();
    const double scale_ref = std::max(1.0, s.max_abs());
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (std::abs(s(i, j) - s(j, i)) > 1e-9 * scale_ref)
                throw ValueError("sym_eig: input asymmetric beyond tolerance at (" +
                                 std::to_string(i) + "," + std::to_string(j) + ")");

    Matrix a(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) a(i, j) = 0.5 * (s(i, j) + s(j, i));
    Matrix v = Matrix::identity(n);

    const double frob = std::max(frobenius(a), std::numeric_limits<double>::min());
    const double stop = 1e-13 * frob;
    const int max_sweeps = 100;
    bool converged = n < 2;
    for (int sweep = 0; sweep < max_sweeps && !converged; ++sweep) {
        if (off_diag_norm(a) <= stop) {
            converged = true;
            break;
        }
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (std::abs(apq) <= 1e-300) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                double t;
                if (std::abs(theta) > 1e12) {
                    t = 1.0 / (2.0 * theta);
                } else {
                    t = ((theta >= 0) ? 1.0 : -1.0) /
                        (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                }
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double sn = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - sn * akq;
                    a(k, q) = sn * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - sn * aqk;
                    a(q, k) = sn * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = c * vkp - sn * vkq;
                    v(k, q) = sn * vkp + c * vkq;
                }
            }
        }
    }
    if (!converged && off_diag_norm(a) > stop)
        throw ConvergenceError("sym_eig: Jacobi did not converge in " +
                               std::to_string(max_sweeps) + " sweeps");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });

    SymEig out{Vector(n), Matrix(n, n)};
    for (std::size_t j = 0; j < n; ++j) {
        out.eigenvalues[j] = a(order[j], order[j]);
        for (std::size_t i = 0; i < n; ++i) out.eigenvectors(i, j) = v(i, order[j]);
    }
    return out;
}

namespace {

// Gram-Schmidt a fresh unit column orthogonal to the first `used` columns of
// u; fills column `slot`. Needed when the input is rank deficient and some
// left singular vectors are not determined by the data.
void complete_column(Matrix& u, std::size_t slot, std::size_t total_cols) {
    const std::size_t r = u.rows();
    for (std::size_t trial = 0; trial < r; ++trial) {
        Vector cand(r);
        cand[trial] = 1.0;
        for (std::size_t j = 0; j < total_cols; ++j) {
            if (j == slot) continue;
            double d = 0.0;
            for (std::size_t i = 0; i < r; ++i) d += cand[i] * u(i, j);
            for (std::size_t i = 0; i < r; ++i) cand[i] -= d * u(i, j);
        }
        const double nrm = cand.norm2();
        if (nrm > 1e-6) {
            for (std::size_t i = 0; i < r; ++i) u(i, slot) = cand[i] / nrm;
            return;
        }
    }
    throw ConvergenceError("svd: failed to complete orthonormal basis");
}

} // namespace

Svd svd(const Matrix& m) {
    if (m.rows() == 0 || m.cols() == 0) throw ValueError("svd: empty matrix");
    const bool transposed = m.rows() < m.cols();
    Matrix w = transposed ? m.transposed() : m;
    const std::size_t r = w.rows(), c = w.cols();
    Matrix v = Matrix::identity(c);

    const int max_sweeps = 60;
    const double tol = 1e-15;
    bool converged = c < 2;
    for (int sweep = 0; sweep < max_sweeps && !converged; ++sweep) {
        bool rotated = false;
        for (std::size_t p = 0; p + 1 < c; ++p) {
            for (std::size_t q = p + 1; q < c; ++q) {
                double alpha = 0.0, beta = 0.0, gamma = 0.0;
                for (std::size_t k = 0; k < r; ++k) {
                    const double wp = w(k, p), wq = w(k, q);
                    alpha += wp * wp;
                    beta += wq * wq;
                    gamma += wp * wq;
                }
                if (std::abs(gamma) <= tol * std::sqrt(alpha * beta) || gamma == 0.0) continue;
                rotated = true;
                const double zeta = (beta - alpha) / (2.0 * gamma);
                const double t = ((zeta >= 0) ? 1.0 : -1.0) /
                                 (std::abs(zeta) + std::sqrt(zeta * zeta + 1.0));
                const double cs = 1.0 / std::sqrt(t * t + 1.0);
                const double sn = cs * t;
                for (std::size_t k = 0; k < r; ++k) {
                    const double wp = w(k, p), wq = w(k, q);
                    w(k, p) = cs * wp - sn * wq;
                    w(k, q) = sn * wp + cs * wq;
                }
                for (std::size_t k = 0; k < c; ++k) {
                    const double vp = v(k, p), vq = v(k, q);
                    v(k, p) = cs * vp - sn * vq;
                    v(k, q) = sn * vp + cs * vq;
                }
            }
        }
        if (!rotated) converged = true;
    }
    if (!converged) throw ConvergenceError("svd: one-sided Jacobi did not converge");

    std::vector<double> norms(c);
    for (std::size_t j = 0; j < c; ++j) {
        double s = 0.0;
        for (std::size_t k = 0; k < r; ++k) s += w(k, j) * w(k, j);
        norms[j] = std::sqrt(s);
    }
    std::vector<std::size_t> order(c);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t i, std::size_t j) { return norms[i] > norms[j]; });

    Matrix u(r, c);
    Vector sigma(c);
    Matrix vs(c, c);
    const double max_norm = norms.empty() ? 0.0 : norms[order[0]];
    const double zero_tol = 1e-14 * std::max(max_norm, 1.0e-300);
    std::vector<std::size_t> degenerate;
    for (std::size_t j = 0; j < c; ++j) {
        const std::size_t src = order[j];
        sigma[j] = norms[src];
        for (std::size_t k = 0; k < c; ++k) vs(k, j) = v(k, src);
        if (norms[src] > zero_tol) {
            for (std::size_t k = 0; k < r; ++k) u(k, j) = w(k, src) / norms[src];
        } else {
            degenerate.push_back(j);
        }
    }
    for (std::size_t slot : degenerate) complete_column(u, slot, c);

    if (transposed) return Svd{vs, sigma, u};
    return Svd{u, sigma, vs};
}

LeastSquares least_squares(const Matrix& x, const Matrix& y) {
    const std::size_t n = x.rows(), p = x.cols(), q = y.cols();
    if (y.rows() != n)
        throw ShapeError("least_squares: x has " + std::to_string(n) + " rows, y has " +
                         std::to_string(y.rows()));
    if (n <= p + 1)
        throw ValueError("least_squares: need more rows than p+1 (" + std::to_string(n) +
                         " <= " + std::to_string(p + 1) + ")");

    Matrix xa(n, p + 1);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < p; ++j) xa(i, j) = x(i, j);
        xa(i, p) = 1.0;
    }
    const Matrix xat = xa.transposed();
    const Matrix xtx = matmul(xat, xa);
    const Matrix xty = matmul(xat, y);

    const SymEig eig = sym_eig(xtx);
    const double lam_max = std::max(eig.eigenvalues[0], 0.0);
    const double rank_tol = 1e-10 * std::max(lam_max, 1e-30);
    bool deficient = false;
    for (std::size_t i = 0; i < eig.eigenvalues.size(); ++i)
        if (eig.eigenvalues[i] <= rank_tol) deficient = true;

    const std::size_t d = p + 1;
    Matrix vt_xty = matmul(eig.eigenvectors.transposed(), xty);
    for (std::size_t i = 0; i < d; ++i) {
        const double lam = eig.eigenvalues[i];
        const double w = deficient ? (lam > rank_tol ? 1.0 / lam : 0.0) : 1.0 / (lam + 1e-10);
        for (std::size_t j = 0; j < q; ++j) vt_xty(i, j) *= w;
    }
    Matrix coef = matmul(eig.eigenvectors, vt_xty);
    return LeastSquares{std::move(coef), deficient};
}

double condition_number(const Matrix& m) {
    if (m.rows() != m.cols())
        throw ShapeError("condition_number: matrix is " + shape_str(m));
    const Svd f = svd(m);
    const double smax = f.sigma[0];
    const double smin = f.sigma[f.sigma.size() - 1];
    if (smax <= 0.0 || smin < 1e-14 * smax)
        return std::numeric_limits<double>::infinity();
    return smax / smin;
}

Matrix clamp_singular_values(const Matrix& m, double lo, double hi) {
    if (!(lo >= 0.0) || !(hi >= lo))
        throw ValueError("clamp_singular_values: need 0 <= lo <= hi");
    Svd f = svd(m);
    for (std::size_t i = 0; i < f.sigma.size(); ++i)
        f.sigma[i] = std::clamp(f.sigma[i], lo, hi);
    Matrix us = f.U;
    for (std::size_t i = 0; i < us.rows(); ++i)
        for (std::size_t j = 0; j < us.cols(); ++j) us(i, j) *= f.sigma[j];
    return matmul(us, f.V.transposed());
}

} // namespace midl
