#pragma once

// Dense linear algebra used throughout the lab. Factorizations are Jacobi
// based: cyclic Jacobi for the symmetric eigenproblem, one-sided Jacobi for
// the SVD. Both are exact enough at the few-hundred dimensions this code
// runs at, and keep the project free of external solver dependencies.

#include "midlab/matrix.hpp"

namespace midl {

Matrix matmul(const Matrix& a, const Matrix& b);
Vector matvec(const Matrix& a, const Vector& v);

Matrix add(const Matrix& a, const Matrix& b);
Matrix sub(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& a, double s);

struct SymEig {
    Vector eigenvalues;  // descending
    Matrix eigenvectors; // columns, orthonormal
};

// Symmetric eigendecomposition. Input is symmetrized internally; a square
// matrix whose asymmetry exceeds 1e-9 relative is rejected.
SymEig sym_eig(const Matrix& s);

struct Svd {
    Matrix U;     // orthonormal columns
    Vector sigma; // descending, nonnegative
    Matrix V;     // orthonormal columns
};

// Thin SVD: m (r x c) = U (r x k) diag(sigma) V^T (k x c) with k = min(r, c).
Svd svd(const Matrix& m);

struct LeastSquares {
    Matrix coefficients; // (p+1) x q; rows 0..p-1 slopes, row p intercept
    bool rank_deficient = false;
};

// Minimizes ||y - [x, 1] B||^2. Normal equations with ridge 1e-10; a design
// that is rank deficient within tolerance falls back to the pseudo-inverse
// and is flagged.
LeastSquares least_squares(const Matrix& x, const Matrix& y);

// sigma_max / sigma_min for a square matrix; +infinity when sigma_min falls
// below 1e-14 * sigma_max.
double condition_number(const Matrix& m);

// Rebuild m with singular values clamped into [lo, hi].
Matrix clamp_singular_values(const Matrix& m, double lo, double hi);

} // namespace midl
