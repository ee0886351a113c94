#include "midlab/loss.hpp"

#include <cmath>
#include <limits>

namespace midl {
namespace {

void check_pair_shapes(const Matrix& emb_x, const Matrix& emb_t) {
    if (emb_x.rows() != emb_t.rows() || emb_x.cols() != emb_t.cols())
        throw ShapeError("contrastive loss: embeddings are " + shape_str(emb_x) + " vs " +
                         shape_str(emb_t));
    if (emb_x.rows() < 1) throw ValueError("contrastive loss: empty batch");
}

} // namespace

Matrix similarity_matrix(const Matrix& emb_x, const Matrix& emb_t,
                         const SimilarityKernel& kernel) {
    if (emb_x.cols() != emb_t.cols())
        throw ShapeError("similarity_matrix: dim mismatch " + shape_str(emb_x) + " vs " +
                         shape_str(emb_t));
    kernel.validate();
    Matrix s(emb_x.rows(), emb_t.rows());
    const std::size_t d = emb_x.cols();
    for (std::size_t i = 0; i < emb_x.rows(); ++i)
        for (std::size_t j = 0; j < emb_t.rows(); ++j)
            s(i, j) = kernel(emb_x.row_ptr(i), emb_t.row_ptr(j), d);
    return s;
}

double contrastive_loss(const Matrix& emb_x, const Matrix& emb_t, const SimilarityKernel& kernel,
                        double tau) {
    check_pair_shapes(emb_x, emb_t);
    kernel.validate();
    if (!(tau > 0.0)) throw ValueError("contrastive_loss: tau must be positive");

    const std::size_t n = emb_x.rows();
    const std::size_t d = emb_x.cols();
    const double inv_tau = 1.0 / tau;

    // One row of G = S / tau at a time; columns fold into an online
    // log-sum-exp so the N x N matrix is never materialized.
    std::vector<double> row(n);
    std::vector<double> col_max(n, -std::numeric_limits<double>::infinity());
    std::vector<double> col_sum(n, 0.0);
    double sum_diag = 0.0;
    double sum_row_lse = 0.0;

    for (std::size_t i = 0; i < n; ++i) {
        const double* xi = emb_x.row_ptr(i);
        double row_max = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < n; ++j) {
            row[j] = kernel(xi, emb_t.row_ptr(j), d) * inv_tau;
            row_max = std::max(row_max, row[j]);
        }
        sum_diag += row[i];
        double se = 0.0;
        for (std::size_t j = 0; j < n; ++j) se += std::exp(row[j] - row_max);
        sum_row_lse += row_max + std::log(se);
        for (std::size_t j = 0; j < n; ++j) {
            const double v = row[j];
            if (v <= col_max[j]) {
                col_sum[j] += std::exp(v - col_max[j]);
            } else {
                col_sum[j] = col_sum[j] * std::exp(col_max[j] - v) + 1.0;
                col_max[j] = v;
            }
        }
    }
    double sum_col_lse = 0.0;
    for (std::size_t j = 0; j < n; ++j) sum_col_lse += col_max[j] + std::log(col_sum[j]);

    return -(2.0 * sum_diag - sum_row_lse - sum_col_lse) / static_cast<double>(n);
}

double asymptotic_loss_estimate(const Matrix& emb_x, const Matrix& emb_t,
                                const SimilarityKernel& kernel, double tau) {
    check_pair_shapes(emb_x, emb_t);
    kernel.validate();
    if (!(tau > 0.0)) throw ValueError("asymptotic_loss_estimate: tau must be positive");
    const std::size_t n = emb_x.rows();
    if (n < 2) throw ValueError("asymptotic_loss_estimate: N >= 2 required");
    const std::size_t d = emb_x.cols();
    const double inv_tau = 1.0 / tau;
    const double denom = static_cast<double>(n - 1);

    std::vector<double> row(n);
    std::vector<double> col_max(n, -std::numeric_limits<double>::infinity());
    std::vector<double> col_sum(n, 0.0);
    double sum_diag = 0.0;
    double sum_row_lme = 0.0;

    for (std::size_t i = 0; i < n; ++i) {
        const double* xi = emb_x.row_ptr(i);
        double row_max = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < n; ++j) {
            row[j] = kernel(xi, emb_t.row_ptr(j), d) * inv_tau;
            if (j != i) row_max = std::max(row_max, row[j]);
        }
        sum_diag += row[i];
        double se = 0.0;
        for (std::size_t j = 0; j < n; ++j)
            if (j != i) se += std::exp(row[j] - row_max);
        // log-mean-exp: the 1/(n-1) sits inside the log so that identical
        // embeddings yield the matched term exactly.
        sum_row_lme += row_max + std::log(se / denom);
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            const double v = row[j];
            if (v <= col_max[j]) {
                col_sum[j] += std::exp(v - col_max[j]);
            } else {
                col_sum[j] = col_sum[j] * std::exp(col_max[j] - v) + 1.0;
                col_max[j] = v;
            }
        }
    }
    double sum_col_lme = 0.0;
    for (std::size_t j = 0; j < n; ++j) sum_col_lme += col_max[j] + std::log(col_sum[j] / denom);

    const double nn = static_cast<double>(n);
    const double mean_row = sum_row_lme / nn;
    const double mean_col = sum_col_lme / nn;
    const double mean_diag = sum_diag / nn;
    return (mean_row + mean_col) - 2.0 * mean_diag;
}

double log_bessel_i(double nu, double x) {
    if (!(nu >= 0.0) || !(x > 0.0)) throw ValueError("log_bessel_i: need nu >= 0, x > 0");
    if (x <= 300.0) return std::log(std::cyl_bessel_i(nu, x));
    // Large-argument expansion: I_nu(x) ~ e^x / sqrt(2 pi x) * (1 - ...).
    const double mu = 4.0 * nu * nu;
    const double t1 = (mu - 1.0) / (8.0 * x);
    const double t2 = (mu - 1.0) * (mu - 9.0) / (2.0 * 64.0 * x * x);
    const double t3 = (mu - 1.0) * (mu - 9.0) * (mu - 25.0) / (6.0 * 512.0 * x * x * x);
    return x - 0.5 * std::log(2.0 * M_PI * x) + std::log1p(-t1 + t2 - t3);
}

namespace {

double log_sphere_area(std::size_t m) {
    const double md = static_cast<double>(m);
    return std::log(2.0) + 0.5 * md * std::log(M_PI) - std::lgamma(0.5 * md);
}

// log of the integral of e^{kappa <z, mu>} over the unit sphere S^{m-1}.
double log_vmf_integral(std::size_t m, double kappa) {
    const double md = static_cast<double>(m);
    const double nu = 0.5 * md - 1.0;
    return 0.5 * md * std::log(2.0 * M_PI) + log_bessel_i(nu, kappa) -
           nu * std::log(kappa);
}

} // namespace

UniformityGap uniformity_gap(const Matrix& emb, const SimilarityKernel& kernel, double tau,
                             const OutputSpace& space) {
    kernel.validate();
    space.validate();
    if (!(tau > 0.0)) throw ValueError("uniformity_gap: tau must be positive");
    const std::size_t n = emb.rows();
    if (n < 10) throw ValueError("uniformity_gap: need at least 10 embeddings");
    if (emb.cols() != space.dim)
        throw ShapeError("uniformity_gap: embedding dim != output space dim");

    const std::size_t d = emb.cols();
    const double inv_tau = 1.0 / tau;
    const double denom = static_cast<double>(n - 1);
    double cross = 0.0;
    std::vector<double> row(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double* zi = emb.row_ptr(i);
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            row[j] = kernel(zi, emb.row_ptr(j), d) * inv_tau;
            mx = std::max(mx, row[j]);
        }
        double se = 0.0;
        for (std::size_t j = 0; j < n; ++j)
            if (j != i) se += std::exp(row[j] - mx);
        cross += mx + std::log(se / denom);
    }
    cross /= static_cast<double>(n);

    UniformityGap gap;
    double log_kernel_integral = 0.0;
    double log_volume = 0.0;
    bool have_reference = false;

    if (space.kind == SpaceKind::SPHERE) {
        log_volume = log_sphere_area(d);
        if (kernel.kind == KernelKind::DOT) {
            log_kernel_integral = log_vmf_integral(d, inv_tau);
            have_reference = true;
        } else if (kernel.kind == KernelKind::NEG_L2SQ) {
            // ||a-b||^2 = 2 - 2<a,b> on the sphere.
            log_kernel_integral = -2.0 * inv_tau + log_vmf_integral(d, 2.0 * inv_tau);
            have_reference = true;
        }
    } else if (space.kind == SpaceKind::BOX) {
        for (std::size_t j = 0; j < d; ++j)
            log_volume += std::log(space.box.hi[j] - space.box.lo[j]);
        // Normalizers integrate the kernel over all of R^d (not the box); the
        // induced gap offset is negligible when tau is small next to the box.
        if (kernel.kind == KernelKind::NEG_L1) {
            log_kernel_integral = static_cast<double>(d) * std::log(2.0 * tau);
            have_reference = true;
        } else if (kernel.kind == KernelKind::NEG_L2SQ) {
            log_kernel_integral = 0.5 * static_cast<double>(d) * std::log(M_PI * tau);
            have_reference = true;
        } else if (kernel.kind == KernelKind::NEG_LBETA) {
            const double b = kernel.beta;
            log_kernel_integral =
                static_cast<double>(d) *
                (std::log(2.0) + std::lgamma(1.0 + 1.0 / b) + std::log(tau) / b);
            have_reference = true;
        }
    }

    if (have_reference) {
        gap.value = cross - log_kernel_integral + log_volume;
        gap.has_reference = true;
    } else {
        gap.value = cross;
        gap.has_reference = false;
    }
    return gap;
}

} // namespace midl
