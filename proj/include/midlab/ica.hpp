#pragma once

// Linear disentanglement pipelines: PCA (with optional whitening) and
// symmetric FastICA. Both operate on arbitrary embedding matrices, whether
// produced by this lab's encoders or ingested from elsewhere.

#include <cstddef>
#include <string>

#include "midlab/matrix.hpp"
#include "midlab/rng.hpp"

namespace midl {

struct PcaModel {
    Vector mean;        // input dim D
    Matrix components;  // k x D, rows orthonormal, descending eigenvalue order
    Vector eigenvalues; // k, nonnegative descending
    bool whiten = false;

    std::size_t input_dim() const { return mean.size(); }
    std::size_t k() const { return eigenvalues.size(); }
};

// Top-k eigendecomposition of the sample covariance (divisor N-1).
PcaModel fit_pca(const Matrix& data, std::size_t k, bool whiten);

// (x - mean) projected on the components; whitened per-component when the
// model says so.
Matrix pca_transform(const PcaModel& model, const Matrix& data);

// Right inverse of pca_transform (exact reconstruction at full rank).
Matrix pca_inverse_transform(const PcaModel& model, const Matrix& coords);

enum class IcaNonlinearity { LOGCOSH, CUBE };

std::string ica_nonlinearity_name(IcaNonlinearity g);

struct IcaModel {
    Matrix unmixing; // k x k, orthonormal over whitened coordinates
    PcaModel pca;    // whitening stage
    IcaNonlinearity nonlinearity = IcaNonlinearity::LOGCOSH;
    std::size_t iterations_used = 0;
    bool converged = false;

    std::size_t input_dim() const { return pca.input_dim(); }
    std::size_t k() const { return pca.k(); }
};

// Symmetric (parallel) fixed-point FastICA on whitened data. Rows of the
// unmixing matrix are sign-fixed so their largest-magnitude entry is
// positive. Non-convergence within max_iter returns converged = false rather
// than throwing.
IcaModel fit_fastica(const Matrix& data, std::size_t k,
                     IcaNonlinearity nonlinearity, std::size_t max_iter, double tol,
                     RngState& rng);

Matrix ica_transform(const IcaModel& model, const Matrix& data);

// FastICA straight on the embeddings (whitening included).
Matrix pipeline_ica(const Matrix& embeddings, std::size_t k, RngState& rng);

// PCA reduction to k_pca dimensions, then FastICA down to k_ica.
Matrix pipeline_pca_ica(const Matrix& embeddings, std::size_t k_pca, std::size_t k_ica,
                        RngState& rng);

void save_pca(const PcaModel& model, const std::string& dir);
PcaModel load_pca(const std::string& dir);
void save_ica(const IcaModel& model, const std::string& dir);
IcaModel load_ica(const std::string& dir);

} // namespace midl
