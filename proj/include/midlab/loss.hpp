#pragma once

// The symmetric contrastive objective, its large-N Monte-Carlo form, and the
// KDE-based uniformity diagnostic.

#include "midlab/encoder.hpp"
#include "midlab/matrix.hpp"

namespace midl {

// S_ij = kernel(emb_x row i, emb_t row j).
Matrix similarity_matrix(const Matrix& emb_x, const Matrix& emb_t,
                         const SimilarityKernel& kernel);

// Mean over rows of the two softmax cross-entropy terms (image->text and
// text->image), log-sum-exp stabilized. Row counts of the two embedding
// matrices must match; row i of each is a positive pair.
double contrastive_loss(const Matrix& emb_x, const Matrix& emb_t, const SimilarityKernel& kernel,
                        double tau);

// Monte-Carlo evaluation of the limiting form: twice the mean matched
// distance over tau plus the two log-mean-exp terms over the empirical
// marginals. Diagonal pairs are excluded from the marginal means so the
// estimate differs from contrastive_loss - 2 log N only by the finite-N
// residual. Memory is O(N), not O(N^2).
double asymptotic_loss_estimate(const Matrix& emb_x, const Matrix& emb_t,
                                const SimilarityKernel& kernel, double tau);

struct UniformityGap {
    double value = 0.0;
    // False when the output space / kernel combination has no closed-form
    // reference (UNBOUNDED spaces, or kernels without a normalizer on the
    // space); `value` then holds only the KDE cross-entropy term.
    bool has_reference = false;
};

// Leave-one-out KDE estimate of the uniformity term against the entropy of
// the uniform law on the output space; near zero for uniform embeddings,
// large and positive for collapsed ones.
UniformityGap uniformity_gap(const Matrix& emb, const SimilarityKernel& kernel, double tau,
                             const OutputSpace& space);

// log I_nu(x) with an asymptotic continuation for large x; exposed for tests.
double log_bessel_i(double nu, double x);

} // namespace midl
