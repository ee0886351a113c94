#pragma once

// The trainable inference model: two MLP encoders with an output-space
// projection, a similarity kernel and a (possibly learnable) temperature.

#include <cstdint>
#include <string>
#include <vector>

#include "midlab/distributions.hpp"
#include "midlab/matrix.hpp"
#include "midlab/rng.hpp"

namespace midl {

enum class KernelKind { DOT, NEG_L1, NEG_L2SQ, NEG_LBETA };

std::string kernel_kind_name(KernelKind kind);

// Similarity s(a, b); the loss exponentiates s/tau, so s plays the role of a
// negated distance. DOT is the cosine-style inner product, the others are
// negated L1, squared L2 and sum-of-|.|^beta distances.
struct SimilarityKernel {
    KernelKind kind = KernelKind::DOT;
    double beta = 3.0; // NEG_LBETA only

    static SimilarityKernel dot();
    static SimilarityKernel neg_l1();
    static SimilarityKernel neg_l2sq();
    static SimilarityKernel neg_lbeta(double beta);

    void validate() const;
    double operator()(const double* a, const double* b, std::size_t d) const;
};

enum class SpaceKind { SPHERE, BOX, UNBOUNDED };

std::string space_kind_name(SpaceKind kind);

struct OutputSpace {
    SpaceKind kind = SpaceKind::SPHERE;
    std::size_t dim = 10;
    Box box; // BOX only

    static OutputSpace sphere(std::size_t dim);
    static OutputSpace unit_box(std::size_t dim);
    static OutputSpace unbounded(std::size_t dim);

    void validate() const;
};

// Plain MLP: affine layers with leaky ReLU between them, affine final layer.
struct Mlp {
    std::vector<Matrix> weights; // layer l maps in_l -> out_l, stored out x in
    std::vector<Vector> biases;
    double leak = 0.2;

    std::size_t input_dim() const { return weights.empty() ? 0 : weights.front().cols(); }
    std::size_t output_dim() const { return weights.empty() ? 0 : weights.back().rows(); }
    std::size_t parameter_count() const;
};

// He-style initialization; layer dims are input, hidden x layers, output.
Mlp build_mlp(RngState& rng, std::size_t input_dim, std::size_t hidden_width,
              std::size_t hidden_layers, std::size_t output_dim, double leak = 0.2);

// Forward through the MLP only (no projection); rows are samples.
Matrix mlp_forward(const Mlp& net, const Matrix& rows);

// Projection onto the output space: L2 normalization for SPHERE, per-coordinate
// clamp onto the box for BOX, identity for UNBOUNDED.
Matrix project_output(const Matrix& raw, const OutputSpace& space);

enum class WhichEncoder { X, T };

struct EncoderPair {
    Mlp fx, ft;
    OutputSpace output_space;
    SimilarityKernel kernel;
    double log_tau = 0.0;
    std::uint64_t seed = 0;

    double tau() const;
};

// Row-wise encode + projection. SPHERE rows come back unit norm within 1e-9;
// BOX rows lie strictly inside the box.
Matrix encode(const EncoderPair& pair, WhichEncoder which, const Matrix& data);

void save_encoder_pair(const EncoderPair& pair, const std::string& dir);
EncoderPair load_encoder_pair(const std::string& dir);

} // namespace midl
