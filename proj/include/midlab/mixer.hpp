#pragma once

// Invertible nonlinear mixing networks g_x, g_t. Square affine layers with
// leaky ReLU between them; every weight matrix has its singular values
// clamped into [1, cond_max], so each layer (and the whole map) is a
// bijection and numerically stable to invert in principle.

#include <cstdint>
#include <vector>

#include "midlab/matrix.hpp"
#include "midlab/rng.hpp"

namespace midl {

struct MixerMlp {
    std::vector<Matrix> weights; // square, one per affine layer
    std::vector<Vector> biases;
    double leak = 0.2;

    std::size_t input_dim() const { return weights.empty() ? 0 : weights.front().cols(); }
    std::size_t layer_count() const { return weights.size(); }

    // FNV-1a over the raw parameter bytes; identifies the mixer in manifests.
    std::uint64_t param_hash() const;
};

MixerMlp build_mixer(RngState& rng, std::size_t latent_dim, std::size_t specific_dim,
                     std::size_t layers = 3, double leak = 0.2, double cond_max = 10.0);

Vector mixer_forward(const MixerMlp& m, const Vector& u);

// Row-wise forward over a matrix of inputs.
Matrix mixer_forward_rows(const MixerMlp& m, const Matrix& rows);

} // namespace midl
