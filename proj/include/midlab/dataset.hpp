#pragma once

// Paired synthetic data for one run: ground-truth coupled latents (Zx, Zt),
// modality-specific latents (Mx, Mt), and the mixed observations (X, T).

#include <cstdint>
#include <string>

#include "midlab/latent_space.hpp"
#include "midlab/matrix.hpp"
#include "midlab/mixer.hpp"

namespace midl {

struct PairedDataset {
    Matrix Zx, Zt; // N x latent_dim
    Matrix Mx, Mt; // N x specific_dim
    Matrix X, T;   // N x (latent_dim + specific_dim)
    LatentSpaceSpec spec;
    std::uint64_t seed = 0;
    std::uint64_t mixer_hash_x = 0;
    std::uint64_t mixer_hash_t = 0;

    std::size_t n() const { return Zx.rows(); }
    std::size_t latent_dim() const { return Zx.cols(); }
    std::size_t specific_dim() const { return Mx.cols(); }
    std::size_t obs_dim() const { return X.cols(); }
};

// Row i: z_x ~ prior, z_t ~ conditional(.|z_x), m_x, m_t ~ N(0, I),
// x = g_x(z_x || m_x), t = g_t(z_t || m_t).
PairedDataset generate_pairs(RngState& rng, const LatentSpaceSpec& spec, const MixerMlp& mixer_x,
                             const MixerMlp& mixer_t, std::size_t n);

// Persists as six matrix files plus manifest.json inside `dir`; binary
// round-trips are bit exact.
void save_dataset(const PairedDataset& ds, const std::string& dir);
PairedDataset load_dataset(const std::string& dir);

} // namespace midl
