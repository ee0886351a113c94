#include "midlab/mixer.hpp"

#include <cstring>

#include "midlab/linalg.hpp"

namespace midl {

std::uint64_t MixerMlp::param_hash() const {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](const double* p, std::size_t n) {
        for (std::size_t i = 0; i < n; ++i) {
            std::uint64_t bits;
            std::memcpy(&bits, p + i, sizeof(bits));
            for (int b = 0; b < 8; ++b) {
                h ^= (bits >> (8 * b)) & 0xFFu;
                h *= 1099511628211ULL;
            }
        }
    };
    for (const Matrix& w : weights) mix(w.data(), w.size());
    for (const Vector& b : biases) mix(b.data(), b.size());
    mix(&leak, 1);
    return h;
}

MixerMlp build_mixer(RngState& rng, std::size_t latent_dim, std::size_t specific_dim,
                     std::size_t layers, double leak, double cond_max) {
    if (latent_dim < 1 || specific_dim < 1)
        throw ValueError("build_mixer: dims must be >= 1");
    if (layers < 1) throw ValueError("build_mixer: layers >= 1 required");
    if (!(leak > 0.0) || !(leak <= 1.0)) throw ValueError("build_mixer: need 0 < leak <= 1");
    if (!(cond_max > 1.0)) throw ValueError("build_mixer: cond_max > 1 required");

    const std::size_t d = latent_dim + specific_dim;
    MixerMlp m;
    m.leak = leak;
    for (std::size_t l = 0; l < layers; ++l) {
        Matrix w(d, d);
        for (double& v : w.raw()) v = rng.gaussian();
        m.weights.push_back(clamp_singular_values(w, 1.0, cond_max));
        Vector b(d);
        for (double& v : b.raw()) v = 0.1 * rng.gaussian();
        m.biases.push_back(std::move(b));
    }
    return m;
}

Vector mixer_forward(const MixerMlp& m, const Vector& u) {
    if (m.weights.empty()) throw ValueError("mixer_forward: empty mixer");
    if (u.size() != m.input_dim())
        throw ShapeError("mixer_forward: input length " + std::to_string(u.size()) +
                         ", mixer expects " + std::to_string(m.input_dim()));
    Vector h = u;
    for (std::size_t l = 0; l < m.weights.size(); ++l) {
        Vector a = matvec(m.weights[l], h);
        for (std::size_t i = 0; i < a.size(); ++i) a[i] += m.biases[l][i];
        if (l + 1 < m.weights.size())
            for (double& v : a.raw())
                if (v < 0.0) v *= m.leak;
        h = std::move(a);
    }
    return h;
}

Matrix mixer_forward_rows(const MixerMlp& m, const Matrix& rows) {
    Matrix out(rows.rows(), m.input_dim());
    for (std::size_t i = 0; i < rows.rows(); ++i)
        out.set_row(i, mixer_forward(m, rows.row(i)));
    return out;
}

} // namespace midl
