#pragma once

// Distribution samplers behind the generative process: standard normal,
// uniform on the unit hypersphere, von Mises-Fisher, uniform and
// exponential-family conditionals on an axis-aligned box, and the unbounded
// Laplace / Normal / generalized-normal families.

#include <string>

#include "midlab/matrix.hpp"
#include "midlab/rng.hpp"

namespace midl {

enum class CondKind { VMF, LAPLACE, NORMAL, GENNORM };

std::string cond_kind_name(CondKind kind);

struct ConditionalFamily {
    CondKind kind = CondKind::VMF;
    double kappa = 1.0; // VMF concentration
    double scale = 0.05; // LAPLACE lambda, NORMAL sigma, GENNORM scale
    double beta = 3.0;  // GENNORM exponent

    static ConditionalFamily vmf(double kappa);
    static ConditionalFamily laplace(double lambda);
    static ConditionalFamily normal(double sigma);
    static ConditionalFamily gennorm(double beta, double scale);

    // kappa >= 0; scale > 0; beta >= 1.
    void validate() const;
};

struct Box {
    Vector lo;
    Vector hi;

    std::size_t dim() const { return lo.size(); }
    // lo < hi coordinate-wise.
    void validate() const;
    bool contains(const Vector& v, double slack = 0.0) const;

    static Box symmetric_unit(std::size_t dim); // [-1, 1]^dim
};

Vector sample_gaussian(RngState& rng, std::size_t n);

// Gaussian draw then normalize; rotation invariant by construction.
Vector sample_uniform_sphere(RngState& rng, std::size_t dim);

// Ulrich-Wood rejection sampler. kappa = 0 falls back to the uniform sphere.
// The proposal loop is capped at 10^6 draws.
Vector sample_vmf(RngState& rng, const Vector& mu, double kappa);

Vector sample_uniform_box(RngState& rng, const Box& box);

// Exact draw from the box-truncated conditional around `center`. The L1, L2^2
// and sum |.|^beta distances factorize over coordinates: LAPLACE and NORMAL
// use the inverse CDF of the truncated 1-D law, GENNORM rejects from the
// untruncated proposal until the draw lands inside the box.
Vector sample_conditional_box(RngState& rng, const Vector& center,
                              const ConditionalFamily& family, const Box& box);

// Same conditional families without truncation, for unbounded geometry.
Vector sample_conditional_unbounded(RngState& rng, const Vector& center,
                                    const ConditionalFamily& family);

Vector sample_laplace(RngState& rng, double scale, std::size_t n);

// Density proportional to exp(-|x/scale|^beta); Gamma-based sampler
// X = scale * sign * G^(1/beta) with G ~ Gamma(1/beta, 1).
Vector sample_gennorm(RngState& rng, double beta, double scale, std::size_t n);

// Marsaglia-Tsang; unit scale, any shape > 0.
double sample_gamma(RngState& rng, double shape);

// Quantile of the standard normal (Acklam initializer + Newton refinement
// against erfc); exposed for tests.
double normal_quantile(double p);
double normal_cdf(double x);

} // namespace midl
