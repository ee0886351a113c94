#pragma once

// LatentSpaceSpec declares the geometry of the coupled latent, its prior and
// the conditional family linking the two modalities. Together these cover
// every generative-process cell exercised by the bundled suites.

#include <cstddef>
#include <string>

#include "midlab/distributions.hpp"

namespace midl {

enum class Geometry { SPHERE, BOX, UNBOUNDED };
enum class PriorKind { UNIFORM, LAPLACE, NORMAL };

std::string geometry_name(Geometry g);
std::string prior_kind_name(PriorKind p);

struct LatentSpaceSpec {
    Geometry geometry = Geometry::SPHERE;
    std::size_t dim = 10;
    Box box; // only meaningful for BOX geometry
    PriorKind prior = PriorKind::UNIFORM;
    double prior_scale = 1.0; // LAPLACE lambda or NORMAL sigma on UNBOUNDED
    ConditionalFamily conditional = ConditionalFamily::vmf(1.0);

    static LatentSpaceSpec sphere(std::size_t dim, ConditionalFamily conditional);
    static LatentSpaceSpec unit_box(std::size_t dim, ConditionalFamily conditional);
    static LatentSpaceSpec unbounded(std::size_t dim, PriorKind prior, double prior_scale,
                                     ConditionalFamily conditional);

    // Constraint rules:
    //   SPHERE    -> prior UNIFORM; any conditional family
    //   BOX       -> prior UNIFORM; conditional in {LAPLACE, NORMAL, GENNORM}
    //   UNBOUNDED -> prior in {LAPLACE, NORMAL}; conditional in the same set as BOX
    // Violations raise a value error naming the rule.
    void validate() const;

    Vector sample_prior(RngState& rng) const;

    // z_t given z_x. On the sphere, vMF is sampled exactly; the Laplace /
    // Normal / GenNorm families are realized as ambient additive noise
    // followed by projection back to the sphere (the construction used for
    // the mismatched-conditional rows, which no sphere-native family fits).
    Vector sample_conditional(RngState& rng, const Vector& center) const;

    // True when a latent vector satisfies the geometry constraint.
    bool satisfies_geometry(const Vector& z, double tol = 1e-9) const;
};

} // namespace midl
