#include "midlab/latent_space.hpp"

#include <cmath>

namespace midl {

std::string geometry_name(Geometry g) {
    switch (g) {
        case Geometry::SPHERE: return "sphere";
        case Geometry::BOX: return "box";
        case Geometry::UNBOUNDED: return "unbounded";
    }
    throw ValueError("geometry_name: unknown geometry");
}

std::string prior_kind_name(PriorKind p) {
    switch (p) {
        case PriorKind::UNIFORM: return "uniform";
        case PriorKind::LAPLACE: return "laplace";
        case PriorKind::NORMAL: return "normal";
    }
    throw ValueError("prior_kind_name: unknown prior");
}

LatentSpaceSpec LatentSpaceSpec::sphere(std::size_t dim, ConditionalFamily conditional) {
    LatentSpaceSpec s;
    s.geometry = Geometry::SPHERE;
    s.dim = dim;
    s.prior = PriorKind::UNIFORM;
    s.conditional = conditional;
    s.validate();
    return s;
}

LatentSpaceSpec LatentSpaceSpec::unit_box(std::size_t dim, ConditionalFamily conditional) {
    LatentSpaceSpec s;
    s.geometry = Geometry::BOX;
    s.dim = dim;
    s.box = Box::symmetric_unit(dim);
    s.prior = PriorKind::UNIFORM;
    s.conditional = conditional;
    s.validate();
    return s;
}

LatentSpaceSpec LatentSpaceSpec::unbounded(std::size_t dim, PriorKind prior, double prior_scale,
                                           ConditionalFamily conditional) {
    LatentSpaceSpec s;
    s.geometry = Geometry::UNBOUNDED;
    s.dim = dim;
    s.prior = prior;
    s.prior_scale = prior_scale;
    s.conditional = conditional;
    s.validate();
    return s;
}

void LatentSpaceSpec::validate() const {
    if (dim < 2) throw ValueError("LatentSpaceSpec: latent dim >= 2 required");
    conditional.validate();
    switch (geometry) {
        case Geometry::SPHERE:
            if (prior != PriorKind::UNIFORM)
                throw ValueError("LatentSpaceSpec: sphere geometry requires a uniform prior");
            break;
        case Geometry::BOX:
            if (prior != PriorKind::UNIFORM)
                throw ValueError("LatentSpaceSpec: box geometry requires a uniform prior");
            box.validate();
            if (box.dim() != dim) throw ValueError("LatentSpaceSpec: box dimension != dim");
            if (conditional.kind == CondKind::VMF)
                throw ValueError("LatentSpaceSpec: vmf conditional requires sphere geometry");
            break;
        case Geometry::UNBOUNDED:
            if (prior != PriorKind::LAPLACE && prior != PriorKind::NORMAL)
                throw ValueError(
                    "LatentSpaceSpec: unbounded geometry requires a laplace or normal prior");
            if (!(prior_scale > 0.0))
                throw ValueError("LatentSpaceSpec: prior_scale must be positive");
            if (conditional.kind == CondKind::VMF)
                throw ValueError("LatentSpaceSpec: vmf conditional requires sphere geometry");
            break;
    }
}

Vector LatentSpaceSpec::sample_prior(RngState& rng) const {
    switch (geometry) {
        case Geometry::SPHERE: return sample_uniform_sphere(rng, dim);
        case Geometry::BOX: return sample_uniform_box(rng, box);
        case Geometry::UNBOUNDED: {
            if (prior == PriorKind::LAPLACE) return sample_laplace(rng, prior_scale, dim);
            Vector v = sample_gaussian(rng, dim);
            for (double& x : v.raw()) x *= prior_scale;
            return v;
        }
    }
    throw ValueError("sample_prior: unknown geometry");
}

Vector LatentSpaceSpec::sample_conditional(RngState& rng, const Vector& center) const {
    if (center.size() != dim) throw ShapeError("sample_conditional: center dimension mismatch");
    switch (geometry) {
        case Geometry::SPHERE: {
            if (conditional.kind == CondKind::VMF)
                return sample_vmf(rng, center, conditional.kappa);
            Vector z = sample_conditional_unbounded(rng, center, conditional);
            const double n = z.norm2();
            if (n < 1e-12) return center;
            for (double& x : z.raw()) x /= n;
            return z;
        }
        case Geometry::BOX: return sample_conditional_box(rng, center, conditional, box);
        case Geometry::UNBOUNDED: return sample_conditional_unbounded(rng, center, conditional);
    }
    throw ValueError("sample_conditional: unknown geometry");
}

bool LatentSpaceSpec::satisfies_geometry(const Vector& z, double tol) const {
    if (z.size() != dim) return false;
    switch (geometry) {
        case Geometry::SPHERE: return std::abs(z.norm2() - 1.0) <= tol;
        case Geometry::BOX: return box.contains(z);
        case Geometry::UNBOUNDED: return z.all_finite();
    }
    return false;
}

} // namespace midl
