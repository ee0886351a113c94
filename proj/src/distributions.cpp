#include "midlab/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace midl {
namespace {

constexpr std::size_t kRejectionCap = 1000000;

double positive_uniform(RngState& rng) {
    double u;
    do {
        u = rng.uniform01();
    } while (u == 0.0);
    return u;
}

// One Laplace(0, scale) draw by inverse CDF.
double laplace1(RngState& rng, double scale) {
    const double u = positive_uniform(rng);
    if (u <= 0.5) return scale * std::log(2.0 * u);
    return -scale * std::log(2.0 * (1.0 - u));
}

double gennorm1(RngState& rng, double beta, double scale) {
    const double g = sample_gamma(rng, 1.0 / beta);
    const double mag = scale * std::pow(g, 1.0 / beta);
    return (rng.next_u64() & 1ULL) ? mag : -mag;
}

double laplace_cdf(double x, double m, double s) {
    const double z = (x - m) / s;
    return z < 0.0 ? 0.5 * std::exp(z) : 1.0 - 0.5 * std::exp(-z);
}

double laplace_quantile(double p, double m, double s) {
    if (p <= 0.5) return m + s * std::log(2.0 * p);
    return m - s * std::log(2.0 * (1.0 - p));
}

double truncated_laplace(RngState& rng, double m, double s, double lo, double hi) {
    const double flo = laplace_cdf(lo, m, s);
    const double fhi = laplace_cdf(hi, m, s);
    const double u = flo + (fhi - flo) * rng.uniform01();
    return std::clamp(laplace_quantile(u, m, s), lo, hi);
}

double truncated_normal(RngState& rng, double m, double s, double lo, double hi) {
    const double flo = normal_cdf((lo - m) / s);
    const double fhi = normal_cdf((hi - m) / s);
    const double u = flo + (fhi - flo) * rng.uniform01();
    return std::clamp(m + s * normal_quantile(u), lo, hi);
}

double truncated_gennorm(RngState& rng, double m, double beta, double s, double lo, double hi) {
    for (std::size_t it = 0; it < kRejectionCap; ++it) {
        const double x = m + gennorm1(rng, beta, s);
        if (x >= lo && x <= hi) return x;
    }
    throw ConvergenceError("sample_conditional_box: gennorm rejection cap exceeded");
}

} // namespace

std::string cond_kind_name(CondKind kind) {
    switch (kind) {
        case CondKind::VMF: return "vmf";
        case CondKind::LAPLACE: return "laplace";
        case CondKind::NORMAL: return "normal";
        case CondKind::GENNORM: return "gennorm";
    }
    throw ValueError("cond_kind_name: unknown kind");
}

ConditionalFamily ConditionalFamily::vmf(double kappa) {
    ConditionalFamily f;
    f.kind = CondKind::VMF;
    f.kappa = kappa;
    f.validate();
    return f;
}

ConditionalFamily ConditionalFamily::laplace(double lambda) {
    ConditionalFamily f;
    f.kind = CondKind::LAPLACE;
    f.scale = lambda;
    f.validate();
    return f;
}

ConditionalFamily ConditionalFamily::normal(double sigma) {
    ConditionalFamily f;
    f.kind = CondKind::NORMAL;
    f.scale = sigma;
    f.validate();
    return f;
}

ConditionalFamily ConditionalFamily::gennorm(double beta, double scale) {
    ConditionalFamily f;
    f.kind = CondKind::GENNORM;
    f.beta = beta;
    f.scale = scale;
    f.validate();
    return f;
}

void ConditionalFamily::validate() const {
    if (kind == CondKind::VMF) {
        if (!(kappa >= 0.0)) throw ValueError("ConditionalFamily: vmf needs kappa >= 0");
        return;
    }
    if (!(scale > 0.0)) throw ValueError("ConditionalFamily: scale must be positive");
    if (kind == CondKind::GENNORM && !(beta >= 1.0))
        throw ValueError("ConditionalFamily: gennorm needs beta >= 1");
}

void Box::validate() const {
    if (lo.size() != hi.size()) throw ShapeError("Box: lo/hi length mismatch");
    if (lo.empty()) throw ValueError("Box: dimension must be >= 1");
    for (std::size_t i = 0; i < lo.size(); ++i)
        if (!(lo[i] < hi[i]))
            throw ValueError("Box: lo < hi violated at coordinate " + std::to_string(i));
}

bool Box::contains(const Vector& v, double slack) const {
    if (v.size() != lo.size()) return false;
    for (std::size_t i = 0; i < v.size(); ++i)
        if (v[i] < lo[i] - slack || v[i] > hi[i] + slack) return false;
    return true;
}

Box Box::symmetric_unit(std::size_t dim) {
    return Box{Vector(dim, -1.0), Vector(dim, 1.0)};
}

Vector sample_gaussian(RngState& rng, std::size_t n) {
    if (n < 1) throw ValueError("sample_gaussian: n >= 1 required");
    Vector out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = rng.gaussian();
    return out;
}

Vector sample_uniform_sphere(RngState& rng, std::size_t dim) {
    if (dim < 2) throw ValueError("sample_uniform_sphere: dim >= 2 required");
    for (;;) {
        Vector v = sample_gaussian(rng, dim);
        const double n = v.norm2();
        if (n > 1e-12) {
            for (double& x : v.raw()) x /= n;
            return v;
        }
    }
}

Vector sample_vmf(RngState& rng, const Vector& mu, double kappa) {
    const std::size_t d = mu.size();
    if (d < 2) throw ValueError("sample_vmf: dim >= 2 required");
    if (std::abs(mu.norm2() - 1.0) > 1e-9) throw ValueError("sample_vmf: mu must be unit norm");
    if (!(kappa >= 0.0)) throw ValueError("sample_vmf: kappa >= 0 required");
    if (kappa == 0.0) return sample_uniform_sphere(rng, d);

    const double dm1 = static_cast<double>(d - 1);
    const double b = (-2.0 * kappa + std::sqrt(4.0 * kappa * kappa + dm1 * dm1)) / dm1;
    const double x0 = (1.0 - b) / (1.0 + b);
    const double c = kappa * x0 + dm1 * std::log(1.0 - x0 * x0);
    const double half = dm1 / 2.0;

    double w = 0.0;
    bool accepted = false;
    for (std::size_t it = 0; it < kRejectionCap; ++it) {
        const double g1 = sample_gamma(rng, half);
        const double g2 = sample_gamma(rng, half);
        const double z = g1 / (g1 + g2); // Beta(half, half)
        const double u = positive_uniform(rng);
        w = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z);
        if (kappa * w + dm1 * std::log(1.0 - x0 * w) - c >= std::log(u)) {
            accepted = true;
            break;
        }
    }
    if (!accepted) throw ConvergenceError("sample_vmf: rejection cap of 1e6 proposals exceeded");

    // Uniform direction in the tangent hyperplane of the pole e1.
    Vector tangent(d - 1);
    if (d == 2) {
        tangent[0] = (rng.next_u64() & 1ULL) ? 1.0 : -1.0;
    } else {
        tangent = sample_uniform_sphere(rng, d - 1);
    }
    Vector z(d);
    z[0] = w;
    const double r = std::sqrt(std::max(0.0, 1.0 - w * w));
    for (std::size_t i = 1; i < d; ++i) z[i] = r * tangent[i - 1];

    // Householder reflection taking the pole e1 onto mu.
    Vector u(d);
    u[0] = 1.0 - mu[0];
    for (std::size_t i = 1; i < d; ++i) u[i] = -mu[i];
    const double un = u.norm2();
    Vector out = z;
    if (un > 1e-12) {
        for (double& x : u.raw()) x /= un;
        const double proj = dot(u, z);
        for (std::size_t i = 0; i < d; ++i) out[i] = z[i] - 2.0 * proj * u[i];
    }
    const double n2 = out.norm2();
    for (double& x : out.raw()) x /= n2;
    return out;
}

Vector sample_uniform_box(RngState& rng, const Box& box) {
    box.validate();
    Vector out(box.dim());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = box.lo[i] + (box.hi[i] - box.lo[i]) * rng.uniform01();
    return out;
}

Vector sample_conditional_box(RngState& rng, const Vector& center,
                              const ConditionalFamily& family, const Box& box) {
    box.validate();
    family.validate();
    if (center.size() != box.dim())
        throw ShapeError("sample_conditional_box: center/box dimension mismatch");
    if (!box.contains(center)) throw ValueError("sample_conditional_box: center outside box");
    if (family.kind == CondKind::VMF)
        throw ValueError("sample_conditional_box: vmf is not a box conditional");

    Vector out(center.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        switch (family.kind) {
            case CondKind::LAPLACE:
                out[i] = truncated_laplace(rng, center[i], family.scale, box.lo[i], box.hi[i]);
                break;
            case CondKind::NORMAL:
                out[i] = truncated_normal(rng, center[i], family.scale, box.lo[i], box.hi[i]);
                break;
            case CondKind::GENNORM:
                out[i] = truncated_gennorm(rng, center[i], family.beta, family.scale, box.lo[i],
                                           box.hi[i]);
                break;
            default:
                throw ValueError("sample_conditional_box: unsupported family");
        }
    }
    return out;
}

Vector sample_conditional_unbounded(RngState& rng, const Vector& center,
                                    const ConditionalFamily& family) {
    family.validate();
    if (family.kind == CondKind::VMF)
        throw ValueError("sample_conditional_unbounded: vmf needs a sphere");
    Vector out(center.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        switch (family.kind) {
            case CondKind::LAPLACE: out[i] = center[i] + laplace1(rng, family.scale); break;
            case CondKind::NORMAL: out[i] = center[i] + family.scale * rng.gaussian(); break;
            case CondKind::GENNORM:
                out[i] = center[i] + gennorm1(rng, family.beta, family.scale);
                break;
            default: throw ValueError("sample_conditional_unbounded: unsupported family");
        }
    }
    return out;
}

Vector sample_laplace(RngState& rng, double scale, std::size_t n) {
    if (!(scale > 0.0)) throw ValueError("sample_laplace: scale must be positive");
    if (n < 1) throw ValueError("sample_laplace: n >= 1 required");
    Vector out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = laplace1(rng, scale);
    return out;
}

Vector sample_gennorm(RngState& rng, double beta, double scale, std::size_t n) {
    if (!(scale > 0.0)) throw ValueError("sample_gennorm: scale must be positive");
    if (!(beta >= 1.0)) throw ValueError("sample_gennorm: beta >= 1 required");
    if (n < 1) throw ValueError("sample_gennorm: n >= 1 required");
    Vector out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = gennorm1(rng, beta, scale);
    return out;
}

double sample_gamma(RngState& rng, double shape) {
    if (!(shape > 0.0)) throw ValueError("sample_gamma: shape must be positive");
    if (shape < 1.0) {
        const double u = positive_uniform(rng);
        return sample_gamma(rng, shape + 1.0) * std::pow(u, 1.0 / shape);
    }
    // Marsaglia-Tsang squeeze-free acceptance.
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x, v;
        do {
            x = rng.gaussian();
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = positive_uniform(rng);
        if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) return d * v;
    }
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double normal_quantile(double p) {
    if (p <= 0.0) return -std::numeric_limits<double>::infinity();
    if (p >= 1.0) return std::numeric_limits<double>::infinity();

    // Acklam's rational approximation, then Newton steps on the erfc-based CDF.
    static const double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                -2.759285104469687e+02, 1.383577518672690e+02,
                                -3.066479806614716e+01, 2.506628277459239e+00};
    static const double bb[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
    static const double cc[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
    static const double dd[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
    const double p_low = 0.02425;

    double x;
    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((cc[0] * q + cc[1]) * q + cc[2]) * q + cc[3]) * q + cc[4]) * q + cc[5]) /
            ((((dd[0] * q + dd[1]) * q + dd[2]) * q + dd[3]) * q + 1.0);
    } else if (p <= 1.0 - p_low) {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((bb[0] * r + bb[1]) * r + bb[2]) * r + bb[3]) * r + bb[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((cc[0] * q + cc[1]) * q + cc[2]) * q + cc[3]) * q + cc[4]) * q + cc[5]) /
            ((((dd[0] * q + dd[1]) * q + dd[2]) * q + dd[3]) * q + 1.0);
    }

    if (std::abs(x) < 37.0) {
        const double inv_sqrt_2pi = 0.3989422804014327;
        for (int it = 0; it < 2; ++it) {
            const double err = normal_cdf(x) - p;
            const double pdf = inv_sqrt_2pi * std::exp(-0.5 * x * x);
            if (pdf <= 0.0) break;
            x -= err / pdf;
        }
    }
    return x;
}

} // namespace midl
