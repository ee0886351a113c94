#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "midlab/distributions.hpp"
#include "midlab/errors.hpp"
#include "midlab/rng.hpp"

using namespace midl;

namespace {

// Simpson integration of f on [a, b] with an even interval count.
template <typename F>
double simpson(F f, double a, double b, std::size_t intervals) {
    const double h = (b - a) / static_cast<double>(intervals);
    double acc = f(a) + f(b);
    for (std::size_t i = 1; i < intervals; ++i)
        acc += f(a + h * static_cast<double>(i)) * ((i % 2 == 1) ? 4.0 : 2.0);
    return acc * h / 3.0;
}

// E[mu^T z] for vMF(mu, kappa) in dimension d, via the 1-D marginal of
// w = mu^T z with density proportional to e^{kappa w} (1-w^2)^{(d-3)/2}.
// Substituting w = cos(theta) gives the smooth integrand
// e^{kappa cos(theta)} sin^{d-2}(theta) on [0, pi], valid down to d = 2.
double vmf_mean_dot_quadrature(double kappa, std::size_t d) {
    const double p = static_cast<double>(d) - 2.0;
    auto base = [&](double th) { return std::exp(kappa * std::cos(th)) * std::pow(std::sin(th), p); };
    const double pi = 3.14159265358979323846;
    const double num = simpson([&](double th) { return std::cos(th) * base(th); }, 0.0, pi, 200000);
    const double den = simpson(base, 0.0, pi, 200000);
    return num / den;
}

// E|x| for a Laplace(scale) truncated to [-1, 1], centered at 0.
double truncated_laplace_mad_quadrature(double scale) {
    auto dens = [&](double x) { return std::exp(-std::abs(x) / scale); };
    const double num = simpson([&](double x) { return std::abs(x) * dens(x); }, -1.0, 1.0, 200000);
    const double den = simpson(dens, -1.0, 1.0, 200000);
    return num / den;
}

} // namespace

TEST_CASE("determinism: same seed, same stream; children independent") {
    RngState a(1), b(1);
    Vector va = sample_gaussian(a, 4);
    Vector vb = sample_gaussian(b, 4);
    for (std::size_t i = 0; i < 4; ++i) CHECK(va[i] == vb[i]);

    RngState parent(7);
    RngState c1 = parent.derive_child("alpha");
    RngState c2 = parent.derive_child("alpha");
    RngState c3 = parent.derive_child("beta");
    CHECK(c1.next_u64() == c2.next_u64());
    RngState c4 = parent.derive_child("alpha");
    CHECK(c4.next_u64() != c3.next_u64());

    // children depend on (seed, label), not on parent stream position
    RngState consumed(7);
    (void)consumed.next_u64();
    (void)consumed.next_u64();
    RngState c5 = consumed.derive_child("alpha");
    RngState c6 = RngState(7).derive_child("alpha");
    CHECK(c5.next_u64() == c6.next_u64());
}

TEST_CASE("gaussian moments and empty-draw precondition") {
    RngState rng(2);
    const std::size_t n = 100000;
    Vector v = sample_gaussian(rng, n);
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += v[i];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) var += (v[i] - mean) * (v[i] - mean);
    var /= static_cast<double>(n - 1);
    CHECK(std::abs(mean) <= 0.02);
    CHECK(std::abs(var - 1.0) <= 0.03);
    CHECK_THROWS_AS(sample_gaussian(rng, 0), ValueError);
}

TEST_CASE("uniform sphere: unit norm and symmetry moments") {
    RngState rng(3);
    for (int i = 0; i < 1000; ++i) {
        Vector z = sample_uniform_sphere(rng, 10);
        CHECK(std::abs(z.norm2() - 1.0) <= 1e-12);
    }
    const std::size_t n = 100000;
    Vector coord_mean(10);
    double first_sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        Vector z = sample_uniform_sphere(rng, 10);
        for (std::size_t j = 0; j < 10; ++j) coord_mean[j] += z[j];
        first_sq += z[0] * z[0];
    }
    for (std::size_t j = 0; j < 10; ++j)
        CHECK(std::abs(coord_mean[j] / static_cast<double>(n)) <= 0.02);
    CHECK(std::abs(first_sq / static_cast<double>(n) - 0.1) <= 0.01);
    CHECK_THROWS_AS(sample_uniform_sphere(rng, 1), ValueError);
}

TEST_CASE("vmf: kappa 0 reduces to uniform") {
    RngState rng(4);
    Vector mu(10);
    mu[0] = 1.0;
    const std::size_t n = 100000;
    Vector coord_mean(10);
    for (std::size_t i = 0; i < n; ++i) {
        Vector z = sample_vmf(rng, mu, 0.0);
        CHECK(std::abs(z.norm2() - 1.0) <= 1e-12);
        for (std::size_t j = 0; j < 10; ++j) coord_mean[j] += z[j];
    }
    for (std::size_t j = 0; j < 10; ++j)
        CHECK(std::abs(coord_mean[j] / static_cast<double>(n)) <= 0.02);
}

TEST_CASE("vmf: concentration at kappa 50") {
    RngState rng(5);
    Vector mu = sample_uniform_sphere(rng, 10);
    const std::size_t n = 10000;
    double mean_dot = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        Vector z = sample_vmf(rng, mu, 50.0);
        CHECK(std::abs(z.norm2() - 1.0) <= 1e-12);
        mean_dot += dot(mu, z);
    }
    CHECK(mean_dot / static_cast<double>(n) >= 0.9);
}

TEST_CASE("vmf: mean resultant matches 1-D quadrature at kappa 1, d 10") {
    RngState rng(6);
    Vector mu = sample_uniform_sphere(rng, 10);
    const std::size_t n = 100000;
    double mean_dot = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean_dot += dot(mu, sample_vmf(rng, mu, 1.0));
    mean_dot /= static_cast<double>(n);
    const double oracle = vmf_mean_dot_quadrature(1.0, 10);
    CHECK(std::abs(mean_dot - oracle) <= 0.01);
}

TEST_CASE("vmf: d 2 works (tangent is one-dimensional)") {
    RngState rng(7);
    Vector mu(2);
    mu[0] = std::sqrt(0.5);
    mu[1] = -std::sqrt(0.5);
    double mean_dot = 0.0;
    for (int i = 0; i < 20000; ++i) {
        Vector z = sample_vmf(rng, mu, 5.0);
        CHECK(std::abs(z.norm2() - 1.0) <= 1e-12);
        mean_dot += dot(mu, z);
    }
    CHECK(mean_dot / 20000.0 >= 0.5);
    const double oracle = vmf_mean_dot_quadrature(5.0, 2); // integrand exponent (d-3)/2 = -1/2
    CHECK(std::abs(mean_dot / 20000.0 - oracle) <= 0.02);
}

TEST_CASE("uniform box moments and validation") {
    RngState rng(8);
    Box unit;
    unit.lo = Vector(1);
    unit.hi = Vector(1);
    unit.lo[0] = 0.0;
    unit.hi[0] = 1.0;
    const std::size_t n = 100000;
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += sample_uniform_box(rng, unit)[0];
    CHECK(std::abs(mean / static_cast<double>(n) - 0.5) <= 0.005);

    Box degenerate;
    degenerate.lo = Vector(2);
    degenerate.hi = Vector(2);
    degenerate.hi[0] = 1.0; // hi[1] = lo[1] = 0
    CHECK_THROWS_AS(sample_uniform_box(rng, degenerate), ValueError);

    RngState r1(99), r2(99);
    Box b = Box::symmetric_unit(4);
    Vector s1 = sample_uniform_box(r1, b);
    Vector s2 = sample_uniform_box(r2, b);
    for (std::size_t j = 0; j < 4; ++j) CHECK(s1[j] == s2[j]);
}

TEST_CASE("box conditional: delta limit reproduces the center") {
    RngState rng(9);
    Box box = Box::symmetric_unit(10);
    Vector center = sample_uniform_box(rng, box);
    for (CondKind kind : {CondKind::LAPLACE, CondKind::NORMAL}) {
        ConditionalFamily fam = kind == CondKind::LAPLACE ? ConditionalFamily::laplace(1e-6)
                                                          : ConditionalFamily::normal(1e-6);
        for (int i = 0; i < 100; ++i) {
            Vector z = sample_conditional_box(rng, center, fam, box);
            for (std::size_t j = 0; j < 10; ++j) CHECK(std::abs(z[j] - center[j]) <= 1e-3);
        }
    }
}

TEST_CASE("box conditional: truncated-Laplace MAD matches quadrature") {
    RngState rng(10);
    Box box = Box::symmetric_unit(10);
    Vector center(10); // origin
    ConditionalFamily fam = ConditionalFamily::laplace(0.05);
    const std::size_t n = 100000;
    Vector mad(10);
    for (std::size_t i = 0; i < n; ++i) {
        Vector z = sample_conditional_box(rng, center, fam, box);
        CHECK(box.contains(z));
        for (std::size_t j = 0; j < 10; ++j) mad[j] += std::abs(z[j]);
    }
    const double oracle = truncated_laplace_mad_quadrature(0.05);
    for (std::size_t j = 0; j < 10; ++j) {
        const double m = mad[j] / static_cast<double>(n);
        CHECK(std::abs(m - oracle) <= 0.005);
        CHECK(std::abs(m - oracle) <= 0.1 * oracle);
    }
}

TEST_CASE("box conditional: all kinds stay inside the box, off-center") {
    RngState rng(11);
    Box box = Box::symmetric_unit(5);
    Vector center(5);
    center[0] = 0.95; // close to a face so truncation matters
    center[3] = -0.9;
    for (ConditionalFamily fam : {ConditionalFamily::laplace(0.3), ConditionalFamily::normal(0.4),
                                  ConditionalFamily::gennorm(3.0, 0.3)}) {
        for (int i = 0; i < 2000; ++i)
            CHECK(box.contains(sample_conditional_box(rng, center, fam, box)));
    }
    Vector outside(5);
    outside[1] = 1.5;
    CHECK_THROWS_AS(sample_conditional_box(rng, outside, ConditionalFamily::laplace(0.1), box),
                    ValueError);
    CHECK_THROWS_AS(sample_conditional_box(rng, center, ConditionalFamily::vmf(1.0), box),
                    ValueError);
}

TEST_CASE("laplace and gennorm moments") {
    RngState rng(12);
    const std::size_t n = 200000;
    Vector lap = sample_laplace(rng, 1.0, n);
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += lap[i];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) var += (lap[i] - mean) * (lap[i] - mean);
    var /= static_cast<double>(n - 1);
    CHECK(std::abs(mean) <= 0.02);
    CHECK(std::abs(var - 2.0) <= 0.05);

    Vector gn = sample_gennorm(rng, 2.0, 1.0, n);
    double gmean = 0.0;
    for (std::size_t i = 0; i < n; ++i) gmean += gn[i];
    gmean /= static_cast<double>(n);
    double m2 = 0.0, m4 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = gn[i] - gmean;
        m2 += d * d;
        m4 += d * d * d * d;
    }
    m2 /= static_cast<double>(n);
    m4 /= static_cast<double>(n);
    CHECK(std::abs(gmean) <= 0.02);
    CHECK(std::abs(m4 / (m2 * m2) - 3.0) <= 0.1); // beta = 2 is Gaussian
}

TEST_CASE("marginal uniformity: uniform prior plus vMF conditional") {
    RngState rng(13);
    const std::size_t n = 100000;
    Vector coord_mean(10);
    for (std::size_t i = 0; i < n; ++i) {
        Vector zx = sample_uniform_sphere(rng, 10);
        Vector zt = sample_vmf(rng, zx, 1.0);
        for (std::size_t j = 0; j < 10; ++j) coord_mean[j] += zt[j];
    }
    for (std::size_t j = 0; j < 10; ++j)
        CHECK(std::abs(coord_mean[j] / static_cast<double>(n)) <= 0.02);
}

TEST_CASE("normal quantile and cdf agree") {
    CHECK(normal_quantile(0.975) == doctest::Approx(1.9599639845400545).epsilon(1e-10));
    CHECK(normal_quantile(0.5) == doctest::Approx(0.0).epsilon(1e-12));
    for (double x : {-3.0, -1.0, -0.1, 0.0, 0.4, 2.5}) {
        CHECK(normal_quantile(normal_cdf(x)) == doctest::Approx(x).epsilon(1e-9));
    }
}

TEST_CASE("gamma sampler mean matches shape") {
    RngState rng(14);
    for (double shape : {0.5, 1.0, 3.7}) {
        const std::size_t n = 100000;
        double mean = 0.0;
        for (std::size_t i = 0; i < n; ++i) mean += sample_gamma(rng, shape);
        mean /= static_cast<double>(n);
        CHECK(std::abs(mean - shape) <= 0.05 * std::max(1.0, shape));
    }
}
