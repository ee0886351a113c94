#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>

#include "midlab/dataset.hpp"
#include "midlab/errors.hpp"
#include "midlab/latent_space.hpp"
#include "midlab/linalg.hpp"
#include "midlab/matrix_io.hpp"
#include "midlab/mixer.hpp"
#include "midlab/rng.hpp"

using namespace midl;

namespace {

Vector row_vec(const Matrix& m, std::size_t i) {
    Vector v(m.cols());
    for (std::size_t j = 0; j < m.cols(); ++j) v[j] = m(i, j);
    return v;
}

bool same_bytes(const Matrix& a, const Matrix& b) {
    return a.rows() == b.rows() && a.cols() == b.cols() &&
           0 == std::memcmp(a.raw().data(), b.raw().data(), sizeof(double) * a.raw().size());
}

// Simpson integration for the truncated-Laplace MAD oracle.
template <typename F>
double simpson(F f, double a, double b, std::size_t intervals) {
    const double h = (b - a) / static_cast<double>(intervals);
    double acc = f(a) + f(b);
    for (std::size_t i = 1; i < intervals; ++i)
        acc += f(a + h * static_cast<double>(i)) * ((i % 2 == 1) ? 4.0 : 2.0);
    return acc * h / 3.0;
}

double truncated_laplace_mad(double scale) {
    auto dens = [&](double x) { return std::exp(-std::abs(x) / scale); };
    const double num = simpson([&](double x) { return std::abs(x) * dens(x); }, -1.0, 1.0, 200000);
    const double den = simpson(dens, -1.0, 1.0, 200000);
    return num / den;
}

} // namespace

TEST_CASE("build_mixer: layer condition numbers stay clamped") {
    RngState rng(41);
    MixerMlp m = build_mixer(rng, 10, 5, 3, 0.2, 10.0);
    REQUIRE(m.layer_count() == 3);
    for (const Matrix& w : m.weights) {
        CHECK(w.rows() == 15);
        CHECK(w.cols() == 15);
        CHECK(condition_number(w) <= 10.0 + 1e-6);
    }
}

TEST_CASE("build_mixer: injectivity collision probe") {
    RngState rng(42);
    MixerMlp m = build_mixer(rng, 10, 5);
    const std::size_t n = 1000;
    Matrix inputs(n, 15), outputs(n, 15);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < 15; ++j) inputs(i, j) = rng.gaussian();
    outputs = mixer_forward_rows(m, inputs);
    double min_dist = 1e300;
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = a + 1; b < n; ++b) {
            double acc = 0.0;
            for (std::size_t j = 0; j < 15; ++j) {
                const double d = outputs(a, j) - outputs(b, j);
                acc += d * d;
            }
            min_dist = std::min(min_dist, acc);
        }
    CHECK(min_dist > 0.0);
}

TEST_CASE("build_mixer: leak 1 degenerates to the affine composition") {
    RngState rng(43);
    MixerMlp m = build_mixer(rng, 10, 5, 3, 1.0, 10.0);
    RngState rin(44);
    Vector u(15);
    for (std::size_t j = 0; j < 15; ++j) u[j] = rin.gaussian();
    Vector got = mixer_forward(m, u);

    Vector acc = u;
    for (std::size_t l = 0; l < m.layer_count(); ++l) {
        Vector next = matvec(m.weights[l], acc);
        for (std::size_t j = 0; j < next.size(); ++j) next[j] += m.biases[l][j];
        acc = next;
    }
    for (std::size_t j = 0; j < 15; ++j) CHECK(got[j] == doctest::Approx(acc[j]).epsilon(1e-12));
}

TEST_CASE("mixer_forward: zero and identity weight cases") {
    MixerMlp m;
    m.leak = 0.2;
    for (int l = 0; l < 3; ++l) {
        m.weights.push_back(Matrix(4, 4));
        m.biases.push_back(Vector(4));
    }
    Vector u(4);
    u[0] = 1.5;
    u[2] = -2.0;
    Vector zero_out = mixer_forward(m, u);
    for (std::size_t j = 0; j < 4; ++j) CHECK(zero_out[j] == 0.0);

    for (int l = 0; l < 3; ++l) m.weights[l] = Matrix::identity(4);
    Vector pos(4);
    pos[0] = 0.7;
    pos[1] = 2.0;
    pos[2] = 0.1;
    pos[3] = 3.0;
    Vector same = mixer_forward(m, pos);
    for (std::size_t j = 0; j < 4; ++j) CHECK(same[j] == doctest::Approx(pos[j]).epsilon(1e-15));

    // negative input goes through two hidden activations: leak^2 overall
    Vector neg(4);
    neg[1] = -1.0;
    Vector scaled = mixer_forward(m, neg);
    CHECK(scaled[1] == doctest::Approx(-0.04).epsilon(1e-12));
    CHECK(scaled[0] == 0.0);

    Vector wrong(3);
    CHECK_THROWS_AS(mixer_forward(m, wrong), ShapeError);
}

TEST_CASE("mixer hash is deterministic and label-sensitive") {
    RngState root(45);
    RngState a1 = root.derive_child("mixer-x");
    RngState a2 = root.derive_child("mixer-x");
    RngState b = root.derive_child("mixer-t");
    MixerMlp mx1 = build_mixer(a1, 10, 5);
    MixerMlp mx2 = build_mixer(a2, 10, 5);
    MixerMlp mt = build_mixer(b, 10, 5);
    CHECK(mx1.param_hash() == mx2.param_hash());
    CHECK(mx1.param_hash() != mt.param_hash());
}

TEST_CASE("latent space rules enforced") {
    // BOX prior must be uniform; conditionals exclude vMF
    LatentSpaceSpec box = LatentSpaceSpec::unit_box(10, ConditionalFamily::laplace(0.05));
    CHECK_NOTHROW(box.validate());
    LatentSpaceSpec bad_box = box;
    bad_box.conditional = ConditionalFamily::vmf(1.0);
    CHECK_THROWS_AS(bad_box.validate(), ValueError);

    LatentSpaceSpec sphere = LatentSpaceSpec::sphere(10, ConditionalFamily::vmf(1.0));
    CHECK_NOTHROW(sphere.validate());
    LatentSpaceSpec sphere_lap = LatentSpaceSpec::sphere(10, ConditionalFamily::laplace(0.05));
    CHECK_NOTHROW(sphere_lap.validate()); // ambient-noise-then-project construction

    LatentSpaceSpec unb =
        LatentSpaceSpec::unbounded(10, PriorKind::LAPLACE, 1.0, ConditionalFamily::normal(1.0));
    CHECK_NOTHROW(unb.validate());
    LatentSpaceSpec bad_unb = unb;
    bad_unb.prior = PriorKind::UNIFORM;
    CHECK_THROWS_AS(bad_unb.validate(), ValueError);
}

TEST_CASE("generate_pairs: sphere geometry holds for every row") {
    RngState root(46);
    RngState rmx = root.derive_child("mixer-x");
    RngState rmt = root.derive_child("mixer-t");
    RngState rdata = root.derive_child("data");
    LatentSpaceSpec spec = LatentSpaceSpec::sphere(10, ConditionalFamily::vmf(1.0));
    MixerMlp gx = build_mixer(rmx, 10, 5);
    MixerMlp gt = build_mixer(rmt, 10, 5);
    PairedDataset ds = generate_pairs(rdata, spec, gx, gt, 100);
    REQUIRE(ds.n() == 100);
    CHECK(ds.obs_dim() == 15);
    for (std::size_t i = 0; i < ds.n(); ++i) {
        CHECK(std::abs(row_vec(ds.Zx, i).norm2() - 1.0) <= 1e-12);
        CHECK(std::abs(row_vec(ds.Zt, i).norm2() - 1.0) <= 1e-12);
    }
    // observations are the mixer images of (z || m)
    Matrix u(ds.n(), 15);
    for (std::size_t i = 0; i < ds.n(); ++i) {
        for (std::size_t j = 0; j < 10; ++j) u(i, j) = ds.Zx(i, j);
        for (std::size_t j = 0; j < 5; ++j) u(i, 10 + j) = ds.Mx(i, j);
    }
    CHECK(same_bytes(ds.X, mixer_forward_rows(gx, u)));
}

TEST_CASE("generate_pairs: box L1 displacement matches the quadrature oracle") {
    RngState root(47);
    RngState rmx = root.derive_child("mixer-x");
    RngState rmt = root.derive_child("mixer-t");
    RngState rdata = root.derive_child("data");
    LatentSpaceSpec spec = LatentSpaceSpec::unit_box(10, ConditionalFamily::laplace(0.05));
    MixerMlp gx = build_mixer(rmx, 10, 5);
    MixerMlp gt = build_mixer(rmt, 10, 5);
    const std::size_t n = 20000;
    PairedDataset ds = generate_pairs(rdata, spec, gx, gt, n);
    double mean_l1 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        CHECK(spec.box.contains(row_vec(ds.Zx, i)));
        CHECK(spec.box.contains(row_vec(ds.Zt, i)));
        double acc = 0.0;
        for (std::size_t j = 0; j < 10; ++j) acc += std::abs(ds.Zt(i, j) - ds.Zx(i, j));
        mean_l1 += acc;
    }
    mean_l1 /= static_cast<double>(n);
    const double oracle = 10.0 * truncated_laplace_mad(0.05);
    CHECK(std::abs(mean_l1 - oracle) <= 0.1 * oracle);
}

TEST_CASE("generate_pairs: same seed gives a bit-identical dataset") {
    LatentSpaceSpec spec = LatentSpaceSpec::sphere(10, ConditionalFamily::vmf(1.0));
    auto make = [&]() {
        RngState root(48);
        RngState rmx = root.derive_child("mixer-x");
        RngState rmt = root.derive_child("mixer-t");
        RngState rdata = root.derive_child("data");
        MixerMlp gx = build_mixer(rmx, 10, 5);
        MixerMlp gt = build_mixer(rmt, 10, 5);
        return generate_pairs(rdata, spec, gx, gt, 64);
    };
    PairedDataset a = make();
    PairedDataset b = make();
    CHECK(same_bytes(a.Zx, b.Zx));
    CHECK(same_bytes(a.Zt, b.Zt));
    CHECK(same_bytes(a.Mx, b.Mx));
    CHECK(same_bytes(a.Mt, b.Mt));
    CHECK(same_bytes(a.X, b.X));
    CHECK(same_bytes(a.T, b.T));
}

TEST_CASE("dataset roundtrip through disk is bit exact") {
    RngState root(49);
    RngState rmx = root.derive_child("mixer-x");
    RngState rmt = root.derive_child("mixer-t");
    RngState rdata = root.derive_child("data");
    LatentSpaceSpec spec = LatentSpaceSpec::unit_box(6, ConditionalFamily::normal(0.05));
    MixerMlp gx = build_mixer(rmx, 6, 3);
    MixerMlp gt = build_mixer(rmt, 6, 3);
    PairedDataset ds = generate_pairs(rdata, spec, gx, gt, 32);
    ds.seed = 49;
    ds.mixer_hash_x = gx.param_hash();
    ds.mixer_hash_t = gt.param_hash();

    const std::string dir =
        (std::filesystem::temp_directory_path() / "midlab_ds_roundtrip").string();
    std::filesystem::remove_all(dir);
    save_dataset(ds, dir);
    PairedDataset back = load_dataset(dir);
    CHECK(same_bytes(ds.Zx, back.Zx));
    CHECK(same_bytes(ds.Zt, back.Zt));
    CHECK(same_bytes(ds.Mx, back.Mx));
    CHECK(same_bytes(ds.Mt, back.Mt));
    CHECK(same_bytes(ds.X, back.X));
    CHECK(same_bytes(ds.T, back.T));
    CHECK(back.seed == 49);
    CHECK(back.mixer_hash_x == gx.param_hash());
    CHECK(back.spec.geometry == Geometry::BOX);
    CHECK(back.spec.conditional.kind == CondKind::NORMAL);
    std::filesystem::remove_all(dir);
}

TEST_CASE("pooled Zt of a sphere/uniform/vMF dataset looks uniform") {
    RngState root(50);
    RngState rmx = root.derive_child("mixer-x");
    RngState rmt = root.derive_child("mixer-t");
    RngState rdata = root.derive_child("data");
    LatentSpaceSpec spec = LatentSpaceSpec::sphere(10, ConditionalFamily::vmf(1.0));
    MixerMlp gx = build_mixer(rmx, 10, 5);
    MixerMlp gt = build_mixer(rmt, 10, 5);
    const std::size_t n = 20000;
    PairedDataset ds = generate_pairs(rdata, spec, gx, gt, n);
    for (std::size_t j = 0; j < 10; ++j) {
        double mean = 0.0;
        for (std::size_t i = 0; i < n; ++i) mean += ds.Zt(i, j);
        CHECK(std::abs(mean / static_cast<double>(n)) <= 0.025);
    }
}
