#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "midlab/errors.hpp"
#include "midlab/linalg.hpp"
#include "midlab/metrics.hpp"
#include "midlab/rng.hpp"

using namespace midl;

namespace {

Matrix random_matrix(RngState& rng, std::size_t r, std::size_t c) {
    Matrix m(r, c);
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) m(i, j) = rng.gaussian();
    return m;
}

Matrix random_orthogonal(RngState& rng, std::size_t d) {
    Matrix s(d, d);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = i; j < d; ++j) {
            s(i, j) = rng.gaussian();
            s(j, i) = s(i, j);
        }
    return sym_eig(s).eigenvectors;
}

double assignment_total(const Matrix& cost, const std::vector<std::size_t>& perm) {
    double total = 0.0;
    for (std::size_t i = 0; i < perm.size(); ++i) total += cost(i, perm[i]);
    return total;
}

// Exhaustive optimum over all d! permutations; usable up to d ~ 8.
double brute_force_total(const Matrix& cost, bool maximize) {
    std::vector<std::size_t> perm(cost.rows());
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    double best = maximize ? -1e300 : 1e300;
    do {
        const double total = assignment_total(cost, perm);
        best = maximize ? std::max(best, total) : std::min(best, total);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

} // namespace

TEST_CASE("pearson: hand values") {
    Vector x{1.0, 2.0, 3.0, 4.0};
    Vector y2{2.0, 4.0, 6.0, 8.0};
    Vector yn{-1.0, -2.0, -3.0, -4.0};
    Vector ys{1.0, 3.0, 2.0, 4.0};
    CHECK(pearson(x, y2) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(pearson(x, yn) == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(pearson(x, ys) == doctest::Approx(0.8).epsilon(1e-12));
}

TEST_CASE("pearson: constant input raises") {
    Vector x{1.0, 1.0, 1.0};
    Vector y{1.0, 2.0, 3.0};
    CHECK_THROWS_AS(pearson(x, y), CorrelationError);
    CHECK_THROWS_AS(pearson(y, x), CorrelationError);
    Vector a{1.0, 2.0};
    Vector b{1.0, 2.0, 3.0};
    CHECK_THROWS_AS(pearson(a, b), ShapeError);
}

TEST_CASE("r_squared: invertible affine map scores exactly one") {
    RngState rng(80);
    const std::size_t n = 300, d = 7;
    Matrix z = random_matrix(rng, n, d);
    Matrix q = random_orthogonal(rng, d);
    Matrix z_hat = matmul(z, q);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) z_hat(i, j) += 0.3 * double(j) - 1.0;
    R2Result r = r_squared_detail(z, z_hat);
    CHECK(r.value == doctest::Approx(1.0).epsilon(1e-10));
    CHECK_FALSE(r.rank_deficient);
}

TEST_CASE("r_squared: independent noise scores near zero") {
    RngState rng(81);
    Matrix z = random_matrix(rng, 10000, 10);
    Matrix z_hat = random_matrix(rng, 10000, 10);
    const double r2 = r_squared(z, z_hat);
    CHECK(std::abs(r2) <= 0.02);
}

TEST_CASE("r_squared: collinear regressors are flagged, value still finite") {
    RngState rng(82);
    const std::size_t n = 200;
    Matrix z(n, 3);
    for (std::size_t i = 0; i < n; ++i) {
        z(i, 0) = rng.gaussian();
        z(i, 1) = 2.0 * z(i, 0); // exact collinearity
        z(i, 2) = rng.gaussian();
    }
    Matrix z_hat(n, 2);
    for (std::size_t i = 0; i < n; ++i) {
        z_hat(i, 0) = z(i, 0) + 0.01 * rng.gaussian();
        z_hat(i, 1) = z(i, 2);
    }
    R2Result r = r_squared_detail(z, z_hat);
    CHECK(r.rank_deficient);
    CHECK(std::isfinite(r.value));
    CHECK(r.value > 0.9);
}

TEST_CASE("r_squared: shape mismatch raises") {
    Matrix a(10, 3), b(11, 3);
    CHECK_THROWS_AS(r_squared(a, b), ShapeError);
}

TEST_CASE("linear_sum_assignment: diagonal-dominant case") {
    const std::size_t d = 5;
    Matrix cost(d, d);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) cost(i, j) = (i == j) ? 10.0 : 1.0;
    std::vector<std::size_t> perm = linear_sum_assignment(cost, /*maximize=*/true);
    for (std::size_t i = 0; i < d; ++i) CHECK(perm[i] == i);
    perm = linear_sum_assignment(cost, /*maximize=*/false);
    double total = assignment_total(cost, perm);
    CHECK(total == doctest::Approx(5.0).epsilon(1e-12)); // a derangement avoids the diagonal
}

TEST_CASE("linear_sum_assignment matches brute force over 500 random matrices") {
    RngState rng(83);
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t d = 2 + (rng.next_u64() % 5); // 2..6
        Matrix cost(d, d);
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j < d; ++j) cost(i, j) = 2.0 * rng.uniform01() - 1.0;
        for (bool maximize : {false, true}) {
            std::vector<std::size_t> perm = linear_sum_assignment(cost, maximize);
            // valid permutation
            std::vector<bool> seen(d, false);
            for (std::size_t c : perm) {
                REQUIRE(c < d);
                REQUIRE_FALSE(seen[c]);
                seen[c] = true;
            }
            const double total = assignment_total(cost, perm);
            const double best = brute_force_total(cost, maximize);
            CHECK(total == doctest::Approx(best).epsilon(1e-12));
        }
    }
}

TEST_CASE("linear_sum_assignment: row-constant shifts leave the optimum alone") {
    RngState rng(84);
    const std::size_t d = 6;
    Matrix cost(d, d);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) cost(i, j) = rng.gaussian();
    std::vector<std::size_t> base = linear_sum_assignment(cost, false);
    Matrix shifted = cost;
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) shifted(i, j) += 3.7 * double(i + 1);
    std::vector<std::size_t> after = linear_sum_assignment(shifted, false);
    CHECK(base == after);
}

TEST_CASE("linear_sum_assignment: non-square raises") {
    Matrix cost(3, 4);
    CHECK_THROWS_AS(linear_sum_assignment(cost, false), ShapeError);
}

TEST_CASE("mcc: permuted, rescaled latents recover exactly one") {
    RngState rng(85);
    const std::size_t n = 400, d = 6;
    Matrix z = random_matrix(rng, n, d);
    const std::size_t perm[d] = {3, 0, 4, 1, 5, 2};
    const double scale[d] = {3.0, -0.5, 2.0, -3.0, 0.25, 1.0};
    Matrix z_hat(n, d);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) z_hat(i, perm[j]) = scale[j] * z(i, j);
    MccResult r = mcc_detail(z, z_hat);
    CHECK(r.value == doctest::Approx(1.0).epsilon(1e-10));
    for (std::size_t j = 0; j < d; ++j) CHECK(r.assignment[j] == perm[j]);
    // signed correlations carry the sign of the scaling
    CHECK(r.signed_corr(1, perm[1]) == doctest::Approx(-1.0).epsilon(1e-10));
    CHECK(r.signed_corr(0, perm[0]) == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("mcc: independent noise stays small") {
    RngState rng(86);
    Matrix z = random_matrix(rng, 10000, 10);
    Matrix z_hat = random_matrix(rng, 10000, 10);
    const double v = mcc(z, z_hat);
    CHECK(v >= 0.0);
    CHECK(v <= 0.15);
}

TEST_CASE("mcc: invariant to per-column permutation and scaling of either side") {
    RngState rng(87);
    const std::size_t n = 300, d = 5;
    Matrix z = random_matrix(rng, n, d);
    Matrix z_hat(n, d);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j)
            z_hat(i, j) = z(i, (j + 2) % d) + 0.5 * rng.gaussian();
    const double base = mcc(z, z_hat);

    Matrix z2(n, d), z_hat2(n, d);
    const std::size_t pz[d] = {4, 2, 0, 1, 3};
    const std::size_t ph[d] = {1, 3, 4, 0, 2};
    const double sz[d] = {2.0, -1.0, 0.5, -4.0, 1.5};
    const double sh[d] = {-0.2, 3.0, 1.0, -1.0, 5.0};
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) {
            z2(i, pz[j]) = sz[j] * z(i, j);
            z_hat2(i, ph[j]) = sh[j] * z_hat(i, j);
        }
    CHECK(mcc(z2, z_hat2) == doctest::Approx(base).epsilon(1e-10));
    CHECK(base > 0.0);
    CHECK(base <= 1.0);
}

TEST_CASE("mcc: constant column raises and names the column") {
    RngState rng(88);
    Matrix z = random_matrix(rng, 50, 3);
    Matrix z_hat = random_matrix(rng, 50, 3);
    for (std::size_t i = 0; i < 50; ++i) z_hat(i, 2) = 4.25;
    try {
        mcc(z, z_hat);
        FAIL("expected CorrelationError");
    } catch (const CorrelationError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("column") != std::string::npos);
        CHECK(msg.find("2") != std::string::npos);
    }
}

TEST_CASE("mcc: dimension mismatch raises") {
    Matrix a(20, 3), b(20, 4);
    CHECK_THROWS_AS(mcc(a, b), ShapeError);
    Matrix c(19, 3);
    CHECK_THROWS_AS(mcc(a, c), ShapeError);
}
