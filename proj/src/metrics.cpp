#include "midlab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "midlab/linalg.hpp"

namespace midl {

double pearson(const Vector& x, const Vector& y) {
    if (x.size() != y.size())
        throw ShapeError("pearson: length mismatch " + std::to_string(x.size()) + " vs " +
                         std::to_string(y.size()));
    const std::size_t n = x.size();
    if (n < 2) throw ValueError("pearson: need at least 2 points");

    double min_x = x[0], max_x = x[0], min_y = y[0], max_y = y[0];
    double mean_x = 0.0, mean_y = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        min_x = std::min(min_x, x[i]);
        max_x = std::max(max_x, x[i]);
        min_y = std::min(min_y, y[i]);
        max_y = std::max(max_y, y[i]);
        mean_x += x[i];
        mean_y += y[i];
    }
    if (min_x == max_x) throw CorrelationError("pearson: first argument is constant");
    if (min_y == max_y) throw CorrelationError("pearson: second argument is constant");
    mean_x /= static_cast<double>(n);
    mean_y /= static_cast<double>(n);

    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = x[i] - mean_x;
        const double dy = y[i] - mean_y;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    const double r = sxy / std::sqrt(sxx * syy);
    return std::clamp(r, -1.0, 1.0);
}

R2Result r_squared_detail(const Matrix& z_true, const Matrix& z_hat) {
    if (z_true.rows() != z_hat.rows())
        throw ShapeError("r_squared: row mismatch " + shape_str(z_true) + " vs " +
                         shape_str(z_hat));
    const std::size_t n = z_true.rows();
    const std::size_t p = z_true.cols();
    const std::size_t q = z_hat.cols();
    if (n <= p + 1) throw ValueError("r_squared: need N > d+1 rows");

    const LeastSquares fit = least_squares(z_true, z_hat);

    // Residual sum of squares of the affine prediction.
    double rss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < q; ++j) {
            double pred = fit.coefficients(p, j);
            for (std::size_t k = 0; k < p; ++k)
                pred += z_true(i, k) * fit.coefficients(k, j);
            const double diff = z_hat(i, j) - pred;
            rss += diff * diff;
        }
    }
    Vector mean(q);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < q; ++j) mean[j] += z_hat(i, j);
    for (std::size_t j = 0; j < q; ++j) mean[j] /= static_cast<double>(n);
    double tss = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < q; ++j) {
            const double diff = z_hat(i, j) - mean[j];
            tss += diff * diff;
        }
    if (tss <= 0.0) throw CorrelationError("r_squared: z_hat has zero variance");
    return R2Result{1.0 - rss / tss, fit.rank_deficient};
}

double r_squared(const Matrix& z_true, const Matrix& z_hat) {
    return r_squared_detail(z_true, z_hat).value;
}

std::vector<std::size_t> linear_sum_assignment(const Matrix& cost, bool maximize) {
    if (cost.rows() != cost.cols())
        throw ShapeError("linear_sum_assignment: matrix is " + shape_str(cost));
    const std::size_t n = cost.rows();
    if (n == 0) return {};
    if (!cost.all_finite())
        throw ValueError("linear_sum_assignment: cost matrix has non-finite entries");

    auto a = [&](std::size_t i, std::size_t j) {
        return maximize ? -cost(i, j) : cost(i, j);
    };

    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
    for (std::size_t i = 1; i <= n; ++i) {
        p[0] = i;
        std::size_t j0 = 0;
        std::vector<double> minv(n + 1, inf);
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            const std::size_t i0 = p[j0];
            std::size_t j1 = 0;
            double delta = inf;
            for (std::size_t j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = a(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<std::size_t> perm(n);
    for (std::size_t j = 1; j <= n; ++j) perm[p[j] - 1] = j - 1;
    return perm;
}

MccResult mcc_detail(const Matrix& z_true, const Matrix& z_hat) {
    if (z_true.rows() != z_hat.rows())
        throw ShapeError("mcc: row mismatch " + shape_str(z_true) + " vs " + shape_str(z_hat));
    if (z_true.cols() != z_hat.cols())
        throw ShapeError("mcc: needs equally many true and estimated dimensions, got " +
                         shape_str(z_true) + " vs " + shape_str(z_hat));
    const std::size_t n = z_true.rows();
    const std::size_t d = z_true.cols();
    if (n < 3) throw ValueError("mcc: need at least 3 rows");

    MccResult res;
    res.signed_corr = Matrix(d, d);
    Matrix abs_corr(d, d);
    for (std::size_t i = 0; i < d; ++i) {
        const Vector ti = z_true.col(i);
        for (std::size_t j = 0; j < d; ++j) {
            double r;
            try {
                r = pearson(ti, z_hat.col(j));
            } catch (const CorrelationError&) {
                throw CorrelationError("mcc: constant column (true dim " + std::to_string(i) +
                                       ", estimated dim " + std::to_string(j) + ")");
            }
            res.signed_corr(i, j) = r;
            abs_corr(i, j) = std::abs(r);
        }
    }
    res.assignment = linear_sum_assignment(abs_corr, /*maximize=*/true);
    double total = 0.0;
    for (std::size_t i = 0; i < d; ++i) total += abs_corr(i, res.assignment[i]);
    res.value = total / static_cast<double>(d);
    return res;
}

double mcc(const Matrix& z_true, const Matrix& z_hat) {
    return mcc_detail(z_true, z_hat).value;
}

EvalReport evaluate_run(const PairedDataset& ds, const EncoderPair& pair, double final_loss) {
    if (ds.obs_dim() != pair.fx.input_dim())
        throw ShapeError("evaluate_run: dataset obs dim " + std::to_string(ds.obs_dim()) +
                         " != encoder input dim " + std::to_string(pair.fx.input_dim()));
    const Matrix emb = encode(pair, WhichEncoder::X, ds.X);

    EvalReport report;
    const R2Result r2 = r_squared_detail(ds.Zx, emb);
    report.r2 = r2.value;
    report.r2_rank_deficient = r2.rank_deficient;
    const MccResult m = mcc_detail(ds.Zx, emb);
    report.mcc = m.value;
    report.assignment = m.assignment;
    report.signed_corr = m.signed_corr;
    report.final_loss = final_loss;
    report.seed = ds.seed;
    return report;
}

} // namespace midl
