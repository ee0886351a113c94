#include "midlab/train.hpp"

#include <cmath>
#include <limits>
#include <numeric>

#include "midlab/linalg.hpp"

namespace midl {

void TrainConfig::validate() const {
    if (batch_size < 2) throw ValueError("TrainConfig: batch_size >= 2 required");
    if (!(learning_rate > 0.0)) throw ValueError("TrainConfig: learning_rate must be positive");
    if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0))
        throw ValueError("TrainConfig: adam betas must lie in [0, 1)");
    if (!(adam_eps > 0.0)) throw ValueError("TrainConfig: adam_eps must be positive");
    if (!(tau_init > 0.0)) throw ValueError("TrainConfig: tau_init must be positive");
    if (hidden_width < 1) throw ValueError("TrainConfig: hidden_width >= 1 required");
}

namespace {

struct ForwardCache {
    std::vector<Matrix> inputs; // input to each affine layer
    std::vector<Matrix> zs;     // pre-activation output of each affine layer
    Matrix emb;                 // projected output
};

ForwardCache forward_cached(const Mlp& net, const Matrix& batch, const OutputSpace& space) {
    ForwardCache fc;
    Matrix a = batch;
    const std::size_t layers = net.weights.size();
    for (std::size_t l = 0; l < layers; ++l) {
        fc.inputs.push_back(a);
        Matrix z = matmul(a, net.weights[l].transposed());
        for (std::size_t i = 0; i < z.rows(); ++i)
            for (std::size_t j = 0; j < z.cols(); ++j) z(i, j) += net.biases[l][j];
        fc.zs.push_back(z);
        if (l + 1 < layers) {
            for (double& v : z.raw())
                if (v < 0.0) v *= net.leak;
        }
        a = std::move(z);
    }
    fc.emb = project_output(fc.zs.back(), space);
    return fc;
}

// Gradient of the projection: given dL/d(emb), produce dL/d(raw).
Matrix projection_backward(const Matrix& d_emb, const ForwardCache& fc, const OutputSpace& space) {
    const Matrix& raw = fc.zs.back();
    Matrix d_raw = d_emb;
    switch (space.kind) {
        case SpaceKind::SPHERE:
            for (std::size_t i = 0; i < raw.rows(); ++i) {
                double n = 0.0;
                for (std::size_t j = 0; j < raw.cols(); ++j) n += raw(i, j) * raw(i, j);
                n = std::sqrt(n);
                if (n < 1e-300) {
                    for (std::size_t j = 0; j < raw.cols(); ++j) d_raw(i, j) = 0.0;
                    continue;
                }
                double proj = 0.0;
                for (std::size_t j = 0; j < raw.cols(); ++j)
                    proj += d_emb(i, j) * fc.emb(i, j);
                for (std::size_t j = 0; j < raw.cols(); ++j)
                    d_raw(i, j) = (d_emb(i, j) - proj * fc.emb(i, j)) / n;
            }
            break;
        case SpaceKind::BOX:
            // Subgradient of the clamp: identity inside, zero on clipped
            // coordinates (per sample, so shared weights still get signal).
            for (std::size_t i = 0; i < raw.rows(); ++i)
                for (std::size_t j = 0; j < raw.cols(); ++j)
                    if (raw(i, j) <= space.box.lo[j] || raw(i, j) >= space.box.hi[j])
                        d_raw(i, j) = 0.0;
            break;
        case SpaceKind::UNBOUNDED: break;
    }
    return d_raw;
}

struct MlpGrads {
    std::vector<Matrix> dW;
    std::vector<Vector> db;
};

MlpGrads mlp_backward(const Mlp& net, const ForwardCache& fc, Matrix d_raw) {
    const std::size_t layers = net.weights.size();
    MlpGrads g;
    g.dW.resize(layers);
    g.db.resize(layers);
    Matrix dz = std::move(d_raw);
    for (std::size_t li = layers; li-- > 0;) {
        g.dW[li] = matmul(dz.transposed(), fc.inputs[li]);
        Vector db(dz.cols());
        for (std::size_t i = 0; i < dz.rows(); ++i)
            for (std::size_t j = 0; j < dz.cols(); ++j) db[j] += dz(i, j);
        g.db[li] = std::move(db);
        if (li == 0) break;
        Matrix da = matmul(dz, net.weights[li]);
        const Matrix& zprev = fc.zs[li - 1];
        for (std::size_t i = 0; i < da.rows(); ++i)
            for (std::size_t j = 0; j < da.cols(); ++j)
                if (zprev(i, j) < 0.0) da(i, j) *= net.leak;
        dz = std::move(da);
    }
    return g;
}

// dL/dEx and dL/dEt from dL/dS for each kernel.
void kernel_backward(const SimilarityKernel& kernel, const Matrix& ds, const Matrix& ex,
                     const Matrix& et, Matrix& d_ex, Matrix& d_et) {
    const std::size_t n = ex.rows(), d = ex.cols();
    d_ex = Matrix(n, d);
    d_et = Matrix(n, d);
    switch (kernel.kind) {
        case KernelKind::DOT:
            d_ex = matmul(ds, et);
            d_et = matmul(ds.transposed(), ex);
            return;
        case KernelKind::NEG_L2SQ: {
            Vector row_sum(n), col_sum(n);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j) {
                    row_sum[i] += ds(i, j);
                    col_sum[j] += ds(i, j);
                }
            const Matrix ds_et = matmul(ds, et);
            const Matrix dst_ex = matmul(ds.transposed(), ex);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t k = 0; k < d; ++k)
                    d_ex(i, k) = -2.0 * (row_sum[i] * ex(i, k) - ds_et(i, k));
            for (std::size_t j = 0; j < n; ++j)
                for (std::size_t k = 0; k < d; ++k)
                    d_et(j, k) = 2.0 * (dst_ex(j, k) - col_sum[j] * et(j, k));
            return;
        }
        case KernelKind::NEG_L1:
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j) {
                    const double w = ds(i, j);
                    if (w == 0.0) continue;
                    for (std::size_t k = 0; k < d; ++k) {
                        const double diff = ex(i, k) - et(j, k);
                        const double sg = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
                        d_ex(i, k) -= w * sg;
                        d_et(j, k) += w * sg;
                    }
                }
            return;
        case KernelKind::NEG_LBETA: {
            const double b = kernel.beta;
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j) {
                    const double w = ds(i, j);
                    if (w == 0.0) continue;
                    for (std::size_t k = 0; k < d; ++k) {
                        const double diff = ex(i, k) - et(j, k);
                        if (diff == 0.0) continue;
                        const double sg = diff > 0.0 ? 1.0 : -1.0;
                        const double mag = b * std::pow(std::abs(diff), b - 1.0) * sg;
                        d_ex(i, k) -= w * mag;
                        d_et(j, k) += w * mag;
                    }
                }
            return;
        }
    }
    throw ValueError("kernel_backward: unknown kernel");
}

} // namespace

PairGradients loss_and_gradients(const EncoderPair& pair, const Matrix& xb, const Matrix& tb) {
    if (xb.rows() != tb.rows()) throw ShapeError("loss_and_gradients: batch row mismatch");
    const std::size_t m = xb.rows();
    if (m < 1) throw ValueError("loss_and_gradients: empty batch");
    const double tau = pair.tau();

    const ForwardCache fcx = forward_cached(pair.fx, xb, pair.output_space);
    const ForwardCache fct = forward_cached(pair.ft, tb, pair.output_space);
    const Matrix s = similarity_matrix(fcx.emb, fct.emb, pair.kernel);

    Matrix g(m, m);
    for (std::size_t i = 0; i < m * m; ++i) g.raw()[i] = s.raw()[i] / tau;

    // Row and column softmaxes of G, and the loss itself.
    Matrix p(m, m), q(m, m);
    double sum_diag = 0.0, sum_row_lse = 0.0, sum_col_lse = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        sum_diag += g(i, i);
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < m; ++j) mx = std::max(mx, g(i, j));
        double se = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            p(i, j) = std::exp(g(i, j) - mx);
            se += p(i, j);
        }
        for (std::size_t j = 0; j < m; ++j) p(i, j) /= se;
        sum_row_lse += mx + std::log(se);
    }
    for (std::size_t j = 0; j < m; ++j) {
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < m; ++i) mx = std::max(mx, g(i, j));
        double se = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            q(i, j) = std::exp(g(i, j) - mx);
            se += q(i, j);
        }
        for (std::size_t i = 0; i < m; ++i) q(i, j) /= se;
        sum_col_lse += mx + std::log(se);
    }
    const double md = static_cast<double>(m);
    const double loss = -(2.0 * sum_diag - sum_row_lse - sum_col_lse) / md;

    // dL/dG = (P + Q - 2 I) / m; dL/dS = dL/dG / tau; dL/dlog_tau folds the
    // chain rule G = S e^{-log_tau} into -sum(dL/dG * G).
    Matrix dg(m, m);
    double dlog_tau = 0.0;
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) {
            double v = (p(i, j) + q(i, j)) / md;
            if (i == j) v -= 2.0 / md;
            dg(i, j) = v;
            dlog_tau -= v * g(i, j);
        }
    Matrix d_s = dg;
    for (double& v : d_s.raw()) v /= tau;

    Matrix d_ex, d_et;
    kernel_backward(pair.kernel, d_s, fcx.emb, fct.emb, d_ex, d_et);

    const Matrix d_raw_x = projection_backward(d_ex, fcx, pair.output_space);
    const Matrix d_raw_t = projection_backward(d_et, fct, pair.output_space);
    MlpGrads gx = mlp_backward(pair.fx, fcx, d_raw_x);
    MlpGrads gt = mlp_backward(pair.ft, fct, d_raw_t);

    PairGradients out;
    out.dW_x = std::move(gx.dW);
    out.db_x = std::move(gx.db);
    out.dW_t = std::move(gt.dW);
    out.db_t = std::move(gt.db);
    out.dlog_tau = dlog_tau;
    out.loss = loss;
    return out;
}

namespace {

double pair_loss(const EncoderPair& pair, const Matrix& xb, const Matrix& tb) {
    const Matrix ex = encode(pair, WhichEncoder::X, xb);
    const Matrix et = encode(pair, WhichEncoder::T, tb);
    return contrastive_loss(ex, et, pair.kernel, pair.tau());
}

void fd_check_span(EncoderPair& pair, const Matrix& xb, const Matrix& tb, double* params,
                   std::size_t count, const double* analytic, std::size_t max_per_tensor,
                   double step, GradCheckReport& report) {
    if (count == 0) return;
    const std::size_t stride =
        (max_per_tensor == 0 || max_per_tensor >= count) ? 1 : (count + max_per_tensor - 1) / max_per_tensor;
    for (std::size_t i = 0; i < count; i += stride) {
        const double saved = params[i];
        params[i] = saved + step;
        const double lp = pair_loss(pair, xb, tb);
        params[i] = saved - step;
        const double lm = pair_loss(pair, xb, tb);
        params[i] = saved;
        const double fd = (lp - lm) / (2.0 * step);
        const double a = analytic[i];
        const double rel = std::abs(a - fd) / std::max({std::abs(a), std::abs(fd), 1e-3});
        report.max_rel_error = std::max(report.max_rel_error, rel);
        ++report.checked;
    }
}

} // namespace

GradCheckReport grad_check_pair(EncoderPair pair, const Matrix& xb, const Matrix& tb,
                                std::size_t max_per_tensor, double step) {
    const PairGradients g = loss_and_gradients(pair, xb, tb);
    GradCheckReport report;
    for (std::size_t l = 0; l < pair.fx.weights.size(); ++l) {
        fd_check_span(pair, xb, tb, pair.fx.weights[l].data(), pair.fx.weights[l].size(),
                      g.dW_x[l].data(), max_per_tensor, step, report);
        fd_check_span(pair, xb, tb, pair.fx.biases[l].data(), pair.fx.biases[l].size(),
                      g.db_x[l].data(), max_per_tensor, step, report);
    }
    for (std::size_t l = 0; l < pair.ft.weights.size(); ++l) {
        fd_check_span(pair, xb, tb, pair.ft.weights[l].data(), pair.ft.weights[l].size(),
                      g.dW_t[l].data(), max_per_tensor, step, report);
        fd_check_span(pair, xb, tb, pair.ft.biases[l].data(), pair.ft.biases[l].size(),
                      g.db_t[l].data(), max_per_tensor, step, report);
    }
    fd_check_span(pair, xb, tb, &pair.log_tau, 1, &g.dlog_tau, 0, step, report);
    return report;
}

namespace {

struct AdamSlot {
    std::vector<double> m, v;
    void init(std::size_t n) {
        m.assign(n, 0.0);
        v.assign(n, 0.0);
    }
    void step(double* p, const double* grad, std::size_t n, const TrainConfig& cfg, double bc1,
              double bc2) {
        for (std::size_t i = 0; i < n; ++i) {
            m[i] = cfg.adam_beta1 * m[i] + (1.0 - cfg.adam_beta1) * grad[i];
            v[i] = cfg.adam_beta2 * v[i] + (1.0 - cfg.adam_beta2) * grad[i] * grad[i];
            const double mh = m[i] / bc1;
            const double vh = v[i] / bc2;
            p[i] -= cfg.learning_rate * mh / (std::sqrt(vh) + cfg.adam_eps);
        }
    }
};

struct AdamState {
    std::vector<AdamSlot> wx, bx, wt, bt;
    AdamSlot lt;
    std::size_t t = 0;

    explicit AdamState(const EncoderPair& pair) {
        wx.resize(pair.fx.weights.size());
        bx.resize(pair.fx.biases.size());
        wt.resize(pair.ft.weights.size());
        bt.resize(pair.ft.biases.size());
        for (std::size_t l = 0; l < wx.size(); ++l) {
            wx[l].init(pair.fx.weights[l].size());
            bx[l].init(pair.fx.biases[l].size());
        }
        for (std::size_t l = 0; l < wt.size(); ++l) {
            wt[l].init(pair.ft.weights[l].size());
            bt[l].init(pair.ft.biases[l].size());
        }
        lt.init(1);
    }

    void apply(EncoderPair& pair, const PairGradients& g, const TrainConfig& cfg,
               bool learn_tau) {
        ++t;
        const double bc1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(t));
        const double bc2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(t));
        for (std::size_t l = 0; l < wx.size(); ++l) {
            wx[l].step(pair.fx.weights[l].data(), g.dW_x[l].data(), g.dW_x[l].size(), cfg, bc1,
                       bc2);
            bx[l].step(pair.fx.biases[l].data(), g.db_x[l].data(), g.db_x[l].size(), cfg, bc1,
                       bc2);
        }
        for (std::size_t l = 0; l < wt.size(); ++l) {
            wt[l].step(pair.ft.weights[l].data(), g.dW_t[l].data(), g.dW_t[l].size(), cfg, bc1,
                       bc2);
            bt[l].step(pair.ft.biases[l].data(), g.db_t[l].data(), g.db_t[l].size(), cfg, bc1,
                       bc2);
        }
        if (learn_tau) {
            lt.step(&pair.log_tau, &g.dlog_tau, 1, cfg, bc1, bc2);
            pair.log_tau = std::clamp(pair.log_tau, kLogTauMin, kLogTauMax);
        }
    }
};

void fisher_yates(std::vector<std::size_t>& idx, RngState& rng) {
    for (std::size_t i = idx.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng.next_u64() % i);
        std::swap(idx[i - 1], idx[j]);
    }
}

Matrix gather_rows(const Matrix& src, const std::vector<std::size_t>& idx, std::size_t start,
                   std::size_t count) {
    Matrix out(count, src.cols());
    for (std::size_t r = 0; r < count; ++r) {
        const double* s = src.row_ptr(idx[start + r]);
        double* d = out.row_ptr(r);
        for (std::size_t j = 0; j < src.cols(); ++j) d[j] = s[j];
    }
    return out;
}

} // namespace

TrainResult train(const PairedDataset& ds, const TrainConfig& cfg, const OutputSpace& space,
                  const SimilarityKernel& kernel) {
    cfg.validate();
    space.validate();
    kernel.validate();
    if (ds.n() < 2) throw ValueError("train: dataset needs at least 2 rows");

    RngState root(cfg.seed);
    RngState rx = root.derive_child("encoder-x");
    RngState rt = root.derive_child("encoder-t");

    EncoderPair pair;
    pair.fx = build_mlp(rx, ds.obs_dim(), cfg.hidden_width, cfg.hidden_layers, space.dim);
    pair.ft = build_mlp(rt, ds.obs_dim(), cfg.hidden_width, cfg.hidden_layers, space.dim);
    if (space.kind == SpaceKind::BOX) {
        // Start interior. A coordinate whose every sample lands beyond the same
        // face at init has zero clamp subgradient everywhere and never re-enters.
        for (Mlp* net : {&pair.fx, &pair.ft}) {
            for (double& v : net->weights.back().raw()) v *= 0.1;
            for (double& v : net->biases.back().raw()) v *= 0.1;
        }
    }
    pair.output_space = space;
    pair.kernel = kernel;
    pair.log_tau = std::log(cfg.tau_init);
    pair.seed = cfg.seed;

    if (cfg.grad_check) {
        const std::size_t probe = std::min<std::size_t>(ds.n(), 16);
        std::vector<std::size_t> head(probe);
        std::iota(head.begin(), head.end(), std::size_t{0});
        const Matrix xb = gather_rows(ds.X, head, 0, probe);
        const Matrix tb = gather_rows(ds.T, head, 0, probe);
        const GradCheckReport rep = grad_check_pair(pair, xb, tb, 40, 1e-5);
        if (rep.max_rel_error > 1e-4)
            throw ConvergenceError("train: gradient check failed, max relative error " +
                                   std::to_string(rep.max_rel_error));
    }

    const bool learn_tau = cfg.temperature_mode == TemperatureMode::LEARNABLE;
    AdamState opt(pair);
    RngState shuffle_rng = root.derive_child("shuffle");
    std::vector<std::size_t> idx(ds.n());
    std::iota(idx.begin(), idx.end(), std::size_t{0});

    Vector history(cfg.epochs);
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        fisher_yates(idx, shuffle_rng);
        double weighted = 0.0;
        std::size_t rows = 0;
        for (std::size_t start = 0; start < ds.n(); start += cfg.batch_size) {
            const std::size_t bsz = std::min(cfg.batch_size, ds.n() - start);
            if (bsz < 2) break; // a contrastive batch needs at least one negative
            const Matrix xb = gather_rows(ds.X, idx, start, bsz);
            const Matrix tb = gather_rows(ds.T, idx, start, bsz);
            const PairGradients g = loss_and_gradients(pair, xb, tb);
            if (!std::isfinite(g.loss))
                throw ConvergenceError(
                    "train: non-finite loss (lr " + std::to_string(cfg.learning_rate) +
                    ", epoch " + std::to_string(epoch) + ", batch at row " +
                    std::to_string(start) + ")");
            opt.apply(pair, g, cfg, learn_tau);
            weighted += g.loss * static_cast<double>(bsz);
            rows += bsz;
        }
        history[epoch] = weighted / static_cast<double>(rows);
    }
    return TrainResult{std::move(pair), std::move(history)};
}

} // namespace midl
