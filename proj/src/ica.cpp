#include "midlab/ica.hpp"

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>

#include "json.hpp"

#include "midlab/errors.hpp"
#include "midlab/linalg.hpp"
#include "midlab/matrix_io.hpp"

namespace midl {

namespace {

Vector column_means(const Matrix& data) {
    Vector mean(data.cols());
    for (std::size_t i = 0; i < data.rows(); ++i) {
        const double* row = data.row_ptr(i);
        for (std::size_t j = 0; j < data.cols(); ++j) mean[j] += row[j];
    }
    const double inv = 1.0 / static_cast<double>(data.rows());
    for (std::size_t j = 0; j < data.cols(); ++j) mean[j] *= inv;
    return mean;
}

} // namespace

PcaModel fit_pca(const Matrix& data, std::size_t k, bool whiten) {
    const std::size_t n = data.rows();
    const std::size_t d = data.cols();
    if (n < 2) throw ValueError("fit_pca: need at least 2 rows, got " + std::to_string(n));
    const std::size_t k_max = std::min(n - 1, d);
    if (k < 1 || k > k_max) {
        throw ValueError("fit_pca: k = " + std::to_string(k) + " outside [1, " +
                         std::to_string(k_max) + "] for " + std::to_string(n) + "x" +
                         std::to_string(d) + " data");
    }
    if (!data.all_finite()) throw ValueError("fit_pca: data contains non-finite entries");

    PcaModel model;
    model.mean = column_means(data);
    model.whiten = whiten;

    Matrix cov(d, d);
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = data.row_ptr(i);
        for (std::size_t a = 0; a < d; ++a) {
            const double ca = row[a] - model.mean[a];
            double* cov_row = cov.row_ptr(a);
            for (std::size_t b = a; b < d; ++b) cov_row[b] += ca * (row[b] - model.mean[b]);
        }
    }
    const double inv = 1.0 / static_cast<double>(n - 1);
    for (std::size_t a = 0; a < d; ++a)
        for (std::size_t b = a; b < d; ++b) {
            cov(a, b) *= inv;
            cov(b, a) = cov(a, b);
        }

    SymEig eig = sym_eig(cov);
    model.components = Matrix(k, d);
    model.eigenvalues = Vector(k);
    for (std::size_t r = 0; r < k; ++r) {
        model.eigenvalues[r] = std::max(eig.eigenvalues[r], 0.0);
        for (std::size_t j = 0; j < d; ++j) model.components(r, j) = eig.eigenvectors(j, r);
    }
    return model;
}

Matrix pca_transform(const PcaModel& model, const Matrix& data) {
    const std::size_t d = model.input_dim();
    if (data.cols() != d) {
        throw ShapeError("pca_transform: data has " + std::to_string(data.cols()) +
                         " columns, model expects " + std::to_string(d));
    }
    const std::size_t k = model.k();
    Matrix out(data.rows(), k);
    Vector scale(k);
    for (std::size_t r = 0; r < k; ++r) {
        double s = 1.0;
        if (model.whiten) {
            if (model.eigenvalues[r] <= 0.0) {
                throw ValueError("pca_transform: cannot whiten component " + std::to_string(r) +
                                 " with eigenvalue " + std::to_string(model.eigenvalues[r]));
            }
            s = 1.0 / std::sqrt(model.eigenvalues[r]);
        }
        scale[r] = s;
    }
    for (std::size_t i = 0; i < data.rows(); ++i) {
        const double* row = data.row_ptr(i);
        for (std::size_t r = 0; r < k; ++r) {
            const double* comp = model.components.row_ptr(r);
            double acc = 0.0;
            for (std::size_t j = 0; j < d; ++j) acc += (row[j] - model.mean[j]) * comp[j];
            out(i, r) = acc * scale[r];
        }
    }
    return out;
}

Matrix pca_inverse_transform(const PcaModel& model, const Matrix& coords) {
    const std::size_t k = model.k();
    if (coords.cols() != k) {
        throw ShapeError("pca_inverse_transform: coords have " + std::to_string(coords.cols()) +
                         " columns, model has k = " + std::to_string(k));
    }
    const std::size_t d = model.input_dim();
    Matrix out(coords.rows(), d);
    for (std::size_t i = 0; i < coords.rows(); ++i) {
        double* dst = out.row_ptr(i);
        for (std::size_t j = 0; j < d; ++j) dst[j] = model.mean[j];
        for (std::size_t r = 0; r < k; ++r) {
            double c = coords(i, r);
            if (model.whiten) c *= std::sqrt(model.eigenvalues[r]);
            const double* comp = model.components.row_ptr(r);
            for (std::size_t j = 0; j < d; ++j) dst[j] += c * comp[j];
        }
    }
    return out;
}

std::string ica_nonlinearity_name(IcaNonlinearity g) {
    switch (g) {
        case IcaNonlinearity::LOGCOSH: return "logcosh";
        case IcaNonlinearity::CUBE: return "cube";
    }
    throw ValueError("ica_nonlinearity_name: unknown enum value");
}

namespace {

IcaNonlinearity nonlinearity_from_name(const std::string& name) {
    if (name == "logcosh") return IcaNonlinearity::LOGCOSH;
    if (name == "cube") return IcaNonlinearity::CUBE;
    throw ValueError("unknown ICA nonlinearity '" + name + "'");
}

// W <- (W W^T)^{-1/2} W keeps the rows an orthonormal basis without
// privileging any one of them.
Matrix symmetric_decorrelate(const Matrix& w) {
    const std::size_t k = w.rows();
    Matrix gram(k, k);
    for (std::size_t a = 0; a < k; ++a)
        for (std::size_t b = a; b < k; ++b) {
            double acc = 0.0;
            for (std::size_t j = 0; j < w.cols(); ++j) acc += w(a, j) * w(b, j);
            gram(a, b) = acc;
            gram(b, a) = acc;
        }
    SymEig eig = sym_eig(gram);
    for (std::size_t r = 0; r < k; ++r) {
        if (eig.eigenvalues[r] < 1e-12) {
            throw ConvergenceError("fastica: degenerate unmixing matrix (eigenvalue " +
                                   std::to_string(eig.eigenvalues[r]) + ")");
        }
    }
    // (W W^T)^{-1/2} = V diag(1/sqrt(lambda)) V^T
    Matrix inv_sqrt(k, k);
    for (std::size_t a = 0; a < k; ++a)
        for (std::size_t b = 0; b < k; ++b) {
            double acc = 0.0;
            for (std::size_t r = 0; r < k; ++r)
                acc += eig.eigenvectors(a, r) * eig.eigenvectors(b, r) /
                       std::sqrt(eig.eigenvalues[r]);
            inv_sqrt(a, b) = acc;
        }
    return matmul(inv_sqrt, w);
}

} // namespace

IcaModel fit_fastica(const Matrix& data, std::size_t k,
                     IcaNonlinearity nonlinearity, std::size_t max_iter, double tol,
                     RngState& rng) {
    if (max_iter < 1) throw ValueError("fit_fastica: max_iter must be >= 1");
    if (!(tol > 0.0)) throw ValueError("fit_fastica: tol must be positive");

    IcaModel model;
    model.nonlinearity = nonlinearity;
    model.pca = fit_pca(data, k, /*whiten=*/true);
    Matrix y = pca_transform(model.pca, data); // n x k, unit covariance
    const std::size_t n = y.rows();

    Matrix w(k, k);
    for (std::size_t a = 0; a < k; ++a)
        for (std::size_t b = 0; b < k; ++b) w(a, b) = rng.gaussian();
    w = symmetric_decorrelate(w);

    const double inv_n = 1.0 / static_cast<double>(n);
    Matrix u(n, k);
    for (std::size_t iter = 0; iter < max_iter; ++iter) {
        // u = y w^T: current source estimates.
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t a = 0; a < k; ++a) {
                double acc = 0.0;
                for (std::size_t j = 0; j < k; ++j) acc += y(i, j) * w(a, j);
                u(i, a) = acc;
            }

        Matrix w_new(k, k);
        Vector gprime_mean(k);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t a = 0; a < k; ++a) {
                double g, gp;
                if (nonlinearity == IcaNonlinearity::LOGCOSH) {
                    g = std::tanh(u(i, a));
                    gp = 1.0 - g * g;
                } else {
                    g = u(i, a) * u(i, a) * u(i, a);
                    gp = 3.0 * u(i, a) * u(i, a);
                }
                gprime_mean[a] += gp;
                for (std::size_t j = 0; j < k; ++j) w_new(a, j) += g * y(i, j);
            }
        }
        for (std::size_t a = 0; a < k; ++a) {
            gprime_mean[a] *= inv_n;
            for (std::size_t j = 0; j < k; ++j)
                w_new(a, j) = w_new(a, j) * inv_n - gprime_mean[a] * w(a, j);
        }
        w_new = symmetric_decorrelate(w_new);

        double delta = 0.0;
        for (std::size_t a = 0; a < k; ++a) {
            double dp = 0.0;
            for (std::size_t j = 0; j < k; ++j) dp += w_new(a, j) * w(a, j);
            delta = std::max(delta, std::abs(1.0 - std::abs(dp)));
        }
        w = w_new;
        model.iterations_used = iter + 1;
        if (delta < tol) {
            model.converged = true;
            break;
        }
    }

    // Fix each row's sign so its largest-magnitude entry is positive.
    for (std::size_t a = 0; a < k; ++a) {
        std::size_t j_max = 0;
        for (std::size_t j = 1; j < k; ++j)
            if (std::abs(w(a, j)) > std::abs(w(a, j_max))) j_max = j;
        if (w(a, j_max) < 0.0)
            for (std::size_t j = 0; j < k; ++j) w(a, j) = -w(a, j);
    }
    model.unmixing = w;
    return model;
}

Matrix ica_transform(const IcaModel& model, const Matrix& data) {
    Matrix y = pca_transform(model.pca, data);
    const std::size_t k = model.k();
    Matrix out(y.rows(), k);
    for (std::size_t i = 0; i < y.rows(); ++i)
        for (std::size_t a = 0; a < k; ++a) {
            double acc = 0.0;
            for (std::size_t j = 0; j < k; ++j) acc += y(i, j) * model.unmixing(a, j);
            out(i, a) = acc;
        }
    return out;
}

Matrix pipeline_ica(const Matrix& embeddings, std::size_t k, RngState& rng) {
    IcaModel model =
        fit_fastica(embeddings, k, IcaNonlinearity::LOGCOSH, 500, 1e-6, rng);
    return ica_transform(model, embeddings);
}

Matrix pipeline_pca_ica(const Matrix& embeddings, std::size_t k_pca, std::size_t k_ica,
                        RngState& rng) {
    if (k_ica > k_pca) {
        throw ValueError("pipeline_pca_ica: k_ica = " + std::to_string(k_ica) +
                         " exceeds k_pca = " + std::to_string(k_pca));
    }
    PcaModel reducer = fit_pca(embeddings, k_pca, /*whiten=*/false);
    Matrix reduced = pca_transform(reducer, embeddings);
    IcaModel model = fit_fastica(reduced, k_ica, IcaNonlinearity::LOGCOSH, 500, 1e-6, rng);
    return ica_transform(model, reduced);
}

namespace {

Matrix vector_as_row(const Vector& v) {
    Matrix m(1, v.size());
    for (std::size_t j = 0; j < v.size(); ++j) m(0, j) = v[j];
    return m;
}

Vector row_as_vector(const Matrix& m, const std::string& what) {
    if (m.rows() != 1) throw IoError(what + ": expected a single-row matrix");
    Vector v(m.cols());
    for (std::size_t j = 0; j < m.cols(); ++j) v[j] = m(0, j);
    return v;
}

} // namespace

void save_pca(const PcaModel& model, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    save_matrix(vector_as_row(model.mean), (fs::path(dir) / "mean.midl").string());
    save_matrix(model.components, (fs::path(dir) / "components.midl").string());
    save_matrix(vector_as_row(model.eigenvalues), (fs::path(dir) / "eigenvalues.midl").string());
    nlohmann::json manifest;
    manifest["whiten"] = model.whiten;
    std::ofstream out(fs::path(dir) / "pca.json");
    if (!out) throw IoError("save_pca: cannot open " + dir + "/pca.json");
    out << manifest.dump(2) << "\n";
}

PcaModel load_pca(const std::string& dir) {
    namespace fs = std::filesystem;
    PcaModel model;
    model.mean = row_as_vector(load_matrix((fs::path(dir) / "mean.midl").string()), "load_pca mean");
    model.components = load_matrix((fs::path(dir) / "components.midl").string());
    model.eigenvalues = row_as_vector(
        load_matrix((fs::path(dir) / "eigenvalues.midl").string()), "load_pca eigenvalues");
    std::ifstream in(fs::path(dir) / "pca.json");
    if (!in) throw IoError("load_pca: cannot open " + dir + "/pca.json");
    nlohmann::json manifest = nlohmann::json::parse(in, nullptr, true);
    if (!manifest.contains("whiten") || !manifest["whiten"].is_boolean())
        throw ConfigError("load_pca: manifest missing boolean 'whiten'");
    model.whiten = manifest["whiten"].get<bool>();
    if (model.components.rows() != model.eigenvalues.size() ||
        model.components.cols() != model.mean.size()) {
        throw ShapeError("load_pca: inconsistent shapes in " + dir);
    }
    return model;
}

void save_ica(const IcaModel& model, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    save_pca(model.pca, (fs::path(dir) / "pca").string());
    save_matrix(model.unmixing, (fs::path(dir) / "unmixing.midl").string());
    nlohmann::json manifest;
    manifest["nonlinearity"] = ica_nonlinearity_name(model.nonlinearity);
    manifest["iterations_used"] = model.iterations_used;
    manifest["converged"] = model.converged;
    std::ofstream out(fs::path(dir) / "ica.json");
    if (!out) throw IoError("save_ica: cannot open " + dir + "/ica.json");
    out << manifest.dump(2) << "\n";
}

IcaModel load_ica(const std::string& dir) {
    namespace fs = std::filesystem;
    IcaModel model;
    model.pca = load_pca((fs::path(dir) / "pca").string());
    model.unmixing = load_matrix((fs::path(dir) / "unmixing.midl").string());
    std::ifstream in(fs::path(dir) / "ica.json");
    if (!in) throw IoError("load_ica: cannot open " + dir + "/ica.json");
    nlohmann::json manifest = nlohmann::json::parse(in, nullptr, true);
    for (const char* key : {"nonlinearity", "iterations_used", "converged"}) {
        if (!manifest.contains(key))
            throw ConfigError("load_ica: manifest missing '" + std::string(key) + "'");
    }
    model.nonlinearity = nonlinearity_from_name(manifest["nonlinearity"].get<std::string>());
    model.iterations_used = manifest["iterations_used"].get<std::size_t>();
    model.converged = manifest["converged"].get<bool>();
    if (model.unmixing.rows() != model.pca.k() || model.unmixing.cols() != model.pca.k())
        throw ShapeError("load_ica: unmixing shape does not match PCA stage in " + dir);
    return model;
}

} // namespace midl
