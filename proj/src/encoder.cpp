#include "midlab/encoder.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "midlab/linalg.hpp"
#include "midlab/matrix_io.hpp"
#include "midlab/serde.hpp"

namespace midl {

std::string kernel_kind_name(KernelKind kind) {
    switch (kind) {
        case KernelKind::DOT: return "dot";
        case KernelKind::NEG_L1: return "neg_l1";
        case KernelKind::NEG_L2SQ: return "neg_l2sq";
        case KernelKind::NEG_LBETA: return "neg_lbeta";
    }
    throw ValueError("kernel_kind_name: unknown kind");
}

SimilarityKernel SimilarityKernel::dot() { return SimilarityKernel{KernelKind::DOT, 3.0}; }
SimilarityKernel SimilarityKernel::neg_l1() { return SimilarityKernel{KernelKind::NEG_L1, 3.0}; }
SimilarityKernel SimilarityKernel::neg_l2sq() {
    return SimilarityKernel{KernelKind::NEG_L2SQ, 3.0};
}
SimilarityKernel SimilarityKernel::neg_lbeta(double beta) {
    SimilarityKernel k{KernelKind::NEG_LBETA, beta};
    k.validate();
    return k;
}

void SimilarityKernel::validate() const {
    if (kind == KernelKind::NEG_LBETA && !(beta >= 1.0))
        throw ValueError("SimilarityKernel: neg_lbeta needs beta >= 1");
}

double SimilarityKernel::operator()(const double* a, const double* b, std::size_t d) const {
    double s = 0.0;
    switch (kind) {
        case KernelKind::DOT:
            for (std::size_t i = 0; i < d; ++i) s += a[i] * b[i];
            return s;
        case KernelKind::NEG_L1:
            for (std::size_t i = 0; i < d; ++i) s += std::abs(a[i] - b[i]);
            return -s;
        case KernelKind::NEG_L2SQ:
            for (std::size_t i = 0; i < d; ++i) {
                const double diff = a[i] - b[i];
                s += diff * diff;
            }
            return -s;
        case KernelKind::NEG_LBETA:
            for (std::size_t i = 0; i < d; ++i) s += std::pow(std::abs(a[i] - b[i]), beta);
            return -s;
    }
    throw ValueError("SimilarityKernel: unknown kind");
}

std::string space_kind_name(SpaceKind kind) {
    switch (kind) {
        case SpaceKind::SPHERE: return "sphere";
        case SpaceKind::BOX: return "box";
        case SpaceKind::UNBOUNDED: return "unbounded";
    }
    throw ValueError("space_kind_name: unknown kind");
}

OutputSpace OutputSpace::sphere(std::size_t dim) {
    OutputSpace s;
    s.kind = SpaceKind::SPHERE;
    s.dim = dim;
    s.validate();
    return s;
}

OutputSpace OutputSpace::unit_box(std::size_t dim) {
    OutputSpace s;
    s.kind = SpaceKind::BOX;
    s.dim = dim;
    s.box = Box::symmetric_unit(dim);
    s.validate();
    return s;
}

OutputSpace OutputSpace::unbounded(std::size_t dim) {
    OutputSpace s;
    s.kind = SpaceKind::UNBOUNDED;
    s.dim = dim;
    s.validate();
    return s;
}

void OutputSpace::validate() const {
    if (dim < 1) throw ValueError("OutputSpace: dim >= 1 required");
    if (kind == SpaceKind::SPHERE && dim < 2)
        throw ValueError("OutputSpace: sphere needs dim >= 2");
    if (kind == SpaceKind::BOX) {
        box.validate();
        if (box.dim() != dim) throw ValueError("OutputSpace: box dimension != dim");
    }
}

std::size_t Mlp::parameter_count() const {
    std::size_t n = 0;
    for (const Matrix& w : weights) n += w.size();
    for (const Vector& b : biases) n += b.size();
    return n;
}

Mlp build_mlp(RngState& rng, std::size_t input_dim, std::size_t hidden_width,
              std::size_t hidden_layers, std::size_t output_dim, double leak) {
    if (input_dim < 1 || output_dim < 1 || hidden_width < 1)
        throw ValueError("build_mlp: dims must be >= 1");
    if (!(leak > 0.0) || !(leak <= 1.0)) throw ValueError("build_mlp: need 0 < leak <= 1");

    std::vector<std::size_t> dims;
    dims.push_back(input_dim);
    for (std::size_t l = 0; l < hidden_layers; ++l) dims.push_back(hidden_width);
    dims.push_back(output_dim);

    Mlp net;
    net.leak = leak;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        const std::size_t fan_in = dims[l], fan_out = dims[l + 1];
        const double std_dev = std::sqrt(2.0 / static_cast<double>(fan_in));
        Matrix w(fan_out, fan_in);
        for (double& v : w.raw()) v = std_dev * rng.gaussian();
        net.weights.push_back(std::move(w));
        net.biases.emplace_back(fan_out, 0.0);
    }
    return net;
}

Matrix mlp_forward(const Mlp& net, const Matrix& rows) {
    if (net.weights.empty()) throw ValueError("mlp_forward: empty network");
    if (rows.cols() != net.input_dim())
        throw ShapeError("mlp_forward: input has " + std::to_string(rows.cols()) +
                         " cols, network expects " + std::to_string(net.input_dim()));
    Matrix a = rows;
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
        Matrix z = matmul(a, net.weights[l].transposed());
        for (std::size_t i = 0; i < z.rows(); ++i)
            for (std::size_t j = 0; j < z.cols(); ++j) z(i, j) += net.biases[l][j];
        if (l + 1 < net.weights.size())
            for (double& v : z.raw())
                if (v < 0.0) v *= net.leak;
        a = std::move(z);
    }
    return a;
}

Matrix project_output(const Matrix& raw, const OutputSpace& space) {
    space.validate();
    if (raw.cols() != space.dim)
        throw ShapeError("project_output: raw dim " + std::to_string(raw.cols()) +
                         " != space dim " + std::to_string(space.dim));
    Matrix out = raw;
    switch (space.kind) {
        case SpaceKind::SPHERE:
            for (std::size_t i = 0; i < out.rows(); ++i) {
                double n = 0.0;
                for (std::size_t j = 0; j < out.cols(); ++j) n += out(i, j) * out(i, j);
                n = std::sqrt(n);
                if (n < 1e-300) {
                    // A zero row has no direction; pin it to the first axis.
                    out(i, 0) = 1.0;
                    for (std::size_t j = 1; j < out.cols(); ++j) out(i, j) = 0.0;
                } else {
                    for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) /= n;
                }
            }
            break;
        case SpaceKind::BOX:
            // Clamp, not a smooth squash: inside the box the projection is an
            // isometry, so the kernel sees undistorted distances, and mass
            // pushed past a face is pinned to it rather than compressed near it.
            for (std::size_t i = 0; i < out.rows(); ++i)
                for (std::size_t j = 0; j < out.cols(); ++j)
                    out(i, j) = std::clamp(out(i, j), space.box.lo[j], space.box.hi[j]);
            break;
        case SpaceKind::UNBOUNDED: break;
    }
    return out;
}

double EncoderPair::tau() const { return std::exp(log_tau); }

Matrix encode(const EncoderPair& pair, WhichEncoder which, const Matrix& data) {
    const Mlp& net = which == WhichEncoder::X ? pair.fx : pair.ft;
    return project_output(mlp_forward(net, data), pair.output_space);
}

namespace {

Json mlp_manifest(const Mlp& net) {
    Json j;
    j["leak"] = net.leak;
    j["layers"] = net.weights.size();
    std::vector<std::size_t> dims;
    dims.push_back(net.input_dim());
    for (const Matrix& w : net.weights) dims.push_back(w.rows());
    j["dims"] = dims;
    return j;
}

void save_mlp(const Mlp& net, const std::string& dir, const std::string& prefix) {
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
        save_matrix(net.weights[l], dir + "/" + prefix + "_w" + std::to_string(l) + ".midl");
        Matrix b(1, net.biases[l].size());
        for (std::size_t j = 0; j < net.biases[l].size(); ++j) b(0, j) = net.biases[l][j];
        save_matrix(b, dir + "/" + prefix + "_b" + std::to_string(l) + ".midl");
    }
}

Mlp load_mlp(const Json& manifest, const std::string& dir, const std::string& prefix) {
    Mlp net;
    net.leak = manifest.at("leak").get<double>();
    const std::size_t layers = manifest.at("layers").get<std::size_t>();
    for (std::size_t l = 0; l < layers; ++l) {
        net.weights.push_back(load_matrix(dir + "/" + prefix + "_w" + std::to_string(l) + ".midl"));
        Matrix b = load_matrix(dir + "/" + prefix + "_b" + std::to_string(l) + ".midl");
        Vector bias(b.cols());
        for (std::size_t j = 0; j < b.cols(); ++j) bias[j] = b(0, j);
        net.biases.push_back(std::move(bias));
    }
    return net;
}

} // namespace

void save_encoder_pair(const EncoderPair& pair, const std::string& dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("save_encoder_pair: cannot create " + dir + ": " + ec.message());

    save_mlp(pair.fx, dir, "fx");
    save_mlp(pair.ft, dir, "ft");
    Json manifest;
    manifest["fx"] = mlp_manifest(pair.fx);
    manifest["ft"] = mlp_manifest(pair.ft);
    manifest["output_space"] = to_json(pair.output_space);
    manifest["kernel"] = to_json(pair.kernel);
    manifest["log_tau"] = pair.log_tau;
    manifest["seed"] = pair.seed;
    std::ofstream f(dir + "/manifest.json", std::ios::trunc);
    if (!f) throw IoError("save_encoder_pair: cannot write manifest in " + dir);
    f << manifest.dump(2) << '\n';
}

EncoderPair load_encoder_pair(const std::string& dir) {
    std::ifstream f(dir + "/manifest.json");
    if (!f) throw IoError("load_encoder_pair: missing manifest.json in " + dir);
    Json manifest;
    try {
        f >> manifest;
    } catch (const std::exception& e) {
        throw IoError("load_encoder_pair: bad manifest in " + dir + ": " + e.what());
    }
    require_keys(manifest, {"fx", "ft", "output_space", "kernel", "log_tau", "seed"},
                 dir + "/manifest.json");
    EncoderPair pair;
    pair.fx = load_mlp(manifest.at("fx"), dir, "fx");
    pair.ft = load_mlp(manifest.at("ft"), dir, "ft");
    pair.output_space = output_space_from_json(manifest.at("output_space"), dir + " output_space");
    pair.kernel = kernel_from_json(manifest.at("kernel"), dir + " kernel");
    pair.log_tau = manifest.at("log_tau").get<double>();
    pair.seed = manifest.at("seed").get<std::uint64_t>();
    return pair;
}

} // namespace midl
