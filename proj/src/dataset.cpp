#include "midlab/dataset.hpp"

#include <filesystem>
#include <fstream>

#include "midlab/matrix_io.hpp"
#include "midlab/serde.hpp"

namespace midl {

PairedDataset generate_pairs(RngState& rng, const LatentSpaceSpec& spec, const MixerMlp& mixer_x,
                             const MixerMlp& mixer_t, std::size_t n) {
    spec.validate();
    if (n < 1) throw ValueError("generate_pairs: n >= 1 required");
    if (mixer_x.input_dim() != mixer_t.input_dim())
        throw ShapeError("generate_pairs: mixers disagree on input dim");
    if (mixer_x.input_dim() <= spec.dim)
        throw ShapeError("generate_pairs: mixer input dim must exceed latent dim");
    const std::size_t specific_dim = mixer_x.input_dim() - spec.dim;

    PairedDataset ds;
    ds.spec = spec;
    ds.seed = rng.seed();
    ds.mixer_hash_x = mixer_x.param_hash();
    ds.mixer_hash_t = mixer_t.param_hash();
    ds.Zx = Matrix(n, spec.dim);
    ds.Zt = Matrix(n, spec.dim);
    ds.Mx = Matrix(n, specific_dim);
    ds.Mt = Matrix(n, specific_dim);
    ds.X = Matrix(n, mixer_x.input_dim());
    ds.T = Matrix(n, mixer_x.input_dim());

    Vector u(mixer_x.input_dim());
    for (std::size_t i = 0; i < n; ++i) {
        const Vector zx = spec.sample_prior(rng);
        const Vector zt = spec.sample_conditional(rng, zx);
        const Vector mx = sample_gaussian(rng, specific_dim);
        const Vector mt = sample_gaussian(rng, specific_dim);
        ds.Zx.set_row(i, zx);
        ds.Zt.set_row(i, zt);
        ds.Mx.set_row(i, mx);
        ds.Mt.set_row(i, mt);

        for (std::size_t j = 0; j < spec.dim; ++j) u[j] = zx[j];
        for (std::size_t j = 0; j < specific_dim; ++j) u[spec.dim + j] = mx[j];
        ds.X.set_row(i, mixer_forward(mixer_x, u));

        for (std::size_t j = 0; j < spec.dim; ++j) u[j] = zt[j];
        for (std::size_t j = 0; j < specific_dim; ++j) u[spec.dim + j] = mt[j];
        ds.T.set_row(i, mixer_forward(mixer_t, u));
    }
    return ds;
}

void save_dataset(const PairedDataset& ds, const std::string& dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("save_dataset: cannot create " + dir + ": " + ec.message());

    save_matrix(ds.Zx, dir + "/zx.midl");
    save_matrix(ds.Zt, dir + "/zt.midl");
    save_matrix(ds.Mx, dir + "/mx.midl");
    save_matrix(ds.Mt, dir + "/mt.midl");
    save_matrix(ds.X, dir + "/x.midl");
    save_matrix(ds.T, dir + "/t.midl");

    Json manifest;
    manifest["seed"] = ds.seed;
    manifest["n"] = ds.n();
    manifest["spec"] = to_json(ds.spec);
    manifest["mixer_hash_x"] = ds.mixer_hash_x;
    manifest["mixer_hash_t"] = ds.mixer_hash_t;
    std::ofstream f(dir + "/manifest.json", std::ios::trunc);
    if (!f) throw IoError("save_dataset: cannot write manifest in " + dir);
    f << manifest.dump(2) << '\n';
}

PairedDataset load_dataset(const std::string& dir) {
    std::ifstream f(dir + "/manifest.json");
    if (!f) throw IoError("load_dataset: missing manifest.json in " + dir);
    Json manifest;
    try {
        f >> manifest;
    } catch (const std::exception& e) {
        throw IoError("load_dataset: bad manifest in " + dir + ": " + e.what());
    }
    require_keys(manifest, {"seed", "n", "spec", "mixer_hash_x", "mixer_hash_t"},
                 dir + "/manifest.json");

    PairedDataset ds;
    ds.seed = manifest.at("seed").get<std::uint64_t>();
    ds.mixer_hash_x = manifest.at("mixer_hash_x").get<std::uint64_t>();
    ds.mixer_hash_t = manifest.at("mixer_hash_t").get<std::uint64_t>();
    ds.spec = latent_space_from_json(manifest.at("spec"), dir + "/manifest.json spec");
    ds.Zx = load_matrix(dir + "/zx.midl");
    ds.Zt = load_matrix(dir + "/zt.midl");
    ds.Mx = load_matrix(dir + "/mx.midl");
    ds.Mt = load_matrix(dir + "/mt.midl");
    ds.X = load_matrix(dir + "/x.midl");
    ds.T = load_matrix(dir + "/t.midl");

    const std::size_t n = ds.Zx.rows();
    if (ds.Zt.rows() != n || ds.Mx.rows() != n || ds.Mt.rows() != n || ds.X.rows() != n ||
        ds.T.rows() != n)
        throw IoError("load_dataset: row counts disagree in " + dir);
    const std::size_t expected =
        static_cast<std::size_t>(manifest.at("n").get<std::uint64_t>());
    if (n != expected) throw IoError("load_dataset: manifest n mismatch in " + dir);
    return ds;
}

} // namespace midl
