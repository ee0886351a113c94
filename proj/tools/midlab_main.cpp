// midlab: synthetic identifiability lab for multimodal contrastive learning.
//
// Subcommands: generate, train, evaluate, run, report, ica. Every run is
// deterministic given its seed; LAB_DATA_DIR overrides the default output
// root.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "midlab/dataset.hpp"
#include "midlab/errors.hpp"
#include "midlab/experiment.hpp"
#include "midlab/loss.hpp"
#include "midlab/matrix_io.hpp"
#include "midlab/metrics.hpp"
#include "midlab/train.hpp"

namespace {

namespace fs = std::filesystem;

midl::Matrix head_rows(const midl::Matrix& m, std::size_t count) {
    const std::size_t n = std::min(count, m.rows());
    midl::Matrix out(n, m.cols());
    for (std::size_t i = 0; i < n; ++i) {
        const double* src = m.row_ptr(i);
        double* dst = out.row_ptr(i);
        for (std::size_t j = 0; j < m.cols(); ++j) dst[j] = src[j];
    }
    return out;
}

int run_train(const std::string& config_path, const std::string& data_dir,
              const std::string& out_dir, std::optional<std::uint64_t> seed) {
    const midl::ExperimentSpec spec = midl::load_experiment(config_path);
    const midl::PairedDataset ds = midl::load_dataset(data_dir);
    midl::TrainConfig cfg = spec.train;
    cfg.seed = seed.value_or(spec.seeds.front());
    midl::TrainResult result = midl::train(ds, cfg, spec.model_space, spec.model_kernel);
    midl::save_encoder_pair(result.pair, out_dir);

    midl::Matrix history(1, result.loss_history.size());
    for (std::size_t e = 0; e < result.loss_history.size(); ++e)
        history(0, e) = result.loss_history[e];
    midl::save_matrix(history, (fs::path(out_dir) / "loss_history.midl").string());

    const double final_loss =
        result.loss_history.size() > 0
            ? result.loss_history[result.loss_history.size() - 1]
            : std::numeric_limits<double>::quiet_NaN();
    std::printf("trained %zu epochs, final loss %.6f, tau %.6f, saved to %s\n", cfg.epochs,
                final_loss, result.pair.tau(), out_dir.c_str());
    return 0;
}

int run_evaluate(const std::string& data_dir, const std::string& model_dir,
                 const std::string& format) {
    const midl::PairedDataset ds = midl::load_dataset(data_dir);
    const midl::EncoderPair pair = midl::load_encoder_pair(model_dir);

    // In-batch loss on the first min(N, 1024) rows; reported for orientation,
    // not comparable across different N.
    const std::size_t probe = std::min<std::size_t>(ds.n(), 1024);
    const midl::Matrix ex = midl::encode(pair, midl::WhichEncoder::X, head_rows(ds.X, probe));
    const midl::Matrix et = midl::encode(pair, midl::WhichEncoder::T, head_rows(ds.T, probe));
    const double loss = midl::contrastive_loss(ex, et, pair.kernel, pair.tau());

    const midl::EvalReport report = midl::evaluate_run(ds, pair, loss);
    if (format == "csv") {
        std::printf("n,r2,mcc,loss_inbatch,tau,r2_rank_deficient\n");
        std::printf("%zu,%.17g,%.17g,%.17g,%.17g,%d\n", ds.n(), report.r2, report.mcc, loss,
                    pair.tau(), report.r2_rank_deficient ? 1 : 0);
    } else {
        midl::Json j;
        j["n"] = ds.n();
        j["r2"] = report.r2;
        j["mcc"] = report.mcc;
        j["loss_inbatch"] = loss;
        j["loss_rows"] = probe;
        j["tau"] = pair.tau();
        j["r2_rank_deficient"] = report.r2_rank_deficient;
        std::cout << j.dump(2) << "\n";
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"midlab: synthetic identifiability lab for multimodal contrastive learning"};
    app.require_subcommand(1);

    std::string config_path, data_dir, model_dir, out_path, input_path;
    std::string format = "json";
    std::string mode = "ica";
    std::uint64_t seed_value = 0;
    std::size_t parallel = 1;
    std::size_t k_ica = 10, k_pca = 0;

    CLI::App* gen = app.add_subcommand("generate", "Sample a paired dataset from a spec");
    gen->add_option("--config", config_path, "experiment spec JSON")->required();
    gen->add_option("--out", out_path, "output directory (default under LAB_DATA_DIR)");
    CLI::Option* gen_seed = gen->add_option("--seed", seed_value, "override spec seed");

    CLI::App* trn = app.add_subcommand("train", "Train an encoder pair on a saved dataset");
    trn->add_option("--config", config_path, "experiment spec JSON")->required();
    trn->add_option("--data", data_dir, "dataset directory")->required();
    trn->add_option("--out", out_path, "encoder output directory");
    CLI::Option* trn_seed = trn->add_option("--seed", seed_value, "override spec seed");

    CLI::App* ev = app.add_subcommand("evaluate", "Score a saved encoder pair on a dataset");
    ev->add_option("--data", data_dir, "dataset directory")->required();
    ev->add_option("--model", model_dir, "encoder directory")->required();
    ev->add_option("--format", format, "csv or json")
        ->check(CLI::IsMember({"csv", "json"}));

    CLI::App* run = app.add_subcommand("run", "Run every (spec, seed) cell of a suite");
    run->add_option("--config", config_path, "suite JSON")->required();
    run->add_option("--out", out_path, "results directory");
    run->add_option("--parallel", parallel, "worker threads (default 1)");

    CLI::App* rep = app.add_subcommand("report", "Aggregate a results CSV into a table");
    rep->add_option("results", input_path, "results.csv from 'run'")->required();

    CLI::App* ica = app.add_subcommand("ica", "Disentangle an embedding matrix");
    ica->add_option("input", input_path, "embedding matrix (.midl or .csv)")->required();
    ica->add_option("--out", out_path, "output matrix path")->required();
    ica->add_option("--mode", mode, "ica or pca_ica")->check(CLI::IsMember({"ica", "pca_ica"}));
    ica->add_option("--k", k_ica, "ICA components (default 10)");
    ica->add_option("--k-pca", k_pca, "PCA components for pca_ica (default: --k)");
    ica->add_option("--seed", seed_value, "rng seed (default 0)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) {
            std::optional<std::uint64_t> seed;
            if (gen_seed->count() > 0) seed = seed_value;
            if (out_path.empty())
                out_path = (fs::path(midl::default_out_root()) / "dataset").string();
            midl::cmd_generate(config_path, out_path, seed);
            std::printf("dataset written to %s\n", out_path.c_str());
        } else if (trn->parsed()) {
            std::optional<std::uint64_t> seed;
            if (trn_seed->count() > 0) seed = seed_value;
            if (out_path.empty())
                out_path = (fs::path(midl::default_out_root()) / "encoder").string();
            return run_train(config_path, data_dir, out_path, seed);
        } else if (ev->parsed()) {
            return run_evaluate(data_dir, model_dir, format);
        } else if (run->parsed()) {
            if (out_path.empty())
                out_path = (fs::path(midl::default_out_root()) / "results").string();
            const std::string csv = midl::cmd_run(config_path, out_path, parallel);
            std::printf("results written to %s\n", csv.c_str());
            std::cout << midl::cmd_report(csv);
        } else if (rep->parsed()) {
            std::cout << midl::cmd_report(input_path);
        } else if (ica->parsed()) {
            if (k_pca == 0) k_pca = k_ica;
            midl::cmd_ica(input_path, mode == "pca_ica", k_pca, k_ica, seed_value, out_path);
            std::printf("transformed matrix written to %s\n", out_path.c_str());
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
