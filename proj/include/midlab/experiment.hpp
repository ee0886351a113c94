#pragma once

// Experiment orchestration: spec/suite configs, seeded end-to-end cells
// (generate -> train -> evaluate -> optional disentangling pipelines),
// results CSV, and the aggregated report.

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "midlab/dataset.hpp"
#include "midlab/encoder.hpp"
#include "midlab/latent_space.hpp"
#include "midlab/serde.hpp"
#include "midlab/train.hpp"

namespace midl {

struct MixerParams {
    std::size_t layers = 3;
    double leak = 0.2;
    double cond_max = 10.0;
};

// One row of a results table: a generative process, a model, a training
// recipe and the seeds to sweep.
struct ExperimentSpec {
    std::string name;
    LatentSpaceSpec latent;
    std::size_t specific_dim = 5;
    MixerParams mixer;
    OutputSpace model_space = OutputSpace::sphere(10);
    SimilarityKernel model_kernel = SimilarityKernel::dot();
    TrainConfig train;
    std::size_t n_samples = 5000;
    std::vector<std::uint64_t> seeds;
    bool metric_r2 = true;
    bool metric_mcc = true;
    bool pipe_ica = false;
    bool pipe_pca_ica = false;

    // Names must be nonempty and restricted to [A-Za-z0-9._-] so they are
    // safe inside CSV rows and file names.
    void validate() const;
};

// Hash of every semantic field (name and seeds excluded); stable under key
// reordering of the config file because hashing happens after parsing.
std::uint64_t spec_hash(const ExperimentSpec& spec);

// "<name>-s<seed>-<hash8>"
std::string make_run_id(const ExperimentSpec& spec, std::uint64_t seed);

Json to_json(const ExperimentSpec& spec);
ExperimentSpec experiment_from_json(const Json& j, const std::string& where);

// A suite file is {"specs": [...]} with optional "name"; a bare spec object
// is accepted as a one-spec suite. Duplicate spec names are rejected.
std::vector<ExperimentSpec> load_suite(const std::string& path);
ExperimentSpec load_experiment(const std::string& path);

struct RunRecord {
    std::string run_id;
    std::string spec_name;
    std::uint64_t hash = 0;
    std::uint64_t seed = 0;
    // cell coordinates echoed into the CSV
    std::string geometry, prior, conditional, model_space, model_kernel;
    std::size_t n = 0;
    double r2 = std::numeric_limits<double>::quiet_NaN();
    double mcc = std::numeric_limits<double>::quiet_NaN();
    double final_loss = std::numeric_limits<double>::quiet_NaN();
    double wall_time_s = 0.0;
    std::string started_at, finished_at; // UTC, second resolution
    bool failed = false;
    std::string error;
    // extras surfaced only in the JSON detail file
    double ica_mcc = std::numeric_limits<double>::quiet_NaN();
    double pca_ica_mcc = std::numeric_limits<double>::quiet_NaN();
    bool r2_rank_deficient = false;
    std::vector<std::size_t> assignment;
    Matrix signed_corr;
};

// One (spec, seed) cell, reproducible from those two values alone. All
// randomness comes from labeled children of RngState(seed).
RunRecord run_cell(const ExperimentSpec& spec, std::uint64_t seed);

// Every (spec, seed) cell on a worker pool. Cells are isolated; a failing
// cell yields a record with failed=true and the error text, and the suite
// continues. Record order and numeric content are independent of `parallel`.
std::vector<RunRecord> run_suite(const std::vector<ExperimentSpec>& specs, std::size_t parallel);

// Exact column order:
// run_id, spec_name, seed, geometry, prior, conditional, model_space,
// model_kernel, n, r2, mcc, final_loss, wall_time_s
void write_results_csv(const std::vector<RunRecord>& records, const std::string& path);
std::vector<RunRecord> read_results_csv(const std::string& path);

// Per-spec "mean ± std" lines, metrics scaled by 100 and shown to one
// decimal. Groups without a single finite metric are omitted with a warning.
std::string format_report(const std::vector<RunRecord>& records);

Json run_detail_json(const RunRecord& rec);

// LAB_DATA_DIR when set, "midlab_out" otherwise.
std::string default_out_root();

// CLI-facing operations (exposed here so tests can drive them directly).
void cmd_generate(const std::string& config_path, const std::string& out_dir,
                  std::optional<std::uint64_t> seed_override = std::nullopt);
std::string cmd_run(const std::string& suite_path, const std::string& out_dir,
                    std::size_t parallel);
std::string cmd_report(const std::string& results_csv_path);
void cmd_ica(const std::string& embeddings_path, bool pca_first, std::size_t k_pca,
             std::size_t k_ica, std::uint64_t seed, const std::string& out_path);

} // namespace midl
