#include "midlab/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "midlab/errors.hpp"
#include "midlab/ica.hpp"
#include "midlab/matrix_io.hpp"
#include "midlab/metrics.hpp"

namespace midl {

namespace fs = std::filesystem;

namespace {

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char b : bytes) {
        h ^= b;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string fmt_g(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

std::string fmt_full(double v) {
    if (std::isnan(v)) return "nan";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string iso_utc_now() {
    std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string conditional_descriptor(const ConditionalFamily& f) {
    switch (f.kind) {
        case CondKind::VMF: return "vmf(" + fmt_g(f.kappa) + ")";
        case CondKind::LAPLACE: return "laplace(" + fmt_g(f.scale) + ")";
        case CondKind::NORMAL: return "normal(" + fmt_g(f.scale) + ")";
        case CondKind::GENNORM: return "gennorm(" + fmt_g(f.scale) + "," + fmt_g(f.beta) + ")";
    }
    throw ValueError("conditional_descriptor: unknown kind");
}

std::string prior_descriptor(const LatentSpaceSpec& s) {
    if (s.prior == PriorKind::UNIFORM) return "uniform";
    return prior_kind_name(s.prior) + "(" + fmt_g(s.prior_scale) + ")";
}

std::string kernel_descriptor(const SimilarityKernel& k) {
    if (k.kind == KernelKind::NEG_LBETA) return "neg_lbeta(" + fmt_g(k.beta) + ")";
    return kernel_kind_name(k.kind);
}

std::size_t get_count(const Json& j, const std::string& key, const std::string& where) {
    const Json& v = j.at(key);
    const bool ok = v.is_number_unsigned() ||
                    (v.is_number_integer() && v.get<long long>() >= 0);
    if (!ok) throw ConfigError(where + "." + key + " must be a nonnegative integer");
    return v.get<std::size_t>();
}

Json train_to_json(const TrainConfig& t) {
    Json j;
    j["epochs"] = t.epochs;
    j["batch_size"] = t.batch_size;
    j["learning_rate"] = t.learning_rate;
    j["adam_beta1"] = t.adam_beta1;
    j["adam_beta2"] = t.adam_beta2;
    j["adam_eps"] = t.adam_eps;
    j["temperature"] = {
        {"mode", t.temperature_mode == TemperatureMode::FIXED ? "fixed" : "learnable"},
        {"tau_init", t.tau_init},
    };
    j["hidden_width"] = t.hidden_width;
    j["hidden_layers"] = t.hidden_layers;
    j["grad_check"] = t.grad_check;
    return j;
}

TrainConfig train_from_json(const Json& j, const std::string& where) {
    require_keys(j,
                 {"epochs", "batch_size", "learning_rate", "adam_beta1", "adam_beta2", "adam_eps",
                  "temperature", "hidden_width", "hidden_layers", "grad_check"},
                 where);
    TrainConfig t;
    if (j.contains("epochs")) t.epochs = get_count(j, "epochs", where);
    if (j.contains("batch_size")) t.batch_size = get_count(j, "batch_size", where);
    if (j.contains("learning_rate")) t.learning_rate = get_number(j, "learning_rate", where);
    if (j.contains("adam_beta1")) t.adam_beta1 = get_number(j, "adam_beta1", where);
    if (j.contains("adam_beta2")) t.adam_beta2 = get_number(j, "adam_beta2", where);
    if (j.contains("adam_eps")) t.adam_eps = get_number(j, "adam_eps", where);
    if (j.contains("temperature")) {
        const Json& tj = j["temperature"];
        const std::string tw = where + ".temperature";
        require_keys(tj, {"mode", "tau_init"}, tw);
        if (tj.contains("mode")) {
            const std::string mode = get_string(tj, "mode", tw);
            if (mode == "fixed") t.temperature_mode = TemperatureMode::FIXED;
            else if (mode == "learnable") t.temperature_mode = TemperatureMode::LEARNABLE;
            else throw ConfigError(tw + ".mode must be 'fixed' or 'learnable', got '" + mode + "'");
        }
        if (tj.contains("tau_init")) t.tau_init = get_number(tj, "tau_init", tw);
    }
    if (j.contains("hidden_width")) t.hidden_width = get_count(j, "hidden_width", where);
    if (j.contains("hidden_layers")) t.hidden_layers = get_count(j, "hidden_layers", where);
    if (j.contains("grad_check")) {
        if (!j["grad_check"].is_boolean())
            throw ConfigError(where + ".grad_check must be a boolean");
        t.grad_check = j["grad_check"].get<bool>();
    }
    return t;
}

constexpr const char* kCsvHeader =
    "run_id,spec_name,seed,geometry,prior,conditional,model_space,model_kernel,n,r2,mcc,"
    "final_loss,wall_time_s";

} // namespace

void ExperimentSpec::validate() const {
    if (name.empty()) throw ConfigError("experiment name must be nonempty");
    for (char c : name) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                        (c >= '0' && c <= '9') || c == '.' || c == '_' || c == '-';
        if (!ok) {
            throw ConfigError("experiment name '" + name +
                              "' may only use letters, digits, '.', '_', '-'");
        }
    }
    latent.validate();
    model_space.validate();
    model_kernel.validate();
    train.validate();
    if (mixer.layers < 1) throw ConfigError(name + ": mixer.layers must be >= 1");
    if (!(mixer.leak > 0.0 && mixer.leak <= 1.0))
        throw ConfigError(name + ": mixer.leak must be in (0, 1]");
    if (!(mixer.cond_max >= 1.0)) throw ConfigError(name + ": mixer.cond_max must be >= 1");
    if (n_samples < 4) throw ConfigError(name + ": n_samples must be >= 4");
    if (seeds.empty()) throw ConfigError(name + ": seeds must be nonempty");
    for (std::size_t i = 0; i < seeds.size(); ++i)
        for (std::size_t j = i + 1; j < seeds.size(); ++j)
            if (seeds[i] == seeds[j])
                throw ConfigError(name + ": duplicate seed " + std::to_string(seeds[i]));
}

Json to_json(const ExperimentSpec& spec) {
    Json gen;
    gen["latent"] = to_json(spec.latent);
    gen["specific_dim"] = spec.specific_dim;
    gen["mixer"] = {
        {"layers", spec.mixer.layers},
        {"leak", spec.mixer.leak},
        {"cond_max", spec.mixer.cond_max},
    };
    Json model;
    model["space"] = to_json(spec.model_space);
    model["kernel"] = to_json(spec.model_kernel);
    model["train"] = train_to_json(spec.train);

    Json j;
    j["name"] = spec.name;
    j["n_samples"] = spec.n_samples;
    j["seeds"] = spec.seeds;
    j["generative"] = gen;
    j["model"] = model;
    Json metrics = Json::array();
    if (spec.metric_r2) metrics.push_back("r2");
    if (spec.metric_mcc) metrics.push_back("mcc");
    j["metrics"] = metrics;
    Json pipelines = Json::array();
    if (spec.pipe_ica) pipelines.push_back("ica");
    if (spec.pipe_pca_ica) pipelines.push_back("pca_ica");
    j["pipelines"] = pipelines;
    return j;
}

ExperimentSpec experiment_from_json(const Json& j, const std::string& where) {
    require_keys(j, {"name", "n_samples", "seeds", "generative", "model", "metrics", "pipelines"},
                 where);
    for (const char* key : {"name", "n_samples", "seeds", "generative", "model"}) {
        if (!j.contains(key))
            throw ConfigError(where + " missing required key '" + std::string(key) + "'");
    }

    ExperimentSpec spec;
    spec.name = get_string(j, "name", where);
    spec.n_samples = get_count(j, "n_samples", where);

    if (!j["seeds"].is_array() || j["seeds"].empty())
        throw ConfigError(where + ".seeds must be a nonempty array");
    for (const Json& s : j["seeds"]) {
        if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<long long>() >= 0))
            throw ConfigError(where + ".seeds entries must be nonnegative integers");
        spec.seeds.push_back(s.get<std::uint64_t>());
    }

    const Json& gen = j["generative"];
    const std::string gw = where + ".generative";
    require_keys(gen, {"latent", "specific_dim", "mixer"}, gw);
    if (!gen.contains("latent")) throw ConfigError(gw + " missing required key 'latent'");
    spec.latent = latent_space_from_json(gen["latent"], gw + ".latent");
    if (gen.contains("specific_dim")) spec.specific_dim = get_count(gen, "specific_dim", gw);
    if (gen.contains("mixer")) {
        const Json& mj = gen["mixer"];
        const std::string mw = gw + ".mixer";
        require_keys(mj, {"layers", "leak", "cond_max"}, mw);
        if (mj.contains("layers")) spec.mixer.layers = get_count(mj, "layers", mw);
        if (mj.contains("leak")) spec.mixer.leak = get_number(mj, "leak", mw);
        if (mj.contains("cond_max")) spec.mixer.cond_max = get_number(mj, "cond_max", mw);
    }

    const Json& model = j["model"];
    const std::string mw = where + ".model";
    require_keys(model, {"space", "kernel", "train"}, mw);
    for (const char* key : {"space", "kernel"}) {
        if (!model.contains(key))
            throw ConfigError(mw + " missing required key '" + std::string(key) + "'");
    }
    spec.model_space = output_space_from_json(model["space"], mw + ".space");
    spec.model_kernel = kernel_from_json(model["kernel"], mw + ".kernel");
    if (model.contains("train")) spec.train = train_from_json(model["train"], mw + ".train");

    if (j.contains("metrics")) {
        if (!j["metrics"].is_array()) throw ConfigError(where + ".metrics must be an array");
        spec.metric_r2 = spec.metric_mcc = false;
        for (const Json& m : j["metrics"]) {
            const std::string s = m.is_string() ? m.get<std::string>() : std::string();
            if (s == "r2") spec.metric_r2 = true;
            else if (s == "mcc") spec.metric_mcc = true;
            else throw ConfigError(where + ".metrics entries must be 'r2' or 'mcc'");
        }
    }
    if (j.contains("pipelines")) {
        if (!j["pipelines"].is_array()) throw ConfigError(where + ".pipelines must be an array");
        for (const Json& p : j["pipelines"]) {
            const std::string s = p.is_string() ? p.get<std::string>() : std::string();
            if (s == "ica") spec.pipe_ica = true;
            else if (s == "pca_ica") spec.pipe_pca_ica = true;
            else throw ConfigError(where + ".pipelines entries must be 'ica' or 'pca_ica'");
        }
    }

    spec.validate();
    return spec;
}

std::uint64_t spec_hash(const ExperimentSpec& spec) {
    Json j = to_json(spec);
    j.erase("name");
    j.erase("seeds");
    return fnv1a64(j.dump());
}

std::string make_run_id(const ExperimentSpec& spec, std::uint64_t seed) {
    const std::uint64_t h = spec_hash(spec);
    const std::uint32_t folded = static_cast<std::uint32_t>(h ^ (h >> 32));
    char buf[16];
    std::snprintf(buf, sizeof buf, "%08x", folded);
    return spec.name + "-s" + std::to_string(seed) + "-" + buf;
}

namespace {

Json parse_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file " + path);
    try {
        return Json::parse(in);
    } catch (const std::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

std::vector<ExperimentSpec> suite_from_json(const Json& j, const std::string& path) {
    std::vector<ExperimentSpec> specs;
    if (j.is_object() && j.contains("specs")) {
        require_keys(j, {"name", "specs"}, path);
        if (!j["specs"].is_array() || j["specs"].empty())
            throw ConfigError(path + ": 'specs' must be a nonempty array");
        std::size_t idx = 0;
        for (const Json& sj : j["specs"]) {
            specs.push_back(experiment_from_json(sj, path + ".specs[" + std::to_string(idx) + "]"));
            ++idx;
        }
    } else {
        specs.push_back(experiment_from_json(j, path));
    }
    for (std::size_t i = 0; i < specs.size(); ++i)
        for (std::size_t k = i + 1; k < specs.size(); ++k)
            if (specs[i].name == specs[k].name)
                throw ConfigError(path + ": duplicate spec name '" + specs[i].name + "'");
    return specs;
}

} // namespace

std::vector<ExperimentSpec> load_suite(const std::string& path) {
    return suite_from_json(parse_json_file(path), path);
}

ExperimentSpec load_experiment(const std::string& path) {
    Json j = parse_json_file(path);
    if (j.is_object() && j.contains("specs"))
        throw ConfigError(path + " is a suite file; this command wants a single experiment spec");
    return experiment_from_json(j, path);
}

namespace {

// Fresh-draw training pool: 400 batches per epoch pass, so a sample is reused
// only cfg.epochs times. Sized in batches to keep the tiny smoke/test cells
// proportionally tiny.
constexpr std::size_t kTrainPoolBatches = 400;

// Coordinates and identity only; metrics stay NaN.
RunRecord record_shell(const ExperimentSpec& spec, std::uint64_t seed) {
    RunRecord rec;
    rec.run_id = make_run_id(spec, seed);
    rec.spec_name = spec.name;
    rec.hash = spec_hash(spec);
    rec.seed = seed;
    rec.geometry = geometry_name(spec.latent.geometry);
    rec.prior = prior_descriptor(spec.latent);
    rec.conditional = conditional_descriptor(spec.latent.conditional);
    rec.model_space = space_kind_name(spec.model_space.kind);
    rec.model_kernel = kernel_descriptor(spec.model_kernel);
    rec.n = spec.n_samples;
    return rec;
}

} // namespace

RunRecord run_cell(const ExperimentSpec& spec, std::uint64_t seed) {
    spec.validate();
    RunRecord rec = record_shell(spec, seed);
    rec.started_at = iso_utc_now();
    const auto t0 = std::chrono::steady_clock::now();

    RngState root(seed);
    RngState rng_mx = root.derive_child("mixer-x");
    RngState rng_mt = root.derive_child("mixer-t");
    RngState rng_data = root.derive_child("data");
    const MixerMlp gx = build_mixer(rng_mx, spec.latent.dim, spec.specific_dim, spec.mixer.layers,
                                    spec.mixer.leak, spec.mixer.cond_max);
    const MixerMlp gt = build_mixer(rng_mt, spec.latent.dim, spec.specific_dim, spec.mixer.layers,
                                    spec.mixer.leak, spec.mixer.cond_max);
    PairedDataset ds = generate_pairs(rng_data, spec.latent, gx, gt, spec.n_samples);
    ds.seed = seed;

    // Metrics are computed on `ds`, which the optimizer never sees. Training
    // draws its own larger pool from the same process: the weak-coupling
    // configurations carry well under 0.1 nats of shared signal, and cycling a
    // small fixed sample long enough to learn them memorizes pairs instead of
    // inverting the mixer.
    TrainConfig cfg = spec.train;
    cfg.seed = seed;
    RngState rng_pool = root.derive_child("train-data");
    const std::size_t pool_n =
        std::max<std::size_t>(spec.n_samples, kTrainPoolBatches * cfg.batch_size);
    PairedDataset pool = generate_pairs(rng_pool, spec.latent, gx, gt, pool_n);
    pool.seed = seed;
    TrainResult tr = train(pool, cfg, spec.model_space, spec.model_kernel);
    if (tr.loss_history.size() > 0) rec.final_loss = tr.loss_history[tr.loss_history.size() - 1];

    EvalReport ev = evaluate_run(ds, tr.pair, rec.final_loss);
    if (spec.metric_r2) {
        rec.r2 = ev.r2;
        rec.r2_rank_deficient = ev.r2_rank_deficient;
    }
    if (spec.metric_mcc) {
        rec.mcc = ev.mcc;
        rec.assignment = ev.assignment;
        rec.signed_corr = ev.signed_corr;
    }

    if (spec.pipe_ica || spec.pipe_pca_ica) {
        const Matrix emb = encode(tr.pair, WhichEncoder::X, ds.X);
        const std::size_t k = std::min(ds.latent_dim(), emb.cols());
        if (spec.pipe_ica) {
            try {
                RngState rng_ica = root.derive_child("ica");
                rec.ica_mcc = mcc(ds.Zx, pipeline_ica(emb, k, rng_ica));
            } catch (const std::exception& e) {
                rec.error += std::string(rec.error.empty() ? "" : "; ") + "ica: " + e.what();
            }
        }
        if (spec.pipe_pca_ica) {
            try {
                RngState rng_pi = root.derive_child("pca-ica");
                rec.pca_ica_mcc = mcc(ds.Zx, pipeline_pca_ica(emb, k, k, rng_pi));
            } catch (const std::exception& e) {
                rec.error += std::string(rec.error.empty() ? "" : "; ") + "pca_ica: " + e.what();
            }
        }
    }

    rec.finished_at = iso_utc_now();
    rec.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rec;
}

namespace {

RunRecord run_cell_guarded(const ExperimentSpec& spec, std::uint64_t seed) {
    const auto t0 = std::chrono::steady_clock::now();
    try {
        return run_cell(spec, seed);
    } catch (const std::exception& e) {
        RunRecord rec = record_shell(spec, seed);
        rec.failed = true;
        rec.error = e.what();
        rec.finished_at = iso_utc_now();
        rec.wall_time_s =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return rec;
    }
}

} // namespace

std::vector<RunRecord> run_suite(const std::vector<ExperimentSpec>& specs, std::size_t parallel) {
    struct Cell {
        const ExperimentSpec* spec;
        std::uint64_t seed;
    };
    std::vector<Cell> cells;
    for (const ExperimentSpec& spec : specs) {
        spec.validate();
        for (std::uint64_t seed : spec.seeds) cells.push_back({&spec, seed});
    }

    std::vector<RunRecord> records(cells.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= cells.size()) break;
            records[i] = run_cell_guarded(*cells[i].spec, cells[i].seed);
        }
    };

    const std::size_t n_threads = std::max<std::size_t>(1, std::min(parallel, cells.size()));
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(n_threads);
        for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
        for (std::thread& th : pool) th.join();
    }
    return records;
}

void write_results_csv(const std::vector<RunRecord>& records, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("write_results_csv: cannot open " + path);
    out << kCsvHeader << "\n";
    for (const RunRecord& r : records) {
        char wall[32];
        std::snprintf(wall, sizeof wall, "%.3f", r.wall_time_s);
        out << r.run_id << ',' << r.spec_name << ',' << r.seed << ',' << r.geometry << ','
            << r.prior << ',' << r.conditional << ',' << r.model_space << ',' << r.model_kernel
            << ',' << r.n << ',' << fmt_full(r.r2) << ',' << fmt_full(r.mcc) << ','
            << fmt_full(r.final_loss) << ',' << wall << "\n";
    }
    if (!out) throw IoError("write_results_csv: write failed for " + path);
}

std::vector<RunRecord> read_results_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("read_results_csv: cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw ConfigError(path + ": empty results file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kCsvHeader) {
        throw ConfigError(path + ": header mismatch, expected '" + kCsvHeader + "' got '" + line +
                          "'");
    }
    std::vector<RunRecord> records;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() != 13) {
            throw ConfigError(path + ":" + std::to_string(line_no) + ": expected 13 columns, got " +
                              std::to_string(cells.size()));
        }
        RunRecord r;
        try {
            r.run_id = cells[0];
            r.spec_name = cells[1];
            r.seed = std::stoull(cells[2]);
            r.geometry = cells[3];
            r.prior = cells[4];
            r.conditional = cells[5];
            r.model_space = cells[6];
            r.model_kernel = cells[7];
            r.n = std::stoull(cells[8]);
            r.r2 = std::stod(cells[9]);
            r.mcc = std::stod(cells[10]);
            r.final_loss = std::stod(cells[11]);
            r.wall_time_s = std::stod(cells[12]);
        } catch (const std::exception&) {
            throw ConfigError(path + ":" + std::to_string(line_no) + ": malformed row");
        }
        r.failed = std::isnan(r.r2) && std::isnan(r.mcc) && std::isnan(r.final_loss);
        records.push_back(std::move(r));
    }
    return records;
}

namespace {

struct MetricSummary {
    std::size_t n_finite = 0;
    double mean = 0.0;
    double stdev = 0.0;
};

MetricSummary summarize(const std::vector<double>& values) {
    MetricSummary s;
    double sum = 0.0;
    for (double v : values)
        if (std::isfinite(v)) {
            ++s.n_finite;
            sum += v;
        }
    if (s.n_finite == 0) return s;
    s.mean = sum / static_cast<double>(s.n_finite);
    if (s.n_finite >= 2) {
        double acc = 0.0;
        for (double v : values)
            if (std::isfinite(v)) acc += (v - s.mean) * (v - s.mean);
        s.stdev = std::sqrt(acc / static_cast<double>(s.n_finite - 1));
    }
    return s;
}

// "99.5 ± 0.1" with metrics scaled by 100.
std::string fmt_metric(const MetricSummary& s) {
    if (s.n_finite == 0) return "-";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.1f ± %.1f", 100.0 * s.mean, 100.0 * s.stdev);
    return buf;
}

} // namespace

std::string format_report(const std::vector<RunRecord>& records) {
    std::vector<std::string> order;
    for (const RunRecord& r : records)
        if (std::find(order.begin(), order.end(), r.spec_name) == order.end())
            order.push_back(r.spec_name);

    std::size_t name_w = 4;
    for (const std::string& name : order) name_w = std::max(name_w, name.size());

    std::ostringstream out;
    std::ostringstream warnings;
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-*s  %4s  %-14s  %-14s\n", static_cast<int>(name_w), "spec",
                  "runs", "R2 (x100)", "MCC (x100)");
    out << buf;

    for (const std::string& name : order) {
        std::vector<double> r2s, mccs;
        std::size_t n_rows = 0, n_failed = 0;
        for (const RunRecord& r : records)
            if (r.spec_name == name) {
                ++n_rows;
                if (r.failed) ++n_failed;
                r2s.push_back(r.r2);
                mccs.push_back(r.mcc);
            }
        const MetricSummary r2 = summarize(r2s);
        const MetricSummary mc = summarize(mccs);
        if (r2.n_finite == 0 && mc.n_finite == 0) {
            warnings << "warning: spec '" << name << "' has no finite metrics ("
                     << n_failed << "/" << n_rows << " runs failed); omitted\n";
            continue;
        }
        std::string flags;
        if (std::max(r2.n_finite, mc.n_finite) == 1) flags += "  (single run)";
        if (n_failed > 0) flags += "  (" + std::to_string(n_failed) + " failed)";
        std::snprintf(buf, sizeof buf, "%-*s  %4zu  %-14s  %-14s%s\n", static_cast<int>(name_w),
                      name.c_str(), n_rows, fmt_metric(r2).c_str(), fmt_metric(mc).c_str(),
                      flags.c_str());
        out << buf;
    }
    out << warnings.str();
    return out.str();
}

Json run_detail_json(const RunRecord& rec) {
    Json j;
    j["run_id"] = rec.run_id;
    j["spec_name"] = rec.spec_name;
    j["spec_hash"] = rec.hash;
    j["seed"] = rec.seed;
    j["geometry"] = rec.geometry;
    j["prior"] = rec.prior;
    j["conditional"] = rec.conditional;
    j["model_space"] = rec.model_space;
    j["model_kernel"] = rec.model_kernel;
    j["n"] = rec.n;
    j["r2"] = rec.r2;
    j["mcc"] = rec.mcc;
    j["final_loss"] = rec.final_loss;
    j["wall_time_s"] = rec.wall_time_s;
    j["started_at"] = rec.started_at;
    j["finished_at"] = rec.finished_at;
    j["failed"] = rec.failed;
    if (!rec.error.empty()) j["error"] = rec.error;
    j["r2_rank_deficient"] = rec.r2_rank_deficient;
    if (!std::isnan(rec.ica_mcc)) j["ica_mcc"] = rec.ica_mcc;
    if (!std::isnan(rec.pca_ica_mcc)) j["pca_ica_mcc"] = rec.pca_ica_mcc;
    if (!rec.assignment.empty()) j["assignment"] = rec.assignment;
    if (rec.signed_corr.rows() > 0) {
        Json rows = Json::array();
        for (std::size_t i = 0; i < rec.signed_corr.rows(); ++i) {
            Json row = Json::array();
            for (std::size_t k = 0; k < rec.signed_corr.cols(); ++k)
                row.push_back(rec.signed_corr(i, k));
            rows.push_back(row);
        }
        j["signed_corr"] = rows;
    }
    return j;
}

std::string default_out_root() {
    const char* env = std::getenv("LAB_DATA_DIR");
    if (env != nullptr && env[0] != '\0') return env;
    return "midlab_out";
}

void cmd_generate(const std::string& config_path, const std::string& out_dir,
                  std::optional<std::uint64_t> seed_override) {
    const ExperimentSpec spec = load_experiment(config_path);
    const std::uint64_t seed = seed_override.value_or(spec.seeds.front());
    RngState root(seed);
    RngState rng_mx = root.derive_child("mixer-x");
    RngState rng_mt = root.derive_child("mixer-t");
    RngState rng_data = root.derive_child("data");
    const MixerMlp gx = build_mixer(rng_mx, spec.latent.dim, spec.specific_dim, spec.mixer.layers,
                                    spec.mixer.leak, spec.mixer.cond_max);
    const MixerMlp gt = build_mixer(rng_mt, spec.latent.dim, spec.specific_dim, spec.mixer.layers,
                                    spec.mixer.leak, spec.mixer.cond_max);
    PairedDataset ds = generate_pairs(rng_data, spec.latent, gx, gt, spec.n_samples);
    ds.seed = seed;
    save_dataset(ds, out_dir);
}

std::string cmd_run(const std::string& suite_path, const std::string& out_dir,
                    std::size_t parallel) {
    const std::vector<ExperimentSpec> specs = load_suite(suite_path);
    const std::vector<RunRecord> records = run_suite(specs, parallel);

    fs::create_directories(fs::path(out_dir) / "runs");
    const std::string csv_path = (fs::path(out_dir) / "results.csv").string();
    write_results_csv(records, csv_path);

    std::ostringstream errors;
    for (const RunRecord& rec : records) {
        std::ofstream detail(fs::path(out_dir) / "runs" / (rec.run_id + ".json"));
        if (!detail) throw IoError("cmd_run: cannot write detail file for " + rec.run_id);
        detail << run_detail_json(rec).dump(2) << "\n";
        if (rec.failed || !rec.error.empty())
            errors << rec.run_id << ": " << (rec.error.empty() ? "failed" : rec.error) << "\n";
    }
    const std::string errs = errors.str();
    if (!errs.empty()) {
        std::ofstream elog(fs::path(out_dir) / "errors.log");
        elog << errs;
    }
    return csv_path;
}

std::string cmd_report(const std::string& results_csv_path) {
    return format_report(read_results_csv(results_csv_path));
}

void cmd_ica(const std::string& embeddings_path, bool pca_first, std::size_t k_pca,
             std::size_t k_ica, std::uint64_t seed, const std::string& out_path) {
    const Matrix emb = load_matrix(embeddings_path);
    RngState root(seed);
    RngState rng = root.derive_child(pca_first ? "pca-ica" : "ica");

    fs::path model_dir = fs::path(out_path);
    model_dir.replace_extension();
    model_dir += "_model";

    Matrix out;
    if (pca_first) {
        if (k_ica > k_pca)
            throw ValueError("cmd_ica: k_ica = " + std::to_string(k_ica) + " exceeds k_pca = " +
                             std::to_string(k_pca));
        const PcaModel reducer = fit_pca(emb, k_pca, /*whiten=*/false);
        const Matrix reduced = pca_transform(reducer, emb);
        const IcaModel model = fit_fastica(reduced, k_ica, IcaNonlinearity::LOGCOSH, 500, 1e-6, rng);
        out = ica_transform(model, reduced);
        save_pca(reducer, (model_dir / "reducer").string());
        save_ica(model, (model_dir / "ica").string());
    } else {
        const IcaModel model = fit_fastica(emb, k_ica, IcaNonlinearity::LOGCOSH, 500, 1e-6, rng);
        out = ica_transform(model, emb);
        save_ica(model, (model_dir / "ica").string());
    }
    save_matrix(out, out_path);
}

} // namespace midl
