#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "midlab/errors.hpp"
#include "midlab/experiment.hpp"

using namespace midl;
namespace fs = std::filesystem;

namespace {

// A complete spec document; tests mutate copies of it.
Json base_spec_json() {
    Json j;
    j["name"] = "unit-sphere-vmf";
    j["n_samples"] = 64;
    j["seeds"] = {1, 2};
    j["generative"] = {
        {"latent",
         {{"geometry", "sphere"},
          {"dim", 4},
          {"prior", "uniform"},
          {"conditional", {{"kind", "vmf"}, {"kappa", 1.0}}}}},
        {"specific_dim", 2},
        {"mixer", {{"layers", 2}, {"leak", 0.2}, {"cond_max", 10.0}}},
    };
    j["model"] = {
        {"space", {{"kind", "sphere"}, {"dim", 4}}},
        {"kernel", {{"kind", "dot"}}},
        {"train",
         {{"epochs", 2},
          {"batch_size", 32},
          {"learning_rate", 1e-3},
          {"hidden_width", 8},
          {"hidden_layers", 1},
          {"temperature", {{"mode", "learnable"}, {"tau_init", 1.0}}}}},
    };
    return j;
}

std::string write_temp(const Json& j, const std::string& stem) {
    const fs::path p = fs::temp_directory_path() / (stem + ".json");
    std::ofstream f(p, std::ios::trunc);
    f << j.dump(2) << "\n";
    return p.string();
}

std::string config_error_message(const Json& j) {
    try {
        experiment_from_json(j, "cfg");
        return "";
    } catch (const ConfigError& e) {
        return e.what();
    }
}

std::vector<char> slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    REQUIRE(bool(f));
    return std::vector<char>((std::istreambuf_iterator<char>(f)),
                             std::istreambuf_iterator<char>());
}

RunRecord synthetic_record(const std::string& spec_name, std::uint64_t seed, double r2,
                           double mcc_value, double loss) {
    RunRecord r;
    r.run_id = spec_name + "-s" + std::to_string(seed) + "-deadbeef";
    r.spec_name = spec_name;
    r.seed = seed;
    r.geometry = "sphere";
    r.prior = "uniform";
    r.conditional = "vmf(1)";
    r.model_space = "sphere";
    r.model_kernel = "dot";
    r.n = 64;
    r.r2 = r2;
    r.mcc = mcc_value;
    r.final_loss = loss;
    r.wall_time_s = 0.25;
    return r;
}

} // namespace

TEST_CASE("experiment_from_json: full document parses into the right fields") {
    ExperimentSpec spec = experiment_from_json(base_spec_json(), "cfg");
    CHECK(spec.name == "unit-sphere-vmf");
    CHECK(spec.n_samples == 64);
    CHECK(spec.seeds == std::vector<std::uint64_t>{1, 2});
    CHECK(spec.latent.geometry == Geometry::SPHERE);
    CHECK(spec.latent.dim == 4);
    CHECK(spec.latent.conditional.kind == CondKind::VMF);
    CHECK(spec.specific_dim == 2);
    CHECK(spec.mixer.layers == 2);
    CHECK(spec.model_space.kind == SpaceKind::SPHERE);
    CHECK(spec.model_kernel.kind == KernelKind::DOT);
    CHECK(spec.train.epochs == 2);
    CHECK(spec.train.tau_init == 1.0);
    // metrics default to both, pipelines default to none
    CHECK(spec.metric_r2);
    CHECK(spec.metric_mcc);
    CHECK_FALSE(spec.pipe_ica);
    CHECK_FALSE(spec.pipe_pca_ica);
}

TEST_CASE("experiment_from_json: unknown keys are rejected by name at every level") {
    Json top = base_spec_json();
    top["n_sample"] = 10; // typo
    std::string msg = config_error_message(top);
    CHECK(msg.find("unknown key 'n_sample'") != std::string::npos);

    Json mixer = base_spec_json();
    mixer["generative"]["mixer"]["leakk"] = 0.1;
    msg = config_error_message(mixer);
    CHECK(msg.find("unknown key 'leakk'") != std::string::npos);
    CHECK(msg.find("mixer") != std::string::npos);

    Json temp = base_spec_json();
    temp["model"]["train"]["temperature"]["modee"] = "fixed";
    msg = config_error_message(temp);
    CHECK(msg.find("unknown key 'modee'") != std::string::npos);

    Json latent = base_spec_json();
    latent["generative"]["latent"]["geom"] = "sphere";
    msg = config_error_message(latent);
    CHECK(msg.find("unknown key 'geom'") != std::string::npos);

    Json kernel = base_spec_json();
    kernel["model"]["kernel"]["betaa"] = 3.0;
    msg = config_error_message(kernel);
    CHECK(msg.find("unknown key 'betaa'") != std::string::npos);
}

TEST_CASE("experiment_from_json: missing sections and bad enum values") {
    Json no_model = base_spec_json();
    no_model.erase("model");
    CHECK(config_error_message(no_model).find("missing required key 'model'") !=
          std::string::npos);

    Json no_kernel = base_spec_json();
    no_kernel["model"].erase("kernel");
    CHECK(config_error_message(no_kernel).find("missing required key 'kernel'") !=
          std::string::npos);

    Json bad_geom = base_spec_json();
    bad_geom["generative"]["latent"]["geometry"] = "torus";
    CHECK(config_error_message(bad_geom).find("unknown geometry 'torus'") != std::string::npos);

    Json bad_prior = base_spec_json();
    bad_prior["generative"]["latent"]["prior"] = "cauchy";
    CHECK(config_error_message(bad_prior).find("unknown prior 'cauchy'") != std::string::npos);

    Json bad_metric = base_spec_json();
    bad_metric["metrics"] = {"r2", "mccc"};
    CHECK(config_error_message(bad_metric).find("'r2' or 'mcc'") != std::string::npos);
}

TEST_CASE("spec_hash: invariant to key order, name and seeds; sensitive to content") {
    ExperimentSpec a = experiment_from_json(base_spec_json(), "cfg");

    // same content typed in a different key order
    const std::string reordered = R"({
        "model": {
            "train": {"temperature": {"tau_init": 1.0, "mode": "learnable"},
                      "hidden_layers": 1, "hidden_width": 8,
                      "learning_rate": 1e-3, "batch_size": 32, "epochs": 2},
            "kernel": {"kind": "dot"},
            "space": {"dim": 4, "kind": "sphere"}
        },
        "generative": {
            "mixer": {"cond_max": 10.0, "leak": 0.2, "layers": 2},
            "specific_dim": 2,
            "latent": {"conditional": {"kappa": 1.0, "kind": "vmf"},
                       "prior": "uniform", "dim": 4, "geometry": "sphere"}
        },
        "seeds": [9, 8, 7],
        "n_samples": 64,
        "name": "a-totally-different-name"
    })";
    ExperimentSpec b = experiment_from_json(Json::parse(reordered), "cfg");
    CHECK(spec_hash(a) == spec_hash(b));

    ExperimentSpec c = a;
    c.n_samples = 65;
    CHECK(spec_hash(c) != spec_hash(a));
    ExperimentSpec d = a;
    d.model_kernel = SimilarityKernel::neg_l1();
    CHECK(spec_hash(d) != spec_hash(a));
}

TEST_CASE("make_run_id: name, seed and eight hex digits") {
    ExperimentSpec spec = experiment_from_json(base_spec_json(), "cfg");
    const std::string id = make_run_id(spec, 7);
    const std::string prefix = spec.name + "-s7-";
    REQUIRE(id.size() == prefix.size() + 8);
    CHECK(id.compare(0, prefix.size(), prefix) == 0);
    for (std::size_t i = prefix.size(); i < id.size(); ++i) {
        const char ch = id[i];
        CHECK(((ch >= '0' && ch <= '9') || (ch >= 'a' && ch <= 'f')));
    }
}

TEST_CASE("to_json/experiment_from_json roundtrip preserves the hash") {
    ExperimentSpec spec = experiment_from_json(base_spec_json(), "cfg");
    spec.pipe_ica = true;
    spec.metric_mcc = false;
    ExperimentSpec back = experiment_from_json(to_json(spec), "roundtrip");
    CHECK(back.name == spec.name);
    CHECK(back.seeds == spec.seeds);
    CHECK(back.pipe_ica);
    CHECK(back.metric_r2);
    CHECK_FALSE(back.metric_mcc);
    CHECK(spec_hash(back) == spec_hash(spec));
}

TEST_CASE("results CSV roundtrips values exactly and rejects foreign headers") {
    const double r2 = 0.95123456789012341;
    std::vector<RunRecord> recs;
    recs.push_back(synthetic_record("alpha", 1, r2, 0.97, 8.25));
    RunRecord failed = synthetic_record("alpha", 2, std::nan(""), std::nan(""), std::nan(""));
    recs.push_back(failed);

    const fs::path p = fs::temp_directory_path() / "midlab_results_roundtrip.csv";
    write_results_csv(recs, p.string());
    std::vector<RunRecord> back = read_results_csv(p.string());
    REQUIRE(back.size() == 2);
    CHECK(back[0].run_id == recs[0].run_id);
    CHECK(back[0].spec_name == "alpha");
    CHECK(back[0].seed == 1);
    CHECK(back[0].r2 == r2); // %.17g roundtrip
    CHECK(back[0].mcc == 0.97);
    CHECK(back[0].final_loss == 8.25);
    CHECK(back[0].conditional == "vmf(1)");
    CHECK_FALSE(back[0].failed);
    CHECK(back[1].failed);
    CHECK(std::isnan(back[1].r2));

    std::ofstream bad(p, std::ios::trunc);
    bad << "run_id,spec,seed\nx,y,1\n";
    bad.close();
    CHECK_THROWS_AS(read_results_csv(p.string()), ConfigError);
    fs::remove(p);
}

TEST_CASE("cmd_generate: same config and seed give byte-identical datasets") {
    const std::string cfg = write_temp(base_spec_json(), "midlab_gen_cfg");
    const fs::path out1 = fs::temp_directory_path() / "midlab_gen_a";
    const fs::path out2 = fs::temp_directory_path() / "midlab_gen_b";
    fs::remove_all(out1);
    fs::remove_all(out2);
    cmd_generate(cfg, out1.string());
    cmd_generate(cfg, out2.string());
    for (const char* name : {"x.midl", "t.midl", "zx.midl", "zt.midl", "mx.midl", "mt.midl",
                             "manifest.json"}) {
        CHECK(slurp(out1 / name) == slurp(out2 / name));
    }
    // seed override changes the data
    const fs::path out3 = fs::temp_directory_path() / "midlab_gen_c";
    fs::remove_all(out3);
    cmd_generate(cfg, out3.string(), 42);
    CHECK(slurp(out1 / "x.midl") != slurp(out3 / "x.midl"));
    fs::remove_all(out1);
    fs::remove_all(out2);
    fs::remove_all(out3);
    fs::remove(cfg);
}

TEST_CASE("run_suite: records are identical across parallel degree and reruns") {
    Json sj = base_spec_json();
    Json second = base_spec_json();
    second["name"] = "unit-sphere-vmf-2";
    second["model"]["kernel"] = {{"kind", "neg_l2sq"}};
    Json suite;
    suite["specs"] = {sj, second};
    const std::string path = write_temp(suite, "midlab_suite_det");

    std::vector<ExperimentSpec> specs = load_suite(path);
    std::vector<RunRecord> serial = run_suite(specs, 1);
    std::vector<RunRecord> wide = run_suite(specs, 4);
    std::vector<RunRecord> again = run_suite(specs, 2);
    REQUIRE(serial.size() == 4); // 2 specs x 2 seeds
    REQUIRE(wide.size() == serial.size());
    for (std::size_t i = 0; i < serial.size(); ++i) {
        CHECK(serial[i].run_id == wide[i].run_id);
        CHECK(serial[i].r2 == wide[i].r2);
        CHECK(serial[i].mcc == wide[i].mcc);
        CHECK(serial[i].final_loss == wide[i].final_loss);
        CHECK(serial[i].r2 == again[i].r2);
        CHECK(serial[i].mcc == again[i].mcc);
        CHECK(serial[i].final_loss == again[i].final_loss);
        CHECK_FALSE(serial[i].failed);
        CHECK(std::isfinite(serial[i].r2));
        CHECK(serial[i].wall_time_s >= 0.0);
        CHECK(serial[i].started_at.find('T') != std::string::npos);
        CHECK(serial[i].finished_at.find('Z') != std::string::npos);
    }
    fs::remove(path);
}

TEST_CASE("format_report: mean, spread, single-run and failure annotations") {
    std::vector<RunRecord> recs;
    recs.push_back(synthetic_record("alpha", 1, 0.994, 0.97, 8.0));
    recs.push_back(synthetic_record("alpha", 2, 0.996, 0.96, 8.1));
    recs.push_back(synthetic_record("alpha", 3, 0.995, 0.98, 8.2));
    recs.push_back(synthetic_record("solo", 1, 0.5, 0.5, 9.0));
    RunRecord dead = synthetic_record("broken", 1, std::nan(""), std::nan(""), std::nan(""));
    dead.failed = true;
    dead.error = "boom";
    recs.push_back(dead);

    const std::string report = format_report(recs);
    CHECK(report.find("alpha") != std::string::npos);
    CHECK(report.find("99.5 ± 0.1") != std::string::npos);
    CHECK(report.find("(single run)") != std::string::npos);
    CHECK(report.find("warning") != std::string::npos);
    CHECK(report.find("broken") != std::string::npos);
    CHECK(report.find("omitted") != std::string::npos);

    // partially failed group: mean over the finite runs, failure count shown
    std::vector<RunRecord> part;
    part.push_back(synthetic_record("beta", 1, 0.9, 0.9, 1.0));
    part.push_back(synthetic_record("beta", 2, 0.92, 0.92, 1.0));
    RunRecord bad = synthetic_record("beta", 3, std::nan(""), std::nan(""), std::nan(""));
    bad.failed = true;
    part.push_back(bad);
    const std::string partial = format_report(part);
    CHECK(partial.find("failed") != std::string::npos);
}

TEST_CASE("load_suite: duplicate names are rejected") {
    Json suite;
    suite["specs"] = {base_spec_json(), base_spec_json()};
    const std::string path = write_temp(suite, "midlab_suite_dup");
    CHECK_THROWS_AS(load_suite(path), ConfigError);
    try {
        load_suite(path);
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("duplicate") != std::string::npos);
    }
    fs::remove(path);
}

TEST_CASE("load_experiment: rejects suite documents") {
    Json suite;
    suite["specs"] = {base_spec_json()};
    const std::string path = write_temp(suite, "midlab_suite_not_exp");
    CHECK_THROWS_AS(load_experiment(path), ConfigError);
    fs::remove(path);
}

TEST_CASE("spec validation: bad names and seed lists") {
    ExperimentSpec spec = experiment_from_json(base_spec_json(), "cfg");
    spec.name = "has space";
    CHECK_THROWS_AS(spec.validate(), ConfigError);
    spec.name = "ok-name_1.2";
    spec.validate();
    spec.seeds = {1, 1};
    CHECK_THROWS_AS(spec.validate(), ConfigError);
    spec.seeds = {};
    CHECK_THROWS_AS(spec.validate(), ConfigError);
}
