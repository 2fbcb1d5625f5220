#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "lsg/experiment.hpp"

using namespace lsg;
namespace fs = std::filesystem;

namespace {

// Small single-cell footprint configuration that runs the whole pipeline in
// seconds: 1x1x4 cells at 64 px, shallow network, one epoch, one grid point.
ExperimentConfig tiny_config(const fs::path& out) {
    ExperimentConfig config;
    config.out_dir = out.string();
    config.seed = 1;
    config.dataset.geometry.cells_x = 1;
    config.dataset.geometry.cells_y = 1;
    config.dataset.geometry.cells_z = 4;
    config.dataset.geometry.layers_per_cell = 8;
    config.model.input_size = 64;
    config.model.levels = 3;
    config.model.base_channels = 4;
    config.train.epochs = 1;
    config.ac.w_grid = {0.5, 0.5, 0.05};
    config.ac.r_grid = {3.0, 3.0, 1.0};
    config.ac.calibration_images = 2;
    config.ac.params.max_iters = 60;
    config.perturbations = {preset(PerturbKind::Gamma, "mid"),
                            preset(PerturbKind::GaussianNoise, "low")};
    config.bench.images = 2;
    return config;
}

std::string file_bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

TEST_CASE("config JSON round-trip and validation") {
    ExperimentConfig config;
    const std::string dumped = canonical_config_json(config);
    ojson j = ojson::parse(dumped);
    ExperimentConfig back;
    from_json(j, back);
    CHECK(canonical_config_json(back) == dumped);
    CHECK(config_hash(back) == config_hash(config));
    CHECK_NOTHROW(config.validate());

    config.split = "separate_Z";
    CHECK_THROWS_AS(config.validate(), ValidationError);
    config.split = "joint";
    CHECK_NOTHROW(config.validate());
    config.model.input_size = 64; // mismatch with 128 px footprint
    CHECK_THROWS_AS(config.validate(), ValidationError);
}

TEST_CASE("load_config rejects unknown top-level keys") {
    const fs::path dir = fs::temp_directory_path() / "lsg_cfg_test";
    fs::create_directories(dir);
    {
        std::ofstream out(dir / "bad.json");
        out << "{\"sede\": 3}\n";
    }
    CHECK_THROWS_WITH_AS(load_config(dir / "bad.json"), doctest::Contains("sede"),
                         ValidationError);
    {
        std::ofstream out(dir / "ok.json");
        out << "{\"seed\": 3, \"split\": \"joint\"}\n";
    }
    const ExperimentConfig c = load_config(dir / "ok.json");
    CHECK(c.seed == 3);
    CHECK(c.split == "joint");
    fs::remove_all(dir);
}

TEST_CASE("manifest round-trips and hashes stably") {
    const fs::path dir = fs::temp_directory_path() / "lsg_manifest_test";
    fs::remove_all(dir);
    ExperimentConfig config = tiny_config(dir / "run");
    const DatasetManifest manifest = stage_gen(config);
    CHECK(manifest.entries.size() == 64); // 2 specimens x 32 layers

    const fs::path mpath = dir / "run" / "dataset" / "manifest.json";
    const DatasetManifest loaded = load_manifest(mpath);
    CHECK(loaded.entries.size() == manifest.entries.size());
    CHECK(loaded.seed == manifest.seed);
    CHECK(loaded.entry("A", 3).scan_angle_deg ==
          doctest::Approx(manifest.entry("A", 3).scan_angle_deg));

    const auto h1 = manifest_file_hash(mpath);
    stage_gen(config, true); // regenerate
    CHECK(manifest_file_hash(mpath) == h1);
    fs::remove_all(dir);
}

TEST_CASE("full tiny experiment: self-describing outputs and byte-level rerun determinism") {
    const fs::path dir = fs::temp_directory_path() / "lsg_exp_test";
    fs::remove_all(dir);
    ExperimentConfig config = tiny_config(dir / "run1");

    run_experiment(config);
    const auto paths = ExperimentPaths::at(config.out_dir);
    CHECK_FALSE(fs::exists(paths.incomplete_marker()));
    CHECK(fs::exists(paths.root / "config.json"));
    CHECK(fs::exists(paths.results / "scores.csv"));
    CHECK(fs::exists(paths.results / "summary.json"));
    CHECK(fs::exists(paths.results / "timing.csv"));
    CHECK(fs::exists(paths.results / "timing.json"));
    CHECK(fs::exists(paths.calibration / "ac_grid.csv"));
    CHECK(fs::exists(paths.root / "report.md"));
    CHECK(fs::exists(paths.checkpoint("unet", 1)));
    CHECK(fs::exists(paths.checkpoint("unetgnn", 1)));
    CHECK(fs::exists(paths.model_card("unetgnn", 1)));

    const auto rows = read_scores_csv(paths.results / "scores.csv");
    // clean + 2 perturbations, 3 methods, 2 specimens x 16 test layers
    CHECK(rows.size() == 3u * 3u * 32u);
    const std::string cfg_hash = hash_hex(config_hash(config));
    for (const auto& r : rows) {
        CHECK(r.config_hash == cfg_hash);
        CHECK(r.seed == 1);
        CHECK(r.split == "separate_A");
        CHECK(r.layer > 16); // never a training layer
        CHECK(r.accuracy >= 0.0);
        CHECK(r.accuracy <= 1.0);
    }

    // training layers and test layers never overlap
    const LoadedDataset data = load_dataset(config);
    const SplitPlan plan =
        make_splits(data.manifest, config.split, config.dataset.geometry.layers_per_cell);
    const auto train_layers = split_layers(plan, true);
    const auto test_layers = split_layers(plan, false);
    for (const auto& tr : train_layers)
        for (const auto& te : test_layers) CHECK(tr != te);

    // rerun into a second directory: scores.csv must be byte-identical
    ExperimentConfig config2 = tiny_config(dir / "run2");
    run_experiment(config2);
    const auto paths2 = ExperimentPaths::at(config2.out_dir);
    CHECK(file_bytes(paths.results / "scores.csv") ==
          file_bytes(paths2.results / "scores.csv"));
    // config echo differs only in out_dir; manifest bytes are identical
    CHECK(file_bytes(paths.dataset / "manifest.json") ==
          file_bytes(paths2.dataset / "manifest.json"));

    fs::remove_all(dir);
}

TEST_CASE("eval before train fails with a stage-tagged data error") {
    const fs::path dir = fs::temp_directory_path() / "lsg_exp_notrain";
    fs::remove_all(dir);
    ExperimentConfig config = tiny_config(dir / "run");
    stage_gen(config);
    CHECK_THROWS_WITH_AS(stage_eval(config), doctest::Contains("stage eval"), DataError);
    fs::remove_all(dir);
}
