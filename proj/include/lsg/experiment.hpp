#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "lsg/config.hpp"
#include "lsg/manifest.hpp"
#include "lsg/splits.hpp"

namespace lsg {

struct ExperimentPaths {
    std::filesystem::path root;
    std::filesystem::path dataset;
    std::filesystem::path models;
    std::filesystem::path calibration;
    std::filesystem::path results;
    std::filesystem::path plots;

    static ExperimentPaths at(const std::filesystem::path& root);
    void ensure() const;
    std::filesystem::path incomplete_marker() const { return root / "INCOMPLETE"; }
    std::filesystem::path checkpoint(const std::string& method, std::uint64_t seed) const;
    std::filesystem::path model_card(const std::string& method, std::uint64_t seed) const;
};

// One per-layer evaluation result; "none" marks the clean pass.
struct ScoreRow {
    std::string method;
    std::string split;
    std::string specimen;
    int layer = 0;
    std::string region;
    std::string perturb_kind = "none";
    std::string perturb_level = "none";
    double perturb_value = 0.0;
    std::uint64_t seed = 0;
    std::string config_hash;
    double accuracy = 0.0;
};

void write_scores_csv(const std::filesystem::path& path, const std::vector<ScoreRow>& rows);
std::vector<ScoreRow> read_scores_csv(const std::filesystem::path& path);

// In-memory dataset indexed like the manifest.
struct LoadedDataset {
    DatasetManifest manifest;
    std::vector<Image> images; // manifest order
    std::vector<Mask> masks;

    const Image& image(const std::string& specimen, int layer) const;
    const Mask& mask(const std::string& specimen, int layer) const;
};

// Stages. Every stage is deterministic given the config; stage errors carry a
// "stage <name>:" prefix.
DatasetManifest stage_gen(const ExperimentConfig& config, bool force = false);
void stage_train(const ExperimentConfig& config);
CalibrationResult stage_calibrate(const ExperimentConfig& config);
std::vector<ScoreRow> stage_eval(const ExperimentConfig& config);
std::vector<ScoreRow> stage_perturb_sweep(const ExperimentConfig& config);
void stage_bench(const ExperimentConfig& config);
void stage_report(const ExperimentConfig& config);

// All stages in order; maintains the INCOMPLETE marker and writes the merged
// results/scores.csv plus the config echo.
void run_experiment(const ExperimentConfig& config);

LoadedDataset load_dataset(const ExperimentConfig& config);
std::vector<std::pair<std::string, int>> split_layers(const SplitPlan& plan, bool train,
                                                      int stride = 1);

// Deterministic per-layer perturbation seed.
std::uint64_t perturbation_seed(const ExperimentConfig& config, const PerturbSpec& spec,
                                const std::string& specimen, int layer);

} // namespace lsg
