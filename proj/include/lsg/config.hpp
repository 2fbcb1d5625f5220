#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "lsg/active_contour.hpp"
#include "lsg/lattice.hpp"
#include "lsg/perturb.hpp"
#include "lsg/render.hpp"
#include "lsg/unet.hpp"

namespace lsg {

using ojson = nlohmann::ordered_json;

struct SpecimenConfig {
    std::string id = "A";
    std::array<double, 2> build_location_mm = {0.0, 0.0};
    PhotometricParams photometric;
};

struct DatasetConfig {
    // Geometry shared by all specimens; specimen_id/build_location come from
    // the per-specimen entries.
    SpecimenSpec geometry;
    std::vector<SpecimenConfig> specimens;
    std::uint64_t seed = 9000; // rendering noise; independent of training seed

    DatasetConfig();
    const SpecimenConfig& specimen(const std::string& id) const;
    SpecimenSpec spec_for(const SpecimenConfig& s) const;
};

struct TrainConfig {
    int epochs = 10;
    int batch_size = 1;
    double lr = 1e-3;
    double val_fraction = 0.1;
    int layer_stride = 1; // subsamples the training range
};

struct AcConfig {
    GridRange w_grid{0.0, 1.0, 0.05};
    GridRange r_grid{1.0, 12.0, 1.0};
    int calibration_images = 6; // training layers subsampled for the grid search
    AcParams params;
};

struct BenchConfig {
    int images = 16;
};

struct ExperimentConfig {
    std::uint64_t seed = 1;
    std::string out_dir = "runs/default";
    DatasetConfig dataset;
    std::string split = "separate_A"; // separate_<id> or joint
    UNetConfig model;                 // backbone; the GNN variant adds gnn fields
    TrainConfig train;
    AcConfig ac;
    std::vector<std::string> methods = {"active_contour", "unet", "unetgnn"};
    std::vector<PerturbSpec> perturbations; // default: full 3x3 severity table
    BenchConfig bench;

    ExperimentConfig();
    void validate() const;
};

void to_json(ojson& j, const PhotometricParams& p);
void from_json(const ojson& j, PhotometricParams& p);
void to_json(ojson& j, const SpecimenSpec& s);
void from_json(const ojson& j, SpecimenSpec& s);
void to_json(ojson& j, const UNetConfig& c);
void from_json(const ojson& j, UNetConfig& c);
void to_json(ojson& j, const AcParams& p);
void from_json(const ojson& j, AcParams& p);
void to_json(ojson& j, const GridRange& g);
void from_json(const ojson& j, GridRange& g);
void to_json(ojson& j, const PerturbSpec& s);
void from_json(const ojson& j, PerturbSpec& s);
void to_json(ojson& j, const ExperimentConfig& c);
void from_json(const ojson& j, ExperimentConfig& c);

// Parses the config file and applies it over the defaults. Unknown keys are
// rejected at the top level to catch typos.
ExperimentConfig load_config(const std::filesystem::path& path);

std::string canonical_config_json(const ExperimentConfig& config);
std::uint64_t config_hash(const ExperimentConfig& config);

} // namespace lsg
