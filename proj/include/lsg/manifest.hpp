#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "lsg/config.hpp"

namespace lsg {

struct ManifestEntry {
    std::string specimen_id;
    int layer_index = 0;
    double z_mm = 0.0;
    double scan_angle_deg = 0.0;
    std::string region;
    std::array<double, 2> build_location_mm = {0.0, 0.0};
    std::string image_path; // relative to the dataset directory
    std::string mask_path;
    PhotometricParams photometric;
};

struct DatasetManifest {
    SpecimenSpec geometry;
    std::vector<SpecimenConfig> specimens;
    std::uint64_t seed = 0;
    std::vector<ManifestEntry> entries; // ordered by (specimen order, layer)

    std::vector<std::string> specimen_ids() const;
    int layers_per_specimen() const;
    const ManifestEntry& entry(const std::string& specimen_id, int layer_index) const;
};

// Rasterizes masks, renders images, and writes images/, masks/, and
// manifest.json under dataset_dir.
DatasetManifest generate_dataset(const DatasetConfig& config,
                                 const std::filesystem::path& dataset_dir);

void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);
DatasetManifest load_manifest(const std::filesystem::path& path);

// FNV-1a of the manifest file bytes; recorded in model cards and results.
std::uint64_t manifest_file_hash(const std::filesystem::path& path);

std::string hash_hex(std::uint64_t h);

} // namespace lsg
