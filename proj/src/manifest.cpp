#include "lsg/manifest.hpp"

#include <fstream>
#include <sstream>

#include "lsg/rng.hpp"

namespace lsg {

std::vector<std::string> DatasetManifest::specimen_ids() const {
    std::vector<std::string> ids;
    for (const auto& s : specimens) ids.push_back(s.id);
    return ids;
}

int DatasetManifest::layers_per_specimen() const { return geometry.total_layers(); }

const ManifestEntry& DatasetManifest::entry(const std::string& specimen_id,
                                            int layer_index) const {
    for (std::size_t si = 0; si < specimens.size(); ++si) {
        if (specimens[si].id != specimen_id) continue;
        const int per = layers_per_specimen();
        if (layer_index < 1 || layer_index > per)
            throw RangeError("manifest: layer " + std::to_string(layer_index) + " of specimen " +
                             specimen_id + " outside [1, " + std::to_string(per) + "]");
        return entries[si * static_cast<std::size_t>(per) + (layer_index - 1)];
    }
    throw DataError("manifest: unknown specimen " + specimen_id);
}

DatasetManifest generate_dataset(const DatasetConfig& config,
                                 const std::filesystem::path& dataset_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dataset_dir / "images");
    fs::create_directories(dataset_dir / "masks");

    DatasetManifest manifest;
    manifest.geometry = config.geometry;
    manifest.specimens = config.specimens;
    manifest.seed = config.seed;

    for (const auto& sc : config.specimens) {
        SpecimenSpec spec = config.spec_for(sc);
        spec.validate();
        PhotometricParams photo = sc.photometric;
        // Dataset seed folds into every specimen's speckle stream.
        photo.rng_seed = combine_keys(config.seed, photo.rng_seed);
        const std::array<double, 2> loc_px = {sc.build_location_mm[0] * spec.pixels_per_mm,
                                              sc.build_location_mm[1] * spec.pixels_per_mm};
        for (int layer = 1; layer <= spec.total_layers(); ++layer) {
            const Mask mask = slice_specimen(spec, layer);
            const Image image = render_layer(mask, photo, layer, loc_px, sc.id);

            char name[64];
            std::snprintf(name, sizeof(name), "%s_%05d.pgm", sc.id.c_str(), layer);
            const std::string image_rel = std::string("images/") + name;
            const std::string mask_rel = std::string("masks/") + name;
            write_pgm(dataset_dir / image_rel, image);
            write_mask_pgm(dataset_dir / mask_rel, mask);

            ManifestEntry e;
            e.specimen_id = sc.id;
            e.layer_index = layer;
            e.z_mm = layer_z_mm(spec, layer);
            e.scan_angle_deg = scan_angle(layer, photo.scan_rotation_deg);
            e.region = to_string(region_label(layer, spec));
            e.build_location_mm = sc.build_location_mm;
            e.image_path = image_rel;
            e.mask_path = mask_rel;
            e.photometric = photo;
            manifest.entries.push_back(std::move(e));
        }
    }
    write_manifest(dataset_dir / "manifest.json", manifest);
    return manifest;
}

void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest) {
    ojson j;
    j["geometry"] = ojson(manifest.geometry);
    ojson specimens = ojson::array();
    for (const auto& s : manifest.specimens)
        specimens.push_back(ojson{{"id", s.id},
                                  {"build_location_mm", s.build_location_mm},
                                  {"photometric", ojson(s.photometric)}});
    j["specimens"] = specimens;
    j["seed"] = manifest.seed;
    ojson entries = ojson::array();
    for (const auto& e : manifest.entries) {
        entries.push_back(ojson{{"specimen_id", e.specimen_id},
                                {"layer_index", e.layer_index},
                                {"z_mm", e.z_mm},
                                {"scan_angle_deg", e.scan_angle_deg},
                                {"region", e.region},
                                {"build_location_mm", e.build_location_mm},
                                {"image", e.image_path},
                                {"mask", e.mask_path},
                                {"photometric", ojson(e.photometric)}});
    }
    j["layers"] = entries;

    std::ofstream out(path);
    if (!out) throw DataError("cannot write manifest: " + path.string());
    out << j.dump(2) << "\n";
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open manifest: " + path.string());
    ojson j;
    try {
        j = ojson::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw DataError("bad manifest JSON in " + path.string() + ": " + e.what());
    }
    DatasetManifest m;
    from_json(j.at("geometry"), m.geometry);
    for (const auto& sj : j.at("specimens")) {
        SpecimenConfig s;
        s.id = sj.at("id").get<std::string>();
        s.build_location_mm = sj.at("build_location_mm").get<std::array<double, 2>>();
        from_json(sj.at("photometric"), s.photometric);
        m.specimens.push_back(s);
    }
    m.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& ej : j.at("layers")) {
        ManifestEntry e;
        e.specimen_id = ej.at("specimen_id").get<std::string>();
        e.layer_index = ej.at("layer_index").get<int>();
        e.z_mm = ej.at("z_mm").get<double>();
        e.scan_angle_deg = ej.at("scan_angle_deg").get<double>();
        e.region = ej.at("region").get<std::string>();
        e.build_location_mm = ej.at("build_location_mm").get<std::array<double, 2>>();
        e.image_path = ej.at("image").get<std::string>();
        e.mask_path = ej.at("mask").get<std::string>();
        from_json(ej.at("photometric"), e.photometric);
        m.entries.push_back(std::move(e));
    }
    const std::size_t expected =
        m.specimens.size() * static_cast<std::size_t>(m.geometry.total_layers());
    if (m.entries.size() != expected)
        throw DataError("manifest: expected " + std::to_string(expected) + " layers, found " +
                        std::to_string(m.entries.size()));
    return m;
}

std::uint64_t manifest_file_hash(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open manifest: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return fnv1a64(ss.str());
}

std::string hash_hex(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

} // namespace lsg
