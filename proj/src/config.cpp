#include "lsg/config.hpp"

#include <fstream>

#include "lsg/rng.hpp"

namespace lsg {

namespace {

// Desk-scale photometric presets. A and B stand in for the two build-plate
// positions: opposite ramp signs and different offsets along the ramp, plus
// specimen-keyed speckle.
PhotometricParams preset_a() {
    PhotometricParams p;
    p.illum_gradient = 40.0;
    return p;
}

PhotometricParams preset_b() {
    PhotometricParams p;
    p.illum_gradient = -40.0;
    return p;
}

template <class T>
void get_if_present(const ojson& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

} // namespace

DatasetConfig::DatasetConfig() {
    geometry.layers_per_cell = 50; // desk-scale default; the type default is 200
    specimens.push_back({"A", {0.0, 0.0}, preset_a()});
    specimens.push_back({"B", {30.0, 150.0}, preset_b()});
}

const SpecimenConfig& DatasetConfig::specimen(const std::string& id) const {
    for (const auto& s : specimens)
        if (s.id == id) return s;
    throw ValidationError("dataset: no specimen with id " + id);
}

SpecimenSpec DatasetConfig::spec_for(const SpecimenConfig& s) const {
    SpecimenSpec spec = geometry;
    spec.specimen_id = s.id;
    spec.build_location_mm = s.build_location_mm;
    return spec;
}

ExperimentConfig::ExperimentConfig() {
    for (PerturbKind kind :
         {PerturbKind::Gamma, PerturbKind::GaussianNoise, PerturbKind::Pixelate})
        for (const char* level : {"low", "mid", "high"})
            perturbations.push_back(preset(kind, level));
}

void ExperimentConfig::validate() const {
    if (out_dir.empty()) throw ValidationError("config: out_dir must be nonempty");
    if (dataset.specimens.empty()) throw ValidationError("config: no specimens");
    for (const auto& s : dataset.specimens) {
        dataset.spec_for(s).validate();
        s.photometric.validate();
    }
    if (split != "joint" && split.rfind("separate_", 0) != 0)
        throw ValidationError("config: split must be joint or separate_<id>, got " + split);
    if (split.rfind("separate_", 0) == 0)
        dataset.specimen(split.substr(std::string("separate_").size()));
    model.validate();
    if (train.epochs < 1) throw ValidationError("config: train.epochs must be >= 1");
    if (train.batch_size < 1) throw ValidationError("config: train.batch_size must be >= 1");
    if (train.layer_stride < 1) throw ValidationError("config: train.layer_stride must be >= 1");
    if (!(train.val_fraction >= 0.0 && train.val_fraction < 1.0))
        throw ValidationError("config: train.val_fraction must be in [0,1)");
    ac.params.validate();
    if (ac.calibration_images < 1)
        throw ValidationError("config: ac.calibration_images must be >= 1");
    if (bench.images < 1) throw ValidationError("config: bench.images must be >= 1");
    for (const auto& m : methods)
        if (m != "active_contour" && m != "unet" && m != "unetgnn")
            throw ValidationError("config: unknown method " + m);
    for (const auto& p : perturbations) p.validate();
    const int size = model.input_size;
    if (dataset.geometry.footprint_width_px() != size ||
        dataset.geometry.footprint_height_px() != size)
        throw ValidationError(
            "config: model.input_size must match the specimen footprint (" +
            std::to_string(dataset.geometry.footprint_width_px()) + " px)");
}

void to_json(ojson& j, const PhotometricParams& p) {
    j = ojson{{"powder_base", p.powder_base},
              {"solid_base", p.solid_base},
              {"illum_gradient", p.illum_gradient},
              {"illum_direction_deg", p.illum_direction_deg},
              {"anisotropy_strength", p.anisotropy_strength},
              {"light_azimuth_deg", p.light_azimuth_deg},
              {"scan_rotation_deg", p.scan_rotation_deg},
              {"speckle_sigma", p.speckle_sigma},
              {"rng_seed", p.rng_seed}};
}

void from_json(const ojson& j, PhotometricParams& p) {
    get_if_present(j, "powder_base", p.powder_base);
    get_if_present(j, "solid_base", p.solid_base);
    get_if_present(j, "illum_gradient", p.illum_gradient);
    get_if_present(j, "illum_direction_deg", p.illum_direction_deg);
    get_if_present(j, "anisotropy_strength", p.anisotropy_strength);
    get_if_present(j, "light_azimuth_deg", p.light_azimuth_deg);
    get_if_present(j, "scan_rotation_deg", p.scan_rotation_deg);
    get_if_present(j, "speckle_sigma", p.speckle_sigma);
    get_if_present(j, "rng_seed", p.rng_seed);
}

void to_json(ojson& j, const SpecimenSpec& s) {
    j = ojson{{"cell_size_mm", s.cell_size_mm},
              {"strut_diameter_mm", s.strut_diameter_mm},
              {"cells_x", s.cells_x},
              {"cells_y", s.cells_y},
              {"cells_z", s.cells_z},
              {"layers_per_cell", s.layers_per_cell},
              {"pixels_per_mm", s.pixels_per_mm},
              {"node_jitter_mm", s.node_jitter_mm},
              {"strut_radius_jitter_mm", s.strut_radius_jitter_mm},
              {"deviation_seed", s.deviation_seed}};
}

void from_json(const ojson& j, SpecimenSpec& s) {
    get_if_present(j, "cell_size_mm", s.cell_size_mm);
    get_if_present(j, "strut_diameter_mm", s.strut_diameter_mm);
    get_if_present(j, "cells_x", s.cells_x);
    get_if_present(j, "cells_y", s.cells_y);
    get_if_present(j, "cells_z", s.cells_z);
    get_if_present(j, "layers_per_cell", s.layers_per_cell);
    get_if_present(j, "pixels_per_mm", s.pixels_per_mm);
    get_if_present(j, "node_jitter_mm", s.node_jitter_mm);
    get_if_present(j, "strut_radius_jitter_mm", s.strut_radius_jitter_mm);
    get_if_present(j, "deviation_seed", s.deviation_seed);
}

void to_json(ojson& j, const UNetConfig& c) {
    j = ojson{{"levels", c.levels},
              {"base_channels", c.base_channels},
              {"input_size", c.input_size},
              {"gnn_layers", c.gnn_layers},
              {"k_neighbors", c.k_neighbors},
              {"threshold", c.threshold},
              {"rebuild_graph_per_layer", c.rebuild_graph_per_layer}};
}

void from_json(const ojson& j, UNetConfig& c) {
    get_if_present(j, "levels", c.levels);
    get_if_present(j, "base_channels", c.base_channels);
    get_if_present(j, "input_size", c.input_size);
    get_if_present(j, "gnn_layers", c.gnn_layers);
    get_if_present(j, "k_neighbors", c.k_neighbors);
    get_if_present(j, "threshold", c.threshold);
    get_if_present(j, "rebuild_graph_per_layer", c.rebuild_graph_per_layer);
}

void to_json(ojson& j, const AcParams& p) {
    j = ojson{{"w", p.w},
              {"r_kernel", p.r_kernel},
              {"step_size", p.step_size},
              {"curvature_weight", p.curvature_weight},
              {"max_iters", p.max_iters},
              {"reinit_every", p.reinit_every},
              {"stop_tol", p.stop_tol}};
}

void from_json(const ojson& j, AcParams& p) {
    get_if_present(j, "w", p.w);
    get_if_present(j, "r_kernel", p.r_kernel);
    get_if_present(j, "step_size", p.step_size);
    get_if_present(j, "curvature_weight", p.curvature_weight);
    get_if_present(j, "max_iters", p.max_iters);
    get_if_present(j, "reinit_every", p.reinit_every);
    get_if_present(j, "stop_tol", p.stop_tol);
}

void to_json(ojson& j, const GridRange& g) {
    j = ojson{{"min", g.min}, {"max", g.max}, {"step", g.step}};
}

void from_json(const ojson& j, GridRange& g) {
    get_if_present(j, "min", g.min);
    get_if_present(j, "max", g.max);
    get_if_present(j, "step", g.step);
}

void to_json(ojson& j, const PerturbSpec& s) {
    j = ojson{{"kind", std::string(to_string(s.kind))},
              {"level", s.level},
              {"value", s.value()},
              {"rng_seed", s.rng_seed}};
}

void from_json(const ojson& j, PerturbSpec& s) {
    const std::string kind = j.at("kind").get<std::string>();
    s.kind = perturb_kind_from_string(kind);
    if (j.contains("level")) s.level = j.at("level").get<std::string>();
    if (j.contains("value")) {
        const double v = j.at("value").get<double>();
        switch (s.kind) {
            case PerturbKind::Gamma: s.gamma = v; break;
            case PerturbKind::GaussianNoise: s.sigma = v; break;
            case PerturbKind::Pixelate: s.scale = v; break;
        }
    } else {
        s = preset(s.kind, s.level, s.rng_seed);
    }
    get_if_present(j, "rng_seed", s.rng_seed);
}

namespace {

void to_json(ojson& j, const SpecimenConfig& s) {
    j = ojson{{"id", s.id},
              {"build_location_mm", s.build_location_mm},
              {"photometric", ojson(s.photometric)}};
}

void from_json(const ojson& j, SpecimenConfig& s) {
    s.id = j.at("id").get<std::string>();
    get_if_present(j, "build_location_mm", s.build_location_mm);
    if (j.contains("photometric")) from_json(j.at("photometric"), s.photometric);
}

} // namespace

void to_json(ojson& j, const ExperimentConfig& c) {
    ojson specimens = ojson::array();
    for (const auto& s : c.dataset.specimens) {
        ojson sj;
        to_json(sj, s);
        specimens.push_back(sj);
    }
    j = ojson{{"seed", c.seed},
              {"out_dir", c.out_dir},
              {"dataset",
               ojson{{"geometry", ojson(c.dataset.geometry)},
                     {"specimens", specimens},
                     {"seed", c.dataset.seed}}},
              {"split", c.split},
              {"model", ojson(c.model)},
              {"train",
               ojson{{"epochs", c.train.epochs},
                     {"batch_size", c.train.batch_size},
                     {"lr", c.train.lr},
                     {"val_fraction", c.train.val_fraction},
                     {"layer_stride", c.train.layer_stride}}},
              {"active_contour",
               ojson{{"w_grid", ojson(c.ac.w_grid)},
                     {"r_grid", ojson(c.ac.r_grid)},
                     {"calibration_images", c.ac.calibration_images},
                     {"params", ojson(c.ac.params)}}},
              {"methods", c.methods},
              {"perturbations", c.perturbations},
              {"bench", ojson{{"images", c.bench.images}}}};
}

void from_json(const ojson& j, ExperimentConfig& c) {
    get_if_present(j, "seed", c.seed);
    get_if_present(j, "out_dir", c.out_dir);
    if (j.contains("dataset")) {
        const ojson& d = j.at("dataset");
        if (d.contains("geometry")) from_json(d.at("geometry"), c.dataset.geometry);
        if (d.contains("specimens")) {
            c.dataset.specimens.clear();
            for (const auto& sj : d.at("specimens")) {
                SpecimenConfig s;
                from_json(sj, s);
                c.dataset.specimens.push_back(s);
            }
        }
        if (d.contains("seed")) c.dataset.seed = d.at("seed").get<std::uint64_t>();
    }
    get_if_present(j, "split", c.split);
    if (j.contains("model")) from_json(j.at("model"), c.model);
    if (j.contains("train")) {
        const ojson& t = j.at("train");
        get_if_present(t, "epochs", c.train.epochs);
        get_if_present(t, "batch_size", c.train.batch_size);
        get_if_present(t, "lr", c.train.lr);
        get_if_present(t, "val_fraction", c.train.val_fraction);
        get_if_present(t, "layer_stride", c.train.layer_stride);
    }
    if (j.contains("active_contour")) {
        const ojson& a = j.at("active_contour");
        if (a.contains("w_grid")) from_json(a.at("w_grid"), c.ac.w_grid);
        if (a.contains("r_grid")) from_json(a.at("r_grid"), c.ac.r_grid);
        get_if_present(a, "calibration_images", c.ac.calibration_images);
        if (a.contains("params")) from_json(a.at("params"), c.ac.params);
    }
    get_if_present(j, "methods", c.methods);
    if (j.contains("perturbations")) {
        c.perturbations.clear();
        for (const auto& pj : j.at("perturbations")) {
            PerturbSpec s;
            from_json(pj, s);
            c.perturbations.push_back(s);
        }
    }
    if (j.contains("bench")) get_if_present(j.at("bench"), "images", c.bench.images);
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open config: " + path.string());
    ojson j;
    try {
        j = ojson::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("bad config JSON in " + path.string() + ": " + e.what());
    }
    static const char* known[] = {"seed",  "out_dir", "dataset",        "split",
                                  "model", "train",   "active_contour", "methods",
                                  "perturbations",    "bench"};
    for (const auto& item : j.items()) {
        bool ok = false;
        for (const char* k : known) ok = ok || item.key() == k;
        if (!ok) throw ValidationError("config: unknown key \"" + item.key() + "\"");
    }
    ExperimentConfig config;
    from_json(j, config);
    config.validate();
    return config;
}

std::string canonical_config_json(const ExperimentConfig& config) {
    ojson j;
    to_json(j, config);
    return j.dump(2);
}

std::uint64_t config_hash(const ExperimentConfig& config) {
    // The hash identifies the experiment, not where it is written.
    ExperimentConfig keyed = config;
    keyed.out_dir = "";
    return fnv1a64(canonical_config_json(keyed));
}

} // namespace lsg
