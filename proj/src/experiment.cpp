#include "lsg/experiment.hpp"

#include <algorithm>
#include <fstream>

#include "lsg/csv.hpp"
#include "lsg/eval.hpp"
#include "lsg/parallel.hpp"
#include "lsg/rng.hpp"
#include "lsg/train.hpp"

namespace lsg {

namespace fs = std::filesystem;

ExperimentPaths ExperimentPaths::at(const fs::path& root) {
    ExperimentPaths p;
    p.root = root;
    p.dataset = root / "dataset";
    p.models = root / "models";
    p.calibration = root / "calibration";
    p.results = root / "results";
    p.plots = root / "results" / "plots";
    return p;
}

void ExperimentPaths::ensure() const {
    for (const auto& d : {root, dataset, models, calibration, results, plots})
        fs::create_directories(d);
}

fs::path ExperimentPaths::checkpoint(const std::string& method, std::uint64_t seed) const {
    return models / (method + "_seed" + std::to_string(seed) + ".ckpt");
}

fs::path ExperimentPaths::model_card(const std::string& method, std::uint64_t seed) const {
    return models / (method + "_seed" + std::to_string(seed) + ".card.json");
}

namespace {

template <class Fn>
auto run_stage(const char* name, Fn&& fn) {
    try {
        return fn();
    } catch (const ValidationError& e) {
        throw ValidationError(std::string("stage ") + name + ": " + e.what());
    } catch (const NumericError& e) {
        throw NumericError(std::string("stage ") + name + ": " + e.what());
    } catch (const DataError& e) {
        throw DataError(std::string("stage ") + name + ": " + e.what());
    }
}

UNetConfig model_config(const ExperimentConfig& config, const std::string& method) {
    UNetConfig mc = config.model;
    mc.gnn_enabled = (method == "unetgnn");
    return mc;
}

bool wants_method(const ExperimentConfig& config, const std::string& method) {
    return std::find(config.methods.begin(), config.methods.end(), method) !=
           config.methods.end();
}

DatasetManifest manifest_or_generate(const ExperimentConfig& config) {
    const auto paths = ExperimentPaths::at(config.out_dir);
    const fs::path manifest_path = paths.dataset / "manifest.json";
    if (fs::exists(manifest_path)) return load_manifest(manifest_path);
    return stage_gen(config);
}

std::vector<TrainSample> collect_train_samples(const ExperimentConfig& config,
                                               const LoadedDataset& data,
                                               const SplitPlan& plan) {
    std::vector<TrainSample> samples;
    for (const auto& [specimen, layer] : split_layers(plan, true, config.train.layer_stride)) {
        TrainSample s;
        s.image = image_to_tensor<float>(data.image(specimen, layer));
        s.target = mask_to_tensor<float>(data.mask(specimen, layer));
        samples.push_back(std::move(s));
    }
    if (samples.empty()) throw ValidationError("training split selected no layers");
    return samples;
}

AcParams load_calibrated_params(const ExperimentConfig& config) {
    const auto paths = ExperimentPaths::at(config.out_dir);
    const fs::path p = paths.calibration / "ac_params.json";
    if (!fs::exists(p))
        throw DataError("no calibrated active-contour parameters at " + p.string() +
                        "; run calibrate-ac first");
    std::ifstream in(p);
    ojson j = ojson::parse(in);
    AcParams params = config.ac.params;
    params.w = j.at("w").get<double>();
    params.r_kernel = j.at("r_kernel").get<int>();
    return params;
}

struct EvalContext {
    LoadedDataset data;
    SplitPlan plan;
    std::vector<std::pair<std::string, int>> test_layers;
    std::string cfg_hash;
};

EvalContext make_eval_context(const ExperimentConfig& config) {
    EvalContext ctx;
    ctx.data = load_dataset(config);
    ctx.plan = make_splits(ctx.data.manifest, config.split,
                           config.dataset.geometry.layers_per_cell);
    ctx.test_layers = split_layers(ctx.plan, false);
    ctx.cfg_hash = hash_hex(config_hash(config));
    return ctx;
}

// Evaluates one method over the test set for one perturbation context
// ("none" = clean). Rows come back ordered by (specimen, layer).
std::vector<ScoreRow> eval_method(const ExperimentConfig& config, const EvalContext& ctx,
                                  const std::string& method,
                                  const std::optional<PerturbSpec>& perturb) {
    const SpecimenSpec& geometry = ctx.data.manifest.geometry;

    std::optional<SegModel<float>> model;
    std::optional<AcParams> ac_params;
    if (method == "unet" || method == "unetgnn") {
        const auto paths = ExperimentPaths::at(config.out_dir);
        const fs::path ckpt = paths.checkpoint(method, config.seed);
        if (!fs::exists(ckpt))
            throw DataError("no checkpoint " + ckpt.string() + "; run train first");
        model.emplace(model_config(config, method), load_checkpoint<float>(ckpt).store);
    } else if (method == "active_contour") {
        ac_params = load_calibrated_params(config);
    } else {
        throw ValidationError("unknown method " + method);
    }

    std::vector<ScoreRow> rows(ctx.test_layers.size());
    parallel_for(static_cast<long long>(ctx.test_layers.size()), [&](long long i) {
        const auto& [specimen, layer] = ctx.test_layers[static_cast<std::size_t>(i)];
        const Mask& truth = ctx.data.mask(specimen, layer);
        Image image = ctx.data.image(specimen, layer);
        if (perturb) {
            PerturbSpec spec = *perturb;
            spec.rng_seed = perturbation_seed(config, spec, specimen, layer);
            image = apply_perturbation(image, spec);
        }

        Mask pred;
        if (model) {
            const Tensor<float> prob = model->forward(image_to_tensor<float>(image));
            pred = predict_mask(prob, config.model.threshold);
        } else {
            pred = evolve(image, init_levelset(truth), *ac_params);
        }

        ScoreRow row;
        row.method = method;
        row.split = config.split;
        row.specimen = specimen;
        row.layer = layer;
        row.region = to_string(region_label(layer, geometry));
        if (perturb) {
            row.perturb_kind = to_string(perturb->kind);
            row.perturb_level = perturb->level;
            row.perturb_value = perturb->value();
        }
        row.seed = config.seed;
        row.config_hash = ctx.cfg_hash;
        row.accuracy = accuracy(confusion(pred, truth));
        rows[static_cast<std::size_t>(i)] = std::move(row);
    });
    return rows;
}

} // namespace

void write_scores_csv(const fs::path& path, const std::vector<ScoreRow>& rows) {
    CsvWriter csv;
    csv.row({"method", "split", "specimen", "layer", "region", "perturb_kind", "perturb_level",
             "perturb_value", "seed", "config_hash", "accuracy"});
    for (const auto& r : rows) {
        csv.row({r.method, r.split, r.specimen, std::to_string(r.layer), r.region,
                 r.perturb_kind, r.perturb_level, format_double(r.perturb_value),
                 std::to_string(r.seed), r.config_hash, format_double(r.accuracy)});
    }
    csv.write(path);
}

std::vector<ScoreRow> read_scores_csv(const fs::path& path) {
    const auto cells = read_csv(path);
    if (cells.empty() || cells[0].size() != 11)
        throw DataError("bad scores CSV: " + path.string());
    std::vector<ScoreRow> rows;
    for (std::size_t i = 1; i < cells.size(); ++i) {
        const auto& c = cells[i];
        if (c.size() != 11) throw DataError("bad scores CSV row in " + path.string());
        ScoreRow r;
        r.method = c[0];
        r.split = c[1];
        r.specimen = c[2];
        r.layer = std::stoi(c[3]);
        r.region = c[4];
        r.perturb_kind = c[5];
        r.perturb_level = c[6];
        r.perturb_value = std::stod(c[7]);
        r.seed = std::stoull(c[8]);
        r.config_hash = c[9];
        r.accuracy = std::stod(c[10]);
        rows.push_back(std::move(r));
    }
    return rows;
}

const Image& LoadedDataset::image(const std::string& specimen, int layer) const {
    const auto& e = manifest.entry(specimen, layer);
    return images[static_cast<std::size_t>(&e - manifest.entries.data())];
}

const Mask& LoadedDataset::mask(const std::string& specimen, int layer) const {
    const auto& e = manifest.entry(specimen, layer);
    return masks[static_cast<std::size_t>(&e - manifest.entries.data())];
}

LoadedDataset load_dataset(const ExperimentConfig& config) {
    const auto paths = ExperimentPaths::at(config.out_dir);
    LoadedDataset data;
    data.manifest = manifest_or_generate(config);
    data.images.reserve(data.manifest.entries.size());
    data.masks.reserve(data.manifest.entries.size());
    for (const auto& e : data.manifest.entries) {
        data.images.push_back(read_pgm(paths.dataset / e.image_path));
        data.masks.push_back(read_mask_pgm(paths.dataset / e.mask_path));
    }
    return data;
}

std::vector<std::pair<std::string, int>> split_layers(const SplitPlan& plan, bool train,
                                                      int stride) {
    std::vector<std::pair<std::string, int>> out;
    for (const auto& [specimen, range] : (train ? plan.train : plan.test))
        for (int layer = range.first; layer <= range.last; layer += stride)
            out.push_back({specimen, layer});
    return out;
}

std::uint64_t perturbation_seed(const ExperimentConfig& config, const PerturbSpec& spec,
                                const std::string& specimen, int layer) {
    std::uint64_t h = combine_keys(config.dataset.seed, fnv1a64(to_string(spec.kind)));
    h = combine_keys(h, fnv1a64(spec.level));
    h = combine_keys(h, fnv1a64(specimen));
    return combine_keys(h, static_cast<std::uint64_t>(layer));
}

DatasetManifest stage_gen(const ExperimentConfig& config, bool force) {
    return run_stage("gen", [&] {
        const auto paths = ExperimentPaths::at(config.out_dir);
        paths.ensure();
        const fs::path manifest_path = paths.dataset / "manifest.json";
        if (!force && fs::exists(manifest_path)) return load_manifest(manifest_path);
        return generate_dataset(config.dataset, paths.dataset);
    });
}

void stage_train(const ExperimentConfig& config) {
    run_stage("train", [&] {
        const auto paths = ExperimentPaths::at(config.out_dir);
        paths.ensure();
        const LoadedDataset data = load_dataset(config);
        const SplitPlan plan =
            make_splits(data.manifest, config.split, config.dataset.geometry.layers_per_cell);
        const auto samples = collect_train_samples(config, data, plan);
        const std::uint64_t mhash = manifest_file_hash(paths.dataset / "manifest.json");

        for (const std::string method : {"unet", "unetgnn"}) {
            if (!wants_method(config, method)) continue;
            UNetConfig mc = model_config(config, method);
            SegModel<float> model(mc, combine_keys(config.seed, fnv1a64(method)));

            TrainOptions opts;
            opts.epochs = config.train.epochs;
            opts.batch_size = config.train.batch_size;
            opts.lr = config.train.lr;
            opts.val_fraction = config.train.val_fraction;
            opts.seed = combine_keys(config.seed, fnv1a64(method + ".shuffle"));
            const TrainResult result = train_model(model, samples, opts);

            save_checkpoint(paths.checkpoint(method, config.seed), model.params());

            ojson card;
            card["method"] = method;
            card["model"] = ojson(mc);
            card["gnn_enabled"] = mc.gnn_enabled;
            card["seed"] = config.seed;
            card["split"] = config.split;
            card["manifest_hash"] = hash_hex(mhash);
            card["config_hash"] = hash_hex(config_hash(config));
            card["train_layers"] = result.train_count;
            card["val_layers"] = result.val_count;
            card["val_split"] = "trailing fraction of the training range, diagnostics only";
            ojson hist = ojson::array();
            for (const auto& e : result.history)
                hist.push_back(ojson{{"train_loss", e.train_loss},
                                     {"train_accuracy", e.train_accuracy},
                                     {"val_loss", e.val_loss},
                                     {"val_accuracy", e.val_accuracy}});
            card["history"] = hist;
            std::ofstream out(paths.model_card(method, config.seed));
            out << card.dump(2) << "\n";
        }
        return 0;
    });
}

CalibrationResult stage_calibrate(const ExperimentConfig& config) {
    return run_stage("calibrate-ac", [&] {
        const auto paths = ExperimentPaths::at(config.out_dir);
        paths.ensure();
        const LoadedDataset data = load_dataset(config);
        const SplitPlan plan =
            make_splits(data.manifest, config.split, config.dataset.geometry.layers_per_cell);

        // Evenly subsample the training range for the grid search; the full
        // grid over all training layers would dominate the run time.
        const auto train_layers = split_layers(plan, true);
        const int n = static_cast<int>(train_layers.size());
        const int want = std::min(config.ac.calibration_images, n);
        std::vector<CalibrationPair> pairs;
        for (int i = 0; i < want; ++i) {
            const auto& [specimen, layer] = train_layers[static_cast<std::size_t>(
                (static_cast<long long>(i) * n) / want)];
            CalibrationPair p;
            p.image = data.image(specimen, layer);
            p.nominal = data.mask(specimen, layer);
            p.truth = data.mask(specimen, layer);
            pairs.push_back(std::move(p));
        }

        const CalibrationResult result =
            calibrate(pairs, config.ac.w_grid, config.ac.r_grid, config.ac.params);

        write_score_table_csv(paths.calibration / "ac_grid.csv", result.table);
        ojson j;
        j["w"] = result.w;
        j["r_kernel"] = result.r_kernel;
        j["mean_accuracy"] = result.best_accuracy;
        j["grid_points"] = result.table.size();
        j["calibration_layers"] = pairs.size();
        std::ofstream out(paths.calibration / "ac_params.json");
        out << j.dump(2) << "\n";
        return result;
    });
}

std::vector<ScoreRow> stage_eval(const ExperimentConfig& config) {
    return run_stage("eval", [&] {
        const auto paths = ExperimentPaths::at(config.out_dir);
        paths.ensure();
        const EvalContext ctx = make_eval_context(config);
        std::vector<ScoreRow> rows;
        for (const auto& method : config.methods) {
            auto r = eval_method(config, ctx, method, std::nullopt);
            rows.insert(rows.end(), r.begin(), r.end());
        }
        write_scores_csv(paths.results / "scores_clean.csv", rows);
        return rows;
    });
}

std::vector<ScoreRow> stage_perturb_sweep(const ExperimentConfig& config) {
    return run_stage("perturb-sweep", [&] {
        const auto paths = ExperimentPaths::at(config.out_dir);
        paths.ensure();
        const EvalContext ctx = make_eval_context(config);
        std::vector<ScoreRow> rows;
        for (const auto& method : config.methods) {
            for (const auto& spec : config.perturbations) {
                auto r = eval_method(config, ctx, method, spec);
                rows.insert(rows.end(), r.begin(), r.end());
            }
        }
        write_scores_csv(paths.results / "scores_perturbed.csv", rows);
        return rows;
    });
}

void stage_bench(const ExperimentConfig& config) {
    run_stage("bench", [&] {
        const auto paths = ExperimentPaths::at(config.out_dir);
        paths.ensure();
        const EvalContext ctx = make_eval_context(config);
        const int count =
            std::min<int>(config.bench.images, static_cast<int>(ctx.test_layers.size()));
        if (count < 1) throw ValidationError("bench: no test images");

        std::vector<Image> images;
        std::vector<Mask> nominals;
        for (int i = 0; i < count; ++i) {
            const auto& [specimen, layer] = ctx.test_layers[static_cast<std::size_t>(i)];
            images.push_back(ctx.data.image(specimen, layer));
            nominals.push_back(ctx.data.mask(specimen, layer));
        }

        // Timing is single-threaded to avoid contention skew.
        const ExecMode saved = exec_mode();
        set_exec_mode(ExecMode::Serial);

        ojson summary;
        CsvWriter csv;
        csv.row({"method", "image_index", "seconds"});
        for (const auto& method : config.methods) {
            std::function<Mask(const Image&)> handle;
            std::optional<SegModel<float>> model;
            std::optional<AcParams> ac_params;
            std::size_t cursor = 0;
            if (method == "active_contour") {
                ac_params = load_calibrated_params(config);
                handle = [&](const Image& img) -> Mask {
                    const Mask& nominal = nominals[cursor++ % nominals.size()];
                    return evolve(img, init_levelset(nominal), *ac_params);
                };
            } else {
                const fs::path ckpt = paths.checkpoint(method, config.seed);
                if (!fs::exists(ckpt))
                    throw DataError("no checkpoint " + ckpt.string() + "; run train first");
                model.emplace(model_config(config, method), load_checkpoint<float>(ckpt).store);
                handle = [&](const Image& img) -> Mask {
                    return predict_mask(model->forward(image_to_tensor<float>(img)),
                                        config.model.threshold);
                };
            }
            const TimingStats stats = time_inference(handle, images);
            for (std::size_t i = 0; i < stats.samples_seconds.size(); ++i)
                csv.row({method, std::to_string(i), format_double(stats.samples_seconds[i])});
            summary[method] = ojson{{"mean_s", stats.mean},     {"median_s", stats.median},
                                    {"q1_s", stats.q1},         {"q3_s", stats.q3},
                                    {"min_s", stats.min},       {"max_s", stats.max},
                                    {"images", images.size()}};
        }
        set_exec_mode(saved);

        summary["hardware"] = hardware_description();
        summary["resolution"] = std::to_string(config.model.input_size) + "x" +
                                std::to_string(config.model.input_size);
        csv.write(paths.results / "timing.csv");
        std::ofstream out(paths.results / "timing.json");
        out << summary.dump(2) << "\n";
        return 0;
    });
}

void run_experiment(const ExperimentConfig& config) {
    config.validate();
    const auto paths = ExperimentPaths::at(config.out_dir);
    paths.ensure();
    {
        std::ofstream marker(paths.incomplete_marker());
        marker << "experiment in progress or aborted\n";
    }
    {
        std::ofstream cfg(paths.root / "config.json");
        cfg << canonical_config_json(config) << "\n";
    }

    stage_gen(config);
    stage_train(config);
    stage_calibrate(config);
    const auto clean = stage_eval(config);
    const auto perturbed = stage_perturb_sweep(config);

    std::vector<ScoreRow> all = clean;
    all.insert(all.end(), perturbed.begin(), perturbed.end());
    write_scores_csv(paths.results / "scores.csv", all);

    stage_bench(config);
    stage_report(config);

    fs::remove(paths.incomplete_marker());
}

} // namespace lsg
