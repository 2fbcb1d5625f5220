#include <algorithm>
#include <fstream>
#include <map>

#include "lsg/experiment.hpp"
#include "lsg/svg.hpp"

namespace lsg {

namespace fs = std::filesystem;

namespace {

std::vector<LayerScore> to_layer_scores(const std::vector<ScoreRow>& rows) {
    std::vector<LayerScore> out;
    for (const auto& r : rows) {
        LayerScore s;
        s.specimen_id = r.specimen;
        s.layer_index = r.layer;
        s.region = region_label_from_string(r.region);
        s.method = r.method;
        s.accuracy = r.accuracy;
        out.push_back(std::move(s));
    }
    return out;
}

ojson region_json(const RegionSummary& s) {
    ojson outliers = ojson::array();
    for (double v : s.box.outliers) outliers.push_back(v);
    return ojson{{"count", s.count},
                 {"mean", s.mean},
                 {"ci95", ojson{{"low", s.ci.low}, {"high", s.ci.high}}},
                 {"box",
                  ojson{{"median", s.box.median},
                        {"q1", s.box.q1},
                        {"q3", s.box.q3},
                        {"whisker_low", s.box.whisker_low},
                        {"whisker_high", s.box.whisker_high},
                        {"outliers", outliers}}}};
}

ojson summarize_group(const std::vector<ScoreRow>& rows) {
    ojson out;
    double mean = 0.0;
    for (const auto& r : rows) mean += r.accuracy;
    out["count"] = rows.size();
    out["mean"] = rows.empty() ? 0.0 : mean / static_cast<double>(rows.size());
    const auto scores = to_layer_scores(rows);
    for (RegionLabel region : {RegionLabel::Node, RegionLabel::Strut}) {
        std::size_t n = 0;
        for (const auto& s : scores) n += (s.region == region);
        if (n >= 2) out[to_string(region)] = region_json(region_aggregate(scores, region));
    }
    return out;
}

std::string perturb_key(const ScoreRow& r) {
    return r.perturb_kind == "none" ? "clean" : r.perturb_kind + "/" + r.perturb_level;
}

} // namespace

void stage_report(const ExperimentConfig& config) {
    const auto paths = ExperimentPaths::at(config.out_dir);
    paths.ensure();

    std::vector<ScoreRow> rows;
    const fs::path merged = paths.results / "scores.csv";
    if (fs::exists(merged)) {
        rows = read_scores_csv(merged);
    } else {
        for (const char* name : {"scores_clean.csv", "scores_perturbed.csv"}) {
            const fs::path p = paths.results / name;
            if (fs::exists(p)) {
                auto r = read_scores_csv(p);
                rows.insert(rows.end(), r.begin(), r.end());
            }
        }
    }
    if (rows.empty()) throw DataError("stage report: no score rows under " +
                                      paths.results.string() + "; run eval first");

    // Group rows by method and perturbation context (insertion order).
    std::vector<std::string> method_order;
    std::map<std::string, std::vector<std::string>> context_order;
    std::map<std::string, std::map<std::string, std::vector<ScoreRow>>> groups;
    for (const auto& r : rows) {
        if (groups.find(r.method) == groups.end()) method_order.push_back(r.method);
        auto& ctxs = groups[r.method];
        const std::string key = perturb_key(r);
        if (ctxs.find(key) == ctxs.end()) context_order[r.method].push_back(key);
        ctxs[key].push_back(r);
    }

    ojson summary;
    summary["split"] = config.split;
    summary["seed"] = config.seed;
    summary["config_hash"] = hash_hex(config_hash(config));
    const fs::path manifest_path = paths.dataset / "manifest.json";
    if (fs::exists(manifest_path))
        summary["manifest_hash"] = hash_hex(manifest_file_hash(manifest_path));
    summary["ci_method"] = "normal approximation, mean +- 1.96*sd/sqrt(n), sample sd";
    summary["boxplot_convention"] = "Tukey 1.5*IQR whiskers, inclusive-median quartiles";

    ojson methods_json;
    for (const auto& method : method_order) {
        ojson mj;
        for (const auto& key : context_order[method]) mj[key] = summarize_group(groups[method][key]);
        methods_json[method] = mj;
    }
    summary["methods"] = methods_json;
    {
        std::ofstream out(paths.results / "summary.json");
        out << summary.dump(2) << "\n";
    }

    // Accuracy-vs-layer curves from the clean rows.
    for (const auto& method : method_order) {
        const auto it = groups[method].find("clean");
        if (it == groups[method].end()) continue;
        std::map<std::string, std::vector<std::pair<int, double>>> by_specimen;
        for (const auto& r : it->second) by_specimen[r.specimen].push_back({r.layer, r.accuracy});
        std::vector<std::pair<std::string, std::vector<std::pair<int, double>>>> series;
        for (auto& [specimen, pts] : by_specimen) {
            std::sort(pts.begin(), pts.end());
            series.push_back({"specimen " + specimen, pts});
        }
        write_accuracy_curve_svg(paths.plots / ("accuracy_vs_layer_" + method + ".svg"),
                                 method + " clean test accuracy by layer", series);
    }

    // Node/strut boxplots per method and perturbation kind.
    for (const auto& method : method_order) {
        for (const std::string kind : {"gamma", "gaussian_noise", "pixelate"}) {
            std::vector<std::pair<std::string, BoxStats>> boxes;
            for (const std::string level : {"low", "mid", "high"}) {
                const auto it = groups[method].find(kind + "/" + level);
                if (it == groups[method].end()) continue;
                const auto scores = to_layer_scores(it->second);
                for (RegionLabel region : {RegionLabel::Node, RegionLabel::Strut}) {
                    std::vector<double> vals;
                    for (const auto& s : scores)
                        if (s.region == region) vals.push_back(s.accuracy);
                    if (vals.size() >= 2)
                        boxes.push_back({level + " " + to_string(region), boxplot_stats(vals)});
                }
            }
            if (!boxes.empty())
                write_boxplot_svg(paths.plots / ("box_" + method + "_" + kind + ".svg"),
                                  method + " under " + kind, boxes);
        }
    }

    // Compact markdown digest.
    std::ofstream md(paths.root / "report.md");
    md << "# Experiment report\n\n";
    md << "- split: " << config.split << "\n";
    md << "- seed: " << config.seed << "\n";
    md << "- config hash: " << hash_hex(config_hash(config)) << "\n\n";
    md << "| method | context | layers | mean accuracy |\n";
    md << "|---|---|---|---|\n";
    for (const auto& method : method_order) {
        for (const auto& key : context_order[method]) {
            const auto& rs = groups[method][key];
            double mean = 0.0;
            for (const auto& r : rs) mean += r.accuracy;
            mean /= static_cast<double>(rs.size());
            char buf[32];
            std::snprintf(buf, sizeof(buf), "%.4f", mean);
            md << "| " << method << " | " << key << " | " << rs.size() << " | " << buf << " |\n";
        }
    }
    md << "\nPlots: `results/plots/*.svg`; per-layer scores: `results/scores.csv`.\n";
}

} // namespace lsg
