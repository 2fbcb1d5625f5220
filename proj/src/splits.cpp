#include "lsg/splits.hpp"

namespace lsg {

SplitPlan make_splits(const DatasetManifest& manifest, const std::string& strategy,
                      int layers_per_cell) {
    if (layers_per_cell < 1) throw ValidationError("make_splits: layers_per_cell must be >= 1");
    const int total = manifest.layers_per_specimen();
    const auto ids = manifest.specimen_ids();
    if (ids.size() < 2) throw ValidationError("make_splits: need at least two specimens");
    if (total < 4 * layers_per_cell)
        throw ValidationError("make_splits: specimens have " + std::to_string(total) +
                              " layers, need at least 4*layers_per_cell = " +
                              std::to_string(4 * layers_per_cell));

    SplitPlan plan;
    plan.strategy = strategy;
    if (strategy == "joint") {
        for (const auto& id : ids) plan.train.push_back({id, {1, layers_per_cell}});
        for (const auto& id : ids) plan.test.push_back({id, {layers_per_cell + 1, total}});
        return plan;
    }
    const std::string prefix = "separate_";
    if (strategy.rfind(prefix, 0) != 0)
        throw ValidationError("make_splits: unknown strategy " + strategy);
    const std::string target = strategy.substr(prefix.size());
    bool found = false;
    for (const auto& id : ids) found = found || id == target;
    if (!found) throw ValidationError("make_splits: no specimen " + target + " in the manifest");

    plan.train.push_back({target, {1, 2 * layers_per_cell}});
    for (const auto& id : ids) plan.test.push_back({id, {2 * layers_per_cell + 1, total}});
    return plan;
}

} // namespace lsg
