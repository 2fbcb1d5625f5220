#pragma once

#include <string>
#include <vector>

#include "lsg/manifest.hpp"

namespace lsg {

struct LayerRange {
    int first = 0; // inclusive, 1-based
    int last = 0;  // inclusive
    int count() const { return last - first + 1; }
    bool contains(int layer) const { return layer >= first && layer <= last; }
};

struct SplitPlan {
    std::string strategy;
    std::vector<std::pair<std::string, LayerRange>> train;
    std::vector<std::pair<std::string, LayerRange>> test;
};

// separate_<id>: train on the first 2*layers_per_cell layers of that
// specimen; test on everything after 2*layers_per_cell in both specimens.
// joint: train on the first layers_per_cell layers of each specimen; test on
// the rest of both. Train/test ranges never overlap within a specimen.
SplitPlan make_splits(const DatasetManifest& manifest, const std::string& strategy,
                      int layers_per_cell);

} // namespace lsg
