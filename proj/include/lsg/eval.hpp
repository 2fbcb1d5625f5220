#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "lsg/image.hpp"
#include "lsg/lattice.hpp"
#include "lsg/perturb.hpp"

namespace lsg {

struct Confusion {
    std::size_t tp = 0, tn = 0, fp = 0, fn = 0;
    std::size_t total() const { return tp + tn + fp + fn; }
};

// Foreground is the positive class.
Confusion confusion(const Mask& pred, const Mask& truth);

// (TP + TN) / total.
double accuracy(const Confusion& c);

struct LayerScore {
    std::string specimen_id;
    int layer_index = 0;
    RegionLabel region = RegionLabel::Other;
    std::string method;
    double accuracy = 0.0;
    std::optional<PerturbSpec> perturbation;
};

// Normal-approximation 95% CI: mean +- 1.96 * sd / sqrt(n), sample sd.
struct Interval {
    double low = 0.0;
    double high = 0.0;
};
Interval ci95(const std::vector<double>& values);

// Tukey boxplot statistics; quartiles by the inclusive-median convention.
struct BoxStats {
    double median = 0.0;
    double q1 = 0.0;
    double q3 = 0.0;
    double whisker_low = 0.0;
    double whisker_high = 0.0;
    std::vector<double> outliers;
};
BoxStats boxplot_stats(const std::vector<double>& values);

struct RegionSummary {
    RegionLabel region = RegionLabel::Other;
    std::size_t count = 0;
    double mean = 0.0;
    Interval ci;
    BoxStats box;
};

// Aggregates the scores restricted to the given region label.
RegionSummary region_aggregate(const std::vector<LayerScore>& scores, RegionLabel region);

struct TimingStats {
    std::vector<double> samples_seconds; // raw per-image times, call order
    double mean = 0.0;
    double median = 0.0;
    double q1 = 0.0;
    double q3 = 0.0;
    double min = 0.0;
    double max = 0.0;
    std::string hardware;
};

// Times method(image) once per image (wall clock). Callers are expected to
// run this single-threaded; setup/initialization is not included.
TimingStats time_inference(const std::function<Mask(const Image&)>& method,
                           const std::vector<Image>& images);

std::string hardware_description();

// Diagnostic used by smoothness checks: 4-connected foreground components.
int count_components(const Mask& mask);

} // namespace lsg
