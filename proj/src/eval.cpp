#include "lsg/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <thread>

namespace lsg {

Confusion confusion(const Mask& pred, const Mask& truth) {
    if (!pred.same_shape(truth))
        throw ShapeError("confusion: pred " + std::to_string(pred.width) + "x" +
                         std::to_string(pred.height) + " vs truth " +
                         std::to_string(truth.width) + "x" + std::to_string(truth.height));
    Confusion c;
    for (std::size_t i = 0; i < pred.data.size(); ++i) {
        const bool p = pred.data[i] != 0;
        const bool t = truth.data[i] != 0;
        if (p && t) ++c.tp;
        else if (!p && !t) ++c.tn;
        else if (p && !t) ++c.fp;
        else ++c.fn;
    }
    return c;
}

double accuracy(const Confusion& c) {
    if (c.total() == 0) throw ValidationError("accuracy: empty confusion");
    return static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
}

Interval ci95(const std::vector<double>& values) {
    if (values.size() < 2) throw ValidationError("ci95: need at least 2 values");
    const double n = static_cast<double>(values.size());
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    var /= (n - 1.0);
    const double half = 1.96 * std::sqrt(var) / std::sqrt(n);
    return {mean - half, mean + half};
}

namespace {

// Median of sorted[lo, hi).
double median_of(const std::vector<double>& sorted, std::size_t lo, std::size_t hi) {
    const std::size_t n = hi - lo;
    const std::size_t mid = lo + n / 2;
    if (n % 2 == 1) return sorted[mid];
    return 0.5 * (sorted[mid - 1] + sorted[mid]);
}

} // namespace

BoxStats boxplot_stats(const std::vector<double>& values) {
    if (values.empty()) throw ValidationError("boxplot_stats: empty input");
    std::vector<double> sorted = values;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();

    BoxStats b;
    b.median = median_of(sorted, 0, n);
    if (n == 1) {
        b.q1 = b.q3 = b.median;
    } else {
        // Inclusive-median convention: halves include the middle element when
        // n is odd.
        const std::size_t half = n / 2;
        b.q1 = median_of(sorted, 0, n % 2 == 1 ? half + 1 : half);
        b.q3 = median_of(sorted, n % 2 == 1 ? half : half, n);
    }
    const double iqr = b.q3 - b.q1;
    const double lo_fence = b.q1 - 1.5 * iqr;
    const double hi_fence = b.q3 + 1.5 * iqr;
    b.whisker_low = b.median;
    b.whisker_high = b.median;
    bool first = true;
    for (double v : sorted) {
        if (v < lo_fence || v > hi_fence) {
            b.outliers.push_back(v);
        } else {
            if (first) {
                b.whisker_low = v;
                first = false;
            }
            b.whisker_high = v;
        }
    }
    return b;
}

RegionSummary region_aggregate(const std::vector<LayerScore>& scores, RegionLabel region) {
    std::vector<double> vals;
    for (const auto& s : scores)
        if (s.region == region) vals.push_back(s.accuracy);
    if (vals.size() < 2)
        throw ValidationError(std::string("region_aggregate: fewer than 2 scores in region ") +
                              to_string(region));
    RegionSummary out;
    out.region = region;
    out.count = vals.size();
    double mean = 0.0;
    for (double v : vals) mean += v;
    out.mean = mean / static_cast<double>(vals.size());
    out.ci = ci95(vals);
    out.box = boxplot_stats(vals);
    return out;
}

TimingStats time_inference(const std::function<Mask(const Image&)>& method,
                           const std::vector<Image>& images) {
    if (images.empty()) throw ValidationError("time_inference: no images");
    TimingStats stats;
    stats.samples_seconds.reserve(images.size());
    for (const auto& img : images) {
        const auto t0 = std::chrono::steady_clock::now();
        Mask m = method(img);
        const auto t1 = std::chrono::steady_clock::now();
        (void)m;
        double sec = std::chrono::duration<double>(t1 - t0).count();
        if (sec <= 0.0) sec = 1e-9; // clock tick floor
        stats.samples_seconds.push_back(sec);
    }
    std::vector<double> sorted = stats.samples_seconds;
    std::sort(sorted.begin(), sorted.end());
    double sum = 0.0;
    for (double v : sorted) sum += v;
    stats.mean = sum / static_cast<double>(sorted.size());
    stats.median = median_of(sorted, 0, sorted.size());
    const std::size_t n = sorted.size();
    if (n == 1) {
        stats.q1 = stats.q3 = sorted[0];
    } else {
        const std::size_t half = n / 2;
        stats.q1 = median_of(sorted, 0, n % 2 == 1 ? half + 1 : half);
        stats.q3 = median_of(sorted, n % 2 == 1 ? half : half, n);
    }
    stats.min = sorted.front();
    stats.max = sorted.back();
    stats.hardware = hardware_description();
    return stats;
}

std::string hardware_description() {
    std::string model = "unknown CPU";
    std::ifstream cpuinfo("/proc/cpuinfo");
    std::string line;
    while (std::getline(cpuinfo, line)) {
        const auto pos = line.find("model name");
        if (pos != std::string::npos) {
            const auto colon = line.find(':');
            if (colon != std::string::npos && colon + 2 <= line.size()) {
                model = line.substr(colon + 2);
            }
            break;
        }
    }
    return model + ", " + std::to_string(std::thread::hardware_concurrency()) + " hw threads";
}

int count_components(const Mask& mask) {
    std::vector<std::uint8_t> seen(mask.data.size(), 0);
    std::vector<std::size_t> stack;
    int components = 0;
    const int w = mask.width, h = mask.height;
    for (std::size_t start = 0; start < mask.data.size(); ++start) {
        if (!mask.data[start] || seen[start]) continue;
        ++components;
        stack.push_back(start);
        seen[start] = 1;
        while (!stack.empty()) {
            const std::size_t p = stack.back();
            stack.pop_back();
            const int x = static_cast<int>(p % w);
            const int y = static_cast<int>(p / w);
            const int nx[4] = {x - 1, x + 1, x, x};
            const int ny[4] = {y, y, y - 1, y + 1};
            for (int q = 0; q < 4; ++q) {
                if (nx[q] < 0 || nx[q] >= w || ny[q] < 0 || ny[q] >= h) continue;
                const std::size_t idx = static_cast<std::size_t>(ny[q]) * w + nx[q];
                if (mask.data[idx] && !seen[idx]) {
                    seen[idx] = 1;
                    stack.push_back(idx);
                }
            }
        }
    }
    return components;
}

} // namespace lsg
