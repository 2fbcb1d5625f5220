#pragma once

#include <vector>

#include "lsg/image.hpp"

namespace lsg {

// Level-set evolution controls. w balances the region term (w=1) against the
// edge term (w=0); r_kernel is the half-width of the dense stencil used for
// the local region statistics.
struct AcParams {
    double w = 0.5;
    int r_kernel = 4;
    double step_size = 0.25; // larger steps overshoot strong edge wells
    double curvature_weight = 0.15;
    int max_iters = 500;
    int reinit_every = 25;
    double stop_tol = 1e-3; // fraction of pixels changing sign over 10 iterations
    void validate() const;
};

// phi holds signed distances in pixels, negative inside the foreground.
struct LevelSet {
    int width = 0;
    int height = 0;
    std::vector<double> phi;

    double& at(int x, int y) { return phi[static_cast<std::size_t>(y) * width + x]; }
    double at(int x, int y) const { return phi[static_cast<std::size_t>(y) * width + x]; }
};

// Exact signed Euclidean distance to the nominal boundary (negative inside);
// boundary pixels land near zero because distances are offset half a pixel.
LevelSet init_levelset(const Mask& nominal);

// Exact squared Euclidean distance transform to the nearest set pixel
// (Felzenszwalb-Huttenlocher). Used by init_levelset; exposed for tests.
std::vector<double> squared_distance_transform(const std::vector<std::uint8_t>& set_pixels,
                                               int width, int height);

struct EvolveTrace {
    std::vector<double> energy; // monitored objective per iteration
    std::vector<int> reinit_iterations;
    int iterations = 0;
};

// Gradient-descent evolution of the hybrid energy
//   E = w*E_region + (1-w)*E_edge + curvature regularization
// with a local two-phase mean-separation region term over the dense
// (1+2*r_kernel)^2 stencil and a geodesic edge term with indicator
// g = 1/(1 + |grad(G_1.0 * I)|^2). Returns the {phi < 0} mask.
Mask evolve(const Image& image, const LevelSet& init, const AcParams& params,
            EvolveTrace* trace = nullptr);

struct GridRange {
    double min = 0.0;
    double max = 1.0;
    double step = 0.05;
    int count() const;
};

struct AcScoreRow {
    double w = 0.0;
    int r_kernel = 0;
    double mean_accuracy = 0.0;
};

struct CalibrationPair {
    Image image;
    Mask nominal;
    Mask truth;
};

struct CalibrationResult {
    double w = 0.0;
    int r_kernel = 0;
    double best_accuracy = 0.0;
    std::vector<AcScoreRow> table; // grid order: w ascending, then r ascending
};

// Exhaustive grid search maximizing mean pixel accuracy over the pairs.
// Ties go to smaller w, then smaller r_kernel. Grid points may be evaluated
// in parallel; the table is assembled in grid order.
CalibrationResult calibrate(const std::vector<CalibrationPair>& pairs, const GridRange& w_grid,
                            const GridRange& r_grid, const AcParams& base);

void write_score_table_csv(const std::filesystem::path& path,
                           const std::vector<AcScoreRow>& table);

} // namespace lsg
