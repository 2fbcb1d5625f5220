#include <doctest.h>

#include <cmath>

#include "lsg/active_contour.hpp"
#include "lsg/eval.hpp"
#include "lsg/rng.hpp"

using namespace lsg;

namespace {

// Centered on a pixel center so a radius of 10.5 really spans 21 pixels.
Mask disk_mask(int size, double radius, double cx = -1, double cy = -1) {
    Mask m(size, size);
    if (cx < 0) cx = size / 2.0 + 0.5;
    if (cy < 0) cy = size / 2.0 + 0.5;
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x)
            m.at(x, y) = std::hypot(x + 0.5 - cx, y + 0.5 - cy) <= radius ? 1 : 0;
    return m;
}

Image two_level_image(const Mask& m, std::uint8_t bg, std::uint8_t fg) {
    Image img(m.width, m.height);
    for (std::size_t i = 0; i < m.size(); ++i) img.data[i] = m.data[i] ? fg : bg;
    return img;
}

Mask dilate(const Mask& m, int iterations) {
    Mask cur = m;
    for (int it = 0; it < iterations; ++it) {
        Mask next = cur;
        for (int y = 0; y < m.height; ++y)
            for (int x = 0; x < m.width; ++x) {
                if (cur.at(x, y)) continue;
                const bool touch = (x > 0 && cur.at(x - 1, y)) ||
                                   (x + 1 < m.width && cur.at(x + 1, y)) ||
                                   (y > 0 && cur.at(x, y - 1)) ||
                                   (y + 1 < m.height && cur.at(x, y + 1));
                if (touch) next.at(x, y) = 1;
            }
        cur = next;
    }
    return cur;
}

double mask_accuracy(const Mask& pred, const Mask& truth) {
    return accuracy(confusion(pred, truth));
}

// Boundary pixels: foreground with a 4-neighbour background (or image edge).
std::vector<std::pair<int, int>> boundary_pixels(const Mask& m) {
    std::vector<std::pair<int, int>> out;
    for (int y = 0; y < m.height; ++y)
        for (int x = 0; x < m.width; ++x) {
            if (!m.at(x, y)) continue;
            const bool edge = x == 0 || y == 0 || x == m.width - 1 || y == m.height - 1 ||
                              !m.at(x - 1, y) || !m.at(x + 1, y) || !m.at(x, y - 1) ||
                              !m.at(x, y + 1);
            if (edge) out.push_back({x, y});
        }
    return out;
}

double hausdorff(const std::vector<std::pair<int, int>>& a,
                 const std::vector<std::pair<int, int>>& b) {
    double worst = 0.0;
    for (const auto& [ax, ay] : a) {
        double best = 1e18;
        for (const auto& [bx, by] : b)
            best = std::min(best, std::hypot(double(ax - bx), double(ay - by)));
        worst = std::max(worst, best);
    }
    for (const auto& [bx, by] : b) {
        double best = 1e18;
        for (const auto& [ax, ay] : a)
            best = std::min(best, std::hypot(double(ax - bx), double(ay - by)));
        worst = std::max(worst, best);
    }
    return worst;
}

} // namespace

TEST_CASE("AcParams validation") {
    AcParams p;
    p.w = 1.2;
    CHECK_THROWS_AS(p.validate(), ValidationError);
    p = AcParams{};
    p.r_kernel = 13;
    CHECK_THROWS_AS(p.validate(), ValidationError);
    p = AcParams{};
    p.max_iters = 0;
    CHECK_THROWS_AS(p.validate(), ValidationError);
    CHECK_NOTHROW(AcParams{}.validate());
}

TEST_CASE("squared distance transform matches a brute-force oracle") {
    Rng rng(31);
    for (int trial = 0; trial < 10; ++trial) {
        const int w = 6 + static_cast<int>(rng.next_below(9));
        const int h = 6 + static_cast<int>(rng.next_below(9));
        std::vector<std::uint8_t> set(static_cast<std::size_t>(w) * h, 0);
        for (auto& v : set) v = rng.next_double() < 0.2 ? 1 : 0;
        set[rng.next_below(set.size())] = 1; // at least one seed
        const auto d = squared_distance_transform(set, w, h);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                double best = 1e18;
                for (int yy = 0; yy < h; ++yy)
                    for (int xx = 0; xx < w; ++xx)
                        if (set[static_cast<std::size_t>(yy) * w + xx])
                            best = std::min(best, double((x - xx) * (x - xx) +
                                                         (y - yy) * (y - yy)));
                CHECK(d[static_cast<std::size_t>(y) * w + x] == doctest::Approx(best));
            }
    }
}

TEST_CASE("init_levelset: boundary near zero, disk center near -10.5") {
    const Mask disk = disk_mask(64, 10.5); // 21 px across
    const LevelSet ls = init_levelset(disk);
    // boundary pixels: |phi| <= 1
    for (const auto& [x, y] : boundary_pixels(disk)) CHECK(std::abs(ls.at(x, y)) <= 1.0);
    CHECK(std::abs(ls.at(32, 32) - (-10.5)) <= 1.0);
    // outside far away is positive
    CHECK(ls.at(1, 1) > 0.0);

    Mask empty(8, 8, 0);
    CHECK_THROWS_AS(init_levelset(empty), ValidationError);
    Mask full(8, 8, 1);
    CHECK_THROWS_AS(init_levelset(full), ValidationError);
}

TEST_CASE("zero level of the init matches the nominal boundary within 1 px") {
    const Mask m = disk_mask(96, 23.0, 40.0, 52.0);
    const LevelSet ls = init_levelset(m);
    const Mask regen = [&] {
        Mask out(m.width, m.height);
        for (std::size_t i = 0; i < out.size(); ++i) out.data[i] = ls.phi[i] < 0.0 ? 1 : 0;
        return out;
    }();
    CHECK(hausdorff(boundary_pixels(regen), boundary_pixels(m)) <= 1.0);
}

TEST_CASE("evolve: truth-initialized contour stays put on a clean disk") {
    const Mask truth = disk_mask(128, 20.0);
    const Image img = two_level_image(truth, 100, 180);
    AcParams p;
    const Mask out = evolve(img, init_levelset(truth), p);
    CHECK(mask_accuracy(out, truth) >= 0.99);
}

TEST_CASE("evolve: a 3 px dilated init strictly improves") {
    const Mask truth = disk_mask(128, 20.0);
    const Image img = two_level_image(truth, 100, 180);
    const Mask start = dilate(truth, 3);
    const double acc0 = mask_accuracy(start, truth);
    AcParams p;
    const Mask out = evolve(img, init_levelset(start), p);
    CHECK(mask_accuracy(out, truth) > acc0);
}

TEST_CASE("w = 0 evolution is invariant to constant intensity shifts") {
    const Mask truth = disk_mask(96, 18.0);
    const Mask start = dilate(truth, 2);
    Image img = two_level_image(truth, 90, 170);
    Image shifted = img;
    for (auto& v : shifted.data) v = static_cast<std::uint8_t>(v + 30);
    AcParams p;
    p.w = 0.0;
    p.max_iters = 120;
    const Mask a = evolve(img, init_levelset(start), p);
    const Mask b = evolve(shifted, init_levelset(start), p);
    CHECK(a == b);
}

TEST_CASE("energy is non-increasing outside reinitialization transients") {
    const Mask truth = disk_mask(96, 18.0);
    const Image img = two_level_image(truth, 100, 180);
    const Mask start = dilate(truth, 3);
    AcParams p;
    p.max_iters = 200;
    EvolveTrace trace;
    evolve(img, init_levelset(start), p, &trace);
    REQUIRE(trace.energy.size() > 10);

    auto near_reinit = [&](int iter) {
        for (int r : trace.reinit_iterations)
            if (iter >= r && iter <= r + 3) return true;
        return false;
    };
    // Non-increasing up to small settling wiggles from the discrete contour
    // representation (measured ~0.1% relative); reinitialization transients
    // may bump the energy by up to 1%.
    int violations = 0;
    for (std::size_t i = 1; i < trace.energy.size(); ++i) {
        const double prev = trace.energy[i - 1];
        const double cur = trace.energy[i];
        const double limit = near_reinit(static_cast<int>(i)) ? 1e-2 : 3e-3;
        if (cur > prev + std::abs(prev) * limit + 1e-9) ++violations;
    }
    CHECK(violations == 0);
    CHECK(trace.energy.back() < 0.25 * trace.energy.front()); // net descent
}

TEST_CASE("non-finite evolution reports the failing iteration") {
    const Mask truth = disk_mask(48, 10.0);
    const Image img = two_level_image(truth, 100, 180);
    LevelSet init = init_levelset(truth);
    init.phi[static_cast<std::size_t>(24) * 48 + 24] =
        std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_WITH_AS(evolve(img, init, AcParams{}), doctest::Contains("iteration"),
                         NumericError);
}

TEST_CASE("evolve shape mismatch is a shape error") {
    const Mask truth = disk_mask(32, 8.0);
    const Image img = two_level_image(disk_mask(48, 8.0), 100, 180);
    CHECK_THROWS_AS(evolve(img, init_levelset(truth), AcParams{}), ShapeError);
}

TEST_CASE("evolve is deterministic") {
    const Mask truth = disk_mask(64, 14.0);
    Image img = two_level_image(truth, 90, 175);
    Rng rng(5);
    for (auto& v : img.data)
        v = static_cast<std::uint8_t>(
            std::clamp(v + 6.0 * rng.next_gaussian(), 0.0, 255.0));
    AcParams p;
    p.max_iters = 80;
    const Mask a = evolve(img, init_levelset(truth), p);
    const Mask b = evolve(img, init_levelset(truth), p);
    CHECK(a == b);
}

TEST_CASE("component count stays within 3x of the true foreground") {
    const Mask truth = disk_mask(96, 16.0);
    Image img = two_level_image(truth, 100, 180);
    Rng rng(6);
    for (auto& v : img.data)
        v = static_cast<std::uint8_t>(
            std::clamp(v + 8.0 * rng.next_gaussian(), 0.0, 255.0));
    AcParams p;
    const Mask out = evolve(img, init_levelset(truth), p);
    CHECK(count_components(out) <= 3 * count_components(truth));
}

TEST_CASE("calibrate: paper grid has 21 x 12 = 252 points and the argmax re-verifies") {
    const int size = 48;
    const Mask truth = disk_mask(size, 11.0);
    Image img = two_level_image(truth, 95, 175);
    Rng rng(7);
    for (auto& v : img.data)
        v = static_cast<std::uint8_t>(
            std::clamp(v + 5.0 * rng.next_gaussian(), 0.0, 255.0));

    std::vector<CalibrationPair> pairs;
    pairs.push_back({img, dilate(truth, 1), truth});

    AcParams base;
    base.max_iters = 60;
    const GridRange w_grid{0.0, 1.0, 0.05};
    const GridRange r_grid{1.0, 12.0, 1.0};
    CHECK(w_grid.count() == 21);
    CHECK(r_grid.count() == 12);

    const CalibrationResult result = calibrate(pairs, w_grid, r_grid, base);
    CHECK(result.table.size() == 252);

    // the reported argmax re-verifies against an independent re-run
    AcParams best = base;
    best.w = result.w;
    best.r_kernel = result.r_kernel;
    const Mask re = evolve(pairs[0].image, init_levelset(pairs[0].nominal), best);
    CHECK(mask_accuracy(re, pairs[0].truth) == doctest::Approx(result.best_accuracy));

    // table maximum equals the recorded best, ties resolved to the first in
    // grid order (smaller w, then smaller r)
    double best_acc = -1.0;
    for (const auto& row : result.table) best_acc = std::max(best_acc, row.mean_accuracy);
    CHECK(best_acc == doctest::Approx(result.best_accuracy));
    for (const auto& row : result.table) {
        if (row.mean_accuracy == best_acc) {
            CHECK(row.w == result.w);
            CHECK(row.r_kernel == result.r_kernel);
            break;
        }
    }
}

TEST_CASE("calibrate: a single grid point comes straight back") {
    const Mask truth = disk_mask(32, 8.0);
    const Image img = two_level_image(truth, 100, 180);
    std::vector<CalibrationPair> pairs;
    pairs.push_back({img, truth, truth});
    AcParams base;
    base.max_iters = 20;
    const CalibrationResult r =
        calibrate(pairs, GridRange{0.3, 0.3, 0.05}, GridRange{4.0, 4.0, 1.0}, base);
    CHECK(r.table.size() == 1);
    CHECK(r.w == doctest::Approx(0.3));
    CHECK(r.r_kernel == 4);
    CHECK_THROWS_AS(calibrate({}, GridRange{}, GridRange{}, base), ValidationError);
}
