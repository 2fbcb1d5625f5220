#include <doctest.h>

#include <cmath>

#include "lsg/lattice.hpp"

using namespace lsg;

namespace {

SpecimenSpec desk_spec() {
    SpecimenSpec spec;
    spec.layers_per_cell = 50;
    return spec;
}

// Independent rasterization oracle: tests the point against every strut
// capsule and node pad of every cell replica directly, with no culling or
// tiling shortcuts.
bool oracle_inside(const SpecimenSpec& spec, const CellModel& cell, double x, double y,
                   double z) {
    const double l = spec.cell_size_mm;
    const int cx = static_cast<int>(std::floor(x / l));
    const int cy = static_cast<int>(std::floor(y / l));
    const int cz = static_cast<int>(std::floor(z / l));
    for (int dx = -1; dx <= 1; ++dx)
        for (int dy = -1; dy <= 1; ++dy)
            for (int dz = -1; dz <= 1; ++dz) {
                const double ox = (cx + dx) * l, oy = (cy + dy) * l, oz = (cz + dz) * l;
                for (const auto& strut : cell.struts) {
                    const Vec3& a = cell.nodes[static_cast<std::size_t>(strut.node_a)];
                    const Vec3& b = cell.nodes[static_cast<std::size_t>(strut.node_b)];
                    const double ax = a.x + ox, ay = a.y + oy, az = a.z + oz;
                    const double bx = b.x + ox, by = b.y + oy, bz = b.z + oz;
                    const double ux = bx - ax, uy = by - ay, uz = bz - az;
                    double t = ((x - ax) * ux + (y - ay) * uy + (z - az) * uz) /
                               (ux * ux + uy * uy + uz * uz);
                    t = std::clamp(t, 0.0, 1.0);
                    const double px = ax + t * ux - x, py = ay + t * uy - y,
                                 pz = az + t * uz - z;
                    if (px * px + py * py + pz * pz <= strut.radius * strut.radius) return true;
                }
                for (std::size_t i = 0; i < cell.nodes.size(); ++i) {
                    const auto& pad = cell.pads[i];
                    const double px = cell.nodes[i].x + ox - x;
                    const double py = cell.nodes[i].y + oy - y;
                    const double pz = cell.nodes[i].z + oz - z;
                    if ((px * px + py * py) / (pad.radius_xy * pad.radius_xy) +
                            (pz * pz) / (pad.radius_z * pad.radius_z) <=
                        1.0)
                        return true;
                }
            }
    return false;
}

Mask oracle_slice(const SpecimenSpec& spec, int layer) {
    const CellModel cell = build_cell_model(spec);
    const double z = layer_z_mm(spec, layer);
    Mask mask(spec.footprint_width_px(), spec.footprint_height_px());
    for (int py = 0; py < mask.height; ++py)
        for (int px = 0; px < mask.width; ++px) {
            const double x = (px + 0.5) / spec.pixels_per_mm;
            const double y = (py + 0.5) / spec.pixels_per_mm;
            mask.at(px, py) = oracle_inside(spec, cell, x, y, z) ? 1 : 0;
        }
    return mask;
}

} // namespace

TEST_CASE("SpecimenSpec validation names the violated invariant") {
    SpecimenSpec spec = desk_spec();
    spec.strut_diameter_mm = 0.0;
    CHECK_THROWS_WITH_AS(spec.validate(), doctest::Contains("strut_diameter_mm"),
                         ValidationError);
    spec = desk_spec();
    spec.strut_diameter_mm = spec.cell_size_mm + 1.0;
    CHECK_THROWS_AS(spec.validate(), ValidationError);
    spec = desk_spec();
    spec.layers_per_cell = 7;
    CHECK_THROWS_WITH_AS(spec.validate(), doctest::Contains("layers_per_cell"), ValidationError);
    spec = desk_spec();
    spec.layers_per_cell = 2;
    CHECK_THROWS_AS(spec.validate(), ValidationError);
    spec = desk_spec();
    spec.pixels_per_mm = 0.0;
    CHECK_THROWS_AS(spec.validate(), ValidationError);
}

TEST_CASE("cell model: 6 nodes, 8 struts, paper strut radius") {
    const CellModel cell = build_cell_model(desk_spec());
    CHECK(cell.nodes.size() == 6);
    CHECK(cell.struts.size() == 8);
    for (const auto& s : cell.struts) CHECK(s.radius == doctest::Approx(0.75));
    for (const auto& s : cell.struts) {
        for (int idx : {s.node_a, s.node_b}) {
            const Vec3& n = cell.nodes[static_cast<std::size_t>(idx)];
            CHECK(n.x >= 0.0);
            CHECK(n.x <= 10.0);
            CHECK(n.y >= 0.0);
            CHECK(n.y <= 10.0);
            CHECK(n.z >= 0.0);
            CHECK(n.z <= 10.0);
        }
    }
    CHECK(cell.mirror_symmetric_z());
}

TEST_CASE("cell model is mirror symmetric for any valid spec") {
    for (double l : {5.0, 10.0, 14.0}) {
        SpecimenSpec spec = desk_spec();
        spec.cell_size_mm = l;
        spec.strut_diameter_mm = 0.15 * l;
        CHECK(build_cell_model(spec).mirror_symmetric_z());
    }
}

TEST_CASE("slice matches the point-in-capsule oracle") {
    const SpecimenSpec spec = desk_spec();
    for (int layer : {1, 7, 13, 23, 26, 45}) {
        const Mask fast = slice_specimen(spec, layer);
        const Mask slow = oracle_slice(spec, layer);
        REQUIRE(fast.same_shape(slow));
        CHECK(fast == slow);
    }
}

TEST_CASE("slice periodicity: slice(n) == slice(n + layers_per_cell)") {
    const SpecimenSpec spec = desk_spec();
    for (int layer : {1, 5, 14, 26, 50, 77}) {
        const Mask a = slice_specimen(spec, layer);
        const Mask b = slice_specimen(spec, layer + spec.layers_per_cell);
        CHECK(a == b);
    }
}

TEST_CASE("mirror pairs within a cell") {
    const SpecimenSpec spec = desk_spec();
    const int lpc = spec.layers_per_cell;
    // Slice planes sit at (o - 1/2) * thickness, so offsets o and lpc+1-o
    // mirror about z = l/2.
    for (int o : {1, 2, 5, 13, 25}) {
        const Mask a = slice_specimen(spec, o);
        const Mask b = slice_specimen(spec, lpc + 1 - o);
        CHECK(a == b);
    }
}

TEST_CASE("every layer is non-empty and not full") {
    const SpecimenSpec spec = desk_spec();
    for (int layer = 1; layer <= spec.layers_per_cell; ++layer) {
        const Mask m = slice_specimen(spec, layer);
        const std::size_t fg = m.foreground_count();
        CHECK(fg > 0);
        CHECK(fg < m.size());
    }
}

TEST_CASE("node layers have strictly larger foreground area than strut layers") {
    const SpecimenSpec spec = desk_spec();
    std::size_t node_min = static_cast<std::size_t>(-1), strut_max = 0;
    for (int layer = 1; layer <= spec.layers_per_cell; ++layer) {
        const std::size_t fg = slice_specimen(spec, layer).foreground_count();
        switch (region_label(layer, spec)) {
            case RegionLabel::Node: node_min = std::min(node_min, fg); break;
            case RegionLabel::Strut: strut_max = std::max(strut_max, fg); break;
            case RegionLabel::Other: break;
        }
    }
    CHECK(node_min > strut_max);
}

TEST_CASE("layer at z = l/4: strut sections only, less area than z ~ 0") {
    const SpecimenSpec spec = desk_spec();
    const int quarter = spec.layers_per_cell / 4 + 1;
    const Mask mq = slice_specimen(spec, quarter);
    const Mask m0 = slice_specimen(spec, 1);
    CHECK(mq.foreground_count() < m0.foreground_count());
    CHECK(mq.foreground_count() > 0);
}

TEST_CASE("determinism: repeated slicing is byte-identical") {
    const SpecimenSpec spec = desk_spec();
    CHECK(slice_specimen(spec, 17) == slice_specimen(spec, 17));
}

TEST_CASE("slice layer range errors") {
    const SpecimenSpec spec = desk_spec();
    CHECK_THROWS_AS(slice_specimen(spec, 0), RangeError);
    CHECK_THROWS_AS(slice_specimen(spec, spec.total_layers() + 1), RangeError);
    CHECK_NOTHROW(slice_specimen(spec, spec.total_layers()));
}

TEST_CASE("region labels reproduce the 200-layer windows") {
    SpecimenSpec spec = desk_spec();
    spec.layers_per_cell = 200;
    CHECK(region_label(400, spec) == RegionLabel::Node);
    CHECK(region_label(625, spec) == RegionLabel::Strut);
    CHECK(region_label(450, spec) == RegionLabel::Other);
    CHECK(region_label(500, spec) == RegionLabel::Node);
    CHECK(region_label(675, spec) == RegionLabel::Strut);
    CHECK(region_label(775, spec) == RegionLabel::Strut);
    CHECK(region_label(410, spec) == RegionLabel::Node);
    CHECK(region_label(411, spec) == RegionLabel::Other);
    CHECK_THROWS_AS(region_label(0, spec), RangeError);
    CHECK_THROWS_AS(region_label(spec.total_layers() + 1, spec), RangeError);
}

TEST_CASE("region label function is periodic in layers_per_cell") {
    const SpecimenSpec spec = desk_spec();
    for (int layer = 1; layer <= spec.layers_per_cell; ++layer)
        CHECK(region_label(layer, spec) == region_label(layer + spec.layers_per_cell, spec));
}

TEST_CASE("as-built deviation injection defaults off and perturbs geometry when on") {
    SpecimenSpec spec = desk_spec();
    const Mask base = slice_specimen(spec, 9);
    spec.node_jitter_mm = 0.15;
    spec.strut_radius_jitter_mm = 0.05;
    spec.deviation_seed = 7;
    const Mask jittered = slice_specimen(spec, 9);
    CHECK(base.same_shape(jittered));
    CHECK_FALSE(base == jittered);
    CHECK(jittered == slice_specimen(spec, 9));
}
