#include "lsg/lattice.hpp"

#include <algorithm>
#include <cmath>

#include "lsg/rng.hpp"

namespace lsg {

namespace {

constexpr double kPadRadiusXyFactor = 0.28;  // of cell size
constexpr double kPadRadiusZFactor = 0.075;  // of cell size

double sq(double v) { return v * v; }

double dist_sq_point_segment(double px, double py, double pz, const Vec3& a, const Vec3& b) {
    double abx = b.x - a.x, aby = b.y - a.y, abz = b.z - a.z;
    double apx = px - a.x, apy = py - a.y, apz = pz - a.z;
    double len_sq = abx * abx + aby * aby + abz * abz;
    double t = len_sq > 0.0 ? (apx * abx + apy * aby + apz * abz) / len_sq : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    double dx = apx - t * abx, dy = apy - t * aby, dz = apz - t * abz;
    return dx * dx + dy * dy + dz * dz;
}

// One solid primitive of the slice plane: either a capsule or an oblate pad,
// already shifted by the periodic replica offset.
struct SlicePrim {
    bool is_pad = false;
    // capsule
    Vec3 a, b;
    double radius_sq = 0.0;
    // pad
    Vec3 center;
    double inv_rxy_sq = 0.0;
    double inv_rz_sq = 0.0;
    // conservative xy bounding box for early reject
    double min_x = 0.0, max_x = 0.0, min_y = 0.0, max_y = 0.0;

    bool contains(double x, double y, double z) const {
        if (x < min_x || x > max_x || y < min_y || y > max_y) return false;
        if (is_pad) {
            return (sq(x - center.x) + sq(y - center.y)) * inv_rxy_sq +
                       sq(z - center.z) * inv_rz_sq <=
                   1.0;
        }
        return dist_sq_point_segment(x, y, z, a, b) <= radius_sq;
    }
};

// Collects the primitives that can intersect the plane z = z_local, including
// periodic replicas at +-cell_size along every axis.
std::vector<SlicePrim> collect_slice_prims(const CellModel& cell, double z_local) {
    std::vector<SlicePrim> prims;
    const double l = cell.cell_size;
    for (int dz = -1; dz <= 1; ++dz) {
        for (int dx = -1; dx <= 1; ++dx) {
            for (int dy = -1; dy <= 1; ++dy) {
                double ox = dx * l, oy = dy * l, oz = dz * l;
                for (const auto& strut : cell.struts) {
                    Vec3 a = cell.nodes[strut.node_a];
                    Vec3 b = cell.nodes[strut.node_b];
                    a.x += ox; a.y += oy; a.z += oz;
                    b.x += ox; b.y += oy; b.z += oz;
                    double r = strut.radius;
                    if (z_local < std::min(a.z, b.z) - r || z_local > std::max(a.z, b.z) + r)
                        continue;
                    SlicePrim p;
                    p.is_pad = false;
                    p.a = a;
                    p.b = b;
                    p.radius_sq = r * r;
                    p.min_x = std::min(a.x, b.x) - r;
                    p.max_x = std::max(a.x, b.x) + r;
                    p.min_y = std::min(a.y, b.y) - r;
                    p.max_y = std::max(a.y, b.y) + r;
                    prims.push_back(p);
                }
                for (std::size_t i = 0; i < cell.nodes.size(); ++i) {
                    const auto& pad = cell.pads[i];
                    Vec3 c = cell.nodes[i];
                    c.x += ox; c.y += oy; c.z += oz;
                    if (z_local < c.z - pad.radius_z || z_local > c.z + pad.radius_z) continue;
                    SlicePrim p;
                    p.is_pad = true;
                    p.center = c;
                    p.inv_rxy_sq = 1.0 / sq(pad.radius_xy);
                    p.inv_rz_sq = 1.0 / sq(pad.radius_z);
                    p.min_x = c.x - pad.radius_xy;
                    p.max_x = c.x + pad.radius_xy;
                    p.min_y = c.y - pad.radius_xy;
                    p.max_y = c.y + pad.radius_xy;
                    prims.push_back(p);
                }
            }
        }
    }
    return prims;
}

bool inside_any(const std::vector<SlicePrim>& prims, double x, double y, double z) {
    for (const auto& p : prims)
        if (p.contains(x, y, z)) return true;
    return false;
}

} // namespace

int SpecimenSpec::footprint_width_px() const {
    return static_cast<int>(std::lround(cells_x * cell_size_mm * pixels_per_mm));
}

int SpecimenSpec::footprint_height_px() const {
    return static_cast<int>(std::lround(cells_y * cell_size_mm * pixels_per_mm));
}

void SpecimenSpec::validate() const {
    if (!(cell_size_mm > 0.0)) throw ValidationError("SpecimenSpec: cell_size_mm must be > 0");
    if (!(strut_diameter_mm > 0.0))
        throw ValidationError("SpecimenSpec: strut_diameter_mm must be > 0");
    if (!(strut_diameter_mm < cell_size_mm))
        throw ValidationError("SpecimenSpec: strut_diameter_mm must be < cell_size_mm");
    if (layers_per_cell < 4 || layers_per_cell % 2 != 0)
        throw ValidationError("SpecimenSpec: layers_per_cell must be even and >= 4");
    if (!(pixels_per_mm > 0.0)) throw ValidationError("SpecimenSpec: pixels_per_mm must be > 0");
    if (cells_x < 1 || cells_y < 1 || cells_z < 1)
        throw ValidationError("SpecimenSpec: cell counts must be >= 1");
    if (specimen_id.empty()) throw ValidationError("SpecimenSpec: specimen_id must be nonempty");
}

bool CellModel::mirror_symmetric_z(double tol) const {
    // Every node must map to a node under z -> cell_size - z, with equal pad
    // shape, and every strut to a strut of equal radius.
    auto mirrored_node = [&](const Vec3& n) -> int {
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            if (std::abs(nodes[i].x - n.x) < tol && std::abs(nodes[i].y - n.y) < tol &&
                std::abs(nodes[i].z - (cell_size - n.z)) < tol)
                return static_cast<int>(i);
        }
        return -1;
    };
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        int j = mirrored_node(nodes[i]);
        if (j < 0) return false;
        if (std::abs(pads[i].radius_xy - pads[j].radius_xy) > tol ||
            std::abs(pads[i].radius_z - pads[j].radius_z) > tol)
            return false;
    }
    for (const auto& s : struts) {
        int ma = mirrored_node(nodes[s.node_a]);
        int mb = mirrored_node(nodes[s.node_b]);
        bool found = false;
        for (const auto& t : struts) {
            if (((t.node_a == ma && t.node_b == mb) || (t.node_a == mb && t.node_b == ma)) &&
                std::abs(t.radius - s.radius) < tol) {
                found = true;
                break;
            }
        }
        if (!found) return false;
    }
    return true;
}

const char* to_string(RegionLabel label) {
    switch (label) {
        case RegionLabel::Node: return "node";
        case RegionLabel::Strut: return "strut";
        case RegionLabel::Other: return "other";
    }
    return "other";
}

RegionLabel region_label_from_string(const std::string& s) {
    if (s == "node") return RegionLabel::Node;
    if (s == "strut") return RegionLabel::Strut;
    if (s == "other") return RegionLabel::Other;
    throw ValidationError("unknown region label: " + s);
}

CellModel build_cell_model(const SpecimenSpec& spec) {
    spec.validate();
    const double l = spec.cell_size_mm;
    const double r = spec.strut_diameter_mm / 2.0;

    CellModel cell;
    cell.cell_size = l;
    cell.nodes = {
        {l / 2, l / 2, 0.0},   // 0: bottom face center
        {l / 2, l / 2, l},     // 1: top face center
        {0.0, l / 2, l / 2},   // 2..5: mid-height face centers
        {l, l / 2, l / 2},
        {l / 2, 0.0, l / 2},
        {l / 2, l, l / 2},
    };
    for (int mid = 2; mid <= 5; ++mid) {
        cell.struts.push_back({0, mid, r});
        cell.struts.push_back({mid, 1, r});
    }
    CellModel::Pad pad{kPadRadiusXyFactor * l, kPadRadiusZFactor * l};
    cell.pads.assign(cell.nodes.size(), pad);

    if (spec.node_jitter_mm > 0.0 || spec.strut_radius_jitter_mm > 0.0) {
        // Deviations are applied to the shared cell model, so the specimen
        // stays periodic; mirror symmetry is intentionally broken here.
        Rng rng(combine_keys(spec.deviation_seed, fnv1a64(spec.specimen_id)));
        for (auto& n : cell.nodes) {
            n.x += spec.node_jitter_mm * rng.next_gaussian();
            n.y += spec.node_jitter_mm * rng.next_gaussian();
            n.z += spec.node_jitter_mm * rng.next_gaussian();
        }
        for (auto& s : cell.struts) {
            double jittered = s.radius + spec.strut_radius_jitter_mm * rng.next_gaussian();
            s.radius = std::max(0.1 * r, jittered);
        }
    }
    return cell;
}

double layer_z_mm(const SpecimenSpec& spec, int layer_index) {
    return (layer_index - 0.5) * spec.layer_thickness_mm();
}

Mask slice_specimen(const SpecimenSpec& spec, int layer_index) {
    spec.validate();
    if (layer_index < 1 || layer_index > spec.total_layers())
        throw RangeError("slice_specimen: layer_index " + std::to_string(layer_index) +
                         " outside [1, " + std::to_string(spec.total_layers()) + "]");

    const CellModel cell = build_cell_model(spec);
    const double l = spec.cell_size_mm;
    const double ppm = spec.pixels_per_mm;
    const double z = layer_z_mm(spec, layer_index);
    const double z_local = z - std::floor(z / l) * l;

    const auto prims = collect_slice_prims(cell, z_local);

    const int width = spec.footprint_width_px();
    const int height = spec.footprint_height_px();
    Mask mask(width, height);

    // The lattice repeats with period cell_size in x and y; when the cell
    // footprint is an integral number of pixels, rasterize one tile and
    // replicate it.
    const double tile_px_f = l * ppm;
    const int tile_px = static_cast<int>(std::lround(tile_px_f));
    const bool tileable = std::abs(tile_px_f - tile_px) < 1e-12 && tile_px > 0;

    if (tileable) {
        std::vector<std::uint8_t> tile(static_cast<std::size_t>(tile_px) * tile_px);
        for (int py = 0; py < tile_px; ++py) {
            for (int px = 0; px < tile_px; ++px) {
                double x = (px + 0.5) / ppm;
                double y = (py + 0.5) / ppm;
                tile[static_cast<std::size_t>(py) * tile_px + px] =
                    inside_any(prims, x, y, z_local) ? 1 : 0;
            }
        }
        for (int py = 0; py < height; ++py) {
            const std::uint8_t* src = &tile[static_cast<std::size_t>(py % tile_px) * tile_px];
            std::uint8_t* dst = &mask.data[static_cast<std::size_t>(py) * width];
            for (int px = 0; px < width; ++px) dst[px] = src[px % tile_px];
        }
        return mask;
    }

    for (int py = 0; py < height; ++py) {
        for (int px = 0; px < width; ++px) {
            double x = (px + 0.5) / ppm;
            double y = (py + 0.5) / ppm;
            double fx = x - std::floor(x / l) * l;
            double fy = y - std::floor(y / l) * l;
            mask.at(px, py) = inside_any(prims, fx, fy, z_local) ? 1 : 0;
        }
    }
    return mask;
}

RegionLabel region_label(int layer_index, const SpecimenSpec& spec) {
    spec.validate();
    if (layer_index < 1 || layer_index > spec.total_layers())
        throw RangeError("region_label: layer_index " + std::to_string(layer_index) +
                         " outside [1, " + std::to_string(spec.total_layers()) + "]");
    const double lpc = spec.layers_per_cell;
    const double pos = static_cast<double>((layer_index - 1) % spec.layers_per_cell) + 0.5;
    const double hw = 0.05 * lpc;
    for (double c : {0.0, lpc / 2.0, lpc}) {
        if (std::abs(pos - c) <= hw) return RegionLabel::Node;
    }
    for (double c : {lpc / 8.0, 3.0 * lpc / 8.0, 5.0 * lpc / 8.0, 7.0 * lpc / 8.0}) {
        if (std::abs(pos - c) <= hw) return RegionLabel::Strut;
    }
    return RegionLabel::Other;
}

} // namespace lsg
