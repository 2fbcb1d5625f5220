#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "lsg/errors.hpp"
#include "lsg/image.hpp"

namespace lsg {

struct RangeError : ValidationError {
    explicit RangeError(const std::string& msg) : ValidationError(msg) {}
};

// Parametric description of one lattice specimen.
struct SpecimenSpec {
    double cell_size_mm = 10.0;
    double strut_diameter_mm = 1.5;
    int cells_x = 2;
    int cells_y = 2;
    int cells_z = 4;
    int layers_per_cell = 200;
    double pixels_per_mm = 6.4;
    std::string specimen_id = "A";
    std::array<double, 2> build_location_mm = {0.0, 0.0};

    // As-built deviation injection; off by default.
    double node_jitter_mm = 0.0;
    double strut_radius_jitter_mm = 0.0;
    std::uint64_t deviation_seed = 0;

    int total_layers() const { return cells_z * layers_per_cell; }
    double layer_thickness_mm() const { return cell_size_mm / layers_per_cell; }
    int footprint_width_px() const;
    int footprint_height_px() const;

    void validate() const; // throws ValidationError naming the violated invariant
};

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;
};

// Canonical rhombic cell: 6 nodes (bottom face center, top face center, four
// mid-height face centers), 8 capsule struts (bottom to each mid, each mid to
// top), plus an oblate junction pad at every node. The pads model the
// thickened junctions of the printed lattice; without them, every horizontal
// plane cuts the same four strut ellipses and node sections would never
// dominate strut sections.
struct CellModel {
    struct Strut {
        int node_a = 0;
        int node_b = 0;
        double radius = 0.0;
    };
    struct Pad {
        double radius_xy = 0.0; // in-plane semi-axis
        double radius_z = 0.0;  // vertical semi-axis
    };

    double cell_size = 0.0;
    std::vector<Vec3> nodes;
    std::vector<Strut> struts;
    std::vector<Pad> pads; // one per node

    bool mirror_symmetric_z(double tol = 1e-9) const;
};

enum class RegionLabel { Node, Strut, Other };

const char* to_string(RegionLabel label);
RegionLabel region_label_from_string(const std::string& s);

CellModel build_cell_model(const SpecimenSpec& spec);

// Rasterizes the lattice cross-section at z = (layer_index - 1/2) * thickness.
// A pixel is foreground iff its center lies inside any capsule or pad. The
// lattice is treated as periodic in all three axes, so slices repeat exactly
// with period layers_per_cell.
Mask slice_specimen(const SpecimenSpec& spec, int layer_index);

// Layer z (center of the fused layer) in mm.
double layer_z_mm(const SpecimenSpec& spec, int layer_index);

// Node windows have half-width 5% of layers_per_cell around in-cell offsets
// {0, 1/2, 1} * layers_per_cell; strut windows around {1/8, 3/8, 5/8, 7/8}.
RegionLabel region_label(int layer_index, const SpecimenSpec& spec);

} // namespace lsg
