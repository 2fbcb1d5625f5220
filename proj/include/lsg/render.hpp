#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "lsg/image.hpp"
#include "lsg/lattice.hpp"

namespace lsg {

// Synthetic image-formation model: per-pixel intensity is
//   base(class) + illumination ramp + anisotropy (foreground only) + speckle,
// rounded to nearest (ties away from zero), then clamped to [0, 255].
// The ramp is a plane over the build area, so specimens at different build
// locations see different offsets; the anisotropy term follows the layer's
// scan angle. This is a simulation of the observed variability, not physics.
struct PhotometricParams {
    double powder_base = 110.0;
    double solid_base = 170.0;
    double illum_gradient = 40.0;     // intensity change per image width
    double illum_direction_deg = 0.0; // ramp direction
    double anisotropy_strength = 0.15; // in [0,1], scales solid_base
    double light_azimuth_deg = 30.0;
    double scan_rotation_deg = 67.0;  // per-layer hatch rotation
    double speckle_sigma = 4.0;       // Gaussian noise, intensity units
    std::uint64_t rng_seed = 0;

    void validate() const;
};

// Scan direction of a layer: ((layer_index - 1) * rotation) mod 360.
double scan_angle(int layer_index, double scan_rotation_deg);

// build_location_px: specimen offset inside the build area, in pixels of the
// image resolution; it shifts the illumination ramp. The speckle field is a
// pure function of (rng_seed, specimen_id, layer_index).
Image render_layer(const Mask& mask, const PhotometricParams& params, int layer_index,
                   const std::array<double, 2>& build_location_px,
                   const std::string& specimen_id);

} // namespace lsg
