#include "lsg/render.hpp"

#include <cmath>

#include "lsg/rng.hpp"

namespace lsg {

namespace {
constexpr double kPi = 3.14159265358979323846;

std::uint8_t quantize(double v) {
    // Round half away from zero, then clamp.
    double r = (v >= 0.0) ? std::floor(v + 0.5) : std::ceil(v - 0.5);
    if (r < 0.0) r = 0.0;
    if (r > 255.0) r = 255.0;
    return static_cast<std::uint8_t>(r);
}
} // namespace

void PhotometricParams::validate() const {
    if (anisotropy_strength < 0.0 || anisotropy_strength > 1.0)
        throw ValidationError("PhotometricParams: anisotropy_strength must be in [0,1]");
    if (speckle_sigma < 0.0)
        throw ValidationError("PhotometricParams: speckle_sigma must be >= 0");
    if (anisotropy_strength == 0.0 && speckle_sigma == 0.0 && powder_base == solid_base)
        throw ValidationError(
            "PhotometricParams: powder_base must differ from solid_base in the noiseless limit");
}

double scan_angle(int layer_index, double scan_rotation_deg) {
    if (layer_index < 1) throw RangeError("scan_angle: layer_index must be >= 1");
    double a = std::fmod((layer_index - 1) * scan_rotation_deg, 360.0);
    if (a < 0.0) a += 360.0;
    return a;
}

Image render_layer(const Mask& mask, const PhotometricParams& params, int layer_index,
                   const std::array<double, 2>& build_location_px,
                   const std::string& specimen_id) {
    params.validate();
    if (layer_index < 1) throw RangeError("render_layer: layer_index must be >= 1");
    if (mask.width <= 0 || mask.height <= 0)
        throw ValidationError("render_layer: empty mask");

    const int w = mask.width, h = mask.height;
    Image img(w, h);

    const double dir = params.illum_direction_deg * kPi / 180.0;
    const double ux = std::cos(dir), uy = std::sin(dir);
    const double angle = scan_angle(layer_index, params.scan_rotation_deg);
    const double rel = (angle - params.light_azimuth_deg) * kPi / 180.0;
    const double cos_rel = std::cos(rel);
    const double aniso = params.anisotropy_strength * params.solid_base * cos_rel * cos_rel;

    // Speckle stream key: the field must depend only on (seed, specimen, layer).
    Rng rng(combine_keys(combine_keys(params.rng_seed, fnv1a64(specimen_id)),
                         static_cast<std::uint64_t>(layer_index)));

    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const bool fg = mask.at(x, y) != 0;
            double v = fg ? params.solid_base : params.powder_base;
            const double gx = x + build_location_px[0] - w / 2.0;
            const double gy = y + build_location_px[1] - h / 2.0;
            v += params.illum_gradient * (gx * ux + gy * uy) / w;
            if (fg) v += aniso;
            if (params.speckle_sigma > 0.0) v += params.speckle_sigma * rng.next_gaussian();
            img.at(x, y) = quantize(v);
        }
    }
    return img;
}

} // namespace lsg
