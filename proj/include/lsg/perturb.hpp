#pragma once

#include <cstdint>
#include <string>

#include "lsg/image.hpp"

namespace lsg {

enum class PerturbKind { Gamma, GaussianNoise, Pixelate };

const char* to_string(PerturbKind kind);
PerturbKind perturb_kind_from_string(const std::string& s);

// One perturbation at a given severity. Only the field matching `kind` is
// used: gamma exponent, noise sigma (8-bit intensity units), or pixelation
// scale s in (0,1].
struct PerturbSpec {
    PerturbKind kind = PerturbKind::Gamma;
    std::string level = "mid"; // low / mid / high for the standard presets
    double gamma = 1.0;
    double sigma = 0.0;
    double scale = 1.0;
    std::uint64_t rng_seed = 0;

    double value() const;
    void validate() const;
};

// Severity presets: gamma {0.8, 1.2, 1.5}, sigma {5, 10, 20}, scale
// {0.75, 0.5, 0.25} for low/mid/high.
PerturbSpec preset(PerturbKind kind, const std::string& level, std::uint64_t seed = 0);

Image apply_gamma(const Image& img, double gamma);
Image apply_gaussian_noise(const Image& img, double sigma, std::uint64_t seed);
// Block-average downsample to (round(s*H), round(s*W)), nearest-neighbour
// upsample back; s = 1 is the identity.
Image apply_pixelate(const Image& img, double scale);

Image apply_perturbation(const Image& img, const PerturbSpec& spec);

} // namespace lsg
