#include "lsg/perturb.hpp"

#include <cmath>

#include "lsg/rng.hpp"

namespace lsg {

namespace {
std::uint8_t quantize(double v) {
    double r = (v >= 0.0) ? std::floor(v + 0.5) : std::ceil(v - 0.5);
    if (r < 0.0) r = 0.0;
    if (r > 255.0) r = 255.0;
    return static_cast<std::uint8_t>(r);
}
} // namespace

const char* to_string(PerturbKind kind) {
    switch (kind) {
        case PerturbKind::Gamma: return "gamma";
        case PerturbKind::GaussianNoise: return "gaussian_noise";
        case PerturbKind::Pixelate: return "pixelate";
    }
    return "gamma";
}

PerturbKind perturb_kind_from_string(const std::string& s) {
    if (s == "gamma") return PerturbKind::Gamma;
    if (s == "gaussian_noise") return PerturbKind::GaussianNoise;
    if (s == "pixelate") return PerturbKind::Pixelate;
    throw ValidationError("unknown perturbation kind: " + s);
}

double PerturbSpec::value() const {
    switch (kind) {
        case PerturbKind::Gamma: return gamma;
        case PerturbKind::GaussianNoise: return sigma;
        case PerturbKind::Pixelate: return scale;
    }
    return 0.0;
}

void PerturbSpec::validate() const {
    if (!(gamma > 0.0)) throw ValidationError("PerturbSpec: gamma must be > 0");
    if (!(sigma >= 0.0)) throw ValidationError("PerturbSpec: sigma must be >= 0");
    if (!(scale > 0.0 && scale <= 1.0))
        throw ValidationError("PerturbSpec: scale must be in (0,1]");
}

PerturbSpec preset(PerturbKind kind, const std::string& level, std::uint64_t seed) {
    int idx = -1;
    if (level == "low") idx = 0;
    if (level == "mid") idx = 1;
    if (level == "high") idx = 2;
    if (idx < 0) throw ValidationError("unknown perturbation level: " + level);

    PerturbSpec spec;
    spec.kind = kind;
    spec.level = level;
    spec.rng_seed = seed;
    switch (kind) {
        case PerturbKind::Gamma: {
            constexpr double g[3] = {0.8, 1.2, 1.5};
            spec.gamma = g[idx];
            break;
        }
        case PerturbKind::GaussianNoise: {
            constexpr double s[3] = {5.0, 10.0, 20.0};
            spec.sigma = s[idx];
            break;
        }
        case PerturbKind::Pixelate: {
            constexpr double s[3] = {0.75, 0.5, 0.25};
            spec.scale = s[idx];
            break;
        }
    }
    return spec;
}

Image apply_gamma(const Image& img, double gamma) {
    if (!(gamma > 0.0)) throw ValidationError("apply_gamma: gamma must be > 0");
    // 256-entry lookup keeps repeated pow calls out of the pixel loop.
    std::uint8_t lut[256];
    for (int v = 0; v < 256; ++v)
        lut[v] = quantize(255.0 * std::pow(v / 255.0, gamma));
    Image out(img.width, img.height);
    for (std::size_t i = 0; i < img.data.size(); ++i) out.data[i] = lut[img.data[i]];
    return out;
}

Image apply_gaussian_noise(const Image& img, double sigma, std::uint64_t seed) {
    if (!(sigma >= 0.0)) throw ValidationError("apply_gaussian_noise: sigma must be >= 0");
    if (sigma == 0.0) return img;
    Image out(img.width, img.height);
    Rng rng(mix64(seed));
    for (std::size_t i = 0; i < img.data.size(); ++i)
        out.data[i] = quantize(img.data[i] + sigma * rng.next_gaussian());
    return out;
}

Image apply_pixelate(const Image& img, double scale) {
    if (!(scale > 0.0 && scale <= 1.0))
        throw ValidationError("apply_pixelate: scale must be in (0,1]");
    const int sw = static_cast<int>(std::lround(scale * img.width));
    const int sh = static_cast<int>(std::lround(scale * img.height));
    if (sw < 1 || sh < 1)
        throw ValidationError("apply_pixelate: scaled dimensions fall below one pixel");
    if (sw == img.width && sh == img.height) return img;

    // Area-weighted block average: small pixel (sx, sy) covers the source box
    // [sx*W/sw, (sx+1)*W/sw) x [sy*H/sh, (sy+1)*H/sh).
    std::vector<double> small(static_cast<std::size_t>(sw) * sh);
    for (int sy = 0; sy < sh; ++sy) {
        const double y0 = static_cast<double>(sy) * img.height / sh;
        const double y1 = static_cast<double>(sy + 1) * img.height / sh;
        for (int sx = 0; sx < sw; ++sx) {
            const double x0 = static_cast<double>(sx) * img.width / sw;
            const double x1 = static_cast<double>(sx + 1) * img.width / sw;
            double acc = 0.0, area = 0.0;
            for (int y = static_cast<int>(std::floor(y0)); y < static_cast<int>(std::ceil(y1));
                 ++y) {
                const double wy =
                    std::min<double>(y + 1, y1) - std::max<double>(y, y0);
                if (wy <= 0.0) continue;
                for (int x = static_cast<int>(std::floor(x0));
                     x < static_cast<int>(std::ceil(x1)); ++x) {
                    const double wx =
                        std::min<double>(x + 1, x1) - std::max<double>(x, x0);
                    if (wx <= 0.0) continue;
                    acc += wx * wy * img.at(std::min(x, img.width - 1), std::min(y, img.height - 1));
                    area += wx * wy;
                }
            }
            small[static_cast<std::size_t>(sy) * sw + sx] = acc / area;
        }
    }

    Image out(img.width, img.height);
    for (int y = 0; y < img.height; ++y) {
        const int sy = std::min(sh - 1, static_cast<int>((y + 0.5) * sh / img.height));
        for (int x = 0; x < img.width; ++x) {
            const int sx = std::min(sw - 1, static_cast<int>((x + 0.5) * sw / img.width));
            out.at(x, y) = quantize(small[static_cast<std::size_t>(sy) * sw + sx]);
        }
    }
    return out;
}

Image apply_perturbation(const Image& img, const PerturbSpec& spec) {
    spec.validate();
    switch (spec.kind) {
        case PerturbKind::Gamma: return apply_gamma(img, spec.gamma);
        case PerturbKind::GaussianNoise: return apply_gaussian_noise(img, spec.sigma, spec.rng_seed);
        case PerturbKind::Pixelate: return apply_pixelate(img, spec.scale);
    }
    throw ValidationError("apply_perturbation: bad kind");
}

} // namespace lsg
