#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "lsg/errors.hpp"

namespace lsg {

// 8-bit grayscale image, row-major.
struct Image {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data;

    Image() = default;
    Image(int w, int h, std::uint8_t fill = 0)
        : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {}

    std::uint8_t& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
    std::uint8_t at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
    std::size_t size() const { return data.size(); }
    bool same_shape(const Image& o) const { return width == o.width && height == o.height; }
};

// Binary mask; foreground = true means solidified material.
struct Mask {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data; // 0 or 1

    Mask() = default;
    Mask(int w, int h, std::uint8_t fill = 0)
        : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {}

    std::uint8_t& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
    std::uint8_t at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
    std::size_t size() const { return data.size(); }
    bool same_shape(const Mask& o) const { return width == o.width && height == o.height; }
    bool same_shape(const Image& o) const { return width == o.width && height == o.height; }

    std::size_t foreground_count() const {
        std::size_t n = 0;
        for (auto v : data) n += (v != 0);
        return n;
    }

    bool operator==(const Mask& o) const {
        return width == o.width && height == o.height && data == o.data;
    }
};

// Binary PGM (P5). Masks are stored with foreground = 255, background = 0.
void write_pgm(const std::filesystem::path& path, const Image& img);
Image read_pgm(const std::filesystem::path& path);

void write_mask_pgm(const std::filesystem::path& path, const Mask& mask);
Mask read_mask_pgm(const std::filesystem::path& path);

} // namespace lsg
