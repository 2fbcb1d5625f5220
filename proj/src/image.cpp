#include "lsg/image.hpp"

#include <cstdio>
#include <fstream>

namespace lsg {

namespace {

void write_pgm_bytes(const std::filesystem::path& path, int w, int h,
                     const std::uint8_t* bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open for writing: " + path.string());
    out << "P5\n" << w << " " << h << "\n255\n";
    out.write(reinterpret_cast<const char*>(bytes), static_cast<std::streamsize>(w) * h);
    if (!out) throw DataError("short write: " + path.string());
}

int read_pgm_token(std::istream& in, const std::filesystem::path& path) {
    // Skips whitespace and '#' comments per the PGM grammar.
    int c = in.get();
    while (c != EOF) {
        if (c == '#') {
            while (c != EOF && c != '\n') c = in.get();
        } else if (!std::isspace(c)) {
            break;
        }
        c = in.get();
    }
    if (c == EOF) throw DataError("truncated PGM header: " + path.string());
    int value = 0;
    bool any = false;
    while (c != EOF && std::isdigit(c)) {
        value = value * 10 + (c - '0');
        any = true;
        c = in.get();
    }
    if (!any) throw DataError("malformed PGM header: " + path.string());
    return value;
}

} // namespace

void write_pgm(const std::filesystem::path& path, const Image& img) {
    write_pgm_bytes(path, img.width, img.height, img.data.data());
}

Image read_pgm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open: " + path.string());
    char magic[2] = {0, 0};
    in.read(magic, 2);
    if (!in || magic[0] != 'P' || magic[1] != '5')
        throw DataError("not a binary PGM (P5): " + path.string());
    int w = read_pgm_token(in, path);
    int h = read_pgm_token(in, path);
    int maxval = read_pgm_token(in, path);
    if (w <= 0 || h <= 0 || maxval != 255)
        throw DataError("unsupported PGM geometry in " + path.string());
    Image img(w, h);
    in.read(reinterpret_cast<char*>(img.data.data()), static_cast<std::streamsize>(w) * h);
    if (in.gcount() != static_cast<std::streamsize>(w) * h)
        throw DataError("truncated PGM payload: " + path.string());
    return img;
}

void write_mask_pgm(const std::filesystem::path& path, const Mask& mask) {
    std::vector<std::uint8_t> bytes(mask.data.size());
    for (std::size_t i = 0; i < bytes.size(); ++i) bytes[i] = mask.data[i] ? 255 : 0;
    write_pgm_bytes(path, mask.width, mask.height, bytes.data());
}

Mask read_mask_pgm(const std::filesystem::path& path) {
    Image img = read_pgm(path);
    Mask mask(img.width, img.height);
    for (std::size_t i = 0; i < img.data.size(); ++i) {
        if (img.data[i] != 0 && img.data[i] != 255)
            throw DataError("mask PGM has non-binary value: " + path.string());
        mask.data[i] = img.data[i] ? 1 : 0;
    }
    return mask;
}

} // namespace lsg
