#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "lsg/errors.hpp"

namespace lsg {

// Shortest round-trip decimal form; stable across runs.
inline std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

// Minimal CSV: no quoting, values must not contain commas or newlines.
struct CsvWriter {
    std::string body;

    void row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) body += ',';
            body += cells[i];
        }
        body += '\n';
    }
    void write(const std::filesystem::path& path) const;
};

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path);

} // namespace lsg
