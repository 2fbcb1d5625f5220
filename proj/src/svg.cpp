#include "lsg/svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "lsg/csv.hpp"

namespace lsg {

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                    "#ff7f0e", "#8c564b"};

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

void write_file(const std::filesystem::path& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write: " + path.string());
    out << body;
}

} // namespace

void write_accuracy_curve_svg(
    const std::filesystem::path& path, const std::string& title,
    const std::vector<std::pair<std::string, std::vector<std::pair<int, double>>>>& series) {
    const double W = 860, H = 360;
    const double left = 60, right = 20, top = 40, bottom = 40;
    const double plot_w = W - left - right, plot_h = H - top - bottom;

    int min_x = 1 << 30, max_x = -(1 << 30);
    for (const auto& s : series)
        for (const auto& [x, y] : s.second) {
            min_x = std::min(min_x, x);
            max_x = std::max(max_x, x);
        }
    if (min_x >= max_x) max_x = min_x + 1;

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(W) + "\" height=\"" +
           fmt(H) + "\" viewBox=\"0 0 " + fmt(W) + " " + fmt(H) + "\">\n";
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg += "<text x=\"" + fmt(W / 2) + "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" +
           title + "</text>\n";

    auto X = [&](double x) { return left + (x - min_x) / (max_x - min_x) * plot_w; };
    auto Y = [&](double y) { return top + (1.0 - y) * plot_h; };

    for (int i = 0; i <= 5; ++i) {
        const double yv = i / 5.0;
        svg += "<line x1=\"" + fmt(left) + "\" y1=\"" + fmt(Y(yv)) + "\" x2=\"" +
               fmt(W - right) + "\" y2=\"" + fmt(Y(yv)) +
               "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
        svg += "<text x=\"" + fmt(left - 8) + "\" y=\"" + fmt(Y(yv) + 4) +
               "\" text-anchor=\"end\" font-size=\"11\">" + fmt(yv) + "</text>\n";
    }
    svg += "<text x=\"" + fmt(W / 2) + "\" y=\"" + fmt(H - 8) +
           "\" text-anchor=\"middle\" font-size=\"12\">layer</text>\n";

    int color = 0;
    double legend_x = left + 10;
    for (const auto& s : series) {
        const char* stroke = kPalette[color % 6];
        std::string pts;
        for (const auto& [x, y] : s.second)
            pts += fmt(X(x)) + "," + fmt(Y(std::clamp(y, 0.0, 1.0))) + " ";
        svg += "<polyline fill=\"none\" stroke=\"" + std::string(stroke) +
               "\" stroke-width=\"1.5\" points=\"" + pts + "\"/>\n";
        svg += "<rect x=\"" + fmt(legend_x) + "\" y=\"28\" width=\"12\" height=\"4\" fill=\"" +
               stroke + "\"/>\n";
        svg += "<text x=\"" + fmt(legend_x + 16) + "\" y=\"34\" font-size=\"11\">" + s.first +
               "</text>\n";
        legend_x += 16.0 + 7.0 * s.first.size() + 18.0;
        ++color;
    }
    svg += "</svg>\n";
    write_file(path, svg);
}

void write_boxplot_svg(const std::filesystem::path& path, const std::string& title,
                       const std::vector<std::pair<std::string, BoxStats>>& boxes) {
    const double W = std::max<std::size_t>(4, boxes.size()) * 90.0 + 100.0, H = 380;
    const double left = 60, top = 40, bottom = 60;
    const double plot_h = H - top - bottom;

    auto Y = [&](double y) { return top + (1.0 - std::clamp(y, 0.0, 1.0)) * plot_h; };

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(W) + "\" height=\"" +
           fmt(H) + "\" viewBox=\"0 0 " + fmt(W) + " " + fmt(H) + "\">\n";
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg += "<text x=\"" + fmt(W / 2) + "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" +
           title + "</text>\n";
    for (int i = 0; i <= 5; ++i) {
        const double yv = i / 5.0;
        svg += "<line x1=\"" + fmt(left) + "\" y1=\"" + fmt(Y(yv)) + "\" x2=\"" + fmt(W - 20) +
               "\" y2=\"" + fmt(Y(yv)) + "\" stroke=\"#dddddd\"/>\n";
        svg += "<text x=\"" + fmt(left - 8) + "\" y=\"" + fmt(Y(yv) + 4) +
               "\" text-anchor=\"end\" font-size=\"11\">" + fmt(yv) + "</text>\n";
    }

    double cx = left + 50;
    int color = 0;
    for (const auto& [label, b] : boxes) {
        const char* stroke = kPalette[color % 6];
        const double half = 22;
        svg += "<line x1=\"" + fmt(cx) + "\" y1=\"" + fmt(Y(b.whisker_low)) + "\" x2=\"" +
               fmt(cx) + "\" y2=\"" + fmt(Y(b.whisker_high)) + "\" stroke=\"black\"/>\n";
        for (double wv : {b.whisker_low, b.whisker_high})
            svg += "<line x1=\"" + fmt(cx - half / 2) + "\" y1=\"" + fmt(Y(wv)) + "\" x2=\"" +
                   fmt(cx + half / 2) + "\" y2=\"" + fmt(Y(wv)) + "\" stroke=\"black\"/>\n";
        svg += "<rect x=\"" + fmt(cx - half) + "\" y=\"" + fmt(Y(b.q3)) + "\" width=\"" +
               fmt(2 * half) + "\" height=\"" + fmt(std::max(1.0, Y(b.q1) - Y(b.q3))) +
               "\" fill=\"" + stroke + "\" fill-opacity=\"0.35\" stroke=\"black\"/>\n";
        svg += "<line x1=\"" + fmt(cx - half) + "\" y1=\"" + fmt(Y(b.median)) + "\" x2=\"" +
               fmt(cx + half) + "\" y2=\"" + fmt(Y(b.median)) +
               "\" stroke=\"black\" stroke-width=\"2\"/>\n";
        for (double ov : b.outliers)
            svg += "<circle cx=\"" + fmt(cx) + "\" cy=\"" + fmt(Y(ov)) +
                   "\" r=\"2\" fill=\"none\" stroke=\"black\"/>\n";
        svg += "<text x=\"" + fmt(cx) + "\" y=\"" + fmt(H - 30) +
               "\" text-anchor=\"middle\" font-size=\"10\">" + label + "</text>\n";
        cx += 90;
        ++color;
    }
    svg += "</svg>\n";
    write_file(path, svg);
}

} // namespace lsg
