#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "lsg/eval.hpp"

namespace lsg {

// Accuracy-vs-layer line chart, one polyline per series.
void write_accuracy_curve_svg(const std::filesystem::path& path, const std::string& title,
                              const std::vector<std::pair<std::string, std::vector<std::pair<int, double>>>>& series);

// Labeled Tukey boxplots on a fixed [0,1] axis.
void write_boxplot_svg(const std::filesystem::path& path, const std::string& title,
                       const std::vector<std::pair<std::string, BoxStats>>& boxes);

} // namespace lsg
