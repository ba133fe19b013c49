#pragma once

#include <filesystem>
#include <string>

#include "ucl/metrics.hpp"

namespace ucl {

/// Minimal built-in plotter: axes, the 45-degree baseline and the ROC
/// polyline, no external dependencies.
void write_roc_svg(const std::filesystem::path& path, const RocCurve& curve,
                   const std::string& title, const std::string& config_hash);

} // namespace ucl
