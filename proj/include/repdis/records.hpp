#pragma once

// Text and binary records written by the command-line tools.

#include <filesystem>
#include <string>
#include <string_view>

#include "repdis/disentangle.hpp"
#include "repdis/guidance.hpp"
#include "repdis/image.hpp"

namespace repdis {

inline constexpr std::string_view kGridMagic = "GRIDV1\n";

/// "GRIDV1\n" + {"channels":C,"dtype":"f32le","height":H,"width":W}\n +
/// W*H*C binary32 little-endian values in HWC order.
std::string encode_grid(const SynthImage& image);
SynthImage decode_grid(std::string_view bytes);

/// Tab-separated, one line per step:
///   step  objective  grad_norm  millis
/// preceded by that header line. Values use %.17g.
std::string format_trace(const GuidanceTrace& trace);

/// Per-cell rows "size replicate error" (tab-separated, with header), then a
/// summary block whose lines start with '#':
///   # summary
///   # size  mean  std
///   # <size> <mean> <std>             (one per size)
///   # strictly_decreasing <true|false>
///   # flattening_ratio <value|nan>
///   # loglog_slope <value|nan>
std::string format_ablation(const AblationReport& report);

/// %.17g
std::string format_double(double v);

}  // namespace repdis
