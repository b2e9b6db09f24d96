#pragma once

#include <string_view>

namespace fingereye::embedded {

/// Contents of the shipped data files, captured at build time.
extern const std::string_view kBrailleTable;
extern const std::string_view kCommandPatterns;
extern const std::string_view kFingerParams;

}  // namespace fingereye::embedded
