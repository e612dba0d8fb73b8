#pragma once

#include <filesystem>

#include "squeeze/core.hpp"

namespace squeeze {

/// Processed-curve CSV: header `strain,stress_kpa,strain_rate_per_s,phase`,
/// phase in {c, d}. Metadata (L0, area, cycle, speed, sampling mode) lives in
/// a `.meta.json` sidecar next to the CSV.
void write_curve_csv(const StressStrainCurve& curve, const std::filesystem::path& path);
void write_curve_meta(const StressStrainCurve& curve, const std::filesystem::path& path);

/// Loads the CSV and, when present, the `<stem>.meta.json` sidecar.
StressStrainCurve load_curve_csv(const std::filesystem::path& path);

}  // namespace squeeze
