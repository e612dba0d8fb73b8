#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "squeeze/core.hpp"

namespace squeeze {

/// Points at the files making up one recorded cycle.
struct CycleManifest {
    std::filesystem::path device_profile_path;
    std::filesystem::path sample_spec_path;
    SpeedSetting speed_setting;
    int cycle_index = 1;
    std::filesystem::path csv_path;
};

struct CalibrationResult {
    std::vector<double> force_n;
    std::vector<std::string> warnings;  // out-of-range efforts, flagged not rejected
};

DeviceProfile load_device_profile(const std::filesystem::path& path);
SampleSpec load_sample_spec(const std::filesystem::path& path);
CycleManifest load_manifest(const std::filesystem::path& path);

/// Parse the raw-cycle CSV (`t_s,position_mm,effort`) named by the manifest
/// and attach device/sample metadata. Errors carry file path and line number.
RawCycle load_raw_cycle(const CycleManifest& manifest);

/// Elementwise calibration polynomial, effort -> N.
CalibrationResult calibrate_force(const DeviceProfile& profile, const std::vector<double>& effort);

/// Piecewise-linear interpolation over the profile's speed map; percents
/// outside the knot range are clamped (a warning is appended when the
/// out parameter is given).
double speed_to_mm_s(const DeviceProfile& profile, double percent,
                     std::vector<std::string>* warnings = nullptr);

/// Calibrate effort and resolve the speed setting, producing a ForceCycle.
ForceCycle to_force_cycle(const RawCycle& raw);

void write_raw_cycle_csv(const RawCycle& raw, const std::filesystem::path& path);
void write_device_profile(const DeviceProfile& profile, const std::filesystem::path& path);
void write_sample_spec(const SampleSpec& spec, const std::filesystem::path& path);
void write_manifest(const CycleManifest& manifest, const std::filesystem::path& path);

}  // namespace squeeze
