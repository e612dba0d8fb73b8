#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "squeeze/core.hpp"

namespace squeeze {

struct Range {
    double min = 0.0;
    double max = 0.0;  // half-open [min, max)
    bool contains(double v) const { return v >= min && v < max; }
};

struct MaterialClass {
    std::string label;
    Range k_range;                      // Pa
    std::optional<Range> eta_range;     // Pa*s
    std::optional<Range> n_range;
    int priority = 0;                   // lower wins on overlap
    bool fallback = false;
};

struct SortDecision {
    std::string sample_label;
    std::string matched_class;
    std::vector<std::string> matched_by;  // which rules fired
    double stiffness_pa = 0.0;
    double damping_pa_s = 0.0;
    double exponent = 1.0;
    bool is_fallback = false;
};

/// Validates the set: exactly one fallback, no two equal-priority classes
/// with overlapping stiffness ranges.
void validate_classes(const std::vector<MaterialClass>& classes);

std::vector<MaterialClass> load_class_config(const std::filesystem::path& path);
void write_class_config(const std::vector<MaterialClass>& classes,
                        const std::filesystem::path& path);

/// First class in ascending priority whose rules all pass; the fallback when
/// none match. Refuses unidentifiable fits when any class carries an eta rule.
SortDecision classify(const ViscoelasticFit& fit, const std::vector<MaterialClass>& classes,
                      const std::string& sample_label = "");

/// Per-class stiffness intervals from labeled fits, boundaries at geometric
/// midpoints between adjacent classes, plus a fallback above the stiffest
/// class. An eta ceiling is added for classes whose damping sits below 1/5 of
/// every other class's minimum.
std::vector<MaterialClass> derive_thresholds(
    const std::vector<std::pair<std::string, ViscoelasticFit>>& labeled_fits);

}  // namespace squeeze
