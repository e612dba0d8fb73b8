#pragma once

#include <map>
#include <string>
#include <vector>

#include "squeeze/core.hpp"

namespace squeeze {

struct ContactEvent {
    std::size_t index = 0;
    double l0_mm = 0.0;
    double baseline_force_mean_n = 0.0;
    double baseline_force_std_n = 0.0;
    double threshold_used_n = 0.0;
};

struct ContactOptions {
    double sigma_k = 5.0;
    double floor_n = 1.0;
    int sustain = 3;
    std::size_t baseline_window = 8;
};

/// First index where force exceeds max(baseline_mean + sigma_k*baseline_std,
/// floor) for `sustain` consecutive samples. Baseline statistics come from the
/// leading window.
ContactEvent detect_contact(const ForceCycle& cycle, const ContactOptions& opt = {});

struct TransformOptions {
    double strain_clip = 0.95;
    // Default smoothing of the stress series; skipped with a warning when
    // the compression phase is shorter than 2x the window.
    int smooth_window = 11;
    int smooth_order = 3;
    bool smooth = true;
};

/// Strain/stress transformation anchored at contact: strain = (L0 - x)/L0,
/// stress = F / min(jaw area, sample face area) in kPa, rates from centered
/// finite differences, phases split at the global strain maximum.
/// force_threshold traces get their compression phase sorted by strain with
/// the reorder count recorded.
StressStrainCurve to_stress_strain(const ForceCycle& cycle, const ContactEvent& contact,
                                   const TransformOptions& opt = {});

/// Savitzky-Golay least-squares polynomial smoothing. Interior points use the
/// central convolution weights; edges refit the polynomial on the truncated
/// window and evaluate at the point.
std::vector<double> savgol_smooth(const std::vector<double>& series, int window, int order);

struct LocalModulusOptions {
    double halfwidth = 0.10;  // strain fraction each side
    std::size_t min_samples = 4;
};

ModulusEstimate local_modulus(const StressStrainCurve& curve, double strain_point,
                              const LocalModulusOptions& opt = {});

struct WindowSweepEntry {
    double halfwidth = 0.0;
    bool feasible = false;
    double r2 = 0.0;
    double e_kpa = 0.0;
};

struct WindowSweepResult {
    std::vector<WindowSweepEntry> entries;
    std::size_t best = 0;  // argmax r2 among feasible, ties to the smaller window
};

WindowSweepResult window_sweep(const StressStrainCurve& curve, double strain_point,
                               const std::vector<double>& halfwidths);

ModulusEstimate linear_modulus(const StressStrainCurve& curve);

/// Stress at 40% strain, linearly interpolated on the compression phase.
double cv40(const StressStrainCurve& curve);

struct AggregateReport {
    int cycle_index = 0;
    double speed_mm_s = 0.0;
    double mean_e_kpa = 0.0;
    double std_e_kpa = 0.0;      // population
    double error_ratio = 0.0;    // std/mean
    std::size_t count = 0;
};

enum class GroupKey { cycle, speed };

std::vector<AggregateReport> aggregate_estimates(const std::vector<ModulusEstimate>& estimates,
                                                 const std::vector<GroupKey>& group_by);

struct WelchResult {
    double t = 0.0;
    double df = 0.0;
    double p = 1.0;  // two-sided
};

WelchResult welch_t_test(const std::vector<double>& a, const std::vector<double>& b);

// Shared regression helper: least-squares line y = a + b*x.
struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
};

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace squeeze
