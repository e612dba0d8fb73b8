#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "squeeze/errors.hpp"

namespace squeeze {

enum class EffortUnit { ampere, newton };
enum class SamplingMode { continuous, force_threshold };
enum class Phase { pre_contact, compression, decompression };
enum class ModelKind { kelvin_voigt, hunt_crossley };
enum class ModulusMethod { local, linear };

/// Measurement device: jaw geometry, effort->force calibration polynomial
/// (coeffs c0..cN, effort in device units, force in N) and the commanded-speed
/// map from percent of max closing speed to mm/s.
struct DeviceProfile {
    std::string name;
    double jaw_area_mm2 = 0.0;
    double stroke_mm = 0.0;
    EffortUnit effort_unit = EffortUnit::newton;
    SamplingMode sampling_mode = SamplingMode::continuous;
    std::vector<double> calibration;                    // c0..cN, effort -> N
    std::vector<std::pair<double, double>> speed_map;   // (percent, mm/s), increasing
    double effort_min = 0.0;
    double effort_max = 0.0;                            // declared range; 0,0 = unbounded

    void validate() const;
};

struct SampleSpec {
    std::string label;
    std::array<double, 3> dimensions_mm{};
    double contact_face_area_mm2 = 0.0;
    double nominal_width_mm = 0.0;
    std::optional<double> reference_density_kg_m3;
    std::optional<double> reference_cv40_kpa;

    void validate() const;
};

/// Commanded speed, either a percent of max closing speed or mm/s directly.
struct SpeedSetting {
    enum class Unit { percent, mm_per_s };
    Unit unit = Unit::mm_per_s;
    double value = 0.0;
};

/// One compression(/decompression) cycle as recorded, in device units.
struct RawCycle {
    DeviceProfile device;
    SampleSpec sample;
    std::vector<double> t_s;
    std::vector<double> position_mm;
    std::vector<double> effort;
    SpeedSetting speed_setting;
    int cycle_index = 1;
    std::string source;  // manifest or csv path, for provenance

    void validate() const;
};

struct ForceCycle {
    std::vector<double> t_s;
    std::vector<double> position_mm;
    std::vector<double> force_n;
    DeviceProfile device;
    SampleSpec sample;
    double speed_mm_s = 0.0;
    int cycle_index = 1;
    std::string source;
    std::vector<std::string> warnings;
};

struct StressStrainCurve {
    std::vector<double> strain;            // dimensionless, [0, 0.95]
    std::vector<double> stress_kpa;
    std::vector<double> strain_rate;       // 1/s
    std::vector<Phase> phase;              // compression then decompression
    double l0_mm = 0.0;
    double area_mm2 = 0.0;
    SamplingMode sampling_mode = SamplingMode::continuous;
    double speed_mm_s = 0.0;
    int cycle_index = 1;
    std::string source;
    int reordered = 0;                     // samples reordered within compression
    std::vector<std::string> warnings;

    std::size_t size() const { return strain.size(); }
    bool has_decompression() const;
};

struct ModulusEstimate {
    ModulusMethod method = ModulusMethod::linear;
    double strain_point = 0.0;       // local only
    double window_halfwidth = 0.0;   // strain fraction
    double e_kpa = 0.0;
    double r2 = 0.0;
    int cycle_index = 1;
    double speed_mm_s = 0.0;
    std::string source;
};

struct ViscoelasticFit {
    ModelKind model = ModelKind::kelvin_voigt;
    double stiffness_pa = 0.0;        // K
    double damping_pa_s = 0.0;        // eta
    double exponent = 1.0;            // n, fixed 1 for KV
    double r2 = 0.0;
    double residual_rms = 0.0;        // log-space for HC, Pa for KV
    bool identifiable = false;
    int excluded_samples = 0;
    int iterations = 0;
    std::vector<double> objective_history;  // accepted objective values (HC)
    std::vector<std::string> warnings;
};

struct EnergyLossSeries {
    std::vector<double> speeds_mm_s;
    std::vector<double> strain_rates;      // mean |rate| per cycle, 1/s
    std::vector<double> loop_energies_pa;  // J/m^3
    double eta_loss_pa_s = 0.0;            // slope of energy vs rate
    double intercept_pa = 0.0;
    double r2 = 0.0;
};

/// Constitutive-model parameters in stress/strain space: stress Pa,
/// strain dimensionless, strain rate 1/s.
struct ModelParams {
    ModelKind kind = ModelKind::kelvin_voigt;
    double stiffness_pa = 0.0;   // K
    double damping_pa_s = 0.0;   // eta
    double exponent = 1.0;       // n (HC only)
};

/// sigma = K*e^n + eta*e^n*edot (HC); KV is the n = 1 case.
/// Negative strain is a domain error; a negative HC result from
/// (1 + eta*edot/K) < 0 is returned as computed.
double eval_model(const ModelParams& params, double strain, double strain_rate);

struct SynthOptions {
    double strain_max = 0.5;
    double strain_rate = 0.1;     // 1/s, magnitude on both phases
    int samples_per_phase = 500;
    double noise_rel = 0.0;       // multiplicative Gaussian sigma on stress
    std::uint64_t seed = 0;
};

/// Triangular strain profile 0 -> strain_max -> 0 at constant |rate|, stress
/// from eval_model plus multiplicative noise. Deterministic for a fixed seed.
/// Rejects parameter/profile combinations whose noiseless HC stress goes
/// negative (damping factor 1 + eta*edot/K <= 0); the KV damper may push the
/// decompression tail below zero, which is kept.
StressStrainCurve synthesize_cycle(const ModelParams& params, const SynthOptions& opt);

struct SyntheticRawOptions {
    SynthOptions synth;
    double l0_mm = 50.0;
    double area_mm2 = 866.0;
    int pre_contact_samples = 50;
    double baseline_noise_n = 0.0;
};

/// Full raw trace for a synthetic cycle: an approach segment at baseline
/// effort, then the triangular compression. Device is an identity-calibrated
/// newton profile so the trace round-trips through the ingest path.
RawCycle synthesize_raw_cycle(const ModelParams& params, const SyntheticRawOptions& opt);

/// True contact index of a synthesize_raw_cycle trace.
inline int synthetic_contact_index(const SyntheticRawOptions& opt) {
    return opt.pre_contact_samples;
}

const char* to_string(Phase p);
const char* to_string(ModelKind m);
const char* to_string(ModulusMethod m);
const char* to_string(EffortUnit u);
const char* to_string(SamplingMode m);

}  // namespace squeeze
