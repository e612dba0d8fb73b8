#include "squeeze/core.hpp"

#include <cmath>
#include <random>

namespace squeeze {

void DeviceProfile::validate() const {
    if (jaw_area_mm2 <= 0.0) throw ValidationError(name + ": jaw_area must be > 0");
    if (stroke_mm <= 0.0) throw ValidationError(name + ": stroke must be > 0");
    if (calibration.empty()) throw ValidationError(name + ": calibration coefficients missing");
    for (std::size_t i = 1; i < speed_map.size(); ++i) {
        if (speed_map[i].first <= speed_map[i - 1].first ||
            speed_map[i].second <= speed_map[i - 1].second) {
            throw ValidationError(name + ": speed_map must be strictly increasing in both coordinates");
        }
    }
}

void SampleSpec::validate() const {
    for (double d : dimensions_mm) {
        if (d <= 0.0) throw ValidationError(label + ": dimensions must be > 0");
    }
    double max_face = 0.0;
    for (int i = 0; i < 3; ++i) {
        for (int j = i + 1; j < 3; ++j) {
            max_face = std::max(max_face, dimensions_mm[i] * dimensions_mm[j]);
        }
    }
    if (contact_face_area_mm2 <= 0.0 || contact_face_area_mm2 > max_face * (1.0 + 1e-9)) {
        throw ValidationError(label + ": contact_face_area outside (0, max face area]");
    }
    if (nominal_width_mm <= 0.0) throw ValidationError(label + ": nominal_width must be > 0");
}

void RawCycle::validate() const {
    const std::size_t n = t_s.size();
    if (n < 8) throw ValidationError(source + ": cycle needs at least 8 samples, has " + std::to_string(n));
    if (position_mm.size() != n || effort.size() != n) {
        throw ValidationError(source + ": array lengths differ");
    }
    for (std::size_t i = 1; i < n; ++i) {
        if (t_s[i] <= t_s[i - 1]) {
            throw ValidationError(source + ": time not strictly increasing at row " + std::to_string(i + 1));
        }
    }
    if (cycle_index < 1) throw ValidationError(source + ": cycle_index must be >= 1");
}

bool StressStrainCurve::has_decompression() const {
    for (Phase p : phase) {
        if (p == Phase::decompression) return true;
    }
    return false;
}

double eval_model(const ModelParams& params, double strain, double strain_rate) {
    if (strain < 0.0) throw std::domain_error("eval_model: negative strain");
    if (params.kind == ModelKind::kelvin_voigt) {
        return params.stiffness_pa * strain + params.damping_pa_s * strain_rate;
    }
    const double en = std::pow(strain, params.exponent);
    return params.stiffness_pa * en + params.damping_pa_s * en * strain_rate;
}

StressStrainCurve synthesize_cycle(const ModelParams& params, const SynthOptions& opt) {
    if (!(opt.strain_max > 0.0 && opt.strain_max < 1.0)) {
        throw ValidationError("synthesize_cycle: strain_max must be in (0, 1)");
    }
    if (opt.strain_rate <= 0.0) throw ValidationError("synthesize_cycle: strain_rate must be > 0");
    if (opt.samples_per_phase < 4) throw ValidationError("synthesize_cycle: samples_per_phase must be >= 4");
    if (params.kind == ModelKind::hunt_crossley &&
        (params.stiffness_pa <= 0.0 || params.exponent <= 0.0)) {
        throw ValidationError("synthesize_cycle: HC needs K > 0 and n > 0");
    }

    const int n = opt.samples_per_phase;
    const int total = 2 * n - 1;  // apex shared between phases

    StressStrainCurve curve;
    curve.strain.resize(total);
    curve.stress_kpa.resize(total);
    curve.strain_rate.resize(total);
    curve.phase.resize(total);
    curve.sampling_mode = SamplingMode::continuous;

    std::mt19937_64 rng(opt.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    for (int i = 0; i < total; ++i) {
        const bool comp = i < n;
        const double strain = comp ? opt.strain_max * i / (n - 1)
                                   : opt.strain_max * (total - 1 - i) / (n - 1);
        const double rate = comp ? opt.strain_rate : -opt.strain_rate;
        double stress = eval_model(params, strain, rate);
        if (params.kind == ModelKind::hunt_crossley && stress < 0.0) {
            throw GenerationError(
                "synthesize_cycle: negative stress at sample " + std::to_string(i) +
                    " (strain " + std::to_string(strain) + "); damping overwhelms stiffness",
                i);
        }
        if (opt.noise_rel > 0.0) {
            stress *= 1.0 + opt.noise_rel * gauss(rng);
        }
        curve.strain[i] = strain;
        curve.stress_kpa[i] = stress / 1000.0;
        curve.strain_rate[i] = rate;
        curve.phase[i] = comp ? Phase::compression : Phase::decompression;
    }
    return curve;
}

RawCycle synthesize_raw_cycle(const ModelParams& params, const SyntheticRawOptions& opt) {
    StressStrainCurve curve = synthesize_cycle(params, opt.synth);

    RawCycle raw;
    raw.device.name = "synthetic";
    raw.device.jaw_area_mm2 = opt.area_mm2;
    raw.device.stroke_mm = opt.l0_mm * 2.0;
    raw.device.effort_unit = EffortUnit::newton;
    raw.device.sampling_mode = SamplingMode::continuous;
    raw.device.calibration = {0.0, 1.0};
    raw.sample.label = "synthetic";
    raw.sample.dimensions_mm = {opt.l0_mm, opt.l0_mm, opt.l0_mm};
    raw.sample.contact_face_area_mm2 = opt.area_mm2;
    raw.sample.nominal_width_mm = opt.l0_mm;
    raw.speed_setting = {SpeedSetting::Unit::mm_per_s,
                         opt.synth.strain_rate * opt.l0_mm};

    const int n = opt.synth.samples_per_phase;
    const double dt = opt.synth.strain_max / ((n - 1) * opt.synth.strain_rate);
    const double jaw_speed_mm_s = opt.synth.strain_rate * opt.l0_mm;

    // Approach segment at the same jaw speed, ending exactly at L0.
    std::mt19937_64 rng(opt.synth.seed ^ 0x9e3779b97f4a7c15ull);
    std::normal_distribution<double> gauss(0.0, 1.0);
    double t = 0.0;
    for (int i = 0; i < opt.pre_contact_samples; ++i) {
        const int remaining = opt.pre_contact_samples - i;
        raw.t_s.push_back(t);
        raw.position_mm.push_back(opt.l0_mm + remaining * jaw_speed_mm_s * dt);
        double f = opt.baseline_noise_n > 0.0 ? opt.baseline_noise_n * gauss(rng) : 0.0;
        raw.effort.push_back(f);
        t += dt;
    }
    for (std::size_t i = 0; i < curve.size(); ++i) {
        raw.t_s.push_back(t);
        raw.position_mm.push_back(opt.l0_mm * (1.0 - curve.strain[i]));
        // kPa -> Pa -> N over the contact area
        raw.effort.push_back(curve.stress_kpa[i] * 1000.0 * opt.area_mm2 * 1e-6);
        t += dt;
    }
    raw.validate();
    return raw;
}

const char* to_string(Phase p) {
    switch (p) {
        case Phase::pre_contact: return "pre_contact";
        case Phase::compression: return "c";
        case Phase::decompression: return "d";
    }
    return "?";
}

const char* to_string(ModelKind m) {
    return m == ModelKind::kelvin_voigt ? "kelvin_voigt" : "hunt_crossley";
}

const char* to_string(ModulusMethod m) {
    return m == ModulusMethod::local ? "local" : "linear";
}

const char* to_string(EffortUnit u) {
    return u == EffortUnit::ampere ? "ampere" : "newton";
}

const char* to_string(SamplingMode m) {
    return m == SamplingMode::continuous ? "continuous" : "force_threshold";
}

}  // namespace squeeze
