#include "squeeze/ingest.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace squeeze {

using nlohmann::json;

namespace {

json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw ParseError(path.string(), 0, e.what());
    }
    return doc;
}

double parse_field(const std::string& text, const std::string& path, int line) {
    double value = 0.0;
    const char* begin = text.data();
    const char* end = begin + text.size();
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end) {
        throw ParseError(path, line, "malformed number '" + text + "'");
    }
    return value;
}

SpeedSetting parse_speed(const json& j) {
    SpeedSetting s;
    if (j.contains("percent")) {
        s.unit = SpeedSetting::Unit::percent;
        s.value = j.at("percent").get<double>();
    } else if (j.contains("mm_per_s")) {
        s.unit = SpeedSetting::Unit::mm_per_s;
        s.value = j.at("mm_per_s").get<double>();
    } else {
        throw ValidationError("speed_setting needs 'percent' or 'mm_per_s'");
    }
    return s;
}

}  // namespace

DeviceProfile load_device_profile(const std::filesystem::path& path) {
    const json j = read_json(path);
    DeviceProfile p;
    try {
        p.name = j.at("name").get<std::string>();
        p.jaw_area_mm2 = j.at("jaw_area_mm2").get<double>();
        p.stroke_mm = j.at("stroke_mm").get<double>();
        const auto unit = j.at("effort_unit").get<std::string>();
        if (unit == "ampere") p.effort_unit = EffortUnit::ampere;
        else if (unit == "newton") p.effort_unit = EffortUnit::newton;
        else throw ValidationError("unknown effort_unit '" + unit + "'");
        const auto mode = j.at("sampling_mode").get<std::string>();
        if (mode == "continuous") p.sampling_mode = SamplingMode::continuous;
        else if (mode == "force_threshold") p.sampling_mode = SamplingMode::force_threshold;
        else throw ValidationError("unknown sampling_mode '" + mode + "'");
        const json& cal = j.at("calibration");
        if (cal.at("kind").get<std::string>() != "poly") {
            throw ValidationError("calibration kind must be 'poly'");
        }
        p.calibration = cal.at("coeffs").get<std::vector<double>>();
        for (const auto& knot : j.at("speed_map")) {
            p.speed_map.emplace_back(knot.at(0).get<double>(), knot.at(1).get<double>());
        }
        if (j.contains("effort_range")) {
            p.effort_min = j.at("effort_range").at(0).get<double>();
            p.effort_max = j.at("effort_range").at(1).get<double>();
        }
    } catch (const json::exception& e) {
        throw ParseError(path.string(), 0, e.what());
    }
    p.validate();
    return p;
}

SampleSpec load_sample_spec(const std::filesystem::path& path) {
    const json j = read_json(path);
    SampleSpec s;
    try {
        s.label = j.at("label").get<std::string>();
        const auto dims = j.at("dimensions_mm").get<std::vector<double>>();
        if (dims.size() != 3) throw ValidationError(s.label + ": dimensions_mm needs 3 entries");
        std::copy(dims.begin(), dims.end(), s.dimensions_mm.begin());
        s.contact_face_area_mm2 = j.at("contact_face_area_mm2").get<double>();
        s.nominal_width_mm = j.at("nominal_width_mm").get<double>();
        if (j.contains("reference_density_kg_m3")) {
            s.reference_density_kg_m3 = j.at("reference_density_kg_m3").get<double>();
        }
        if (j.contains("reference_cv40_kpa")) {
            s.reference_cv40_kpa = j.at("reference_cv40_kpa").get<double>();
        }
    } catch (const json::exception& e) {
        throw ParseError(path.string(), 0, e.what());
    }
    s.validate();
    return s;
}

CycleManifest load_manifest(const std::filesystem::path& path) {
    const json j = read_json(path);
    CycleManifest m;
    const auto base = path.parent_path();
    auto resolve = [&base](const std::string& p) {
        std::filesystem::path fp(p);
        return fp.is_absolute() ? fp : base / fp;
    };
    try {
        m.device_profile_path = resolve(j.at("device_profile").get<std::string>());
        m.sample_spec_path = resolve(j.at("sample_spec").get<std::string>());
        m.csv_path = resolve(j.at("csv").get<std::string>());
        m.speed_setting = parse_speed(j.at("speed_setting"));
        m.cycle_index = j.at("cycle_index").get<int>();
    } catch (const json::exception& e) {
        throw ParseError(path.string(), 0, e.what());
    }
    if (m.cycle_index < 1) {
        throw ValidationError(path.string() + ": cycle_index must be >= 1");
    }
    return m;
}

RawCycle load_raw_cycle(const CycleManifest& manifest) {
    RawCycle raw;
    raw.device = load_device_profile(manifest.device_profile_path);
    raw.sample = load_sample_spec(manifest.sample_spec_path);
    raw.speed_setting = manifest.speed_setting;
    raw.cycle_index = manifest.cycle_index;
    raw.source = manifest.csv_path.string();

    const std::string path = manifest.csv_path.string();
    std::ifstream in(manifest.csv_path);
    if (!in) throw IoError("cannot open " + path);

    std::string line;
    int lineno = 0;
    if (!std::getline(in, line)) throw ParseError(path, 1, "empty file");
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "t_s,position_mm,effort") {
        throw ParseError(path, 1, "expected header 't_s,position_mm,effort', got '" + line + "'");
    }
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::stringstream row(line);
        std::string field;
        std::vector<std::string> fields;
        while (std::getline(row, field, ',')) fields.push_back(field);
        if (fields.size() != 3) {
            throw ParseError(path, lineno, "expected 3 fields, got " + std::to_string(fields.size()));
        }
        const double t = parse_field(fields[0], path, lineno);
        raw.t_s.push_back(t);
        raw.position_mm.push_back(parse_field(fields[1], path, lineno));
        raw.effort.push_back(parse_field(fields[2], path, lineno));
        const std::size_t n = raw.t_s.size();
        if (n >= 2 && t <= raw.t_s[n - 2]) {
            throw ValidationError(path + ":" + std::to_string(lineno) +
                                  ": time not strictly increasing");
        }
    }
    // Full length validation (>= 8 samples) happens in to_force_cycle; short
    // files still load so tooling can inspect them.
    if (raw.t_s.empty()) throw ParseError(path, lineno, "no data rows");
    return raw;
}

CalibrationResult calibrate_force(const DeviceProfile& profile, const std::vector<double>& effort) {
    CalibrationResult out;
    out.force_n.reserve(effort.size());
    const bool bounded = profile.effort_max > profile.effort_min;
    for (std::size_t i = 0; i < effort.size(); ++i) {
        const double e = effort[i];
        if (bounded && (e < profile.effort_min || e > profile.effort_max)) {
            out.warnings.push_back("sample " + std::to_string(i) + ": effort " +
                                   std::to_string(e) + " outside [" +
                                   std::to_string(profile.effort_min) + ", " +
                                   std::to_string(profile.effort_max) + "], extrapolating");
        }
        // Horner
        double f = 0.0;
        for (auto it = profile.calibration.rbegin(); it != profile.calibration.rend(); ++it) {
            f = f * e + *it;
        }
        out.force_n.push_back(f);
    }
    return out;
}

double speed_to_mm_s(const DeviceProfile& profile, double percent,
                     std::vector<std::string>* warnings) {
    if (profile.speed_map.empty()) {
        throw ValidationError(profile.name + ": empty speed_map");
    }
    const auto& map = profile.speed_map;
    if (percent <= map.front().first) {
        if (percent < map.front().first && warnings) {
            warnings->push_back("speed " + std::to_string(percent) + "% below first knot, clamped");
        }
        return map.front().second;
    }
    if (percent >= map.back().first) {
        if (percent > map.back().first && warnings) {
            warnings->push_back("speed " + std::to_string(percent) + "% above last knot, clamped");
        }
        return map.back().second;
    }
    for (std::size_t i = 1; i < map.size(); ++i) {
        if (percent <= map[i].first) {
            const double f = (percent - map[i - 1].first) / (map[i].first - map[i - 1].first);
            return map[i - 1].second + f * (map[i].second - map[i - 1].second);
        }
    }
    return map.back().second;
}

ForceCycle to_force_cycle(const RawCycle& raw) {
    raw.validate();
    ForceCycle fc;
    fc.t_s = raw.t_s;
    fc.position_mm = raw.position_mm;
    fc.device = raw.device;
    fc.sample = raw.sample;
    fc.cycle_index = raw.cycle_index;
    fc.source = raw.source;
    CalibrationResult cal = calibrate_force(raw.device, raw.effort);
    fc.force_n = std::move(cal.force_n);
    fc.warnings = std::move(cal.warnings);
    if (raw.speed_setting.unit == SpeedSetting::Unit::percent) {
        fc.speed_mm_s = speed_to_mm_s(raw.device, raw.speed_setting.value, &fc.warnings);
    } else {
        fc.speed_mm_s = raw.speed_setting.value;
    }
    return fc;
}

void write_raw_cycle_csv(const RawCycle& raw, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << "t_s,position_mm,effort\n";
    out.precision(12);
    for (std::size_t i = 0; i < raw.t_s.size(); ++i) {
        out << raw.t_s[i] << ',' << raw.position_mm[i] << ',' << raw.effort[i] << '\n';
    }
}

void write_device_profile(const DeviceProfile& p, const std::filesystem::path& path) {
    json j;
    j["name"] = p.name;
    j["jaw_area_mm2"] = p.jaw_area_mm2;
    j["stroke_mm"] = p.stroke_mm;
    j["effort_unit"] = to_string(p.effort_unit);
    j["sampling_mode"] = to_string(p.sampling_mode);
    j["calibration"] = {{"kind", "poly"}, {"coeffs", p.calibration}};
    json map = json::array();
    for (const auto& [pct, mms] : p.speed_map) map.push_back({pct, mms});
    j["speed_map"] = map;
    if (p.effort_max > p.effort_min) j["effort_range"] = {p.effort_min, p.effort_max};
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

void write_sample_spec(const SampleSpec& s, const std::filesystem::path& path) {
    json j;
    j["label"] = s.label;
    j["dimensions_mm"] = {s.dimensions_mm[0], s.dimensions_mm[1], s.dimensions_mm[2]};
    j["contact_face_area_mm2"] = s.contact_face_area_mm2;
    j["nominal_width_mm"] = s.nominal_width_mm;
    if (s.reference_density_kg_m3) j["reference_density_kg_m3"] = *s.reference_density_kg_m3;
    if (s.reference_cv40_kpa) j["reference_cv40_kpa"] = *s.reference_cv40_kpa;
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

void write_manifest(const CycleManifest& m, const std::filesystem::path& path) {
    json j;
    const auto base = path.parent_path();
    auto rel = [&base](const std::filesystem::path& p) {
        return p.lexically_proximate(base).string();
    };
    j["device_profile"] = rel(m.device_profile_path);
    j["sample_spec"] = rel(m.sample_spec_path);
    j["csv"] = rel(m.csv_path);
    j["cycle_index"] = m.cycle_index;
    if (m.speed_setting.unit == SpeedSetting::Unit::percent) {
        j["speed_setting"] = {{"percent", m.speed_setting.value}};
    } else {
        j["speed_setting"] = {{"mm_per_s", m.speed_setting.value}};
    }
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

}  // namespace squeeze
