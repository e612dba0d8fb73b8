#include "squeeze/curve_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace squeeze {

using nlohmann::json;

namespace {

std::filesystem::path meta_path_for(const std::filesystem::path& csv) {
    std::filesystem::path p = csv;
    // foo.curve.csv -> foo.meta.json, foo.csv -> foo.meta.json
    p.replace_extension();
    if (p.extension() == ".curve") p.replace_extension();
    p += ".meta.json";
    return p;
}

double parse_num(const std::string& text, const std::string& path, int line) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
        throw ParseError(path, line, "malformed number '" + text + "'");
    }
    return v;
}

}  // namespace

void write_curve_csv(const StressStrainCurve& curve, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << "strain,stress_kpa,strain_rate_per_s,phase\n";
    out.precision(12);
    for (std::size_t i = 0; i < curve.size(); ++i) {
        out << curve.strain[i] << ',' << curve.stress_kpa[i] << ',' << curve.strain_rate[i]
            << ',' << (curve.phase[i] == Phase::decompression ? 'd' : 'c') << '\n';
    }
}

void write_curve_meta(const StressStrainCurve& curve, const std::filesystem::path& csv_path) {
    json j;
    j["l0_mm"] = curve.l0_mm;
    j["area_mm2"] = curve.area_mm2;
    j["sampling_mode"] = to_string(curve.sampling_mode);
    j["speed_mm_s"] = curve.speed_mm_s;
    j["cycle_index"] = curve.cycle_index;
    j["source"] = curve.source;
    j["reordered"] = curve.reordered;
    j["warnings"] = curve.warnings;
    const auto path = meta_path_for(csv_path);
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

StressStrainCurve load_curve_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    StressStrainCurve curve;
    std::string line;
    int lineno = 0;
    if (!std::getline(in, line)) throw ParseError(path.string(), 1, "empty file");
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "strain,stress_kpa,strain_rate_per_s,phase") {
        throw ParseError(path.string(), 1, "unexpected header '" + line + "'");
    }
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::stringstream row(line);
        std::string field;
        std::vector<std::string> fields;
        while (std::getline(row, field, ',')) fields.push_back(field);
        if (fields.size() != 4) {
            throw ParseError(path.string(), lineno, "expected 4 fields");
        }
        curve.strain.push_back(parse_num(fields[0], path.string(), lineno));
        curve.stress_kpa.push_back(parse_num(fields[1], path.string(), lineno));
        curve.strain_rate.push_back(parse_num(fields[2], path.string(), lineno));
        if (fields[3] == "c") curve.phase.push_back(Phase::compression);
        else if (fields[3] == "d") curve.phase.push_back(Phase::decompression);
        else throw ParseError(path.string(), lineno, "phase must be 'c' or 'd'");
    }
    curve.source = path.string();

    const auto meta = meta_path_for(path);
    if (std::filesystem::exists(meta)) {
        std::ifstream min(meta);
        json j;
        try {
            min >> j;
            curve.l0_mm = j.value("l0_mm", 0.0);
            curve.area_mm2 = j.value("area_mm2", 0.0);
            curve.speed_mm_s = j.value("speed_mm_s", 0.0);
            curve.cycle_index = j.value("cycle_index", 1);
            curve.reordered = j.value("reordered", 0);
            if (j.value("sampling_mode", "continuous") == std::string("force_threshold")) {
                curve.sampling_mode = SamplingMode::force_threshold;
            }
        } catch (const json::exception& e) {
            throw ParseError(meta.string(), 0, e.what());
        }
    }
    return curve;
}

}  // namespace squeeze
