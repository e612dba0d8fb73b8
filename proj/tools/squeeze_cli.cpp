// Batch front end: convert raw traces, estimate moduli, fit viscoelastic
// models, classify materials, synthesize oracle cycles, and aggregate reports.

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <map>
#include <fstream>
#include <future>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "squeeze/classify.hpp"
#include "squeeze/core.hpp"
#include "squeeze/curve_io.hpp"
#include "squeeze/ingest.hpp"
#include "squeeze/pipeline.hpp"
#include "squeeze/visco.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace squeeze;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitPartial = 1;
constexpr int kExitUsage = 2;

struct GlobalOpts {
    fs::path out_dir = ".";
    int jobs = 1;
    std::uint64_t seed = 0;
};

// Runs fn(i) for each index, either inline or across --jobs threads. Results
// land at their input index so output order is deterministic.
template <typename Fn>
std::vector<json> run_batch(std::size_t count, int jobs, Fn&& fn) {
    std::vector<json> results(count);
    if (jobs <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) results[i] = fn(i);
        return results;
    }
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            results[i] = fn(i);
        }
    };
    std::vector<std::future<void>> futures;
    const int n = std::min<int>(jobs, static_cast<int>(count));
    for (int w = 0; w < n; ++w) futures.push_back(std::async(std::launch::async, worker));
    for (auto& f : futures) f.get();
    return results;
}

void write_json(const json& doc, const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << doc.dump(2) << '\n';
}

json fit_to_json(const ViscoelasticFit& fit) {
    return json{{"model", to_string(fit.model)},
                {"K_pa", fit.stiffness_pa},
                {"eta_pa_s", fit.damping_pa_s},
                {"n", fit.exponent},
                {"r2", fit.r2},
                {"residual", fit.residual_rms},
                {"identifiable", fit.identifiable},
                {"excluded_samples", fit.excluded_samples},
                {"iterations", fit.iterations}};
}

int cmd_convert(const std::vector<fs::path>& manifests, const GlobalOpts& g) {
    fs::create_directories(g.out_dir);
    int failures = 0;
    auto results = run_batch(manifests.size(), g.jobs, [&](std::size_t i) -> json {
        const fs::path& mpath = manifests[i];
        json log{{"manifest", mpath.string()}};
        try {
            const CycleManifest manifest = load_manifest(mpath);
            const RawCycle raw = load_raw_cycle(manifest);
            const ForceCycle fc = to_force_cycle(raw);
            const ContactEvent contact = detect_contact(fc);
            const StressStrainCurve curve = to_stress_strain(fc, contact);
            std::string stem = mpath.stem().string();
            if (stem.size() > 9 && stem.ends_with(".manifest")) {
                stem.resize(stem.size() - 9);
            }
            fs::path out = g.out_dir / (stem + ".curve.csv");
            write_curve_csv(curve, out);
            write_curve_meta(curve, out);
            log["output"] = out.string();
            log["samples"] = curve.size();
            log["l0_mm"] = curve.l0_mm;
            log["warnings"] = curve.warnings;
            log["ok"] = true;
        } catch (const std::exception& e) {
            log["ok"] = false;
            log["error"] = e.what();
        }
        return log;
    });
    for (const auto& r : results) {
        if (!r.value("ok", false)) {
            ++failures;
            std::cerr << "convert: " << r.value("manifest", "?") << ": "
                      << r.value("error", "?") << '\n';
        }
    }
    write_json(results, g.out_dir / "convert_log.json");
    std::cout << "converted " << (results.size() - failures) << "/" << results.size()
              << " manifests\n";
    return failures == 0 ? kExitOk : kExitPartial;
}

int cmd_estimate(const std::vector<fs::path>& curves, const std::vector<double>& local_points,
                 double halfwidth, bool linear, bool with_cv40, const GlobalOpts& g) {
    fs::create_directories(g.out_dir);
    int failures = 0;
    json records = json::array();
    for (const fs::path& path : curves) {
        StressStrainCurve curve;
        try {
            curve = load_curve_csv(path);
        } catch (const std::exception& e) {
            ++failures;
            std::cerr << "estimate: " << path << ": " << e.what() << '\n';
            continue;
        }
        auto base = [&](const char* method) {
            return json{{"file", path.string()},
                        {"method", method},
                        {"cycle", curve.cycle_index},
                        {"speed_mm_s", curve.speed_mm_s}};
        };
        for (double p : local_points) {
            json rec = base("local");
            rec["strain_point"] = p;
            rec["window_halfwidth"] = halfwidth;
            try {
                const ModulusEstimate est = local_modulus(curve, p, {halfwidth, 4});
                rec["E_kpa"] = est.e_kpa;
                rec["r2"] = est.r2;
            } catch (const InsufficientDataError& e) {
                rec["skipped"] = true;
                rec["reason"] = e.what();
            }
            records.push_back(rec);
        }
        if (linear) {
            json rec = base("linear");
            try {
                const ModulusEstimate est = linear_modulus(curve);
                rec["E_kpa"] = est.e_kpa;
                rec["r2"] = est.r2;
            } catch (const InsufficientDataError& e) {
                rec["skipped"] = true;
                rec["reason"] = e.what();
            }
            records.push_back(rec);
        }
        if (with_cv40) {
            json rec = base("cv40");
            try {
                rec["stress_kpa"] = cv40(curve);
            } catch (const InsufficientDataError& e) {
                rec["skipped"] = true;
                rec["reason"] = e.what();
            }
            records.push_back(rec);
        }
    }
    write_json(records, g.out_dir / "estimates.json");
    std::cout << records.size() << " estimate records -> "
              << (g.out_dir / "estimates.json").string() << '\n';
    return failures == 0 ? kExitOk : kExitPartial;
}

int cmd_fit(const std::vector<fs::path>& curves, const std::string& model, const GlobalOpts& g) {
    fs::create_directories(g.out_dir);
    auto results = run_batch(curves.size(), g.jobs, [&](std::size_t i) -> json {
        const fs::path& path = curves[i];
        json rec{{"file", path.string()}};
        try {
            const StressStrainCurve curve = load_curve_csv(path);
            ViscoelasticFit fit;
            if (model == "kv") {
                fit = fit_kelvin_voigt(curve);
            } else {
                try {
                    fit = fit_hunt_crossley(curve);
                } catch (const ConvergenceError& e) {
                    rec["warning"] = e.what();
                    fit = e.best();
                }
            }
            rec.update(fit_to_json(fit));
            rec["ok"] = true;
        } catch (const std::exception& e) {
            rec["ok"] = false;
            rec["error"] = e.what();
        }
        return rec;
    });
    int failures = 0;
    int identifiable = 0;
    for (const auto& r : results) {
        if (!r.value("ok", false)) {
            ++failures;
            std::cerr << "fit: " << r.value("file", "?") << ": " << r.value("error", "?") << '\n';
        } else if (r.value("identifiable", false)) {
            ++identifiable;
        }
    }
    json doc{{"model", model},
             {"fits", results},
             {"summary",
              {{"total", results.size()},
               {"failures", failures},
               {"identifiable", identifiable}}}};
    write_json(doc, g.out_dir / "fits.json");
    std::cout << "fit " << (results.size() - failures) << "/" << results.size() << " curves ("
              << identifiable << " identifiable) -> " << (g.out_dir / "fits.json").string()
              << '\n';
    return failures == 0 ? kExitOk : kExitPartial;
}

int cmd_classify(const fs::path& fits_path, const fs::path& config_path, const GlobalOpts& g) {
    fs::create_directories(g.out_dir);
    const std::vector<MaterialClass> classes = load_class_config(config_path);
    std::ifstream in(fits_path);
    if (!in) throw IoError("cannot open " + fits_path.string());
    json doc;
    in >> doc;
    const json& fits = doc.contains("fits") ? doc.at("fits") : doc;

    json decisions = json::array();
    std::map<std::string, int> counts;
    int failures = 0;
    for (const auto& rec : fits) {
        if (!rec.value("ok", true)) continue;
        ViscoelasticFit fit;
        fit.stiffness_pa = rec.at("K_pa").get<double>();
        fit.damping_pa_s = rec.value("eta_pa_s", 0.0);
        fit.exponent = rec.value("n", 1.0);
        fit.identifiable = rec.value("identifiable", false);
        const std::string label = rec.value("label", rec.value("file", ""));
        json d{{"sample", label}};
        try {
            const SortDecision dec = classify(fit, classes, label);
            d["class"] = dec.matched_class;
            d["matched_by"] = dec.matched_by;
            d["K_pa"] = dec.stiffness_pa;
            d["eta_pa_s"] = dec.damping_pa_s;
            d["n"] = dec.exponent;
            ++counts[dec.matched_class];
        } catch (const std::exception& e) {
            d["refused"] = true;
            d["reason"] = e.what();
            ++failures;
        }
        decisions.push_back(d);
    }
    json out{{"decisions", decisions}, {"counts", counts}};
    write_json(out, g.out_dir / "decisions.json");
    for (const auto& [label, count] : counts) {
        std::cout << label << ": " << count << '\n';
    }
    return failures == 0 ? kExitOk : kExitPartial;
}

int cmd_synth(const std::string& model, double k, double eta, double n, double strain_max,
              double rate, int samples, double noise, const std::string& name,
              const GlobalOpts& g) {
    fs::create_directories(g.out_dir);
    ModelParams params;
    params.kind = model == "kv" ? ModelKind::kelvin_voigt : ModelKind::hunt_crossley;
    params.stiffness_pa = k;
    params.damping_pa_s = eta;
    params.exponent = params.kind == ModelKind::kelvin_voigt ? 1.0 : n;

    SyntheticRawOptions opt;
    opt.synth.strain_max = strain_max;
    opt.synth.strain_rate = rate;
    opt.synth.samples_per_phase = samples;
    opt.synth.noise_rel = noise;
    opt.synth.seed = g.seed;

    const RawCycle raw = synthesize_raw_cycle(params, opt);

    const fs::path csv = g.out_dir / (name + ".csv");
    const fs::path device = g.out_dir / (name + ".device.json");
    const fs::path sample = g.out_dir / (name + ".sample.json");
    const fs::path manifest = g.out_dir / (name + ".manifest.json");
    write_raw_cycle_csv(raw, csv);
    write_device_profile(raw.device, device);
    write_sample_spec(raw.sample, sample);
    CycleManifest m;
    m.csv_path = csv;
    m.device_profile_path = device;
    m.sample_spec_path = sample;
    m.speed_setting = raw.speed_setting;
    m.cycle_index = 1;
    write_manifest(m, manifest);
    std::cout << manifest.string() << '\n';
    return kExitOk;
}

int cmd_report(const fs::path& input, const std::vector<std::string>& group_keys,
               const GlobalOpts& g) {
    fs::create_directories(g.out_dir);
    std::ifstream in(input);
    if (!in) throw IoError("cannot open " + input.string());
    json doc;
    in >> doc;

    std::vector<GroupKey> keys;
    for (const auto& k : group_keys) {
        if (k == "cycle") keys.push_back(GroupKey::cycle);
        else if (k == "speed") keys.push_back(GroupKey::speed);
        else throw ConfigError("unknown group key '" + k + "'");
    }

    json out;
    if (doc.is_object() && doc.contains("fits")) {
        // Scatter data for 2D (K, eta) discrimination plots.
        const fs::path scatter = g.out_dir / "k_eta_scatter.csv";
        std::ofstream s(scatter);
        s << "sample,model,K_pa,eta_pa_s,n\n";
        std::map<std::string, json> sections;
        for (const auto& rec : doc.at("fits")) {
            if (!rec.value("ok", true)) continue;
            const std::string label = rec.value("label", rec.value("file", ""));
            s << label << ',' << rec.value("model", "?") << ',' << rec.at("K_pa").get<double>()
              << ',' << rec.value("eta_pa_s", 0.0) << ',' << rec.value("n", 1.0) << '\n';
            sections[rec.value("model", "?")].push_back(rec);
        }
        out["sections"] = sections;
        out["scatter_csv"] = scatter.string();
    } else {
        // Modulus estimates grouped into per-cycle/per-speed summary rows.
        std::map<std::string, std::vector<ModulusEstimate>> by_method;
        for (const auto& rec : doc) {
            if (rec.value("skipped", false) || !rec.contains("E_kpa")) continue;
            ModulusEstimate e;
            e.e_kpa = rec.at("E_kpa").get<double>();
            e.cycle_index = rec.value("cycle", 1);
            e.speed_mm_s = rec.value("speed_mm_s", 0.0);
            by_method[rec.value("method", "?")].push_back(e);
        }
        json tables;
        for (const auto& [method, ests] : by_method) {
            json rows = json::array();
            for (const AggregateReport& r : aggregate_estimates(ests, keys)) {
                rows.push_back({{"cycle", r.cycle_index},
                                {"speed_mm_s", r.speed_mm_s},
                                {"mean_E_kpa", r.mean_e_kpa},
                                {"std_E_kpa", r.std_e_kpa},
                                {"error_ratio", r.error_ratio},
                                {"count", r.count}});
            }
            tables[method] = rows;
        }
        out["tables"] = tables;
        const fs::path table_csv = g.out_dir / "aggregates.csv";
        std::ofstream t(table_csv);
        t << "method,cycle,speed_mm_s,mean_E_kpa,std_E_kpa,error_ratio,count\n";
        for (const auto& [method, rows] : out["tables"].items()) {
            for (const auto& r : rows) {
                t << method << ',' << r["cycle"] << ',' << r["speed_mm_s"] << ','
                  << r["mean_E_kpa"] << ',' << r["std_E_kpa"] << ',' << r["error_ratio"] << ','
                  << r["count"] << '\n';
            }
        }
        out["table_csv"] = table_csv.string();
    }
    write_json(out, g.out_dir / "report.json");
    std::cout << (g.out_dir / "report.json").string() << '\n';
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Compression-trace material property estimation"};
    app.require_subcommand(1);

    GlobalOpts g;
    app.add_option("--out-dir", g.out_dir, "Output directory")->capture_default_str();
    app.add_option("--jobs", g.jobs, "Parallel batch width")->capture_default_str();
    app.add_option("--seed", g.seed, "RNG seed for synthesis")->capture_default_str();

    std::vector<fs::path> manifests;
    auto* convert = app.add_subcommand("convert", "Raw cycle CSVs -> stress/strain curve CSVs");
    convert->add_option("manifests", manifests, "Cycle manifest JSON files")->required();

    std::vector<fs::path> curves;
    std::vector<double> local_points;
    double halfwidth = 0.10;
    bool linear = false;
    bool with_cv40 = false;
    auto* estimate = app.add_subcommand("estimate", "Young's modulus estimates from curves");
    estimate->add_option("curves", curves, "Curve CSV files")->required();
    estimate->add_option("--local", local_points, "Strain points for local moduli");
    estimate->add_option("--halfwidth", halfwidth, "Local window halfwidth (strain)")
        ->capture_default_str();
    estimate->add_flag("--linear", linear, "Linear modulus over the full compression phase");
    estimate->add_flag("--cv40", with_cv40, "Stress at 40% strain");

    std::vector<fs::path> fit_curves;
    std::string model = "hc";
    auto* fit = app.add_subcommand("fit", "Viscoelastic model fits");
    fit->add_option("curves", fit_curves, "Curve CSV files")->required();
    fit->add_option("--model", model, "kv or hc")
        ->check(CLI::IsMember({"kv", "hc"}))
        ->capture_default_str();

    fs::path fits_path, config_path;
    auto* classify_cmd = app.add_subcommand("classify", "Sort fits into material classes");
    classify_cmd->add_option("--fits", fits_path, "fits.json from the fit command")->required();
    classify_cmd->add_option("--classes", config_path, "Material class config JSON")->required();

    std::string synth_model = "kv";
    double k = 5000.0, eta = 1000.0, n = 1.0, strain_max = 0.5, rate = 0.1, noise = 0.0;
    int samples = 500;
    std::string name = "synthetic";
    auto* synth = app.add_subcommand("synth", "Generate a synthetic raw cycle");
    synth->add_option("--model", synth_model, "kv or hc")
        ->check(CLI::IsMember({"kv", "hc"}))
        ->capture_default_str();
    synth->add_option("--k", k, "Stiffness K [Pa]")->capture_default_str();
    synth->add_option("--eta", eta, "Damping eta [Pa*s]")->capture_default_str();
    synth->add_option("--n", n, "Exponent n (hc)")->capture_default_str();
    synth->add_option("--strain-max", strain_max, "Peak strain")->capture_default_str();
    synth->add_option("--rate", rate, "Strain rate [1/s]")->capture_default_str();
    synth->add_option("--samples", samples, "Samples per phase")->capture_default_str();
    synth->add_option("--noise", noise, "Relative stress noise sigma")->capture_default_str();
    synth->add_option("--name", name, "Output file stem")->capture_default_str();

    fs::path report_input;
    std::vector<std::string> group_keys;
    auto* report = app.add_subcommand("report", "Aggregate estimates/fits into tables + plot CSV");
    report->add_option("--input", report_input, "estimates.json or fits.json")->required();
    report->add_option("--group-by", group_keys, "cycle and/or speed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (*convert) return cmd_convert(manifests, g);
        if (*estimate) return cmd_estimate(curves, local_points, halfwidth, linear, with_cv40, g);
        if (*fit) return cmd_fit(fit_curves, model, g);
        if (*classify_cmd) return cmd_classify(fits_path, config_path, g);
        if (*synth) {
            if (strain_max <= 0.0 || strain_max >= 1.0) {
                std::cerr << "synth: --strain-max must be in (0, 1)\n";
                return kExitUsage;
            }
            return cmd_synth(synth_model, k, eta, n, strain_max, rate, samples, noise, name, g);
        }
        if (*report) return cmd_report(report_input, group_keys, g);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitPartial;
    }
    return kExitUsage;
}
