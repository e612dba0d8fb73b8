#include "squeeze/classify.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>

#include <json.hpp>

namespace squeeze {

using nlohmann::json;

void validate_classes(const std::vector<MaterialClass>& classes) {
    if (classes.empty()) throw ConfigError("class config is empty");
    int fallbacks = 0;
    for (const auto& c : classes) {
        if (c.fallback) ++fallbacks;
        if (!(c.k_range.min < c.k_range.max)) {
            throw ConfigError(c.label + ": k_range lower bound must be below upper bound");
        }
    }
    if (fallbacks != 1) {
        throw ConfigError("class config needs exactly one fallback class, found " +
                          std::to_string(fallbacks));
    }
    for (std::size_t i = 0; i < classes.size(); ++i) {
        for (std::size_t j = i + 1; j < classes.size(); ++j) {
            const auto& a = classes[i];
            const auto& b = classes[j];
            if (a.priority != b.priority) continue;
            const bool overlap = a.k_range.min < b.k_range.max && b.k_range.min < a.k_range.max;
            if (overlap) {
                throw ConfigError("classes '" + a.label + "' and '" + b.label +
                                  "' overlap at equal priority");
            }
        }
    }
}

std::vector<MaterialClass> load_class_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw ParseError(path.string(), 0, e.what());
    }
    std::vector<MaterialClass> classes;
    try {
        for (const auto& j : doc) {
            MaterialClass c;
            c.label = j.at("label").get<std::string>();
            c.k_range.min = j.at("k_min_pa").get<double>();
            c.k_range.max = j.value("k_max_pa", std::numeric_limits<double>::infinity());
            if (j.contains("eta_min_pa_s") || j.contains("eta_max_pa_s")) {
                Range r;
                r.min = j.value("eta_min_pa_s", 0.0);
                r.max = j.value("eta_max_pa_s", std::numeric_limits<double>::infinity());
                c.eta_range = r;
            }
            if (j.contains("n_min") || j.contains("n_max")) {
                Range r;
                r.min = j.value("n_min", 0.0);
                r.max = j.value("n_max", std::numeric_limits<double>::infinity());
                c.n_range = r;
            }
            c.priority = j.at("priority").get<int>();
            c.fallback = j.value("fallback", false);
            classes.push_back(c);
        }
    } catch (const json::exception& e) {
        throw ParseError(path.string(), 0, e.what());
    }
    validate_classes(classes);
    return classes;
}

void write_class_config(const std::vector<MaterialClass>& classes,
                        const std::filesystem::path& path) {
    json doc = json::array();
    for (const auto& c : classes) {
        json j;
        j["label"] = c.label;
        j["k_min_pa"] = c.k_range.min;
        if (std::isfinite(c.k_range.max)) j["k_max_pa"] = c.k_range.max;
        if (c.eta_range) {
            j["eta_min_pa_s"] = c.eta_range->min;
            if (std::isfinite(c.eta_range->max)) j["eta_max_pa_s"] = c.eta_range->max;
        }
        if (c.n_range) {
            j["n_min"] = c.n_range->min;
            if (std::isfinite(c.n_range->max)) j["n_max"] = c.n_range->max;
        }
        j["priority"] = c.priority;
        if (c.fallback) j["fallback"] = true;
        doc.push_back(j);
    }
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << doc.dump(2) << '\n';
}

SortDecision classify(const ViscoelasticFit& fit, const std::vector<MaterialClass>& classes,
                      const std::string& sample_label) {
    validate_classes(classes);
    const bool any_eta_rule = std::any_of(classes.begin(), classes.end(),
                                          [](const MaterialClass& c) { return c.eta_range.has_value(); });
    if (any_eta_rule && !fit.identifiable) {
        throw ValidationError("classify: fit not identifiable but config carries damping rules");
    }

    std::vector<const MaterialClass*> ordered;
    for (const auto& c : classes) ordered.push_back(&c);
    std::stable_sort(ordered.begin(), ordered.end(),
                     [](const MaterialClass* a, const MaterialClass* b) {
                         return a->priority < b->priority;
                     });

    SortDecision d;
    d.sample_label = sample_label;
    d.stiffness_pa = fit.stiffness_pa;
    d.damping_pa_s = fit.damping_pa_s;
    d.exponent = fit.exponent;

    const MaterialClass* fallback = nullptr;
    for (const auto* c : ordered) {
        if (c->fallback) fallback = c;
        if (!c->k_range.contains(fit.stiffness_pa)) continue;
        if (c->eta_range && !c->eta_range->contains(fit.damping_pa_s)) continue;
        if (c->n_range && !c->n_range->contains(fit.exponent)) continue;
        d.matched_class = c->label;
        d.matched_by.push_back("k_range");
        if (c->eta_range) d.matched_by.push_back("eta_range");
        if (c->n_range) d.matched_by.push_back("n_range");
        d.is_fallback = c->fallback;
        return d;
    }
    d.matched_class = fallback->label;
    d.matched_by.push_back("fallback");
    d.is_fallback = true;
    return d;
}

std::vector<MaterialClass> derive_thresholds(
    const std::vector<std::pair<std::string, ViscoelasticFit>>& labeled_fits) {
    struct Group {
        std::string label;
        double k_min = std::numeric_limits<double>::infinity();
        double k_max = 0.0;
        double eta_min = std::numeric_limits<double>::infinity();
        double eta_max = 0.0;
    };
    std::map<std::string, Group> groups;
    for (const auto& [label, fit] : labeled_fits) {
        Group& g = groups[label];
        g.label = label;
        g.k_min = std::min(g.k_min, fit.stiffness_pa);
        g.k_max = std::max(g.k_max, fit.stiffness_pa);
        g.eta_min = std::min(g.eta_min, fit.damping_pa_s);
        g.eta_max = std::max(g.eta_max, fit.damping_pa_s);
    }
    if (groups.size() < 2) throw ValidationError("derive_thresholds: need >= 2 classes");

    std::vector<Group> ordered;
    for (const auto& [_, g] : groups) ordered.push_back(g);
    std::sort(ordered.begin(), ordered.end(),
              [](const Group& a, const Group& b) { return a.k_min < b.k_min; });

    std::string overlaps;
    for (std::size_t i = 1; i < ordered.size(); ++i) {
        if (ordered[i - 1].k_max >= ordered[i].k_min) {
            overlaps += (overlaps.empty() ? "" : ", ") + ordered[i - 1].label + "/" + ordered[i].label;
        }
    }
    if (!overlaps.empty()) {
        throw ValidationError("derive_thresholds: classes not separable by stiffness: " + overlaps);
    }

    std::vector<MaterialClass> classes;
    double lower = 0.0;
    for (std::size_t i = 0; i < ordered.size(); ++i) {
        MaterialClass c;
        c.label = ordered[i].label;
        c.priority = static_cast<int>(i);
        c.k_range.min = lower;
        if (i + 1 < ordered.size()) {
            c.k_range.max = std::sqrt(ordered[i].k_max * ordered[i + 1].k_min);
        } else {
            c.k_range.max = ordered[i].k_max * 1.5;
        }
        lower = c.k_range.max;
        classes.push_back(c);
    }

    // Low-damping signature: a class whose damping tops out below 1/5 of every
    // other class's minimum gets an eta ceiling.
    for (std::size_t i = 0; i < classes.size(); ++i) {
        double others_min = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < ordered.size(); ++j) {
            if (j != i) others_min = std::min(others_min, ordered[j].eta_min);
        }
        if (std::isfinite(others_min) && ordered[i].eta_max < others_min / 5.0) {
            Range r;
            r.min = 0.0;
            r.max = std::sqrt(std::max(ordered[i].eta_max, 1e-12) * others_min);
            classes[i].eta_range = r;
        }
    }

    MaterialClass too_stiff;
    too_stiff.label = "Too Stiff";
    too_stiff.k_range.min = lower;
    too_stiff.k_range.max = std::numeric_limits<double>::infinity();
    too_stiff.priority = static_cast<int>(classes.size());
    too_stiff.fallback = true;
    classes.push_back(too_stiff);

    validate_classes(classes);
    return classes;
}

}  // namespace squeeze
