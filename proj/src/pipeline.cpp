#include "squeeze/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Dense>
#include <boost/math/distributions/students_t.hpp>

namespace squeeze {

namespace {

double mean_of(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double population_std(const std::vector<double>& v, double mean) {
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / static_cast<double>(v.size()));
}

double sample_var(const std::vector<double>& v, double mean) {
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return ss / static_cast<double>(v.size() - 1);
}

}  // namespace

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    if (n < 2 || y.size() != n) throw InsufficientDataError("fit_line: need >= 2 points");
    const double mx = mean_of(x);
    const double my = mean_of(y);
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (sxx == 0.0) throw InsufficientDataError("fit_line: degenerate x span");
    LineFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    f.r2 = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
    return f;
}

ContactEvent detect_contact(const ForceCycle& cycle, const ContactOptions& opt) {
    const auto& f = cycle.force_n;
    if (f.size() < opt.baseline_window || opt.baseline_window < 8) {
        throw InsufficientDataError("detect_contact: baseline window shorter than 8 samples");
    }
    std::vector<double> baseline(f.begin(), f.begin() + opt.baseline_window);
    ContactEvent ev;
    ev.baseline_force_mean_n = mean_of(baseline);
    ev.baseline_force_std_n = population_std(baseline, ev.baseline_force_mean_n);
    ev.threshold_used_n = std::max(ev.baseline_force_mean_n + opt.sigma_k * ev.baseline_force_std_n,
                                   opt.floor_n);

    const int sustain = std::max(opt.sustain, 1);
    int run = 0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        if (f[i] > ev.threshold_used_n) {
            if (++run >= sustain) {
                ev.index = i + 1 - static_cast<std::size_t>(sustain);
                ev.l0_mm = cycle.position_mm[ev.index];
                return ev;
            }
        } else {
            run = 0;
        }
    }
    throw NoContactError("detect_contact: no sample exceeds threshold " +
                         std::to_string(ev.threshold_used_n) + " N for " +
                         std::to_string(sustain) + " consecutive samples");
}

StressStrainCurve to_stress_strain(const ForceCycle& cycle, const ContactEvent& contact,
                                   const TransformOptions& opt) {
    if (contact.l0_mm <= 0.0) throw ValidationError("to_stress_strain: L0 <= 0");
    const double area = std::min(cycle.device.jaw_area_mm2, cycle.sample.contact_face_area_mm2);
    if (area <= 0.0) throw ValidationError("to_stress_strain: effective contact area <= 0");

    StressStrainCurve curve;
    curve.l0_mm = contact.l0_mm;
    curve.area_mm2 = area;
    curve.sampling_mode = cycle.device.sampling_mode;
    curve.speed_mm_s = cycle.speed_mm_s;
    curve.cycle_index = cycle.cycle_index;
    curve.source = cycle.source;
    curve.warnings = cycle.warnings;

    if (cycle.sample.nominal_width_mm > 0.0) {
        const double dev = std::abs(contact.l0_mm - cycle.sample.nominal_width_mm) /
                           cycle.sample.nominal_width_mm;
        if (dev > 0.10) {
            curve.warnings.push_back("measured L0 " + std::to_string(contact.l0_mm) +
                                     " mm deviates >10% from nominal width " +
                                     std::to_string(cycle.sample.nominal_width_mm) + " mm");
        }
    }

    std::vector<double> t;
    int dropped = 0;
    for (std::size_t i = contact.index; i < cycle.t_s.size(); ++i) {
        double strain = (contact.l0_mm - cycle.position_mm[i]) / contact.l0_mm;
        if (strain < 0.0) strain = 0.0;
        if (strain > opt.strain_clip) {
            ++dropped;
            continue;
        }
        curve.strain.push_back(strain);
        // N/mm^2 -> kPa
        curve.stress_kpa.push_back(cycle.force_n[i] / area * 1000.0);
        t.push_back(cycle.t_s[i]);
    }
    if (dropped > 0) {
        curve.warnings.push_back(std::to_string(dropped) + " samples beyond strain " +
                                 std::to_string(opt.strain_clip) + " dropped");
    }
    if (curve.strain.size() < 2) throw InsufficientDataError("to_stress_strain: too few samples after contact");

    // Phases split at the global strain maximum.
    const std::size_t apex = static_cast<std::size_t>(
        std::max_element(curve.strain.begin(), curve.strain.end()) - curve.strain.begin());
    curve.phase.resize(curve.strain.size());
    for (std::size_t i = 0; i < curve.strain.size(); ++i) {
        curve.phase[i] = i <= apex ? Phase::compression : Phase::decompression;
    }

    // Discontinuous thresholded traces are not monotone in strain; order the
    // compression phase before anything downstream fits lines on it.
    if (curve.sampling_mode == SamplingMode::force_threshold) {
        std::vector<std::size_t> idx(apex + 1);
        std::iota(idx.begin(), idx.end(), 0u);
        std::stable_sort(idx.begin(), idx.end(), [&curve](std::size_t a, std::size_t b) {
            return curve.strain[a] < curve.strain[b];
        });
        for (std::size_t i = 0; i <= apex; ++i) {
            if (idx[i] != i) ++curve.reordered;
        }
        if (curve.reordered > 0) {
            auto permute = [&idx, apex](std::vector<double>& v) {
                std::vector<double> out(v);
                for (std::size_t i = 0; i <= apex; ++i) out[i] = v[idx[i]];
                v = std::move(out);
            };
            permute(curve.strain);
            permute(curve.stress_kpa);
            permute(t);
            curve.warnings.push_back(std::to_string(curve.reordered) +
                                     " compression samples reordered by strain");
        }
    }

    // Smoothing before rate estimation; skipped on short compression phases.
    if (opt.smooth && opt.smooth_window > 0) {
        if (static_cast<int>(apex + 1) >= 2 * opt.smooth_window) {
            curve.stress_kpa = savgol_smooth(curve.stress_kpa, opt.smooth_window, opt.smooth_order);
        } else {
            curve.warnings.push_back("compression phase too short for window " +
                                     std::to_string(opt.smooth_window) + ", smoothing skipped");
        }
    }

    // Centered finite differences of strain over time.
    const std::size_t n = curve.strain.size();
    curve.strain_rate.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t lo = i == 0 ? 0 : i - 1;
        const std::size_t hi = i + 1 == n ? i : i + 1;
        const double dt = t[hi] - t[lo];
        curve.strain_rate[i] = dt > 0.0 ? (curve.strain[hi] - curve.strain[lo]) / dt : 0.0;
    }
    return curve;
}

std::vector<double> savgol_smooth(const std::vector<double>& series, int window, int order) {
    if (window <= 0 || window % 2 == 0) throw ValidationError("savgol_smooth: window must be odd");
    if (order < 0 || order >= window) throw ValidationError("savgol_smooth: need window > order");
    if (static_cast<int>(series.size()) < window) {
        throw ValidationError("savgol_smooth: series shorter than window");
    }
    const int n = static_cast<int>(series.size());
    const int half = window / 2;

    // Central convolution weights: first row of (A^T A)^-1 A^T with A_ij = i^j,
    // i in [-half, half].
    Eigen::MatrixXd a(window, order + 1);
    for (int i = 0; i < window; ++i) {
        double v = 1.0;
        for (int j = 0; j <= order; ++j) {
            a(i, j) = v;
            v *= static_cast<double>(i - half);
        }
    }
    Eigen::MatrixXd pinv = (a.transpose() * a).ldlt().solve(a.transpose());
    Eigen::VectorXd weights = pinv.row(0);

    std::vector<double> out(series.size());
    for (int i = half; i < n - half; ++i) {
        double acc = 0.0;
        for (int k = 0; k < window; ++k) acc += weights(k) * series[i - half + k];
        out[i] = acc;
    }

    // Edges: refit on the truncated window, evaluate at the point.
    auto edge_fit = [&](int i, int lo, int hi) {
        const int m = hi - lo + 1;
        const int deg = std::min(order, m - 1);
        Eigen::MatrixXd ae(m, deg + 1);
        Eigen::VectorXd ye(m);
        for (int r = 0; r < m; ++r) {
            double v = 1.0;
            for (int j = 0; j <= deg; ++j) {
                ae(r, j) = v;
                v *= static_cast<double>(lo + r - i);
            }
            ye(r) = series[lo + r];
        }
        Eigen::VectorXd coef = (ae.transpose() * ae).ldlt().solve(ae.transpose() * ye);
        return coef(0);
    };
    for (int i = 0; i < half; ++i) out[i] = edge_fit(i, 0, std::min(n - 1, i + half));
    for (int i = std::max(half, n - half); i < n; ++i) out[i] = edge_fit(i, std::max(0, i - half), n - 1);
    return out;
}

namespace {

// Compression-phase samples with strain inside [lo, hi].
void collect_window(const StressStrainCurve& curve, double lo, double hi,
                    std::vector<double>& xs, std::vector<double>& ys) {
    for (std::size_t i = 0; i < curve.size(); ++i) {
        if (curve.phase[i] != Phase::compression) continue;
        if (curve.strain[i] < lo || curve.strain[i] > hi) continue;
        xs.push_back(curve.strain[i]);
        ys.push_back(curve.stress_kpa[i]);
    }
}

}  // namespace

ModulusEstimate local_modulus(const StressStrainCurve& curve, double strain_point,
                              const LocalModulusOptions& opt) {
    std::vector<double> xs, ys;
    // A hair of slack keeps the window symmetric when sample strains land
    // exactly on a bound but the bound itself picked up rounding error.
    const double pad = 1e-9 * opt.halfwidth;
    collect_window(curve, strain_point - opt.halfwidth - pad, strain_point + opt.halfwidth + pad,
                   xs, ys);
    if (xs.size() < opt.min_samples) {
        throw InsufficientDataError("local_modulus: only " + std::to_string(xs.size()) +
                                    " samples in window around strain " +
                                    std::to_string(strain_point));
    }
    const LineFit f = fit_line(xs, ys);
    ModulusEstimate est;
    est.method = ModulusMethod::local;
    est.strain_point = strain_point;
    est.window_halfwidth = opt.halfwidth;
    est.e_kpa = f.slope;
    est.r2 = f.r2;
    est.cycle_index = curve.cycle_index;
    est.speed_mm_s = curve.speed_mm_s;
    est.source = curve.source;
    return est;
}

WindowSweepResult window_sweep(const StressStrainCurve& curve, double strain_point,
                               const std::vector<double>& halfwidths) {
    WindowSweepResult res;
    double max_strain = 0.0;
    for (std::size_t i = 0; i < curve.size(); ++i) {
        if (curve.phase[i] == Phase::compression) max_strain = std::max(max_strain, curve.strain[i]);
    }
    bool any = false;
    double best_r2 = -1.0;
    for (double h : halfwidths) {
        WindowSweepEntry e;
        e.halfwidth = h;
        if (strain_point + h <= max_strain) {
            try {
                ModulusEstimate est = local_modulus(curve, strain_point, {h, 4});
                e.feasible = true;
                e.r2 = est.r2;
                e.e_kpa = est.e_kpa;
            } catch (const InsufficientDataError&) {
                e.feasible = false;
            }
        }
        if (e.feasible && (!any || e.r2 > best_r2 + 1e-12)) {
            // near-ties (within rounding noise) keep the smaller, earlier window
            best_r2 = e.r2;
            res.best = res.entries.size();
            any = true;
        }
        res.entries.push_back(e);
    }
    if (!any) throw InsufficientDataError("window_sweep: no feasible window");
    return res;
}

ModulusEstimate linear_modulus(const StressStrainCurve& curve) {
    std::vector<double> xs, ys;
    collect_window(curve, -1.0, 2.0, xs, ys);
    if (xs.size() < 4) throw InsufficientDataError("linear_modulus: compression phase has < 4 samples");
    const auto [lo, hi] = std::minmax_element(xs.begin(), xs.end());
    if (*hi - *lo < 0.01) throw InsufficientDataError("linear_modulus: strain span below 0.01");
    const LineFit f = fit_line(xs, ys);
    ModulusEstimate est;
    est.method = ModulusMethod::linear;
    est.window_halfwidth = 0.0;
    est.e_kpa = f.slope;
    est.r2 = f.r2;
    est.cycle_index = curve.cycle_index;
    est.speed_mm_s = curve.speed_mm_s;
    est.source = curve.source;
    return est;
}

double cv40(const StressStrainCurve& curve) {
    constexpr double target = 0.40;
    double best_lo = -1.0, best_hi = 2.0;
    double stress_lo = 0.0, stress_hi = 0.0;
    bool have_lo = false, have_hi = false;
    for (std::size_t i = 0; i < curve.size(); ++i) {
        if (curve.phase[i] != Phase::compression) continue;
        const double s = curve.strain[i];
        if (s <= target && (!have_lo || s > best_lo)) {
            best_lo = s;
            stress_lo = curve.stress_kpa[i];
            have_lo = true;
        }
        if (s >= target && (!have_hi || s < best_hi)) {
            best_hi = s;
            stress_hi = curve.stress_kpa[i];
            have_hi = true;
        }
    }
    if (!have_hi) throw InsufficientDataError("cv40: compression does not reach 40% strain");
    if (!have_lo || best_hi == best_lo) return stress_hi;
    const double f = (target - best_lo) / (best_hi - best_lo);
    return stress_lo + f * (stress_hi - stress_lo);
}

std::vector<AggregateReport> aggregate_estimates(const std::vector<ModulusEstimate>& estimates,
                                                 const std::vector<GroupKey>& group_by) {
    if (estimates.empty()) throw InsufficientDataError("aggregate_estimates: empty input");
    const bool by_cycle = std::find(group_by.begin(), group_by.end(), GroupKey::cycle) != group_by.end();
    const bool by_speed = std::find(group_by.begin(), group_by.end(), GroupKey::speed) != group_by.end();

    std::map<std::pair<int, long long>, std::vector<const ModulusEstimate*>> groups;
    for (const auto& e : estimates) {
        const int c = by_cycle ? e.cycle_index : 0;
        const long long s = by_speed ? static_cast<long long>(std::llround(e.speed_mm_s * 1e6)) : 0;
        groups[{c, s}].push_back(&e);
    }
    std::vector<AggregateReport> out;
    for (const auto& [key, members] : groups) {
        AggregateReport r;
        r.cycle_index = key.first;
        r.speed_mm_s = static_cast<double>(key.second) / 1e6;
        r.count = members.size();
        std::vector<double> es;
        es.reserve(members.size());
        for (const auto* m : members) es.push_back(m->e_kpa);
        r.mean_e_kpa = mean_of(es);
        r.std_e_kpa = population_std(es, r.mean_e_kpa);
        r.error_ratio = r.mean_e_kpa != 0.0 ? r.std_e_kpa / r.mean_e_kpa : 0.0;
        out.push_back(r);
    }
    return out;
}

WelchResult welch_t_test(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() < 2 || b.size() < 2) throw InsufficientDataError("welch_t_test: need >= 2 per group");
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    const double ma = mean_of(a);
    const double mb = mean_of(b);
    const double va = sample_var(a, ma);
    const double vb = sample_var(b, mb);
    const double se2 = va / na + vb / nb;

    WelchResult res;
    if (se2 == 0.0) {
        res.df = na + nb - 2.0;
        if (ma == mb) {
            res.t = 0.0;
            res.p = 1.0;
        } else {
            res.t = ma > mb ? std::numeric_limits<double>::infinity()
                            : -std::numeric_limits<double>::infinity();
            res.p = 0.0;
        }
        return res;
    }
    res.t = (ma - mb) / std::sqrt(se2);
    res.df = se2 * se2 /
             ((va / na) * (va / na) / (na - 1.0) + (vb / nb) * (vb / nb) / (nb - 1.0));
    boost::math::students_t dist(res.df);
    res.p = 2.0 * boost::math::cdf(dist, -std::abs(res.t));
    return res;
}

}  // namespace squeeze
