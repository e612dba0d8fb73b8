#include "squeeze/visco.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>

#include "squeeze/pipeline.hpp"

namespace squeeze {

namespace {

struct PhasePath {
    std::vector<double> strain;
    std::vector<double> stress_pa;
};

// Trapezoid of stress over strain restricted to [lo, hi], with interpolated
// boundary points.
double integrate(const PhasePath& p, double lo, double hi) {
    double acc = 0.0;
    for (std::size_t i = 1; i < p.strain.size(); ++i) {
        double a = p.strain[i - 1];
        double b = p.strain[i];
        double sa = p.stress_pa[i - 1];
        double sb = p.stress_pa[i];
        double left = std::min(a, b);
        double right = std::max(a, b);
        if (right <= lo || left >= hi) continue;
        if (a < lo || a > hi) {
            const double clip = std::clamp(a, lo, hi);
            sa = sa + (sb - sa) * (clip - a) / (b - a);
            a = clip;
        }
        if (b < lo || b > hi) {
            const double clip = std::clamp(b, lo, hi);
            sb = p.stress_pa[i - 1] +
                 (p.stress_pa[i] - p.stress_pa[i - 1]) * (clip - p.strain[i - 1]) / (p.strain[i] - p.strain[i - 1]);
            b = clip;
        }
        acc += 0.5 * (sa + sb) * std::abs(b - a);
    }
    return acc;
}

struct FitSamples {
    std::vector<double> strain;
    std::vector<double> rate;
    std::vector<double> stress_pa;
};

FitSamples select_samples(const StressStrainCurve& curve, double strain_min, bool positive_stress) {
    FitSamples s;
    for (std::size_t i = 0; i < curve.size(); ++i) {
        if (curve.phase[i] == Phase::pre_contact) continue;
        if (curve.strain[i] <= strain_min) continue;
        const double stress = curve.stress_kpa[i] * 1000.0;
        if (positive_stress && stress <= 0.0) continue;
        s.strain.push_back(curve.strain[i]);
        s.rate.push_back(curve.strain_rate[i]);
        s.stress_pa.push_back(stress);
    }
    return s;
}

bool rate_identifiable(const std::vector<double>& rate, double cov_threshold) {
    if (rate.empty()) return false;
    double mean = 0.0, mean_abs = 0.0;
    for (double r : rate) {
        mean += r;
        mean_abs += std::abs(r);
    }
    mean /= static_cast<double>(rate.size());
    mean_abs /= static_cast<double>(rate.size());
    if (mean_abs == 0.0) return false;
    double ss = 0.0;
    for (double r : rate) ss += (r - mean) * (r - mean);
    const double std_pop = std::sqrt(ss / static_cast<double>(rate.size()));
    return std_pop / mean_abs >= cov_threshold;
}

}  // namespace

double hysteresis_area(const StressStrainCurve& curve) {
    PhasePath comp, decomp;
    for (std::size_t i = 0; i < curve.size(); ++i) {
        if (curve.phase[i] == Phase::compression) {
            comp.strain.push_back(curve.strain[i]);
            comp.stress_pa.push_back(curve.stress_kpa[i] * 1000.0);
        } else if (curve.phase[i] == Phase::decompression) {
            decomp.strain.push_back(curve.strain[i]);
            decomp.stress_pa.push_back(curve.stress_kpa[i] * 1000.0);
        }
    }
    if (decomp.strain.empty()) throw PhaseError("hysteresis_area: no decompression phase");
    if (comp.strain.size() < 2 || decomp.strain.size() < 2) {
        throw InsufficientDataError("hysteresis_area: phases too short");
    }
    // The apex sample belongs to compression; prepend it so the decompression
    // path starts where compression ended.
    decomp.strain.insert(decomp.strain.begin(), comp.strain.back());
    decomp.stress_pa.insert(decomp.stress_pa.begin(), comp.stress_pa.back());

    const auto [cmin, cmax] = std::minmax_element(comp.strain.begin(), comp.strain.end());
    const auto [dmin, dmax] = std::minmax_element(decomp.strain.begin(), decomp.strain.end());
    const double lo = std::max(*cmin, *dmin);
    const double hi = std::min(*cmax, *dmax);
    if (hi <= lo) throw PhaseError("hysteresis_area: phases share no strain range");

    const double comp_integral = integrate(comp, lo, hi);
    const double decomp_integral = integrate(decomp, lo, hi);
    const double area = comp_integral - decomp_integral;
    if (comp_integral > 0.0 && area < -0.01 * comp_integral) {
        throw AnomalyError("hysteresis_area: decompression above compression (area " +
                           std::to_string(area) + " Pa)");
    }
    return area;
}

EnergyLossSeries eta_from_speeds(const std::vector<std::pair<double, double>>& loops) {
    if (loops.size() < 2) throw InsufficientDataError("eta_from_speeds: need >= 2 loops");
    std::vector<double> rates, energies;
    for (const auto& [rate, energy] : loops) {
        rates.push_back(rate);
        energies.push_back(energy);
    }
    const auto [lo, hi] = std::minmax_element(rates.begin(), rates.end());
    if (*hi == *lo) throw ValidationError("eta_from_speeds: all strain rates equal, slope undefined");
    const LineFit f = fit_line(rates, energies);
    EnergyLossSeries s;
    s.strain_rates = rates;
    s.loop_energies_pa = energies;
    s.eta_loss_pa_s = f.slope;
    s.intercept_pa = f.intercept;
    s.r2 = f.r2;
    return s;
}

ViscoelasticFit fit_kelvin_voigt(const StressStrainCurve& curve, const ViscoFitOptions& opt) {
    if (curve.sampling_mode == SamplingMode::force_threshold) {
        throw UnsupportedModeError("fit_kelvin_voigt: strain rate unavailable in force_threshold mode");
    }
    const FitSamples s = select_samples(curve, opt.strain_min, false);
    const std::size_t m = s.strain.size();
    if (m < 6) {
        throw InsufficientDataError("fit_kelvin_voigt: only " + std::to_string(m) +
                                    " samples above strain " + std::to_string(opt.strain_min));
    }

    ViscoelasticFit fit;
    fit.model = ModelKind::kelvin_voigt;
    fit.exponent = 1.0;
    fit.identifiable = rate_identifiable(s.rate, opt.identifiability_cov);

    Eigen::Matrix2d ata = Eigen::Matrix2d::Zero();
    Eigen::Vector2d atb = Eigen::Vector2d::Zero();
    for (std::size_t i = 0; i < m; ++i) {
        const Eigen::Vector2d row(s.strain[i], s.rate[i]);
        ata += row * row.transpose();
        atb += row * s.stress_pa[i];
    }
    Eigen::Vector2d sol;
    const double det = ata.determinant();
    if (std::abs(det) <= 1e-12 * ata(0, 0) * ata(1, 1) || ata(1, 1) == 0.0) {
        // Damping column collinear or absent: fit stiffness alone.
        sol << atb(0) / ata(0, 0), 0.0;
        fit.identifiable = false;
        fit.warnings.push_back("rank-deficient design, damping not separable from stiffness");
    } else {
        sol = ata.ldlt().solve(atb);
    }
    fit.stiffness_pa = sol(0);
    fit.damping_pa_s = sol(1);

    double ss_res = 0.0, ss_tot = 0.0;
    const double mean_stress = std::accumulate(s.stress_pa.begin(), s.stress_pa.end(), 0.0) /
                               static_cast<double>(m);
    for (std::size_t i = 0; i < m; ++i) {
        const double pred = sol(0) * s.strain[i] + sol(1) * s.rate[i];
        ss_res += (s.stress_pa[i] - pred) * (s.stress_pa[i] - pred);
        ss_tot += (s.stress_pa[i] - mean_stress) * (s.stress_pa[i] - mean_stress);
    }
    fit.residual_rms = std::sqrt(ss_res / static_cast<double>(m));
    fit.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
    if (!curve.has_decompression()) {
        fit.warnings.push_back("compression-only fit");
    }
    return fit;
}

namespace {

// Residuals and objective for the log-form model at (a = log K, n, eta).
// Samples with damping factor <= 0 are skipped; their count is returned.
struct HcEval {
    double objective = 0.0;
    int excluded = 0;
    Eigen::VectorXd residual;
    Eigen::MatrixXd jacobian;
    std::vector<int> included;
};

HcEval hc_eval(const FitSamples& s, double a, double n, double eta, bool with_jacobian) {
    HcEval ev;
    const std::size_t m = s.strain.size();
    const double inv_k = std::exp(-a);
    std::vector<double> r;
    std::vector<std::array<double, 3>> jrows;
    for (std::size_t i = 0; i < m; ++i) {
        const double g = 1.0 + eta * s.rate[i] * inv_k;
        if (g <= 0.0) {
            ++ev.excluded;
            continue;
        }
        const double pred = a + n * std::log(s.strain[i]) + std::log(g);
        const double res = std::log(s.stress_pa[i]) - pred;
        r.push_back(res);
        ev.included.push_back(static_cast<int>(i));
        if (with_jacobian) {
            jrows.push_back({-1.0 / g, -std::log(s.strain[i]), -(s.rate[i] * inv_k) / g});
        }
        ev.objective += res * res;
    }
    ev.residual = Eigen::Map<Eigen::VectorXd>(r.data(), static_cast<Eigen::Index>(r.size()));
    if (with_jacobian) {
        ev.jacobian.resize(static_cast<Eigen::Index>(jrows.size()), 3);
        for (std::size_t i = 0; i < jrows.size(); ++i) {
            ev.jacobian(static_cast<Eigen::Index>(i), 0) = jrows[i][0];
            ev.jacobian(static_cast<Eigen::Index>(i), 1) = jrows[i][1];
            ev.jacobian(static_cast<Eigen::Index>(i), 2) = jrows[i][2];
        }
    }
    return ev;
}

}  // namespace

ViscoelasticFit fit_hunt_crossley(const StressStrainCurve& curve, const HuntCrossleyOptions& opt) {
    const FitSamples s = select_samples(curve, opt.strain_min, true);
    const std::size_t m = s.strain.size();
    if (m < 8) {
        throw InsufficientDataError("fit_hunt_crossley: only " + std::to_string(m) +
                                    " usable samples (strain > " + std::to_string(opt.strain_min) +
                                    ", stress > 0)");
    }

    // Closed-form log-log line gives (log K, n); eta starts at zero.
    std::vector<double> log_e, log_s;
    log_e.reserve(m);
    log_s.reserve(m);
    for (std::size_t i = 0; i < m; ++i) {
        log_e.push_back(std::log(s.strain[i]));
        log_s.push_back(std::log(s.stress_pa[i]));
    }
    const LineFit init = fit_line(log_e, log_s);
    double a = init.intercept;
    double n = std::clamp(init.slope, 1e-6, opt.n_max);
    double eta = 0.0;

    ViscoelasticFit fit;
    fit.model = ModelKind::hunt_crossley;

    HcEval ev = hc_eval(s, a, n, eta, true);
    double lambda = opt.lambda_init;
    fit.objective_history.push_back(ev.objective);
    int iter = 0;
    bool converged = false;
    for (; iter < opt.max_iterations; ++iter) {
        if (ev.included.empty()) throw Error("fit_hunt_crossley: all samples excluded");
        const Eigen::MatrixXd& j = ev.jacobian;
        const Eigen::Matrix3d jtj = j.transpose() * j;
        const Eigen::Vector3d jtr = j.transpose() * ev.residual;
        Eigen::Matrix3d damped = jtj;
        for (int d = 0; d < 3; ++d) {
            damped(d, d) += lambda * std::max(jtj(d, d), 1e-12);
        }
        const Eigen::Vector3d step = damped.ldlt().solve(-jtr);
        const double a2 = a + step(0);
        const double n2 = std::clamp(n + step(1), 1e-6, opt.n_max);
        const double eta2 = std::max(eta + step(2), 0.0);

        const HcEval trial = hc_eval(s, a2, n2, eta2, true);
        if (trial.objective < ev.objective) {
            const double rel = (ev.objective - trial.objective) / std::max(ev.objective, 1e-300);
            a = a2;
            n = n2;
            eta = eta2;
            ev = trial;
            fit.objective_history.push_back(ev.objective);
            lambda *= 0.1;
            if (rel < opt.obj_tol || step.norm() < opt.step_tol) {
                converged = true;
                ++iter;
                break;
            }
        } else {
            lambda *= 10.0;
            if (step.norm() < opt.step_tol) {
                converged = true;
                ++iter;
                break;
            }
        }
    }

    fit.stiffness_pa = std::exp(a);
    fit.damping_pa_s = eta;
    fit.exponent = n;
    fit.iterations = iter;
    fit.excluded_samples = ev.excluded;
    fit.identifiable = rate_identifiable(s.rate, opt.identifiability_cov);

    const std::size_t used = ev.included.size();
    fit.residual_rms = used > 0 ? std::sqrt(ev.objective / static_cast<double>(used)) : 0.0;
    double mean_y = 0.0;
    for (int i : ev.included) mean_y += log_s[static_cast<std::size_t>(i)];
    mean_y /= static_cast<double>(used);
    double ss_tot = 0.0;
    for (int i : ev.included) {
        const double d = log_s[static_cast<std::size_t>(i)] - mean_y;
        ss_tot += d * d;
    }
    fit.r2 = ss_tot > 0.0 ? 1.0 - ev.objective / ss_tot : 1.0;
    if (!curve.has_decompression()) fit.warnings.push_back("compression-only fit");

    if (!converged) {
        throw ConvergenceError("fit_hunt_crossley: no convergence after " +
                                   std::to_string(opt.max_iterations) + " iterations",
                               fit);
    }
    return fit;
}

}  // namespace squeeze
