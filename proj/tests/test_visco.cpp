#include <doctest.h>

#include <cmath>

#include "squeeze/core.hpp"
#include "squeeze/visco.hpp"

using namespace squeeze;

namespace {

StressStrainCurve kv_cycle(double k, double eta, double strain_max, double rate, int n,
                           double noise = 0.0, std::uint64_t seed = 0) {
    ModelParams p{ModelKind::kelvin_voigt, k, eta, 1.0};
    SynthOptions opt;
    opt.strain_max = strain_max;
    opt.strain_rate = rate;
    opt.samples_per_phase = n;
    opt.noise_rel = noise;
    opt.seed = seed;
    return synthesize_cycle(p, opt);
}

StressStrainCurve hc_cycle(double k, double eta, double exp_n, double strain_max, double rate,
                           int n, double noise = 0.0, std::uint64_t seed = 0) {
    ModelParams p{ModelKind::hunt_crossley, k, eta, exp_n};
    SynthOptions opt;
    opt.strain_max = strain_max;
    opt.strain_rate = rate;
    opt.samples_per_phase = n;
    opt.noise_rel = noise;
    opt.seed = seed;
    return synthesize_cycle(p, opt);
}

}  // namespace

TEST_CASE("hysteresis area of identical up/down paths is zero") {
    StressStrainCurve c;
    const int n = 50;
    for (int i = 0; i < n; ++i) {
        c.strain.push_back(0.5 * i / (n - 1));
        c.stress_kpa.push_back(c.strain.back() * 4.0);
        c.strain_rate.push_back(0.1);
        c.phase.push_back(Phase::compression);
    }
    for (int i = n - 2; i >= 0; --i) {
        c.strain.push_back(0.5 * i / (n - 1));
        c.stress_kpa.push_back(c.strain.back() * 4.0);
        c.strain_rate.push_back(-0.1);
        c.phase.push_back(Phase::decompression);
    }
    CHECK(std::abs(hysteresis_area(c)) < 1e-9);
}

TEST_CASE("hysteresis area matches the kv analytic value") {
    const StressStrainCurve c = kv_cycle(20000.0, 1000.0, 0.5, 0.1, 1000);
    const double expect = 2.0 * 1000.0 * 0.1 * 0.5;  // 100 Pa
    CHECK(hysteresis_area(c) == doctest::Approx(expect).epsilon(0.005));
}

TEST_CASE("doubling the rate doubles the kv loop area") {
    const double a1 = hysteresis_area(kv_cycle(20000.0, 1000.0, 0.5, 0.1, 1000));
    const double a2 = hysteresis_area(kv_cycle(20000.0, 1000.0, 0.5, 0.2, 1000));
    CHECK(a2 == doctest::Approx(2.0 * a1).epsilon(0.01));
}

TEST_CASE("hysteresis area requires a decompression phase") {
    StressStrainCurve c = kv_cycle(20000.0, 1000.0, 0.5, 0.1, 100);
    for (auto& p : c.phase) p = Phase::compression;
    CHECK_THROWS_AS(hysteresis_area(c), PhaseError);
}

TEST_CASE("decompression above compression is an anomaly") {
    StressStrainCurve c = kv_cycle(20000.0, 1000.0, 0.5, 0.1, 200);
    // flip the loop: decompression gains stress
    for (std::size_t i = 0; i < c.size(); ++i) {
        if (c.phase[i] == Phase::decompression) c.stress_kpa[i] += 1.0;
    }
    CHECK_THROWS_AS(hysteresis_area(c), AnomalyError);
}

TEST_CASE("loop area is linear in rate with near-zero intercept") {
    std::vector<std::pair<double, double>> loops;
    for (double rate : {0.05, 0.1, 0.2, 0.4}) {
        loops.push_back({rate, hysteresis_area(kv_cycle(50000.0, 1000.0, 0.5, rate, 1000))});
    }
    const EnergyLossSeries s = eta_from_speeds(loops);
    CHECK(s.r2 > 0.999);
    double max_area = 0.0;
    for (const auto& [_, a] : loops) max_area = std::max(max_area, a);
    CHECK(std::abs(s.intercept_pa) < 0.01 * max_area);
    // strain_max 0.5 makes the slope equal eta
    CHECK(s.eta_loss_pa_s == doctest::Approx(1000.0).epsilon(0.01));
}

TEST_CASE("zero damping material has zero loss slope") {
    std::vector<std::pair<double, double>> loops;
    for (double rate : {0.05, 0.1, 0.2}) {
        loops.push_back({rate, hysteresis_area(kv_cycle(50000.0, 0.0, 0.5, rate, 500))});
    }
    const EnergyLossSeries s = eta_from_speeds(loops);
    CHECK(std::abs(s.eta_loss_pa_s) < 1e-9);
}

TEST_CASE("eta_from_speeds needs distinct rates") {
    CHECK_THROWS_AS(eta_from_speeds({{0.1, 10.0}, {0.1, 12.0}}), ValidationError);
    CHECK_THROWS_AS(eta_from_speeds({{0.1, 10.0}}), InsufficientDataError);
}

TEST_CASE("kelvin-voigt recovery is exact on noiseless data") {
    const StressStrainCurve c = kv_cycle(5000.0, 2000.0, 0.5, 0.1, 500);
    const ViscoelasticFit fit = fit_kelvin_voigt(c);
    CHECK(fit.stiffness_pa == doctest::Approx(5000.0).epsilon(1e-9));
    CHECK(fit.damping_pa_s == doctest::Approx(2000.0).epsilon(1e-9));
    CHECK(fit.identifiable);
    CHECK(fit.r2 == doctest::Approx(1.0));
}

TEST_CASE("kelvin-voigt on an elastic material finds zero damping") {
    const StressStrainCurve c = kv_cycle(5000.0, 0.0, 0.5, 0.1, 500);
    const ViscoelasticFit fit = fit_kelvin_voigt(c);
    CHECK(std::abs(fit.damping_pa_s) < 1e-9);
}

TEST_CASE("compression-only constant rate is unidentifiable") {
    StressStrainCurve c = kv_cycle(5000.0, 2000.0, 0.5, 0.1, 500);
    const std::size_t apex = 499;
    c.strain.resize(apex + 1);
    c.stress_kpa.resize(apex + 1);
    c.strain_rate.resize(apex + 1);
    c.phase.resize(apex + 1);
    const ViscoelasticFit fit = fit_kelvin_voigt(c);
    CHECK_FALSE(fit.identifiable);
}

TEST_CASE("kelvin-voigt refuses force-threshold curves") {
    StressStrainCurve c = kv_cycle(5000.0, 2000.0, 0.5, 0.1, 500);
    c.sampling_mode = SamplingMode::force_threshold;
    CHECK_THROWS_AS(fit_kelvin_voigt(c), UnsupportedModeError);
}

TEST_CASE("hunt-crossley noiseless power law is the log-log line") {
    const StressStrainCurve c = hc_cycle(1000.0, 0.0, 1.5, 0.6, 0.1, 300);
    const ViscoelasticFit fit = fit_hunt_crossley(c);
    CHECK(fit.stiffness_pa == doctest::Approx(1000.0).epsilon(1e-6));
    CHECK(fit.exponent == doctest::Approx(1.5).epsilon(1e-6));
    CHECK(std::abs(fit.damping_pa_s) < 1e-6);
}

TEST_CASE("hunt-crossley recovers damped parameters from noisy data") {
    const StressStrainCurve c = hc_cycle(20000.0, 500.0, 1.5, 0.6, 0.1, 500, 0.01, 42);
    const ViscoelasticFit fit = fit_hunt_crossley(c);
    CHECK(std::abs(fit.stiffness_pa - 20000.0) / 20000.0 < 0.05);
    CHECK(std::abs(fit.exponent - 1.5) < 0.1);
    CHECK(std::abs(fit.damping_pa_s - 500.0) / 500.0 < 0.15);
    CHECK(fit.identifiable);
}

TEST_CASE("hunt-crossley objective never increases across accepted iterations") {
    const StressStrainCurve c = hc_cycle(20000.0, 500.0, 1.5, 0.6, 0.1, 400, 0.02, 7);
    const ViscoelasticFit fit = fit_hunt_crossley(c);
    for (std::size_t i = 1; i < fit.objective_history.size(); ++i) {
        CHECK(fit.objective_history[i] <= fit.objective_history[i - 1]);
    }
}

TEST_CASE("hunt-crossley recovers n = 1 from elastic linear data") {
    // With the damper off the two models coincide at n = 1, so the nonlinear
    // fit must land on the linear fit's answer.
    const StressStrainCurve c = kv_cycle(30000.0, 0.0, 0.5, 0.1, 500);
    const ViscoelasticFit kv = fit_kelvin_voigt(c);
    const ViscoelasticFit hc = fit_hunt_crossley(c);
    CHECK(std::abs(hc.stiffness_pa - kv.stiffness_pa) / kv.stiffness_pa < 1e-6);
    CHECK(std::abs(hc.exponent - 1.0) < 1e-6);
    CHECK(std::abs(hc.damping_pa_s) < 1e-3);
}

TEST_CASE("hunt-crossley n = 1 fit matches its own generator") {
    const StressStrainCurve c = hc_cycle(30000.0, 2000.0, 1.0, 0.5, 0.1, 500);
    const ViscoelasticFit hc = fit_hunt_crossley(c);
    CHECK(std::abs(hc.stiffness_pa - 30000.0) / 30000.0 < 1e-6);
    CHECK(std::abs(hc.exponent - 1.0) < 1e-6);
    CHECK(std::abs(hc.damping_pa_s - 2000.0) / 2000.0 < 1e-4);
}

TEST_CASE("stress rescaling scales K and eta, leaves n") {
    const StressStrainCurve base = hc_cycle(20000.0, 800.0, 1.3, 0.6, 0.1, 400);
    StressStrainCurve scaled = base;
    const double c = 3.0;
    for (double& s : scaled.stress_kpa) s *= c;
    const ViscoelasticFit a = fit_hunt_crossley(base);
    const ViscoelasticFit b = fit_hunt_crossley(scaled);
    CHECK(b.stiffness_pa == doctest::Approx(c * a.stiffness_pa).epsilon(1e-4));
    CHECK(b.damping_pa_s == doctest::Approx(c * a.damping_pa_s).epsilon(1e-3));
    CHECK(b.exponent == doctest::Approx(a.exponent).epsilon(1e-6));
}

TEST_CASE("hunt-crossley single-phase constant rate flags unidentifiable") {
    StressStrainCurve c = hc_cycle(20000.0, 800.0, 1.3, 0.6, 0.1, 400);
    const std::size_t apex = 399;
    c.strain.resize(apex + 1);
    c.stress_kpa.resize(apex + 1);
    c.strain_rate.resize(apex + 1);
    c.phase.resize(apex + 1);
    const ViscoelasticFit fit = fit_hunt_crossley(c);
    CHECK_FALSE(fit.identifiable);
}

TEST_CASE("hunt-crossley needs enough positive samples") {
    StressStrainCurve c;
    for (int i = 0; i < 6; ++i) {
        c.strain.push_back(0.1 * (i + 1));
        c.stress_kpa.push_back(1.0);
        c.strain_rate.push_back(0.1);
        c.phase.push_back(Phase::compression);
    }
    CHECK_THROWS_AS(fit_hunt_crossley(c), InsufficientDataError);
}
