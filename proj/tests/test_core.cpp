#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "squeeze/core.hpp"

using namespace squeeze;

TEST_CASE("eval_model pure Hooke") {
    ModelParams p{ModelKind::kelvin_voigt, 5000.0, 0.0, 1.0};
    CHECK(eval_model(p, 0.4, 0.0) == doctest::Approx(2000.0));
}

TEST_CASE("eval_model power law without damping") {
    ModelParams p{ModelKind::hunt_crossley, 1000.0, 0.0, 2.0};
    CHECK(eval_model(p, 0.5, 0.0) == doctest::Approx(250.0));
}

TEST_CASE("eval_model hc with damping") {
    ModelParams p{ModelKind::hunt_crossley, 1000.0, 200.0, 1.0};
    // K*e + eta*e*edot = 500 + 200*0.5*0.1
    CHECK(eval_model(p, 0.5, 0.1) == doctest::Approx(510.0));
}

TEST_CASE("eval_model rejects negative strain") {
    ModelParams p{ModelKind::kelvin_voigt, 1000.0, 0.0, 1.0};
    CHECK_THROWS_AS(eval_model(p, -0.1, 0.0), std::domain_error);
}

TEST_CASE("eval_model matches the closed forms on random inputs") {
    // kv: K*e + eta*edot; hc: K*e^n * (1 + eta*edot/K) = K*e^n + eta*e^n*edot.
    // The damping terms differ, so the models agree at n = 1 only when the
    // damper is off.
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 200; ++i) {
        const double k = 100.0 + 1e5 * u(rng);
        const double eta = 1e4 * u(rng);
        const double n = 0.3 + 2.0 * u(rng);
        const double strain = 0.9 * u(rng);
        const double rate = -1.0 + 2.0 * u(rng);
        ModelParams kv{ModelKind::kelvin_voigt, k, eta, 1.0};
        ModelParams hc{ModelKind::hunt_crossley, k, eta, n};
        CHECK(eval_model(kv, strain, rate) ==
              doctest::Approx(k * strain + eta * rate).epsilon(1e-12));
        CHECK(eval_model(hc, strain, rate) ==
              doctest::Approx(k * std::pow(strain, n) + eta * std::pow(strain, n) * rate)
                  .epsilon(1e-12));
        ModelParams elastic_kv{ModelKind::kelvin_voigt, k, 0.0, 1.0};
        ModelParams elastic_hc{ModelKind::hunt_crossley, k, 0.0, 1.0};
        CHECK(eval_model(elastic_kv, strain, rate) ==
              doctest::Approx(eval_model(elastic_hc, strain, rate)).epsilon(1e-12));
    }
}

TEST_CASE("synthesize_cycle matches the model when noiseless") {
    ModelParams p{ModelKind::kelvin_voigt, 5000.0, 1000.0, 1.0};
    SynthOptions opt;
    opt.strain_max = 0.5;
    opt.strain_rate = 0.1;
    opt.samples_per_phase = 100;
    const StressStrainCurve c = synthesize_cycle(p, opt);

    // apex sample: 5000*0.5 + 1000*0.1 = 2600 Pa
    const std::size_t apex = opt.samples_per_phase - 1;
    CHECK(c.stress_kpa[apex] * 1000.0 == doctest::Approx(2600.0));

    for (std::size_t i = 0; i < c.size(); ++i) {
        const double expect = eval_model(p, c.strain[i], c.strain_rate[i]);
        CHECK(c.stress_kpa[i] * 1000.0 == doctest::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("synthesize_cycle is deterministic per seed") {
    ModelParams p{ModelKind::hunt_crossley, 20000.0, 500.0, 1.5};
    SynthOptions opt;
    opt.noise_rel = 0.02;
    opt.seed = 1234;
    const StressStrainCurve a = synthesize_cycle(p, opt);
    const StressStrainCurve b = synthesize_cycle(p, opt);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a.stress_kpa[i] == b.stress_kpa[i]);  // bit-identical
    }
    opt.seed = 1235;
    const StressStrainCurve c = synthesize_cycle(p, opt);
    bool any_diff = false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a.stress_kpa[i] != c.stress_kpa[i]) any_diff = true;
    }
    CHECK(any_diff);
}

TEST_CASE("synthesize_cycle analytic loop area") {
    // closed KV loop integrates to 2*eta*rate*strain_max
    ModelParams p{ModelKind::kelvin_voigt, 20000.0, 1000.0, 1.0};
    SynthOptions opt;
    opt.strain_max = 0.5;
    opt.strain_rate = 0.1;
    opt.samples_per_phase = 1000;
    const StressStrainCurve c = synthesize_cycle(p, opt);
    double area = 0.0;
    for (std::size_t i = 1; i < c.size(); ++i) {
        area += 0.5 * (c.stress_kpa[i] + c.stress_kpa[i - 1]) * 1000.0 *
                (c.strain[i] - c.strain[i - 1]);
    }
    const double expect = 2.0 * 1000.0 * 0.1 * 0.5;
    CHECK(area == doctest::Approx(expect).epsilon(0.005));
}

TEST_CASE("synthesize_cycle rejects hc parameters with negative stress") {
    // decompression factor 1 - eta*rate/K goes negative
    ModelParams p{ModelKind::hunt_crossley, 1000.0, 20000.0, 1.2};
    SynthOptions opt;
    opt.strain_rate = 0.1;
    CHECK_THROWS_AS(synthesize_cycle(p, opt), GenerationError);
    try {
        synthesize_cycle(p, opt);
    } catch (const GenerationError& e) {
        CHECK(e.sample_index() >= opt.samples_per_phase);  // decompression side
    }
}

TEST_CASE("synthesize_raw_cycle round-trips geometry") {
    ModelParams p{ModelKind::kelvin_voigt, 20000.0, 500.0, 1.0};
    SyntheticRawOptions opt;
    opt.synth.samples_per_phase = 200;
    const RawCycle raw = synthesize_raw_cycle(p, opt);
    CHECK(raw.t_s.size() == raw.position_mm.size());
    CHECK(raw.position_mm[synthetic_contact_index(opt)] == doctest::Approx(opt.l0_mm));
    // first compression sample has zero force, apex the maximum position drop
    const auto apex_pos = *std::min_element(raw.position_mm.begin(), raw.position_mm.end());
    CHECK(apex_pos == doctest::Approx(opt.l0_mm * (1.0 - opt.synth.strain_max)));
}

TEST_CASE("device profile invariants") {
    DeviceProfile p;
    p.name = "bad";
    p.jaw_area_mm2 = -1.0;
    p.stroke_mm = 10.0;
    p.calibration = {0.0, 1.0};
    CHECK_THROWS_AS(p.validate(), ValidationError);
    p.jaw_area_mm2 = 100.0;
    p.speed_map = {{10.0, 5.0}, {5.0, 8.0}};
    CHECK_THROWS_AS(p.validate(), ValidationError);
    p.speed_map = {{5.0, 5.0}, {10.0, 8.0}};
    CHECK_NOTHROW(p.validate());
}
