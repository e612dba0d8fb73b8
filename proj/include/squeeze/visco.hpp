#pragma once

#include <utility>
#include <vector>

#include "squeeze/core.hpp"

namespace squeeze {

/// Thrown when the Hunt-Crossley solver runs out of iterations; carries the
/// best iterate seen so far.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& msg, ViscoelasticFit best)
        : Error(msg), best_(std::move(best)) {}
    const ViscoelasticFit& best() const { return best_; }

private:
    ViscoelasticFit best_;
};

/// Trapezoidal loop integral (compression minus decompression over the
/// overlapping strain range), in Pa = J/m^3.
double hysteresis_area(const StressStrainCurve& curve);

/// Least-squares line through (mean strain rate, loop energy); the slope is
/// the energy-loss damping coefficient in Pa*s.
EnergyLossSeries eta_from_speeds(const std::vector<std::pair<double, double>>& loops);

struct ViscoFitOptions {
    double strain_min = 0.02;          // excludes log(0) and the contact region
    double identifiability_cov = 0.1;  // pop std of rate / mean |rate|
};

/// sigma = K*eps + eta*epsdot by ordinary least squares, no intercept.
ViscoelasticFit fit_kelvin_voigt(const StressStrainCurve& curve, const ViscoFitOptions& opt = {});

struct HuntCrossleyOptions : ViscoFitOptions {
    double lambda_init = 1e-3;
    double obj_tol = 1e-10;   // relative objective decrease
    double step_tol = 1e-12;  // step norm
    int max_iterations = 200;
    double n_max = 10.0;
};

/// Damped Gauss-Newton fit of log sigma = log K + n*log eps + log(1 + eta*epsdot/K)
/// over (log K, n, eta), eta >= 0, n in (0, n_max]. Samples whose damping
/// factor goes non-positive during an iteration are excluded from that
/// iteration's residual.
ViscoelasticFit fit_hunt_crossley(const StressStrainCurve& curve,
                                  const HuntCrossleyOptions& opt = {});

}  // namespace squeeze
