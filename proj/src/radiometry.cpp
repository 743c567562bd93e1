#include "spd/radiometry.hpp"

#include "spd/errors.hpp"

#include <cmath>
#include <functional>

namespace spd {

EfficiencyResult detection_efficiency(const EfficiencyInput& in) {
    if (!(in.laser_power_w > 0.0))
        throw input_error("detection_efficiency: laser power must be positive");
    if (!(in.wavelength_m > 0.0))
        throw input_error("detection_efficiency: wavelength must be positive");
    if (in.detected_rate_cps < 0.0 || in.dcr_cps < 0.0)
        throw input_error("detection_efficiency: rates must be nonnegative");

    EfficiencyResult r;
    r.wavelength_warning = in.wavelength_m < 300e-9 || in.wavelength_m > 1100e-9;
    const double hc = constants::planck * constants::light_speed;
    r.photons_per_second = in.laser_power_w * in.wavelength_m / hc;
    if (in.pulse_rate_hz > 0.0)
        r.photons_per_pulse = r.photons_per_second / in.pulse_rate_hz;
    if (!(r.photons_per_second > 0.0))
        throw input_error("detection_efficiency: zero expected photon rate");
    double net = in.detected_rate_cps - in.dcr_cps;
    if (net < 0.0) {
        r.clamped = true;
        net = 0.0;
    }
    r.eta = net / r.photons_per_second;
    return r;
}

namespace {

double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double fa, double fm, double fb, double whole, double tol,
                        int depth) {
    if (depth > 60)
        throw numeric_error("blackbody quadrature did not converge");
    double m = 0.5 * (a + b);
    double lm = 0.5 * (a + m);
    double rm = 0.5 * (m + b);
    double flm = f(lm);
    double frm = f(rm);
    double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    double delta = left + right - whole;
    if (std::fabs(delta) <= 15.0 * tol)
        return left + right + delta / 15.0;
    return adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth + 1) +
           adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth + 1);
}

double integrate(const std::function<double(double)>& f, double a, double b, double rel_tol) {
    double fa = f(a);
    double fb = f(b);
    double fm = f(0.5 * (a + b));
    double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    double tol = std::fabs(whole) * rel_tol;
    if (tol == 0.0)
        tol = rel_tol;
    return adaptive_simpson(f, a, b, fa, fm, fb, whole, tol, 0);
}

} // namespace

double blackbody_photon_rate(const BlackbodyQuery& q) {
    if (!(q.temperature_k > 0.0))
        throw input_error("blackbody_photon_rate: temperature must be positive");
    if (q.cutoff_wavelength_m < 0.0 || !(q.aperture_area_m2 > 0.0))
        throw input_error("blackbody_photon_rate: cutoff and area must be nonnegative/positive");
    if (q.cutoff_wavelength_m == 0.0)
        return 0.0;

    const double hc_kt =
        constants::planck * constants::light_speed / (constants::boltzmann * q.temperature_k);
    auto spectral_photon_radiance = [&](double lambda) {
        if (lambda <= 0.0)
            return 0.0;
        double x = hc_kt / lambda;
        if (x > 700.0)
            return 0.0; // exp would overflow; the radiance is zero to double precision
        double denom = std::expm1(x);
        return 2.0 * constants::light_speed / (lambda * lambda * lambda * lambda) / denom;
    };
    double integral = integrate(spectral_photon_radiance, 0.0, q.cutoff_wavelength_m, 1e-6);
    const double pi = 3.14159265358979323846;
    return q.aperture_area_m2 * pi * integral;
}

BreakdownResult breakdown_voltage(const std::vector<std::pair<double, double>>& points,
                                  RegionPolicy policy) {
    if (points.size() < 3)
        throw input_error("breakdown_voltage: need at least 3 points");
    double lo = points.front().first, hi = points.front().first;
    for (const auto& [x, y] : points) {
        lo = std::min(lo, x);
        hi = std::max(hi, x);
    }
    if (hi - lo < 5.0)
        throw input_error("breakdown_voltage: bias points must span at least 5 V");
    BreakdownResult r;
    r.diagnostics = linear_extrapolate_zero(points, policy);
    r.breakdown_v = r.diagnostics.x_at_zero;
    return r;
}

} // namespace spd
