#ifndef SPD_RADIOMETRY_HPP
#define SPD_RADIOMETRY_HPP

#include "spd/decay_fit.hpp"

#include <utility>
#include <vector>

namespace spd {

namespace constants {
inline constexpr double planck = 6.62607015e-34;       // J s
inline constexpr double light_speed = 299792458.0;     // m/s
inline constexpr double boltzmann = 1.380649e-23;      // J/K
} // namespace constants

struct EfficiencyInput {
    double detected_rate_cps = 0.0;
    double dcr_cps = 0.0;
    double laser_power_w = 0.0; // referred to the detector plane
    double wavelength_m = 808e-9;
    double pulse_rate_hz = 0.0;
};

struct EfficiencyResult {
    double eta = 0.0;
    double photons_per_second = 0.0;
    double photons_per_pulse = 0.0;
    bool clamped = false;            // detected rate fell below the DCR
    bool wavelength_warning = false; // outside the 300-1100 nm plausibility band
};

// eta = (N_det - DCR) / (P*lambda/(h*c)); the per-pulse photon number
// P*lambda/(f*h*c) is also reported for illuminated-simulation use.
EfficiencyResult detection_efficiency(const EfficiencyInput& in);

struct BlackbodyQuery {
    double temperature_k = 293.0;
    double cutoff_wavelength_m = 900e-9;
    double aperture_area_m2 = 0.0;
};

// Photons per second from a room-temperature blackbody cavity onto a flat
// aperture (Lambertian hemispherical collection), integrated over
// wavelengths up to the cutoff by adaptive quadrature (rel. tol. 1e-6).
double blackbody_photon_rate(const BlackbodyQuery& q);

struct BreakdownResult {
    double breakdown_v = 0.0;
    LinearExtrapolation diagnostics;
};

// Extrapolates avalanche amplitude vs bias to zero amplitude.
BreakdownResult breakdown_voltage(const std::vector<std::pair<double, double>>& points,
                                  RegionPolicy policy = RegionPolicy::Auto);

} // namespace spd

#endif
