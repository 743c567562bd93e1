#include "spd/errors.hpp"
#include "spd/radiometry.hpp"

#include <doctest.h>

#include <cmath>
#include <random>
#include <utility>
#include <vector>

using namespace spd;

namespace {

// Independent series oracle for the truncated blackbody photon integral:
// with a = hc/(kT) and v = 1/lambda_c,
//   integral_0^{lambda_c} (2c/lambda^4)/(e^{a/lambda}-1) dlambda
//     = 2c * sum_{n>=1} e^{-n a v} (v^2/(n a) + 2 v/(n a)^2 + 2/(n a)^3).
double blackbody_series(double temperature_k, double cutoff_m, double area_m2) {
    const double a = constants::planck * constants::light_speed /
                     (constants::boltzmann * temperature_k);
    const double v = 1.0 / cutoff_m;
    double sum = 0.0;
    for (int n = 1; n <= 200; ++n) {
        double na = static_cast<double>(n) * a;
        double term = std::exp(-na * v) *
                      (v * v / na + 2.0 * v / (na * na) + 2.0 / (na * na * na));
        sum += term;
        if (term < sum * 1e-14)
            break;
    }
    const double pi = 3.14159265358979323846;
    return area_m2 * pi * 2.0 * constants::light_speed * sum;
}

} // namespace

TEST_CASE("blackbody rate matches the series oracle at the reference point") {
    BlackbodyQuery q;
    q.temperature_k = 293.0;
    q.cutoff_wavelength_m = 900e-9;
    const double r = 250e-6;
    q.aperture_area_m2 = 3.14159265358979323846 * r * r;
    double quad = blackbody_photon_rate(q);
    double series = blackbody_series(q.temperature_k, q.cutoff_wavelength_m,
                                     q.aperture_area_m2);
    CHECK(quad == doctest::Approx(series).epsilon(1e-4));
    CHECK(quad * 3600.0 < 1.0);                       // under one photon per hour
    CHECK(quad == doctest::Approx(1.9e-5).epsilon(0.1)); // about 0.07 per hour
}

TEST_CASE("blackbody rate is linear in area and zero at zero cutoff") {
    BlackbodyQuery q;
    q.temperature_k = 300.0;
    q.cutoff_wavelength_m = 1000e-9;
    q.aperture_area_m2 = 1e-7;
    double base = blackbody_photon_rate(q);
    q.aperture_area_m2 = 2e-7;
    CHECK(blackbody_photon_rate(q) == doctest::Approx(2.0 * base).epsilon(1e-9));
    q.cutoff_wavelength_m = 0.0;
    CHECK(blackbody_photon_rate(q) == 0.0);
}

TEST_CASE("blackbody rate increases with temperature and cutoff") {
    BlackbodyQuery q;
    q.aperture_area_m2 = 1e-7;
    double prev = 0.0;
    for (double t : {250.0, 293.0, 320.0, 400.0}) {
        q.temperature_k = t;
        q.cutoff_wavelength_m = 900e-9;
        double r = blackbody_photon_rate(q);
        CHECK(r > prev);
        prev = r;
    }
    q.temperature_k = 293.0;
    prev = 0.0;
    for (double c : {700e-9, 900e-9, 1100e-9, 1500e-9}) {
        q.cutoff_wavelength_m = c;
        double r = blackbody_photon_rate(q);
        CHECK(r > prev);
        prev = r;
    }
}

TEST_CASE("efficiency reproduces the worked power example") {
    EfficiencyInput in;
    in.laser_power_w = 13.89e-15;
    in.wavelength_m = 808e-9;
    in.detected_rate_cps = 28300.0;
    in.dcr_cps = 50.0;
    in.pulse_rate_hz = 30e3;
    EfficiencyResult r = detection_efficiency(in);
    CHECK(r.photons_per_second == doctest::Approx(56500.0).epsilon(0.002));
    CHECK(r.photons_per_pulse == doctest::Approx(1.883).epsilon(0.002));
    CHECK(r.eta == doctest::Approx(0.50).epsilon(0.01));
    CHECK_FALSE(r.clamped);
    CHECK_FALSE(r.wavelength_warning);
}

TEST_CASE("efficiency edge cases") {
    EfficiencyInput in;
    in.laser_power_w = 1e-12;
    in.wavelength_m = 808e-9;
    in.detected_rate_cps = 100.0;
    in.dcr_cps = 100.0;
    CHECK(detection_efficiency(in).eta == 0.0);
    in.dcr_cps = 200.0;
    EfficiencyResult clamped = detection_efficiency(in);
    CHECK(clamped.eta == 0.0);
    CHECK(clamped.clamped);
    in.wavelength_m = 1550e-9;
    CHECK(detection_efficiency(in).wavelength_warning);
    in.laser_power_w = 0.0;
    CHECK_THROWS_AS(detection_efficiency(in), input_error);
}

TEST_CASE("efficiency is invariant under common rescaling") {
    EfficiencyInput in;
    in.laser_power_w = 5e-15;
    in.wavelength_m = 808e-9;
    in.detected_rate_cps = 10000.0;
    in.dcr_cps = 0.0;
    double eta = detection_efficiency(in).eta;
    in.laser_power_w *= 3.0;
    in.detected_rate_cps *= 3.0;
    CHECK(detection_efficiency(in).eta == doctest::Approx(eta).epsilon(1e-12));
}

TEST_CASE("breakdown voltage from an exact line") {
    BreakdownResult r = breakdown_voltage(
        {{205.0, 1.0}, {210.0, 2.0}, {215.0, 3.0}}, RegionPolicy::All);
    CHECK(r.breakdown_v == doctest::Approx(200.0).epsilon(1e-9));
}

TEST_CASE("breakdown voltage with near-threshold curvature stays within half a volt") {
    // Amplitude sags as (V-200)^1.3 close to threshold and is linear above;
    // the linear branch points back at exactly 200 V.
    const double s = 0.25 * std::pow(5.0, 1.3) / 5.0; // continuity at 205 V
    std::vector<std::pair<double, double>> pts;
    for (double v = 201.0; v <= 212.0; v += 1.0) {
        double amp = v < 205.0 ? 0.25 * std::pow(v - 200.0, 1.3) : s * (v - 200.0);
        pts.emplace_back(v, amp);
    }
    BreakdownResult r = breakdown_voltage(pts, RegionPolicy::Auto);
    CHECK(std::fabs(r.breakdown_v - 200.0) < 0.5);
}

TEST_CASE("breakdown precision holds over noisy repetitions") {
    std::mt19937_64 rng(42);
    std::normal_distribution<double> noise(0.0, 0.01);
    for (int seed = 0; seed < 100; ++seed) {
        std::vector<std::pair<double, double>> pts;
        for (double v = 205.0; v < 215.0; v += 1.0)
            pts.emplace_back(v, 0.2 * (v - 200.0) * (1.0 + noise(rng)));
        BreakdownResult r = breakdown_voltage(pts, RegionPolicy::Auto);
        CHECK(std::fabs(r.breakdown_v - 200.0) < 0.5);
    }
}

TEST_CASE("breakdown input validation") {
    CHECK_THROWS_AS(breakdown_voltage({{205.0, 1.0}, {206.0, 2.0}}), input_error);
    CHECK_THROWS_AS(
        breakdown_voltage({{205.0, 1.0}, {206.0, 2.0}, {207.0, 3.0}}), input_error);
}

TEST_CASE("breakdown-vs-temperature fixture has the expected slope") {
    // Synthetic v_bd(T) dataset with 0.8 V per degree Celsius.
    std::vector<std::pair<double, double>> pts;
    for (double t = -100.0; t <= 0.0; t += 20.0)
        pts.emplace_back(t, 220.0 + 0.8 * t);
    LinearExtrapolation e = linear_extrapolate_zero(pts, RegionPolicy::All);
    CHECK(e.slope == doctest::Approx(0.8).epsilon(1e-9));
}
