#ifndef SPD_DETECTOR_SIM_HPP
#define SPD_DETECTOR_SIM_HPP

#include "spd/timetag.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace spd {

struct Trap {
    double amplitude_cps = 0.0; // conditional-rate amplitude right after a count
    double tau_s = 0.0;         // carrier lifetime
};

// Generative detector model: homogeneous thermal dark counts, non-paralyzable
// dead time, per-count trap filling with exponential release, optional
// Gaussian detection jitter for illuminated operation.
struct DetectorModel {
    double thermal_dcr_cps = 0.0;
    double dead_time_s = 0.0;
    std::vector<Trap> traps; // at most 4
    double efficiency = 1.0;
    double jitter_sigma_s = 0.0;
    bool cascade = true; // registered afterpulses refill the traps

    // Expected afterpulse candidates per registered count, sum of A_i*tau_i.
    double trap_occupancy() const;
    void validate() const;
};

struct PulseTrain {
    double rate_hz = 0.0;
    double mean_photons_per_pulse = 0.0;
    double wavelength_m = 808e-9;
    double duration_s = 0.0;
};

// Dark-count stream over [0, duration]. Deterministic per (model, duration,
// seed): same inputs give a bit-identical stream.
TagStream simulate_dark(const DetectorModel& model, double duration_s,
                        std::uint64_t seed, double tick_seconds = 78.125e-12);

// Dark process merged with pulsed-laser detections. Each pulse fires a
// detection with probability 1 - exp(-mu * efficiency) at the pulse time
// plus Gaussian jitter; dead time gates the merged sequence.
TagStream simulate_illuminated(const DetectorModel& model, const PulseTrain& pulses,
                               std::uint64_t seed, double tick_seconds = 78.125e-12);

// First-order analytic afterpulse probability: sum of A_i * tau_i *
// exp(-dead_time / tau_i), i.e. candidates that survive the dead time.
// Cascade corrections are ignored.
double expected_afterpulse_probability(const DetectorModel& model);

// Bundled reference models for a C30902SH APD at six operating temperatures,
// keyed "0C", "-20C", "-40C", "-60C", "-80C", "-100C".
std::vector<std::pair<std::string, DetectorModel>> reference_models();

} // namespace spd

#endif
