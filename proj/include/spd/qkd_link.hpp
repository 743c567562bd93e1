#ifndef SPD_QKD_LINK_HPP
#define SPD_QKD_LINK_HPP

#include <array>
#include <cstddef>
#include <string>
#include <vector>

namespace spd {

// Entangled-pair dual-downlink scenario: a source distributes photon pairs
// over two lossy links to two ground stations.
struct LinkScenario {
    double pair_rate_cps = 5e7;
    std::array<double, 2> loss_db_per_link = {69.0, 69.0}; // channel loss only
    double detector_efficiency = 0.5;                      // per station
    double dcr_cps_per_station = 1.0;
    bool dcr_per_detector = false; // interpret the DCR value per detector (two per station)
    double coincidence_window_s = 1e-9;
    double intrinsic_error = 0.05;             // e_d
    double error_correction_inefficiency = 1.1; // f_EC
    double sifting_factor = 0.5;
    double coincidence_acceptance = 1.0; // window acceptance for true pairs

    void validate() const;
};

struct LinkEvaluation {
    std::array<double, 2> singles_cps = {0.0, 0.0};
    double true_coincidences_cps = 0.0;
    double accidental_coincidences_cps = 0.0;
    double snr = 0.0;
    double qber = 0.0;
    double key_rate_bps = 0.0;
    bool snr_undefined = false;
};

double binary_entropy(double p);

LinkEvaluation evaluate_scenario(const LinkScenario& s);

struct SweepPoint {
    double total_loss_db = 0.0;
    double key_rate_bps = 0.0;
    double snr = 0.0;
    double qber = 0.0;
};

struct LossSweep {
    std::vector<SweepPoint> curve;
    double cutoff_db = 0.0;  // largest total loss with positive key rate
    bool cutoff_open = false; // key rate still positive at the sweep's end
    bool no_key = false;      // key rate zero over the whole sweep
};

// Sweeps the total dual-link loss (channel plus the two detector-efficiency
// terms) split equally between the links; the cutoff is refined to 0.1 dB.
LossSweep sweep_loss(const LinkScenario& s, double lo_db, double hi_db,
                     std::size_t steps);

// Named bundled scenarios: "geo-dual-downlink" and "canary-143km".
LinkScenario link_preset(const std::string& name);
std::vector<std::string> link_preset_names();

} // namespace spd

#endif
