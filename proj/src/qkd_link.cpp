#include "spd/qkd_link.hpp"

#include "spd/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace spd {

void LinkScenario::validate() const {
    if (!(pair_rate_cps >= 0.0))
        throw input_error("pair rate must be nonnegative");
    for (double l : loss_db_per_link)
        if (!(l >= 0.0))
            throw input_error("link losses must be nonnegative");
    if (detector_efficiency < 0.0 || detector_efficiency > 1.0)
        throw input_error("detector efficiency must lie in [0, 1]");
    if (!(dcr_cps_per_station >= 0.0))
        throw input_error("DCR must be nonnegative");
    if (!(coincidence_window_s > 0.0))
        throw input_error("coincidence window must be positive");
    if (intrinsic_error < 0.0 || intrinsic_error > 0.5)
        throw input_error("intrinsic error must lie in [0, 0.5]");
    if (error_correction_inefficiency < 1.0)
        throw input_error("error-correction inefficiency must be >= 1");
    if (sifting_factor < 0.0 || sifting_factor > 1.0)
        throw input_error("sifting factor must lie in [0, 1]");
    if (coincidence_acceptance < 0.0 || coincidence_acceptance > 1.0)
        throw input_error("coincidence acceptance must lie in [0, 1]");
}

double binary_entropy(double p) {
    if (p <= 0.0 || p >= 1.0)
        return 0.0;
    return -p * std::log2(p) - (1.0 - p) * std::log2(1.0 - p);
}

LinkEvaluation evaluate_scenario(const LinkScenario& s) {
    s.validate();
    LinkEvaluation e;
    std::array<double, 2> eta;
    for (int k = 0; k < 2; ++k)
        eta[k] = std::pow(10.0, -s.loss_db_per_link[k] / 10.0) * s.detector_efficiency;
    const double station_dcr =
        s.dcr_per_detector ? 2.0 * s.dcr_cps_per_station : s.dcr_cps_per_station;
    for (int k = 0; k < 2; ++k)
        e.singles_cps[k] = s.pair_rate_cps * eta[k] + station_dcr;
    e.true_coincidences_cps =
        s.pair_rate_cps * eta[0] * eta[1] * s.coincidence_acceptance;
    e.accidental_coincidences_cps =
        e.singles_cps[0] * e.singles_cps[1] * s.coincidence_window_s;

    const double total = e.true_coincidences_cps + e.accidental_coincidences_cps;
    if (e.accidental_coincidences_cps > 0.0) {
        e.snr = e.true_coincidences_cps / e.accidental_coincidences_cps;
    } else if (e.true_coincidences_cps > 0.0) {
        e.snr = std::numeric_limits<double>::infinity();
    } else {
        e.snr_undefined = true;
    }
    if (total > 0.0) {
        e.qber = (s.intrinsic_error * e.true_coincidences_cps +
                  0.5 * e.accidental_coincidences_cps) /
                 total;
        double h = binary_entropy(e.qber);
        double fraction = 1.0 - s.error_correction_inefficiency * h - h;
        e.key_rate_bps = s.sifting_factor * total * std::max(fraction, 0.0);
    }
    return e;
}

namespace {

LinkEvaluation evaluate_total_loss(const LinkScenario& base, double total_db) {
    // Total loss includes the two detector-efficiency terms; the remaining
    // channel loss is split equally between the symmetric links.
    double det_db = -10.0 * std::log10(base.detector_efficiency);
    double per_link = std::max((total_db - 2.0 * det_db) / 2.0, 0.0);
    LinkScenario s = base;
    s.loss_db_per_link = {per_link, per_link};
    return evaluate_scenario(s);
}

} // namespace

LossSweep sweep_loss(const LinkScenario& s, double lo_db, double hi_db, std::size_t steps) {
    if (!(hi_db > lo_db))
        throw input_error("sweep_loss: range must be increasing");
    if (steps < 2)
        throw input_error("sweep_loss: need at least 2 steps");
    if (!(s.detector_efficiency > 0.0))
        throw input_error("sweep_loss: detector efficiency must be positive");

    LossSweep out;
    double step = (hi_db - lo_db) / static_cast<double>(steps - 1);
    double last_positive = lo_db - 1.0;
    double first_zero = hi_db + 1.0;
    bool seen_zero_after_positive = false;
    for (std::size_t i = 0; i < steps; ++i) {
        double total = lo_db + static_cast<double>(i) * step;
        LinkEvaluation e = evaluate_total_loss(s, total);
        out.curve.push_back({total, e.key_rate_bps, e.snr, e.qber});
        if (e.key_rate_bps > 0.0) {
            last_positive = total;
        } else if (last_positive >= lo_db && !seen_zero_after_positive) {
            first_zero = total;
            seen_zero_after_positive = true;
        }
    }
    if (last_positive < lo_db) {
        out.no_key = true;
        out.cutoff_db = lo_db;
        return out;
    }
    if (!seen_zero_after_positive) {
        // Still generating key at the end of the sweep.
        out.cutoff_open = true;
        out.cutoff_db = hi_db;
        return out;
    }
    double lo = last_positive;
    double hi = first_zero;
    while (hi - lo > 0.1) {
        double mid = 0.5 * (lo + hi);
        if (evaluate_total_loss(s, mid).key_rate_bps > 0.0)
            lo = mid;
        else
            hi = mid;
    }
    out.cutoff_db = lo;
    return out;
}

LinkScenario link_preset(const std::string& name) {
    if (name == "geo-dual-downlink") {
        LinkScenario s;
        s.pair_rate_cps = 5e7;
        s.loss_db_per_link = {69.0, 69.0};
        s.detector_efficiency = 0.5;
        s.dcr_cps_per_station = 1.0;
        s.coincidence_window_s = 1e-9;
        return s;
    }
    if (name == "canary-143km") {
        // Terrestrial one-sided link: the source sits with station A, only
        // station B looks through the atmospheric channel.
        LinkScenario s;
        s.pair_rate_cps = 5e7;
        s.loss_db_per_link = {0.0, 35.0};
        s.detector_efficiency = 0.5;
        s.dcr_cps_per_station = 20.0;
        s.coincidence_window_s = 1e-9;
        return s;
    }
    throw input_error("unknown link preset: " + name);
}

std::vector<std::string> link_preset_names() {
    return {"geo-dual-downlink", "canary-143km"};
}

} // namespace spd
