#include "spd/json_io.hpp"

#include "spd/errors.hpp"

#include <fstream>

namespace spd {

using nlohmann::json;

void to_json(json& j, const Trap& t) {
    j = json{{"amplitude_cps", t.amplitude_cps}, {"tau_s", t.tau_s}};
}

void from_json(const json& j, Trap& t) {
    j.at("amplitude_cps").get_to(t.amplitude_cps);
    j.at("tau_s").get_to(t.tau_s);
}

void to_json(json& j, const DetectorModel& m) {
    j = json{{"thermal_dcr_cps", m.thermal_dcr_cps},
             {"dead_time_s", m.dead_time_s},
             {"traps", m.traps},
             {"efficiency", m.efficiency},
             {"jitter_sigma_s", m.jitter_sigma_s},
             {"cascade", m.cascade}};
}

void from_json(const json& j, DetectorModel& m) {
    j.at("thermal_dcr_cps").get_to(m.thermal_dcr_cps);
    j.at("dead_time_s").get_to(m.dead_time_s);
    m.traps = j.value("traps", std::vector<Trap>{});
    m.efficiency = j.value("efficiency", 1.0);
    m.jitter_sigma_s = j.value("jitter_sigma_s", 0.0);
    m.cascade = j.value("cascade", true);
}

void to_json(json& j, const LinkScenario& s) {
    j = json{{"pair_rate_cps", s.pair_rate_cps},
             {"loss_db_per_link", s.loss_db_per_link},
             {"detector_efficiency", s.detector_efficiency},
             {"dcr_cps_per_station", s.dcr_cps_per_station},
             {"dcr_per_detector", s.dcr_per_detector},
             {"coincidence_window_s", s.coincidence_window_s},
             {"intrinsic_error", s.intrinsic_error},
             {"error_correction_inefficiency", s.error_correction_inefficiency},
             {"sifting_factor", s.sifting_factor},
             {"coincidence_acceptance", s.coincidence_acceptance}};
}

void from_json(const json& j, LinkScenario& s) {
    LinkScenario d;
    s.pair_rate_cps = j.value("pair_rate_cps", d.pair_rate_cps);
    s.loss_db_per_link = j.value("loss_db_per_link", d.loss_db_per_link);
    s.detector_efficiency = j.value("detector_efficiency", d.detector_efficiency);
    s.dcr_cps_per_station = j.value("dcr_cps_per_station", d.dcr_cps_per_station);
    s.dcr_per_detector = j.value("dcr_per_detector", d.dcr_per_detector);
    s.coincidence_window_s = j.value("coincidence_window_s", d.coincidence_window_s);
    s.intrinsic_error = j.value("intrinsic_error", d.intrinsic_error);
    s.error_correction_inefficiency =
        j.value("error_correction_inefficiency", d.error_correction_inefficiency);
    s.sifting_factor = j.value("sifting_factor", d.sifting_factor);
    s.coincidence_acceptance = j.value("coincidence_acceptance", d.coincidence_acceptance);
}

void to_json(json& j, const LinkEvaluation& e) {
    j = json{{"singles_cps", e.singles_cps},
             {"true_coincidences_cps", e.true_coincidences_cps},
             {"accidental_coincidences_cps", e.accidental_coincidences_cps},
             {"snr", e.snr_undefined ? json() : json(e.snr)},
             {"qber", e.qber},
             {"key_rate_bps", e.key_rate_bps}};
}

void to_json(json& j, const RateHistogram& h) {
    j = json{{"edges_s", h.grid.edges},
             {"kind", h.grid.kind == GridKind::Geometric ? "geometric" : "uniform"},
             {"pair_counts", h.pair_counts},
             {"n_starts", h.n_starts},
             {"rate_cps", h.rate_cps},
             {"window_l_s", h.window_l},
             {"degenerate", h.degenerate}};
    if (h.grid.kind == GridKind::Geometric) {
        j["t0_s"] = h.grid.t0;
        j["ratio"] = h.grid.ratio;
    }
}

void to_json(json& j, const TrapComponent& c) {
    j = json{{"amplitude_cps", c.amplitude_cps},
             {"tau_s", c.tau_s},
             {"below_dead_time", c.below_dead_time},
             {"merged", c.merged}};
}

void to_json(json& j, const TrapFit& f) {
    j = json{{"dark_cps", f.dark_cps},
             {"components", f.components},
             {"fit_start_bin", f.fit_start_bin},
             {"residual_norm", f.residual_norm},
             {"converged", f.converged}};
}

void to_json(json& j, const AfterpulseSummary& s) {
    j = json{{"dcr_cps", s.dcr_cps},
             {"dead_time_s", s.dead_time_s},
             {"recharge_time_s", s.recharge_time_s},
             {"afterpulse_probability", s.afterpulse_probability}};
}

void to_json(json& j, const StreamStats& s) {
    json per = json::array();
    for (const SessionStats& ss : s.per_session)
        per.push_back(json{{"counts", ss.counts},
                           {"live_seconds", ss.live_seconds},
                           {"mean_rate_cps", ss.mean_rate_cps}});
    j = json{{"total_counts", s.total_counts},
             {"live_seconds", s.live_seconds},
             {"mean_rate_cps", s.mean_rate_cps},
             {"per_session", per}};
}

json read_json_file(const std::string& path) {
    std::ifstream f(path);
    if (!f)
        throw io_error("cannot open " + path);
    json j;
    try {
        f >> j;
    } catch (const json::exception& e) {
        throw input_error("invalid JSON in " + path + ": " + e.what());
    }
    return j;
}

void write_json_file(const json& j, const std::string& path) {
    std::ofstream f(path);
    if (!f)
        throw io_error("cannot open " + path + " for writing");
    f << j.dump(2) << "\n";
    if (!f)
        throw io_error("write failure on " + path);
}

DetectorModel load_model_file(const std::string& path) {
    DetectorModel m = read_json_file(path).get<DetectorModel>();
    m.validate();
    return m;
}

void save_model_file(const DetectorModel& m, const std::string& path) {
    write_json_file(json(m), path);
}

LinkScenario load_scenario_file(const std::string& path) {
    LinkScenario s = read_json_file(path).get<LinkScenario>();
    s.validate();
    return s;
}

void write_histogram_csv(const RateHistogram& h, const std::string& path) {
    std::ofstream f(path);
    if (!f)
        throw io_error("cannot open " + path + " for writing");
    f.precision(17);
    f << "bin_start_s,bin_end_s,pair_count,rate_cps\n";
    for (std::size_t k = 0; k < h.pair_counts.size(); ++k)
        f << h.grid.edges[k] << "," << h.grid.edges[k + 1] << "," << h.pair_counts[k]
          << "," << h.rate_cps[k] << "\n";
    if (!f)
        throw io_error("write failure on " + path);
}

} // namespace spd
