#ifndef SPD_JSON_IO_HPP
#define SPD_JSON_IO_HPP

#include "spd/decay_fit.hpp"
#include "spd/detector_sim.hpp"
#include "spd/histogram.hpp"
#include "spd/qkd_link.hpp"

#include <json.hpp>

#include <string>

namespace spd {

void to_json(nlohmann::json& j, const Trap& t);
void from_json(const nlohmann::json& j, Trap& t);
void to_json(nlohmann::json& j, const DetectorModel& m);
void from_json(const nlohmann::json& j, DetectorModel& m);

void to_json(nlohmann::json& j, const LinkScenario& s);
void from_json(const nlohmann::json& j, LinkScenario& s);
void to_json(nlohmann::json& j, const LinkEvaluation& e);

void to_json(nlohmann::json& j, const RateHistogram& h);
void to_json(nlohmann::json& j, const TrapComponent& c);
void to_json(nlohmann::json& j, const TrapFit& f);
void to_json(nlohmann::json& j, const AfterpulseSummary& s);
void to_json(nlohmann::json& j, const StreamStats& s);

DetectorModel load_model_file(const std::string& path);
void save_model_file(const DetectorModel& m, const std::string& path);
LinkScenario load_scenario_file(const std::string& path);

// Histogram CSV export: bin_start_s, bin_end_s, pair_count, rate_cps.
void write_histogram_csv(const RateHistogram& h, const std::string& path);

void write_json_file(const nlohmann::json& j, const std::string& path);
nlohmann::json read_json_file(const std::string& path);

} // namespace spd

#endif
