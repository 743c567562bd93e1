// Command-line surface for the single-photon-detector analysis toolkit.
//
// Subcommands: ingest, afterpulse, fit, simulate, jitter, efficiency,
// breakdown, blackbody, keyrate. Every subcommand writes a machine-readable
// JSON summary; exit codes: 0 ok, 2 input error, 3 numeric failure, 4 I/O.

#include "spd/decay_fit.hpp"
#include "spd/detector_sim.hpp"
#include "spd/errors.hpp"
#include "spd/histogram.hpp"
#include "spd/json_io.hpp"
#include "spd/qkd_link.hpp"
#include "spd/radiometry.hpp"
#include "spd/svg_plot.hpp"
#include "spd/timetag.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

using nlohmann::json;

namespace {

std::string out_dir() {
    const char* d = std::getenv("SPD_OUT_DIR");
    return d && *d ? std::string(d) : std::string(".");
}

std::string out_path(const std::string& name) {
    return out_dir() + "/" + name;
}

spd::TagFormat parse_format(const std::string& f) {
    if (f == "bin" || f == "binary-ticks")
        return spd::TagFormat::BinaryTicks;
    if (f == "csv" || f == "csv-seconds")
        return spd::TagFormat::CsvSeconds;
    throw spd::input_error("unknown tag format: " + f);
}

struct GridFlags {
    double t0 = 78.125e-12;
    double ratio = 1.2;
    std::size_t nbins = 128;
    double window_l = 10.0;
};

void add_grid_flags(CLI::App* cmd, GridFlags& g) {
    cmd->add_option("--t0", g.t0, "First bin edge above zero, seconds");
    cmd->add_option("--ratio", g.ratio, "Geometric bin growth ratio");
    cmd->add_option("--nbins", g.nbins, "Number of bins");
    cmd->add_option("--l", g.window_l, "All-pairs window length, seconds");
}

json fit_to_report(const spd::TrapFit& fit) {
    json j = fit;
    json table = json::array();
    for (const spd::TrapComponent& c : fit.components)
        table.push_back(json{{"tau_s", c.tau_s}, {"A_cps", c.amplitude_cps}});
    j["trap_table"] = table;
    return j;
}

int run(int argc, char** argv) {
    CLI::App app{"Single-photon detector time-tag analysis toolkit"};
    app.require_subcommand(1);

    // ingest ----------------------------------------------------------------
    auto* ingest = app.add_subcommand("ingest", "Load, validate, and convert a tag stream");
    std::string in_path, in_format = "csv", out_tags, name = "ingest";
    double tick = 78.125e-12;
    std::vector<double> spans;
    ingest->add_option("--in", in_path, "Input file")->required();
    ingest->add_option("--format", in_format, "Input format: csv | bin");
    ingest->add_option("--tick", tick, "Tick duration, seconds");
    ingest->add_option("--out", out_tags, "Write the stream as binary ticks");
    ingest->add_option("--session-span", spans, "Explicit per-session durations, seconds");
    ingest->add_option("--name", name, "Output file prefix");

    // simulate --------------------------------------------------------------
    auto* simulate = app.add_subcommand("simulate", "Generate a synthetic tag stream");
    std::string model_path, sim_out;
    double duration = 100.0, pulse_rate = 0.0, mu = 0.0;
    std::uint64_t seed = 1;
    std::string sim_name = "simulate";
    simulate->add_option("--model", model_path, "Detector model JSON")->required();
    simulate->add_option("--duration", duration, "Simulated duration, seconds");
    simulate->add_option("--seed", seed, "RNG seed");
    simulate->add_option("--tick", tick, "Tick duration, seconds");
    simulate->add_option("--out", sim_out, "Output tag file (binary ticks)");
    simulate->add_option("--pulse-rate", pulse_rate, "Laser repetition rate, Hz (enables illumination)");
    simulate->add_option("--mu", mu, "Mean photons per pulse");
    simulate->add_option("--name", sim_name, "Output file prefix");

    // afterpulse ------------------------------------------------------------
    auto* afterpulse = app.add_subcommand("afterpulse", "Long-time all-pairs afterpulsing analysis");
    GridFlags grid_flags;
    std::string ap_in, ap_format = "bin", ap_name = "afterpulse";
    double tail_fraction = 0.2;
    bool ap_svg = false;
    afterpulse->add_option("--in", ap_in, "Input tag file")->required();
    afterpulse->add_option("--format", ap_format, "Input format: csv | bin");
    afterpulse->add_option("--tick", tick, "Tick duration, seconds");
    add_grid_flags(afterpulse, grid_flags);
    afterpulse->add_option("--tail-fraction", tail_fraction, "Grid-span fraction used for the DCR tail");
    afterpulse->add_flag("--svg", ap_svg, "Also write a log-log SVG plot");
    afterpulse->add_option("--name", ap_name, "Output file prefix");

    // fit -------------------------------------------------------------------
    auto* fit_cmd = app.add_subcommand("fit", "Fit dark level + exponential trap components");
    std::string fit_in, fit_hist, fit_format = "bin", fit_name = "fit";
    int max_components = 4, forced = -1;
    double fit_dead_time = 0.0;
    GridFlags fit_grid;
    fit_cmd->add_option("--in", fit_in, "Input tag file (histogram computed internally)");
    fit_cmd->add_option("--hist", fit_hist, "Histogram CSV from the afterpulse subcommand");
    fit_cmd->add_option("--format", fit_format, "Tag input format: csv | bin");
    fit_cmd->add_option("--tick", tick, "Tick duration, seconds");
    add_grid_flags(fit_cmd, fit_grid);
    fit_cmd->add_option("--max-components", max_components, "Maximum exponential components (1..4)");
    fit_cmd->add_option("--components", forced, "Pin the model order instead of auto selection");
    fit_cmd->add_option("--dead-time", fit_dead_time, "Dead time used to flag short lifetimes, seconds");
    fit_cmd->add_option("--name", fit_name, "Output file prefix");

    // jitter ----------------------------------------------------------------
    auto* jitter = app.add_subcommand("jitter", "Timing-jitter FWHM from a pulsed-laser tag stream");
    std::string jit_in, jit_format = "bin", jit_name = "jitter";
    double jit_pulse_rate = 30e3, jit_bin = 2e-11;
    jitter->add_option("--in", jit_in, "Input tag file")->required();
    jitter->add_option("--format", jit_format, "Input format: csv | bin");
    jitter->add_option("--tick", tick, "Tick duration, seconds");
    jitter->add_option("--pulse-rate", jit_pulse_rate, "Laser repetition rate, Hz")->required();
    jitter->add_option("--bin-width", jit_bin, "Delay histogram bin width, seconds");
    jitter->add_option("--name", jit_name, "Output file prefix");

    // efficiency ------------------------------------------------------------
    auto* eff = app.add_subcommand("efficiency", "Detection efficiency from optical power");
    spd::EfficiencyInput eff_in;
    std::string eff_name = "efficiency";
    eff->add_option("--ndet", eff_in.detected_rate_cps, "Detected count rate, cps")->required();
    eff->add_option("--dcr", eff_in.dcr_cps, "Dark count rate, cps");
    eff->add_option("--power", eff_in.laser_power_w, "Laser power at the detector plane, W")->required();
    eff->add_option("--wavelength", eff_in.wavelength_m, "Wavelength, m");
    eff->add_option("--pulse-rate", eff_in.pulse_rate_hz, "Laser repetition rate, Hz");
    eff->add_option("--name", eff_name, "Output file prefix");

    // breakdown -------------------------------------------------------------
    auto* brk = app.add_subcommand("breakdown", "Breakdown voltage by linear extrapolation");
    std::string brk_in, brk_policy = "auto", brk_name = "breakdown";
    brk->add_option("--in", brk_in, "CSV of bias_v,amplitude points")->required();
    brk->add_option("--policy", brk_policy, "Point selection: auto | all");
    brk->add_option("--name", brk_name, "Output file prefix");

    // blackbody -------------------------------------------------------------
    auto* bb = app.add_subcommand("blackbody", "Blackbody photon rate onto the photosensitive area");
    spd::BlackbodyQuery bb_q;
    double bb_diameter = 500e-6;
    std::string bb_name = "blackbody";
    bb->add_option("--temperature", bb_q.temperature_k, "Cavity temperature, K");
    bb->add_option("--cutoff", bb_q.cutoff_wavelength_m, "Cutoff wavelength, m");
    bb->add_option("--diameter", bb_diameter, "Photosensitive-area diameter, m");
    bb->add_option("--area", bb_q.aperture_area_m2, "Aperture area, m^2 (overrides --diameter)");
    bb->add_option("--name", bb_name, "Output file prefix");

    // keyrate ---------------------------------------------------------------
    auto* key = app.add_subcommand("keyrate", "Dual-downlink key-rate evaluation and loss sweep");
    std::string key_preset, key_scenario, key_sweep, key_name = "keyrate";
    double key_dcr = -1.0;
    key->add_option("--preset", key_preset, "Bundled scenario: geo-dual-downlink | canary-143km");
    key->add_option("--scenario", key_scenario, "Scenario JSON file");
    key->add_option("--dcr", key_dcr, "Override DCR per station, cps");
    key->add_option("--sweep", key_sweep, "Total-loss sweep lo:hi:step in dB");
    key->add_option("--name", key_name, "Output file prefix");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2; // bad flags are input errors
    }

    if (ingest->parsed()) {
        spd::TagStream s = spd::load_tags_file(in_path, parse_format(in_format), tick);
        spd::StreamStats st = spd::stream_stats(s, spans.empty() ? nullptr : &spans);
        if (!out_tags.empty())
            spd::serialize_file(s, out_tags, spd::TagFormat::BinaryTicks);
        json j{{"subcommand", "ingest"},
               {"input", in_path},
               {"tick_seconds", tick},
               {"stats", st},
               {"meta", s.meta}};
        spd::write_json_file(j, out_path(name + "_summary.json"));
        return 0;
    }

    if (simulate->parsed()) {
        spd::DetectorModel model = spd::load_model_file(model_path);
        spd::TagStream s;
        if (pulse_rate > 0.0) {
            spd::PulseTrain pt;
            pt.rate_hz = pulse_rate;
            pt.mean_photons_per_pulse = mu;
            pt.duration_s = duration;
            s = spd::simulate_illuminated(model, pt, seed, tick);
        } else {
            s = spd::simulate_dark(model, duration, seed, tick);
        }
        if (sim_out.empty())
            sim_out = out_path(sim_name + "_tags.bin");
        spd::serialize_file(s, sim_out, spd::TagFormat::BinaryTicks);
        json j{{"subcommand", "simulate"},
               {"model", json(model)},
               {"duration_s", duration},
               {"seed", seed},
               {"tick_seconds", tick},
               {"tags", s.size()},
               {"output", sim_out}};
        spd::write_json_file(j, out_path(sim_name + "_summary.json"));
        return 0;
    }

    if (afterpulse->parsed()) {
        spd::TagStream s = spd::load_tags_file(ap_in, parse_format(ap_format), tick);
        spd::BinGrid grid = spd::make_exp_grid(grid_flags.t0, grid_flags.ratio, grid_flags.nbins);
        spd::RateHistogram h = spd::long_time_histogram(s, grid_flags.window_l, grid);
        spd::AfterpulseSummary sum = spd::summarize_afterpulsing(h, tail_fraction);
        spd::write_histogram_csv(h, out_path(ap_name + "_hist.csv"));
        json j{{"subcommand", "afterpulse"},
               {"input", ap_in},
               {"window_l_s", grid_flags.window_l},
               {"grid", {{"t0_s", grid_flags.t0}, {"ratio", grid_flags.ratio}, {"nbins", grid_flags.nbins}}},
               {"n_starts", h.n_starts},
               {"summary", sum}};
        spd::write_json_file(j, out_path(ap_name + "_summary.json"));
        if (ap_svg) {
            std::vector<double> centers;
            for (std::size_t k = 0; k < h.pair_counts.size(); ++k)
                centers.push_back(h.grid.center(k));
            spd::write_loglog_svg(out_path(ap_name + ".svg"), centers, h.rate_cps,
                                  "delay (s)", "conditional rate (cps)",
                                  "All-pairs delay histogram");
        }
        return 0;
    }

    if (fit_cmd->parsed()) {
        spd::RateHistogram h;
        if (!fit_hist.empty()) {
            // Re-ingest a histogram CSV (bin_start_s,bin_end_s,pair_count,rate_cps).
            std::ifstream f(fit_hist);
            if (!f)
                throw spd::io_error("cannot open " + fit_hist);
            std::string line;
            std::getline(f, line); // header
            double a, b, r;
            char c1, c2, c3;
            std::uint64_t n;
            bool first = true;
            while (std::getline(f, line)) {
                if (line.empty())
                    continue;
                std::istringstream ls(line);
                if (!(ls >> a >> c1 >> b >> c2 >> n >> c3 >> r))
                    throw spd::input_error("malformed histogram CSV line: " + line);
                if (first) {
                    h.grid.edges.push_back(a);
                    first = false;
                }
                h.grid.edges.push_back(b);
                h.pair_counts.push_back(n);
                h.rate_cps.push_back(r);
            }
            h.n_starts = 0; // unknown from CSV; rates are already normalized
        } else if (!fit_in.empty()) {
            spd::TagStream s = spd::load_tags_file(fit_in, parse_format(fit_format), tick);
            spd::BinGrid grid = spd::make_exp_grid(fit_grid.t0, fit_grid.ratio, fit_grid.nbins);
            h = spd::long_time_histogram(s, fit_grid.window_l, grid);
        } else {
            throw spd::input_error("fit: provide --in or --hist");
        }
        spd::FitStart start = spd::select_fit_start(h);
        spd::FitOptions opts;
        opts.max_components = max_components;
        opts.forced_components = forced;
        opts.dead_time_s = fit_dead_time > 0.0
                               ? fit_dead_time
                               : spd::extract_dead_recharge(h).dead_time_s;
        spd::TrapFit fit = spd::fit_trap_decay(h, start.index, opts);
        json j = fit_to_report(fit);
        j["subcommand"] = "fit";
        j["fit_start_strict_rule"] = start.strict_rule;
        spd::write_json_file(j, out_path(fit_name + "_summary.json"));
        return 0;
    }

    if (jitter->parsed()) {
        spd::TagStream s = spd::load_tags_file(jit_in, parse_format(jit_format), tick);
        // Delays relative to the nearest pulse, wrapped to +-period/2.
        const double period = 1.0 / jit_pulse_rate;
        const auto nb = static_cast<std::size_t>(std::ceil(period / jit_bin));
        std::vector<double> counts(nb, 0.0);
        for (std::size_t i = 0; i < s.size(); ++i) {
            double d = std::fmod(s.time_of(i), period);
            if (d >= period / 2.0)
                d -= period;
            auto bin = static_cast<std::size_t>((d + period / 2.0) / jit_bin);
            if (bin < nb)
                counts[bin] += 1.0;
        }
        spd::FwhmResult r = spd::fwhm(counts, jit_bin, -period / 2.0);
        json j{{"subcommand", "jitter"},
               {"input", jit_in},
               {"pulse_rate_hz", jit_pulse_rate},
               {"bin_width_s", jit_bin},
               {"fwhm_s", r.fwhm_s},
               {"peak_center_s", r.peak_center_s},
               {"left_s", r.left_s},
               {"right_s", r.right_s},
               {"multimodal", r.multimodal},
               {"degenerate", r.degenerate}};
        spd::write_json_file(j, out_path(jit_name + "_summary.json"));
        return 0;
    }

    if (eff->parsed()) {
        spd::EfficiencyResult r = spd::detection_efficiency(eff_in);
        json j{{"subcommand", "efficiency"},
               {"eta", r.eta},
               {"eta_systematic_band", 0.10}, // calibration uncertainty, fractional
               {"photons_per_second", r.photons_per_second},
               {"photons_per_pulse", r.photons_per_pulse},
               {"clamped", r.clamped},
               {"wavelength_warning", r.wavelength_warning}};
        spd::write_json_file(j, out_path(eff_name + "_summary.json"));
        return 0;
    }

    if (brk->parsed()) {
        std::ifstream f(brk_in);
        if (!f)
            throw spd::io_error("cannot open " + brk_in);
        std::vector<std::pair<double, double>> pts;
        std::string line;
        while (std::getline(f, line)) {
            if (line.empty() || line[0] == '#' || std::isalpha(static_cast<unsigned char>(line[0])))
                continue;
            double x, y;
            char c;
            std::istringstream ls(line);
            if (!(ls >> x >> c >> y))
                throw spd::input_error("malformed breakdown CSV line: " + line);
            pts.emplace_back(x, y);
        }
        spd::RegionPolicy policy =
            brk_policy == "all" ? spd::RegionPolicy::All : spd::RegionPolicy::Auto;
        spd::BreakdownResult r = spd::breakdown_voltage(pts, policy);
        json j{{"subcommand", "breakdown"},
               {"breakdown_v", r.breakdown_v},
               {"slope", r.diagnostics.slope},
               {"intercept", r.diagnostics.intercept},
               {"included_points", r.diagnostics.included},
               {"residuals", r.diagnostics.residuals}};
        spd::write_json_file(j, out_path(brk_name + "_summary.json"));
        return 0;
    }

    if (bb->parsed()) {
        if (!(bb_q.aperture_area_m2 > 0.0))
            bb_q.aperture_area_m2 = 3.14159265358979323846 * bb_diameter * bb_diameter / 4.0;
        double rate = spd::blackbody_photon_rate(bb_q);
        json j{{"subcommand", "blackbody"},
               {"temperature_k", bb_q.temperature_k},
               {"cutoff_wavelength_m", bb_q.cutoff_wavelength_m},
               {"aperture_area_m2", bb_q.aperture_area_m2},
               {"photons_per_second", rate},
               {"photons_per_hour", rate * 3600.0}};
        spd::write_json_file(j, out_path(bb_name + "_summary.json"));
        return 0;
    }

    if (key->parsed()) {
        spd::LinkScenario s;
        if (!key_scenario.empty())
            s = spd::load_scenario_file(key_scenario);
        else if (!key_preset.empty())
            s = spd::link_preset(key_preset);
        else
            throw spd::input_error("keyrate: provide --preset or --scenario");
        if (key_dcr >= 0.0)
            s.dcr_cps_per_station = key_dcr;

        json j{{"subcommand", "keyrate"}, {"scenario", json(s)}};
        if (!key_sweep.empty()) {
            double lo, hi, step;
            char c1, c2;
            std::istringstream ss(key_sweep);
            if (!(ss >> lo >> c1 >> hi >> c2 >> step) || c1 != ':' || c2 != ':' ||
                !(step > 0.0))
                throw spd::input_error("keyrate: --sweep expects lo:hi:step");
            auto steps = static_cast<std::size_t>(std::floor((hi - lo) / step)) + 1;
            spd::LossSweep sw = spd::sweep_loss(s, lo, hi, steps);
            std::ofstream csv(out_path(key_name + "_curve.csv"));
            if (!csv)
                throw spd::io_error("cannot write sweep curve CSV");
            csv.precision(12);
            csv << "loss_db,key_rate_bps,snr,qber\n";
            for (const spd::SweepPoint& p : sw.curve)
                csv << p.total_loss_db << "," << p.key_rate_bps << "," << p.snr << ","
                    << p.qber << "\n";
            j["cutoff_db"] = sw.cutoff_db;
            j["cutoff_open"] = sw.cutoff_open;
            j["no_key"] = sw.no_key;
        } else {
            j["evaluation"] = spd::evaluate_scenario(s);
        }
        spd::write_json_file(j, out_path(key_name + "_summary.json"));
        return 0;
    }

    return 0;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const spd::io_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const spd::numeric_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const spd::input_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
