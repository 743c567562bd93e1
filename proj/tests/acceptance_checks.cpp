// Release gate: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
// Everything here runs from fixed seeds so reruns are bit-reproducible.

#include "spd/decay_fit.hpp"
#include "spd/detector_sim.hpp"
#include "spd/histogram.hpp"
#include "spd/json_io.hpp"
#include "spd/qkd_link.hpp"
#include "spd/radiometry.hpp"
#include "spd/stats.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using nlohmann::json;
using namespace spd;

namespace {

int g_failures = 0;

void report(int number, const std::string& name, bool ok, const std::string& detail) {
    std::cout << (ok ? "PASS" : "FAIL") << "  " << number << ". " << name;
    if (!detail.empty())
        std::cout << "  [" << detail << "]";
    std::cout << "\n";
    if (!ok)
        ++g_failures;
}

std::string fmt(double v) {
    std::ostringstream ss;
    ss.precision(4);
    ss << v;
    return ss.str();
}

// Two-sided 4-sigma equivalent threshold on an exact Poisson tail test.
const double kFourSigmaP = 2.0 * (1.0 - normal_cdf(4.0));

bool bin_within_4sigma(std::uint64_t observed, double expected) {
    return poisson_two_sided_p(observed, expected) >= kFourSigmaP;
}

// ---------------------------------------------------------------------------
// 1. Exact agreement with a brute-force pair enumeration.

RateHistogram brute_force_pairs(const TagStream& s, double window_l, const BinGrid& grid) {
    RateHistogram h;
    h.grid = grid;
    h.pair_counts.assign(grid.nbins(), 0);
    const double cap = std::min(window_l, grid.last_edge());
    for (const Session& ses : s.sessions) {
        if (ses.count() == 0)
            continue;
        double end_time = s.time_of(ses.end - 1);
        for (std::size_t i = ses.begin; i < ses.end; ++i) {
            if (end_time - s.time_of(i) < window_l)
                continue;
            ++h.n_starts;
            for (std::size_t j = i + 1; j < ses.end; ++j) {
                double dt = static_cast<double>(s.ticks[j] - s.ticks[i]) * s.tick_seconds;
                if (dt >= cap)
                    break; // ticks are nondecreasing, later delays only grow
                if (dt <= 0.0)
                    continue;
                auto it = std::upper_bound(grid.edges.begin(), grid.edges.end(), dt);
                h.pair_counts[static_cast<std::size_t>(it - grid.edges.begin()) - 1] += 1;
            }
        }
    }
    return h;
}

void criterion_1() {
    auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(1);
    bool ok = true;
    for (int trial = 0; trial < 100 && ok; ++trial) {
        TagStream s;
        s.tick_seconds = 1e-3;
        std::size_t n = 100 + static_cast<std::size_t>(rng() % 9900);
        std::size_t cut = (trial % 3 == 0) ? n / 3 : n; // some multi-session streams
        std::uint64_t t = 0;
        std::geometric_distribution<std::uint64_t> gap(0.02);
        for (std::size_t i = 0; i < n; ++i) {
            if (i == cut)
                t = 0;
            t += gap(rng);
            s.ticks.push_back(t);
        }
        if (cut < n)
            s.sessions = {{0, cut}, {cut, n}};
        else
            s.sessions = {{0, n}};
        BinGrid grid = (trial % 2 == 0) ? make_exp_grid(1e-3, 1.35, 30)
                                        : make_uniform_grid(0.05, 80);
        double window = 1.0 + static_cast<double>(trial % 5);
        RateHistogram fast = long_time_histogram(s, window, grid);
        RateHistogram slow = brute_force_pairs(s, window, grid);
        ok = fast.pair_counts == slow.pair_counts && fast.n_starts == slow.n_starts;
    }
    auto dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    report(1, "all-pairs histogram equals brute-force enumeration", ok && dt < 10.0,
           "100 random streams, " + fmt(dt) + " s");
}

// ---------------------------------------------------------------------------
// 2. Flat conditional intensity for an afterpulse-free Poisson stream.

json g_null_report;

json poisson_null_pipeline() {
    DetectorModel m;
    m.thermal_dcr_cps = 1000.0;
    TagStream s = simulate_dark(m, 1000.0, 20220101); // ~1e6 events
    BinGrid grid = make_exp_grid(78.125e-12, 1.2, 128);
    RateHistogram h = long_time_histogram(s, 10.0, grid);
    AfterpulseSummary sum = summarize_afterpulsing(h);
    json j;
    j["events"] = s.size();
    j["histogram"] = h;
    j["summary"] = sum;
    return j;
}

void criterion_2() {
    g_null_report = poisson_null_pipeline();
    RateHistogram h;
    h.grid = make_exp_grid(78.125e-12, 1.2, 128);
    h.pair_counts = g_null_report["histogram"]["pair_counts"].get<std::vector<std::uint64_t>>();
    h.n_starts = g_null_report["histogram"]["n_starts"].get<std::uint64_t>();
    // Test flatness against the realized rate: the nominal 1000 cps differs
    // from the realization by ~0.1%, which is many Poisson sigma in the
    // widest bins and would flag a perfectly flat histogram.
    double realized =
        g_null_report["events"].get<double>() / 1000.0;
    std::size_t bad_bins = 0;
    for (std::size_t k = 0; k < h.grid.nbins(); ++k) {
        double expected = realized * h.grid.width(k) * static_cast<double>(h.n_starts);
        if (!bin_within_4sigma(h.pair_counts[k], expected))
            ++bad_bins;
    }
    double ap = g_null_report["summary"]["afterpulse_probability"].get<double>();
    bool ok = bad_bins == 0 && ap <= 5e-4;
    report(2, "Poisson null: flat rate and negligible afterpulse probability", ok,
           std::to_string(bad_bins) + " bins out of 4-sigma, ap=" + fmt(ap));
}

// ---------------------------------------------------------------------------
// 3. Round trip through the simulator and the fitting pipeline for every
//    bundled operating point.

struct RowResult {
    TagStream stream;
    RateHistogram hist;
    TrapFit fit;
    json report;
};

const std::map<std::string, std::uint64_t> kRowSeeds = {
    {"0C", 11}, {"-20C", 2}, {"-40C", 416}, {"-60C", 246}, {"-80C", 23}, {"-100C", 66}};

RowResult run_row(const std::string& name, const DetectorModel& m, bool auto_order) {
    RowResult r;
    double effective = m.thermal_dcr_cps / (1.0 + m.thermal_dcr_cps * m.dead_time_s);
    double duration = 1.0e6 / effective;
    r.stream = simulate_dark(m, duration, kRowSeeds.at(name));
    BinGrid grid = make_exp_grid(78.125e-12, 1.2, 128);
    r.hist = long_time_histogram(r.stream, 10.0, grid);
    FitStart start = select_fit_start(r.hist);
    FitOptions opts;
    opts.dead_time_s = extract_dead_recharge(r.hist).dead_time_s;
    if (!auto_order)
        opts.forced_components = static_cast<int>(m.traps.size());
    r.fit = fit_trap_decay(r.hist, start.index, opts);
    r.report["row"] = name;
    r.report["events"] = r.stream.size();
    r.report["histogram"] = r.hist;
    r.report["fit"] = r.fit;
    r.report["summary"] = summarize_afterpulsing(r.hist);
    return r;
}

std::map<std::string, RowResult> g_rows;

void criterion_3() {
    bool all_ok = true;
    std::string detail;
    for (const auto& [name, model] : reference_models()) {
        bool auto_order = name == "0C" || name == "-20C";
        auto t0 = std::chrono::steady_clock::now();
        RowResult r = run_row(name, model, auto_order);
        auto dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        bool ok = dt < 300.0;
        if (auto_order && r.fit.components.size() != model.traps.size())
            ok = false;
        double dark_err = std::fabs(r.fit.dark_cps - model.thermal_dcr_cps) /
                          model.thermal_dcr_cps;
        if (dark_err > 0.05)
            ok = false;
        if (r.fit.components.size() == model.traps.size()) {
            // Both lists are sorted by ascending lifetime.
            std::vector<Trap> want = model.traps;
            std::sort(want.begin(), want.end(),
                      [](const Trap& a, const Trap& b) { return a.tau_s < b.tau_s; });
            for (std::size_t i = 0; i < want.size(); ++i) {
                double tau_err =
                    std::fabs(r.fit.components[i].tau_s - want[i].tau_s) / want[i].tau_s;
                double amp_err = std::fabs(r.fit.components[i].amplitude_cps -
                                           want[i].amplitude_cps) /
                                 want[i].amplitude_cps;
                if (tau_err > 0.30 || amp_err > 0.30)
                    ok = false;
            }
        } else if (!model.traps.empty()) {
            ok = false;
        }
        if (!ok) {
            all_ok = false;
            detail += name + " ";
        }
        g_rows.emplace(name, std::move(r));
    }
    report(3, "simulate-analyze round trip recovers every reference operating point",
           all_ok, all_ok ? "6 rows within tolerance" : "failed rows: " + detail);
}

// ---------------------------------------------------------------------------
// 4. Measured afterpulse probability at the coldest operating point.

void criterion_4() {
    const RowResult& r = g_rows.at("-100C");
    double ap = r.report["summary"]["afterpulse_probability"].get<double>();
    DetectorModel m;
    for (const auto& [name, model] : reference_models())
        if (name == "-100C")
            m = model;
    double analytic = expected_afterpulse_probability(m);
    bool ok = ap >= 0.0020 && ap <= 0.0045 && std::fabs(analytic - 2.78e-3) < 0.05e-3;
    report(4, "cold-point afterpulse probability is consistent with the analytic value",
           ok, "measured=" + fmt(ap) + ", analytic=" + fmt(analytic));
}

// ---------------------------------------------------------------------------
// 5. Uniform adjacent-interval binning cannot cover peak and tail at once;
//    the all-pairs histogram on a geometric grid covers both.

void criterion_5() {
    const RowResult& r = g_rows.at("-100C");
    BinGrid uni = make_uniform_grid(228e-9, 5000); // spans ~1.14 ms
    RateHistogram adj = adjacent_interval_histogram(r.stream, uni);
    double total = 0.0, beyond_1ms = 0.0;
    for (std::size_t k = 0; k < uni.nbins(); ++k) {
        total += static_cast<double>(adj.pair_counts[k]);
        if (uni.edges[k] >= 1e-3)
            beyond_1ms += static_cast<double>(adj.pair_counts[k]);
    }
    double tail_fraction = total > 0.0 ? beyond_1ms / total : 0.0;
    bool uniform_fails = tail_fraction < 0.05;

    const RateHistogram& h = r.hist;
    double dcr = estimate_dcr_tail(h);
    double peak = *std::max_element(h.rate_cps.begin(), h.rate_cps.end());
    bool peak_resolved = peak > 100.0 * dcr;
    bool tail_flat = true;
    double cut = h.grid.last_edge() * 0.8;
    for (std::size_t k = 0; k < h.grid.nbins(); ++k) {
        if (h.grid.edges[k] < cut)
            continue;
        double expected = dcr * h.grid.width(k) * static_cast<double>(h.n_starts);
        if (!bin_within_4sigma(h.pair_counts[k], expected))
            tail_flat = false;
    }
    bool ok = uniform_fails && peak_resolved && tail_flat;
    report(5, "uniform binning truncates the decay while the all-pairs method resolves it",
           ok, "uniform tail mass=" + fmt(tail_fraction) +
                   ", peak/tail=" + fmt(peak / dcr) +
                   (tail_flat ? ", tail flat" : ", tail NOT flat"));
}

// ---------------------------------------------------------------------------
// 6. Thermal-photon floor: quadrature against an independent series oracle.

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

void criterion_6() {
    BlackbodyQuery q;
    q.temperature_k = 293.0;
    q.cutoff_wavelength_m = 900e-9;
    const double radius = 250e-6;
    q.aperture_area_m2 = 3.14159265358979323846 * radius * radius;
    double quad = blackbody_photon_rate(q);
    double series = blackbody_series(q.temperature_k, q.cutoff_wavelength_m,
                                     q.aperture_area_m2);
    double rel = std::fabs(quad - series) / series;
    double per_hour = quad * 3600.0;
    bool ok = rel < 1e-4 && per_hour < 1.0 && per_hour > 0.03 && per_hour < 0.15;
    report(6, "blackbody photon floor matches the series oracle and stays under 1/hour",
           ok, fmt(per_hour) + " photons/hour, oracle gap " + fmt(rel));
}

// ---------------------------------------------------------------------------
// 7. Breakdown-voltage reproducibility across noisy synthetic datasets.

void criterion_7() {
    std::mt19937_64 rng(4242);
    std::normal_distribution<double> noise(0.0, 0.01);
    double worst = 0.0;
    for (int seed = 0; seed < 100; ++seed) {
        std::vector<std::pair<double, double>> pts;
        for (double v = 205.0; v < 215.0; v += 1.0)
            pts.emplace_back(v, 0.2 * (v - 200.0) * (1.0 + noise(rng)));
        BreakdownResult r = breakdown_voltage(pts, RegionPolicy::Auto);
        worst = std::max(worst, std::fabs(r.breakdown_v - 200.0));
    }
    report(7, "breakdown extrapolation is reproducible to half a volt", worst <= 0.5,
           "worst deviation " + fmt(worst) + " V over 100 datasets");
}

// ---------------------------------------------------------------------------
// 8. FWHM estimator on a million-sample Gaussian delay histogram.

void criterion_8() {
    std::mt19937_64 rng(8);
    std::normal_distribution<double> gauss(0.0, 361e-12);
    const double w = 1e-11;
    const double first = -2e-9;
    std::vector<double> counts(400, 0.0);
    for (int i = 0; i < 1000000; ++i) {
        double t = gauss(rng);
        auto b = static_cast<long>((t - first) / w);
        if (b >= 0 && b < static_cast<long>(counts.size()))
            counts[static_cast<std::size_t>(b)] += 1.0;
    }
    FwhmResult r = fwhm(counts, w, first);
    double rel = std::fabs(r.fwhm_s - 850e-12) / 850e-12;
    report(8, "timing-jitter FWHM reproduces the Gaussian reference width", rel <= 0.02,
           fmt(r.fwhm_s * 1e12) + " ps vs 850 ps");
}

// ---------------------------------------------------------------------------
// 9. Dual-downlink loss budget: cutoff location and monotonicity.

void criterion_9() {
    LinkScenario s; // defaults: 50 Mcps pairs, 1 ns window, eta 0.5
    s.dcr_cps_per_station = 1.0;
    LossSweep sw = sweep_loss(s, 120.0, 160.0, 81);
    bool cutoff_ok = !sw.no_key && !sw.cutoff_open && sw.cutoff_db >= 144.0 &&
                     sw.cutoff_db <= 152.0;

    bool monotone_curve = true;
    double prev = std::numeric_limits<double>::infinity();
    for (const SweepPoint& p : sw.curve) {
        if (p.key_rate_bps > prev)
            monotone_curve = false;
        prev = p.key_rate_bps;
    }

    bool dcr_monotone = true;
    double prev_cut = std::numeric_limits<double>::infinity();
    for (double dcr : {0.1, 0.3, 1.0, 10.0, 100.0}) {
        LinkScenario v = s;
        v.dcr_cps_per_station = dcr;
        LossSweep vs = sweep_loss(v, 100.0, 180.0, 161);
        if (!(vs.cutoff_db < prev_cut))
            dcr_monotone = false;
        prev_cut = vs.cutoff_db;
    }
    bool ok = cutoff_ok && monotone_curve && dcr_monotone;
    report(9, "key-rate sweep places the loss cutoff correctly and behaves monotonically",
           ok, "cutoff " + fmt(sw.cutoff_db) + " dB");
}

// ---------------------------------------------------------------------------
// 10. Bit-reproducibility of the simulation-analysis pipelines.

void criterion_10() {
    bool ok = true;
    json null_again = poisson_null_pipeline();
    if (null_again.dump() != g_null_report.dump())
        ok = false;
    for (const std::string& name : {std::string("-20C"), std::string("-100C")}) {
        DetectorModel m;
        for (const auto& [n, model] : reference_models())
            if (n == name)
                m = model;
        RowResult again = run_row(name, m, name == "-20C");
        if (again.report.dump() != g_rows.at(name).report.dump())
            ok = false;
    }
    report(10, "fixed-seed pipelines emit byte-identical JSON on rerun", ok, "");
}

} // namespace

int main() {
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criterion_7();
    criterion_8();
    criterion_9();
    criterion_10();
    std::cout << (g_failures == 0 ? "ALL CHECKS PASSED" : "FAILURES: ")
              << (g_failures == 0 ? "" : std::to_string(g_failures)) << "\n";
    return g_failures == 0 ? 0 : 1;
}
