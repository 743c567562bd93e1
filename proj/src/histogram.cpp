#include "spd/histogram.hpp"

#include "spd/errors.hpp"
#include "spd/stats.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

namespace spd {

BinGrid make_exp_grid(double t0, double ratio, std::size_t nbins) {
    if (!(t0 > 0.0))
        throw input_error("make_exp_grid: t0 must be positive");
    if (!(ratio > 1.0))
        throw input_error("make_exp_grid: ratio must exceed 1");
    if (nbins < 1)
        throw input_error("make_exp_grid: nbins must be at least 1");
    BinGrid g;
    g.kind = GridKind::Geometric;
    g.t0 = t0;
    g.ratio = ratio;
    g.edges.resize(nbins + 1);
    g.edges[0] = 0.0;
    double e = t0;
    for (std::size_t k = 1; k <= nbins; ++k) {
        g.edges[k] = e;
        e *= ratio;
    }
    return g;
}

BinGrid make_uniform_grid(double bin_width, std::size_t nbins) {
    if (!(bin_width > 0.0))
        throw input_error("make_uniform_grid: bin_width must be positive");
    if (nbins < 1)
        throw input_error("make_uniform_grid: nbins must be at least 1");
    BinGrid g;
    g.kind = GridKind::Uniform;
    g.edges.resize(nbins + 1);
    for (std::size_t k = 0; k <= nbins; ++k)
        g.edges[k] = static_cast<double>(k) * bin_width;
    return g;
}

namespace {

void check_grid(const BinGrid& grid) {
    if (grid.nbins() < 1)
        throw input_error("histogram grid must have at least one bin");
    for (std::size_t k = 0; k + 1 < grid.edges.size(); ++k)
        if (!(grid.edges[k] < grid.edges[k + 1]))
            throw input_error("grid edges must be strictly increasing");
}

void normalize(RateHistogram& h) {
    h.rate_cps.assign(h.pair_counts.size(), 0.0);
    if (h.n_starts == 0)
        return;
    for (std::size_t k = 0; k < h.pair_counts.size(); ++k)
        h.rate_cps[k] = static_cast<double>(h.pair_counts[k]) /
                        (static_cast<double>(h.n_starts) * h.grid.width(k));
}

} // namespace

RateHistogram adjacent_interval_histogram(const TagStream& stream, const BinGrid& grid) {
    check_grid(grid);
    RateHistogram h;
    h.grid = grid;
    h.pair_counts.assign(grid.nbins(), 0);
    const double last_edge = grid.last_edge();
    for (const Session& ses : stream.sessions) {
        for (std::size_t i = ses.begin + 1; i < ses.end; ++i) {
            ++h.n_starts;
            double dt = static_cast<double>(stream.ticks[i] - stream.ticks[i - 1]) *
                        stream.tick_seconds;
            if (dt <= 0.0 || dt >= last_edge)
                continue;
            std::size_t bin = static_cast<std::size_t>(
                std::upper_bound(grid.edges.begin(), grid.edges.end(), dt) -
                grid.edges.begin() - 1);
            ++h.pair_counts[bin];
        }
    }
    h.degenerate = h.n_starts == 0;
    normalize(h);
    return h;
}

RateHistogram long_time_histogram(const TagStream& stream, double window_l,
                                  const BinGrid& grid, unsigned threads) {
    check_grid(grid);
    if (!(window_l > 0.0))
        throw input_error("long_time_histogram: window must be positive");
    const std::size_t nbins = grid.nbins();
    const double cap = std::min(window_l, grid.last_edge());

    // Per-session last-tag times gate which starts have full window coverage.
    std::vector<double> session_end_time(stream.sessions.size(), 0.0);
    for (std::size_t s = 0; s < stream.sessions.size(); ++s) {
        const Session& ses = stream.sessions[s];
        if (ses.count() > 0)
            session_end_time[s] = stream.time_of(ses.end - 1);
    }

    auto scan = [&](std::size_t first_session, std::size_t last_session,
                    RateHistogram& out) {
        for (std::size_t s = first_session; s < last_session; ++s) {
            const Session& ses = stream.sessions[s];
            for (std::size_t i = ses.begin; i < ses.end; ++i) {
                double t0 = stream.time_of(i);
                if (session_end_time[s] - t0 < window_l)
                    break; // later starts in this session have even less span
                ++out.n_starts;
                std::size_t bin = 0;
                for (std::size_t j = i + 1; j < ses.end; ++j) {
                    double dt = static_cast<double>(stream.ticks[j] - stream.ticks[i]) *
                                stream.tick_seconds;
                    if (dt >= cap)
                        break; // delays only grow from here
                    if (dt <= 0.0)
                        continue;
                    while (dt >= grid.edges[bin + 1])
                        ++bin;
                    ++out.pair_counts[bin];
                }
            }
        }
    };

    if (threads == 0)
        threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min<unsigned>(threads, stream.sessions.size());

    RateHistogram h;
    h.grid = grid;
    h.window_l = window_l;
    h.pair_counts.assign(nbins, 0);

    if (threads <= 1) {
        scan(0, stream.sessions.size(), h);
    } else {
        std::vector<RateHistogram> parts(threads);
        for (auto& p : parts) {
            p.grid = grid;
            p.pair_counts.assign(nbins, 0);
        }
        std::vector<std::thread> pool;
        std::size_t per = (stream.sessions.size() + threads - 1) / threads;
        for (unsigned t = 0; t < threads; ++t) {
            std::size_t lo = t * per;
            std::size_t hi = std::min(stream.sessions.size(), lo + per);
            pool.emplace_back([&, lo, hi, t] { scan(lo, hi, parts[t]); });
        }
        for (auto& th : pool)
            th.join();
        for (auto& p : parts) {
            h.n_starts += p.n_starts;
            for (std::size_t k = 0; k < nbins; ++k)
                h.pair_counts[k] += p.pair_counts[k];
        }
    }

    if (h.n_starts == 0)
        throw input_error("long_time_histogram: no start has full window coverage; "
                          "shorten the window");
    normalize(h);
    return h;
}

double estimate_dcr_tail(const RateHistogram& hist, double tail_fraction) {
    if (hist.pair_counts.empty())
        throw input_error("estimate_dcr_tail: empty histogram");
    if (!(tail_fraction > 0.0) || tail_fraction > 1.0)
        throw input_error("estimate_dcr_tail: tail_fraction must be in (0, 1]");
    const double cut = hist.grid.last_edge() * (1.0 - tail_fraction);
    double wsum = 0.0, wrate = 0.0;
    bool any = false;
    for (std::size_t k = 0; k < hist.pair_counts.size(); ++k) {
        if (hist.grid.edges[k] < cut)
            continue;
        any = true;
        double w = static_cast<double>(hist.pair_counts[k]);
        wsum += w;
        wrate += w * hist.rate_cps[k];
    }
    if (!any)
        throw input_error("estimate_dcr_tail: no bins in the requested tail");
    return wsum > 0.0 ? wrate / wsum : 0.0;
}

DeadRecharge extract_dead_recharge(const RateHistogram& hist) {
    if (hist.pair_counts.empty())
        throw input_error("extract_dead_recharge: empty histogram");
    DeadRecharge r;
    std::size_t first_nonzero = hist.pair_counts.size();
    for (std::size_t k = 0; k < hist.pair_counts.size(); ++k) {
        if (hist.pair_counts[k] > 0) {
            first_nonzero = k;
            break;
        }
    }
    if (first_nonzero == hist.pair_counts.size()) {
        r.no_dead_region = true;
        return r;
    }
    if (first_nonzero == 0) {
        r.no_dead_region = true;
    } else {
        r.dead_time_s = hist.grid.edges[first_nonzero];
    }
    std::size_t peak = static_cast<std::size_t>(
        std::max_element(hist.rate_cps.begin(), hist.rate_cps.end()) -
        hist.rate_cps.begin());
    r.recharge_time_s = std::max(0.0, hist.grid.center(peak) - r.dead_time_s);
    return r;
}

double afterpulse_probability(const RateHistogram& hist, double dcr) {
    if (!(dcr >= 0.0))
        throw input_error("afterpulse_probability: dcr must be nonnegative");
    const std::size_t n = hist.pair_counts.size();
    std::size_t first = n;
    for (std::size_t k = 0; k < n; ++k) {
        if (hist.pair_counts[k] > 0) {
            first = k;
            break;
        }
    }
    if (first == n)
        return 0.0;
    std::size_t peak = first;
    for (std::size_t k = first; k < n; ++k)
        if (hist.rate_cps[k] > hist.rate_cps[peak])
            peak = k;
    // The region above the DCR level ends once the rate has settled at the
    // dark level: four consecutive bins at or below dcr.
    std::size_t stop = n;
    std::size_t run = 0;
    for (std::size_t k = peak; k < n; ++k) {
        if (hist.rate_cps[k] <= dcr) {
            if (++run == 4) {
                stop = k + 1 - run;
                break;
            }
        } else {
            run = 0;
        }
    }
    double area = 0.0;
    for (std::size_t k = first; k < stop; ++k)
        area += std::max(hist.rate_cps[k] - dcr, 0.0) * hist.grid.width(k);
    return std::max(area, 0.0);
}

CounterDcr dcr_from_counter(const std::vector<std::uint64_t>& counts_per_gate,
                            double gate_seconds) {
    if (counts_per_gate.empty())
        throw input_error("dcr_from_counter: no gate readings");
    if (!(gate_seconds > 0.0))
        throw input_error("dcr_from_counter: gate duration must be positive");
    std::uint64_t total = 0;
    for (std::uint64_t c : counts_per_gate)
        total += c;
    const double live = gate_seconds * static_cast<double>(counts_per_gate.size());
    auto [lo, hi] = poisson_interval_95(total);
    return {static_cast<double>(total) / live, lo / live, hi / live};
}

AfterpulseSummary summarize_afterpulsing(const RateHistogram& hist, double tail_fraction) {
    AfterpulseSummary s;
    s.dcr_cps = estimate_dcr_tail(hist, tail_fraction);
    DeadRecharge dr = extract_dead_recharge(hist);
    s.dead_time_s = dr.dead_time_s;
    s.recharge_time_s = dr.recharge_time_s;
    s.afterpulse_probability = afterpulse_probability(hist, s.dcr_cps);
    return s;
}

} // namespace spd
