#ifndef SPD_HISTOGRAM_HPP
#define SPD_HISTOGRAM_HPP

#include "spd/timetag.hpp"

#include <cstdint>
#include <vector>

namespace spd {

enum class GridKind { Uniform, Geometric };

// Bin edges in seconds. Bins are half-open [edge[k], edge[k+1]); a delay
// exactly on an edge falls in the upper bin. Geometric grids have
// edge[0] = 0, edge[1] = t0 and edge[k+1] = ratio * edge[k] for k >= 1.
struct BinGrid {
    std::vector<double> edges;
    GridKind kind = GridKind::Uniform;
    double t0 = 0.0;
    double ratio = 0.0;

    std::size_t nbins() const { return edges.empty() ? 0 : edges.size() - 1; }
    double width(std::size_t k) const { return edges[k + 1] - edges[k]; }
    double center(std::size_t k) const { return 0.5 * (edges[k] + edges[k + 1]); }
    double last_edge() const { return edges.back(); }
};

BinGrid make_exp_grid(double t0, double ratio, std::size_t nbins);
BinGrid make_uniform_grid(double bin_width, std::size_t nbins);

// Pair-delay histogram normalized to a conditional rate: the expected count
// rate at delay t after a count. For stationary afterpulse-free data the
// rate is flat at the stream rate; the tail of an afterpulsing histogram
// levels off at the thermal dark count rate.
struct RateHistogram {
    BinGrid grid;
    std::vector<std::uint64_t> pair_counts;
    std::uint64_t n_starts = 0;
    std::vector<double> rate_cps; // pair_counts / (n_starts * bin_width)
    double window_l = 0.0;        // 0 for adjacent-interval histograms
    bool degenerate = false;
};

// Delays between consecutive tags within each session.
RateHistogram adjacent_interval_histogram(const TagStream& stream, const BinGrid& grid);

// All-pairs delays: every start tag with at least window_l of session span
// remaining pairs with every later same-session tag at delay <= window_l.
// Zero delays are dropped. threads = 0 picks hardware concurrency; the
// result is identical to the sequential scan for any thread count.
RateHistogram long_time_histogram(const TagStream& stream, double window_l,
                                  const BinGrid& grid, unsigned threads = 0);

// Pair-count-weighted mean rate over bins whose lower edge lies in the
// final tail_fraction of the grid's time span.
double estimate_dcr_tail(const RateHistogram& hist, double tail_fraction = 0.2);

struct DeadRecharge {
    double dead_time_s = 0.0;
    double recharge_time_s = 0.0;
    bool no_dead_region = false; // no leading zero bins found
};

// Dead time is the upper edge of the last leading zero bin; recharge runs
// from the dead-time end to the center of the peak bin.
DeadRecharge extract_dead_recharge(const RateHistogram& hist);

// Area of the histogram above the DCR level, integrated from the end of the
// dead-time region through the decay until the rate settles at the DCR
// (four consecutive bins at or below dcr ends the region).
double afterpulse_probability(const RateHistogram& hist, double dcr);

struct CounterDcr {
    double rate_cps = 0.0;
    double ci_low_cps = 0.0;
    double ci_high_cps = 0.0; // exact Poisson 95% interval on the total
};

CounterDcr dcr_from_counter(const std::vector<std::uint64_t>& counts_per_gate,
                            double gate_seconds);

struct AfterpulseSummary {
    double dcr_cps = 0.0;
    double dead_time_s = 0.0;
    double recharge_time_s = 0.0;
    double afterpulse_probability = 0.0;
};

AfterpulseSummary summarize_afterpulsing(const RateHistogram& hist,
                                         double tail_fraction = 0.2);

} // namespace spd

#endif
