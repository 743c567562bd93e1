#ifndef SPD_DECAY_FIT_HPP
#define SPD_DECAY_FIT_HPP

#include "spd/histogram.hpp"

#include <cstddef>
#include <utility>
#include <vector>

namespace spd {

struct TrapComponent {
    double amplitude_cps = 0.0;
    double tau_s = 0.0;
    bool below_dead_time = false; // lifetime shorter than the measured dead time
    bool merged = false;          // absorbed a near-duplicate lifetime
};

// Fit of dark level plus up to four exponential trap components to the
// decaying slope of a pair-delay histogram. Components are sorted by
// ascending lifetime.
struct TrapFit {
    double dark_cps = 0.0;
    std::vector<TrapComponent> components;
    std::size_t fit_start_bin = 0;
    double residual_norm = 0.0; // weighted RMS over the fitted bins
    bool converged = false;
};

struct FitStart {
    std::size_t index = 0;
    bool strict_rule = true; // false when the monotone-run rule had no match
};

// First bin at or after the global peak followed by four more bins with
// strictly decreasing rates; falls back to the peak itself.
FitStart select_fit_start(const RateHistogram& hist);

struct FitOptions {
    int max_components = 4;
    int forced_components = -1; // >= 0 pins the model order
    double dead_time_s = 0.0;   // used only to flag untrustworthy lifetimes
    int max_iterations = 300;
};

TrapFit fit_trap_decay(const RateHistogram& hist, std::size_t start,
                       const FitOptions& opts = {});

// Model curve value at time t.
double trap_model(const TrapFit& fit, double t);

struct FwhmResult {
    double fwhm_s = 0.0;
    double peak_center_s = 0.0;
    double left_s = 0.0;
    double right_s = 0.0;
    bool multimodal = false;
    bool degenerate = false;
};

// FWHM of a uniform-bin delay histogram with linearly interpolated
// half-maximum crossings; outermost crossings are used when the half level
// is crossed more than twice.
FwhmResult fwhm(const std::vector<double>& counts, double bin_width,
                double first_edge = 0.0);

struct LinearExtrapolation {
    double slope = 0.0;
    double intercept = 0.0;
    double x_at_zero = 0.0;
    std::vector<std::size_t> included; // indices into the input points
    std::vector<double> residuals;     // per included point
    double rms = 0.0;
};

enum class RegionPolicy {
    All,
    Auto, // iteratively drop the lowest-x point while it improves RMS > 20%
};

LinearExtrapolation linear_extrapolate_zero(
    const std::vector<std::pair<double, double>>& points,
    RegionPolicy policy = RegionPolicy::Auto);

} // namespace spd

#endif
