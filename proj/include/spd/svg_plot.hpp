#ifndef SPD_SVG_PLOT_HPP
#define SPD_SVG_PLOT_HPP

#include <string>
#include <vector>

namespace spd {

// Minimal log-x line plot for pair-delay histograms. Nonpositive x or y
// values are skipped (both axes are logarithmic).
void write_loglog_svg(const std::string& path, const std::vector<double>& x,
                      const std::vector<double>& y, const std::string& x_label,
                      const std::string& y_label, const std::string& title);

} // namespace spd

#endif
