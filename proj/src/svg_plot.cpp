#include "spd/svg_plot.hpp"

#include "spd/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace spd {

void write_loglog_svg(const std::string& path, const std::vector<double>& x,
                      const std::vector<double>& y, const std::string& x_label,
                      const std::string& y_label, const std::string& title) {
    std::vector<std::pair<double, double>> pts;
    for (std::size_t i = 0; i < std::min(x.size(), y.size()); ++i)
        if (x[i] > 0.0 && y[i] > 0.0)
            pts.emplace_back(std::log10(x[i]), std::log10(y[i]));
    if (pts.empty())
        throw input_error("svg plot: no positive data points");

    double xmin = pts[0].first, xmax = pts[0].first;
    double ymin = pts[0].second, ymax = pts[0].second;
    for (auto& [px, py] : pts) {
        xmin = std::min(xmin, px);
        xmax = std::max(xmax, px);
        ymin = std::min(ymin, py);
        ymax = std::max(ymax, py);
    }
    if (xmax - xmin < 1e-12) xmax = xmin + 1.0;
    if (ymax - ymin < 1e-12) ymax = ymin + 1.0;

    const double w = 720, h = 480, ml = 70, mr = 20, mt = 40, mb = 55;
    auto sx = [&](double v) { return ml + (v - xmin) / (xmax - xmin) * (w - ml - mr); };
    auto sy = [&](double v) { return h - mb - (v - ymin) / (ymax - ymin) * (h - mt - mb); };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\""
        << h << "\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg << "<text x=\"" << w / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">"
        << title << "</text>\n";

    // Decade grid lines and tick labels.
    for (int d = static_cast<int>(std::ceil(xmin)); d <= static_cast<int>(std::floor(xmax)); ++d) {
        double px = sx(d);
        svg << "<line x1=\"" << px << "\" y1=\"" << mt << "\" x2=\"" << px << "\" y2=\""
            << h - mb << "\" stroke=\"#ddd\"/>\n";
        svg << "<text x=\"" << px << "\" y=\"" << h - mb + 18
            << "\" text-anchor=\"middle\" font-size=\"11\">1e" << d << "</text>\n";
    }
    for (int d = static_cast<int>(std::ceil(ymin)); d <= static_cast<int>(std::floor(ymax)); ++d) {
        double py = sy(d);
        svg << "<line x1=\"" << ml << "\" y1=\"" << py << "\" x2=\"" << w - mr << "\" y2=\""
            << py << "\" stroke=\"#ddd\"/>\n";
        svg << "<text x=\"" << ml - 6 << "\" y=\"" << py + 4
            << "\" text-anchor=\"end\" font-size=\"11\">1e" << d << "</text>\n";
    }
    svg << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << w - ml - mr
        << "\" height=\"" << h - mt - mb << "\" fill=\"none\" stroke=\"black\"/>\n";

    svg << "<polyline fill=\"none\" stroke=\"#1661a8\" stroke-width=\"1.5\" points=\"";
    for (auto& [px, py] : pts)
        svg << sx(px) << "," << sy(py) << " ";
    svg << "\"/>\n";

    svg << "<text x=\"" << w / 2 << "\" y=\"" << h - 12
        << "\" text-anchor=\"middle\" font-size=\"13\">" << x_label << "</text>\n";
    svg << "<text x=\"16\" y=\"" << h / 2
        << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 16 " << h / 2
        << ")\">" << y_label << "</text>\n";
    svg << "</svg>\n";

    std::ofstream f(path);
    if (!f)
        throw io_error("cannot open " + path + " for writing");
    f << svg.str();
    if (!f)
        throw io_error("write failure on " + path);
}

} // namespace spd
