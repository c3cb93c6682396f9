#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "eosim/harness.hpp"

namespace eosim {

namespace {

constexpr double kWidth = 960.0, kHeight = 480.0;
constexpr double kMarginL = 62.0, kMarginR = 14.0, kMarginT = 34.0, kMarginB = 44.0;

std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3f", x);
    return buf;
}

std::string fmt_tick(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4g", x);
    return buf;
}

struct Range {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    void add(double x) {
        lo = std::min(lo, x);
        hi = std::max(hi, x);
    }
    bool ok() const { return lo <= hi; }
};

}  // namespace

void write_svg(const std::string& path, const std::vector<SvgPanel>& panels) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("svg: cannot open '" + path + "' for writing");

    const size_t np = std::max<size_t>(panels.size(), 1);
    const double pw = kWidth / static_cast<double>(np);

    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 960 480\" "
           "font-family=\"monospace\" font-size=\"12\">\n";
    out << "<rect x=\"0\" y=\"0\" width=\"960\" height=\"480\" fill=\"white\"/>\n";

    for (size_t pi = 0; pi < panels.size(); ++pi) {
        const SvgPanel& panel = panels[pi];
        const double x0 = pi * pw + kMarginL, x1 = (pi + 1) * pw - kMarginR;
        const double y0 = kMarginT, y1 = kHeight - kMarginB;

        Range xr, yr;
        for (const auto& s : panel.series)
            for (const auto& [x, y] : s.pts) {
                if (panel.logy && !(y > 0.0)) continue;
                xr.add(x);
                yr.add(panel.logy ? std::log10(y) : y);
            }
        if (panel.hrule && (!panel.logy || *panel.hrule > 0.0))
            yr.add(panel.logy ? std::log10(*panel.hrule) : *panel.hrule);
        if (!xr.ok()) { xr.lo = 0.0; xr.hi = 1.0; }
        if (!yr.ok()) { yr.lo = 0.0; yr.hi = 1.0; }
        if (xr.hi == xr.lo) xr.hi = xr.lo + 1.0;
        if (yr.hi == yr.lo) yr.hi = yr.lo + 1.0;
        const double ypad = 0.04 * (yr.hi - yr.lo);
        yr.lo -= ypad;
        yr.hi += ypad;

        const auto sx = [&](double x) {
            return x0 + (x - xr.lo) / (xr.hi - xr.lo) * (x1 - x0);
        };
        const auto sy = [&](double y) {
            const double v = panel.logy ? std::log10(y) : y;
            return y1 - (v - yr.lo) / (yr.hi - yr.lo) * (y1 - y0);
        };

        out << "<rect x=\"" << fmt(x0) << "\" y=\"" << fmt(y0) << "\" width=\""
            << fmt(x1 - x0) << "\" height=\"" << fmt(y1 - y0)
            << "\" fill=\"none\" stroke=\"#444444\"/>\n";
        out << "<text x=\"" << fmt((x0 + x1) / 2.0) << "\" y=\"" << fmt(y0 - 12.0)
            << "\" text-anchor=\"middle\" font-size=\"14\">" << panel.title
            << "</text>\n";
        out << "<text x=\"" << fmt((x0 + x1) / 2.0) << "\" y=\""
            << fmt(kHeight - 10.0) << "\" text-anchor=\"middle\">" << panel.xlabel
            << "</text>\n";
        out << "<text x=\"" << fmt(x0 - 48.0) << "\" y=\"" << fmt((y0 + y1) / 2.0)
            << "\" text-anchor=\"middle\" transform=\"rotate(-90 " << fmt(x0 - 48.0)
            << " " << fmt((y0 + y1) / 2.0) << ")\">" << panel.ylabel << "</text>\n";

        // y ticks at 5 evenly spaced values (powers of ten when log)
        for (int k = 0; k <= 4; ++k) {
            const double v = yr.lo + (yr.hi - yr.lo) * k / 4.0;
            const double y = y1 - (v - yr.lo) / (yr.hi - yr.lo) * (y1 - y0);
            const double shown = panel.logy ? std::pow(10.0, v) : v;
            out << "<line x1=\"" << fmt(x0 - 4.0) << "\" y1=\"" << fmt(y)
                << "\" x2=\"" << fmt(x0) << "\" y2=\"" << fmt(y)
                << "\" stroke=\"#444444\"/>\n";
            out << "<text x=\"" << fmt(x0 - 6.0) << "\" y=\"" << fmt(y + 4.0)
                << "\" text-anchor=\"end\" font-size=\"10\">" << fmt_tick(shown)
                << "</text>\n";
        }
        for (int k = 0; k <= 4; ++k) {
            const double v = xr.lo + (xr.hi - xr.lo) * k / 4.0;
            const double x = sx(v);
            out << "<line x1=\"" << fmt(x) << "\" y1=\"" << fmt(y1) << "\" x2=\""
                << fmt(x) << "\" y2=\"" << fmt(y1 + 4.0) << "\" stroke=\"#444444\"/>\n";
            out << "<text x=\"" << fmt(x) << "\" y=\"" << fmt(y1 + 16.0)
                << "\" text-anchor=\"middle\" font-size=\"10\">" << fmt_tick(v)
                << "</text>\n";
        }

        if (panel.hrule && (!panel.logy || *panel.hrule > 0.0)) {
            const double y = sy(*panel.hrule);
            out << "<line x1=\"" << fmt(x0) << "\" y1=\"" << fmt(y) << "\" x2=\""
                << fmt(x1) << "\" y2=\"" << fmt(y)
                << "\" stroke=\"#888888\" stroke-dasharray=\"6 3\"/>\n";
            if (!panel.hrule_label.empty())
                out << "<text x=\"" << fmt(x1 - 4.0) << "\" y=\"" << fmt(y - 4.0)
                    << "\" text-anchor=\"end\" font-size=\"10\" fill=\"#666666\">"
                    << panel.hrule_label << "</text>\n";
        }

        double legend_y = y0 + 14.0;
        for (const auto& s : panel.series) {
            if (s.markers) {
                for (const auto& [x, y] : s.pts) {
                    if (panel.logy && !(y > 0.0)) continue;
                    out << "<circle cx=\"" << fmt(sx(x)) << "\" cy=\"" << fmt(sy(y))
                        << "\" r=\"3\" fill=\"" << s.color << "\"/>\n";
                }
            } else {
                out << "<polyline fill=\"none\" stroke=\"" << s.color
                    << "\" stroke-width=\"1.2\"";
                if (s.dashed) out << " stroke-dasharray=\"5 3\"";
                out << " points=\"";
                bool first = true;
                for (const auto& [x, y] : s.pts) {
                    if (panel.logy && !(y > 0.0)) continue;
                    if (!first) out << " ";
                    out << fmt(sx(x)) << "," << fmt(sy(y));
                    first = false;
                }
                out << "\"/>\n";
            }
            if (!s.label.empty()) {
                out << "<line x1=\"" << fmt(x0 + 8.0) << "\" y1=\"" << fmt(legend_y)
                    << "\" x2=\"" << fmt(x0 + 28.0) << "\" y2=\"" << fmt(legend_y)
                    << "\" stroke=\"" << s.color << "\""
                    << (s.dashed ? " stroke-dasharray=\"5 3\"" : "") << "/>\n";
                out << "<text x=\"" << fmt(x0 + 32.0) << "\" y=\""
                    << fmt(legend_y + 4.0) << "\" font-size=\"10\">" << s.label
                    << "</text>\n";
                legend_y += 14.0;
            }
        }
    }
    out << "</svg>\n";
}

void write_report(const std::string& path,
                  const std::vector<std::pair<std::string, VerificationReport>>& sections,
                  const std::vector<std::string>& notes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("report: cannot open '" + path + "' for writing");
    bool all_pass = true;
    for (const auto& note : notes) out << "# " << note << "\n";
    for (const auto& [title, rep] : sections) {
        out << "[" << title << "]\n";
        for (const auto& c : rep.checks) {
            out << c.name << "  bound={" << c.bound << "}  worst_slack="
                << format_double(c.worst) << "  ";
            if (c.skipped)
                out << "SKIP(" << c.note << ")";
            else if (c.pass)
                out << "PASS";
            else {
                out << "FAIL(first_violation=" << c.first_violation << ")";
                all_pass = false;
            }
            out << "\n";
        }
    }
    out << "RESULT " << (all_pass ? "PASS" : "FAIL") << "\n";
}

}  // namespace eosim
