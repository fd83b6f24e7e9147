#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "mno/common.hpp"

// Dependency-free SVG line plots: linear or log10 axes, fixed palette,
// polylines split at non-finite samples.  Coordinates printed with %.2f so
// identical inputs give byte-identical files.

namespace mno {

struct Series {
    std::string label;
    std::vector<double> x, y;
};

struct PlotSpec {
    std::string title, xlabel, ylabel;
    bool logx = false, logy = false;
    int width = 960, height = 600;
};

namespace detail {

inline const char* plot_color(std::size_t i) {
    static const char* palette[] = {"#3566a5", "#d1642e", "#3f8f4a", "#9455b0",
                                    "#ad3f3f", "#8a7a22", "#3a8f8f", "#705953"};
    return palette[i % (sizeof palette / sizeof palette[0])];
}

inline std::string fmt2(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

/// Short human tick label.
inline std::string fmt_tick(double v) {
    char buf[32];
    const double a = std::abs(v);
    if (v != 0.0 && (a >= 1e5 || a < 1e-3))
        std::snprintf(buf, sizeof buf, "%.0e", v);
    else
        std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

/// 1-2-5 ladder tick positions covering [lo, hi].
inline std::vector<double> linear_ticks(double lo, double hi, int target = 6) {
    std::vector<double> t;
    const double span = hi - lo;
    if (!(span > 0.0)) return {lo};
    const double raw = span / target;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    const double norm = raw / mag;
    if (norm > 5.0)
        step = 10.0 * mag;
    else if (norm > 2.0)
        step = 5.0 * mag;
    else if (norm > 1.0)
        step = 2.0 * mag;
    const double first = std::ceil(lo / step) * step;
    for (double v = first; v <= hi + 0.5 * step; v += step) t.push_back(v);
    return t;
}

/// Decade positions (in log10 units) covering [lo, hi].
inline std::vector<double> decade_ticks(double lo, double hi) {
    std::vector<double> t;
    for (int d = static_cast<int>(std::ceil(lo - 1e-9)); d <= std::floor(hi + 1e-9); ++d)
        t.push_back(static_cast<double>(d));
    if (t.size() < 2) return linear_ticks(lo, hi);
    return t;
}

} // namespace detail

inline void write_svg_lineplot(const std::string& path, const PlotSpec& spec,
                               const std::vector<Series>& series) {
    const double ml = 80, mr = 24, mt = 48, mb = 56; // margins
    const double W = spec.width, H = spec.height;
    const double pw = W - ml - mr, ph = H - mt - mb;

    auto tx = [&](double v) { return spec.logx ? std::log10(v) : v; };
    auto ty = [&](double v) { return spec.logy ? std::log10(v) : v; };
    auto usable = [&](double x, double y) {
        return std::isfinite(x) && std::isfinite(y) && (!spec.logx || x > 0.0) &&
               (!spec.logy || y > 0.0);
    };

    double xmin = 0, xmax = 0, ymin = 0, ymax = 0;
    bool any = false;
    for (const Series& s : series) {
        const std::size_t n = std::min(s.x.size(), s.y.size());
        for (std::size_t i = 0; i < n; ++i) {
            if (!usable(s.x[i], s.y[i])) continue;
            const double x = tx(s.x[i]), y = ty(s.y[i]);
            if (!any) {
                xmin = xmax = x;
                ymin = ymax = y;
                any = true;
            } else {
                xmin = std::min(xmin, x);
                xmax = std::max(xmax, x);
                ymin = std::min(ymin, y);
                ymax = std::max(ymax, y);
            }
        }
    }
    if (!any) {
        xmin = ymin = 0.0;
        xmax = ymax = 1.0;
    }
    if (xmax - xmin < 1e-12) {
        xmin -= 0.5;
        xmax += 0.5;
    }
    if (ymax - ymin < 1e-12) {
        ymin -= 0.5;
        ymax += 0.5;
    }
    const double xpad = 0.03 * (xmax - xmin), ypad = 0.05 * (ymax - ymin);
    xmin -= xpad;
    xmax += xpad;
    ymin -= ypad;
    ymax += ypad;

    auto px = [&](double v) { return ml + (tx(v) - xmin) / (xmax - xmin) * pw; };
    auto py = [&](double v) { return mt + ph - (ty(v) - ymin) / (ymax - ymin) * ph; };

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << spec.width << "\" height=\""
        << spec.height << "\" viewBox=\"0 0 " << spec.width << " " << spec.height << "\">\n";
    out << "<rect width=\"" << spec.width << "\" height=\"" << spec.height
        << "\" fill=\"#ffffff\"/>\n";

    // gridlines and tick labels
    const std::vector<double> xticks =
        spec.logx ? detail::decade_ticks(xmin, xmax) : detail::linear_ticks(xmin, xmax);
    const std::vector<double> yticks =
        spec.logy ? detail::decade_ticks(ymin, ymax) : detail::linear_ticks(ymin, ymax, 6);
    out << "<g stroke=\"#d8d8d8\" stroke-width=\"1\">\n";
    for (double t : xticks) {
        const double x = ml + (t - xmin) / (xmax - xmin) * pw;
        if (x < ml - 0.5 || x > ml + pw + 0.5) continue;
        out << "<line x1=\"" << detail::fmt2(x) << "\" y1=\"" << detail::fmt2(mt) << "\" x2=\""
            << detail::fmt2(x) << "\" y2=\"" << detail::fmt2(mt + ph) << "\"/>\n";
    }
    for (double t : yticks) {
        const double y = mt + ph - (t - ymin) / (ymax - ymin) * ph;
        if (y < mt - 0.5 || y > mt + ph + 0.5) continue;
        out << "<line x1=\"" << detail::fmt2(ml) << "\" y1=\"" << detail::fmt2(y) << "\" x2=\""
            << detail::fmt2(ml + pw) << "\" y2=\"" << detail::fmt2(y) << "\"/>\n";
    }
    out << "</g>\n";
    out << "<g font-family=\"sans-serif\" font-size=\"12\" fill=\"#333333\">\n";
    for (double t : xticks) {
        const double x = ml + (t - xmin) / (xmax - xmin) * pw;
        if (x < ml - 0.5 || x > ml + pw + 0.5) continue;
        const std::string lab = detail::fmt_tick(spec.logx ? std::pow(10.0, t) : t);
        out << "<text x=\"" << detail::fmt2(x) << "\" y=\"" << detail::fmt2(mt + ph + 18)
            << "\" text-anchor=\"middle\">" << lab << "</text>\n";
    }
    for (double t : yticks) {
        const double y = mt + ph - (t - ymin) / (ymax - ymin) * ph;
        if (y < mt - 0.5 || y > mt + ph + 0.5) continue;
        const std::string lab = detail::fmt_tick(spec.logy ? std::pow(10.0, t) : t);
        out << "<text x=\"" << detail::fmt2(ml - 8) << "\" y=\"" << detail::fmt2(y + 4)
            << "\" text-anchor=\"end\">" << lab << "</text>\n";
    }
    out << "</g>\n";

    // frame
    out << "<rect x=\"" << detail::fmt2(ml) << "\" y=\"" << detail::fmt2(mt) << "\" width=\""
        << detail::fmt2(pw) << "\" height=\"" << detail::fmt2(ph)
        << "\" fill=\"none\" stroke=\"#333333\" stroke-width=\"1\"/>\n";

    // series polylines, broken at unusable points
    for (std::size_t si = 0; si < series.size(); ++si) {
        const Series& s = series[si];
        const std::size_t n = std::min(s.x.size(), s.y.size());
        std::string pts;
        auto flush = [&]() {
            if (pts.empty()) return;
            out << "<polyline fill=\"none\" stroke=\"" << detail::plot_color(si)
                << "\" stroke-width=\"1.8\" points=\"" << pts << "\"/>\n";
            pts.clear();
        };
        for (std::size_t i = 0; i < n; ++i) {
            if (!usable(s.x[i], s.y[i])) {
                flush();
                continue;
            }
            if (!pts.empty()) pts += ' ';
            pts += detail::fmt2(px(s.x[i])) + "," + detail::fmt2(py(s.y[i]));
        }
        flush();
    }

    // labels, title, legend
    out << "<g font-family=\"sans-serif\" fill=\"#111111\">\n";
    out << "<text x=\"" << detail::fmt2(ml + pw / 2) << "\" y=\"" << detail::fmt2(mt - 16)
        << "\" font-size=\"16\" text-anchor=\"middle\">" << spec.title << "</text>\n";
    out << "<text x=\"" << detail::fmt2(ml + pw / 2) << "\" y=\"" << detail::fmt2(H - 12)
        << "\" font-size=\"13\" text-anchor=\"middle\">" << spec.xlabel << "</text>\n";
    out << "<text x=\"18\" y=\"" << detail::fmt2(mt + ph / 2)
        << "\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
        << detail::fmt2(mt + ph / 2) << ")\">" << spec.ylabel << "</text>\n";
    out << "</g>\n";
    out << "<g font-family=\"sans-serif\" font-size=\"12\">\n";
    for (std::size_t si = 0; si < series.size(); ++si) {
        const double ly = mt + 14 + 17.0 * static_cast<double>(si);
        const double lx = ml + pw - 150;
        out << "<line x1=\"" << detail::fmt2(lx) << "\" y1=\"" << detail::fmt2(ly - 4)
            << "\" x2=\"" << detail::fmt2(lx + 22) << "\" y2=\"" << detail::fmt2(ly - 4)
            << "\" stroke=\"" << detail::plot_color(si) << "\" stroke-width=\"2.5\"/>\n";
        out << "<text x=\"" << detail::fmt2(lx + 28) << "\" y=\"" << detail::fmt2(ly)
            << "\" fill=\"#111111\">" << series[si].label << "</text>\n";
    }
    out << "</g>\n</svg>\n";
    if (!out) throw IoError("svg write failed: " + path);
}

} // namespace mno
