#include "heteroseir/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace heteroseir {

namespace {

std::string fmt(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

std::string fmt3(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.3f", v);
    return buf;
}

// Diverging blue-white-red map for correlation values in [-1, 1].
std::string corr_color(double v) {
    v = std::clamp(v, -1.0, 1.0);
    int r, g, b;
    if (v < 0.0) {
        const double f = -v;
        r = static_cast<int>(255 + f * (59 - 255));
        g = static_cast<int>(255 + f * (76 - 255));
        b = static_cast<int>(255 + f * (192 - 255));
    } else {
        r = static_cast<int>(255 + v * (180 - 255));
        g = static_cast<int>(255 + v * (4 - 255));
        b = static_cast<int>(255 + v * (38 - 255));
    }
    char buf[16];
    std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", r, g, b);
    return buf;
}

void nice_range(double& lo, double& hi) {
    if (!(hi > lo)) {
        const double pad = std::max(std::abs(lo), 1.0) * 0.1;
        lo -= pad;
        hi += pad;
    }
}

}  // namespace

Svg::Svg(double width, double height) : width_(width), height_(height) {}

void Svg::line(double x1, double y1, double x2, double y2, const std::string& stroke,
               double width, const std::string& dash) {
    body_ += "<line x1=\"" + fmt(x1) + "\" y1=\"" + fmt(y1) + "\" x2=\"" + fmt(x2) + "\" y2=\"" +
             fmt(y2) + "\" stroke=\"" + stroke + "\" stroke-width=\"" + fmt(width) + "\"";
    if (!dash.empty()) body_ += " stroke-dasharray=\"" + dash + "\"";
    body_ += "/>\n";
}

void Svg::polyline(const std::vector<double>& xs, const std::vector<double>& ys,
                   const std::string& stroke, double width) {
    body_ += "<polyline fill=\"none\" stroke=\"" + stroke + "\" stroke-width=\"" + fmt(width) +
             "\" points=\"";
    for (size_t k = 0; k < xs.size(); ++k) body_ += fmt(xs[k]) + "," + fmt(ys[k]) + " ";
    body_ += "\"/>\n";
}

void Svg::polygon(const std::vector<double>& xs, const std::vector<double>& ys,
                  const std::string& fill, double opacity) {
    body_ += "<polygon fill=\"" + fill + "\" fill-opacity=\"" + fmt(opacity) + "\" stroke=\"none\" points=\"";
    for (size_t k = 0; k < xs.size(); ++k) body_ += fmt(xs[k]) + "," + fmt(ys[k]) + " ";
    body_ += "\"/>\n";
}

void Svg::rect(double x, double y, double w, double h, const std::string& fill,
               const std::string& stroke) {
    body_ += "<rect x=\"" + fmt(x) + "\" y=\"" + fmt(y) + "\" width=\"" + fmt(w) + "\" height=\"" +
             fmt(h) + "\" fill=\"" + fill + "\" stroke=\"" + stroke + "\"/>\n";
}

void Svg::circle(double cx, double cy, double r, const std::string& fill) {
    body_ += "<circle cx=\"" + fmt(cx) + "\" cy=\"" + fmt(cy) + "\" r=\"" + fmt(r) + "\" fill=\"" +
             fill + "\"/>\n";
}

void Svg::text(double x, double y, const std::string& content, double size,
               const std::string& anchor, const std::string& fill) {
    body_ += "<text x=\"" + fmt(x) + "\" y=\"" + fmt(y) + "\" font-size=\"" + fmt(size) +
             "\" font-family=\"sans-serif\" text-anchor=\"" + anchor + "\" fill=\"" + fill + "\">" +
             content + "</text>\n";
}

std::string Svg::str() const {
    return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(width_) + "\" height=\"" +
           fmt(height_) + "\" viewBox=\"0 0 " + fmt(width_) + " " + fmt(height_) + "\">\n" +
           "<rect width=\"100%\" height=\"100%\" fill=\"#fff\"/>\n" + body_ + "</svg>\n";
}

void Svg::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("Svg::save: cannot open " + path);
    out << str();
}

void write_histogram_svg(const std::vector<double>& values, double truth, bool have_truth,
                         const std::string& title, const std::string& path, int n_bins) {
    Svg svg(480, 320);
    svg.text(240, 20, title, 14, "middle");
    if (values.empty()) {
        svg.save(path);
        return;
    }

    double lo = *std::min_element(values.begin(), values.end());
    double hi = *std::max_element(values.begin(), values.end());
    if (have_truth) {
        lo = std::min(lo, truth);
        hi = std::max(hi, truth);
    }
    nice_range(lo, hi);
    const double span = hi - lo;
    lo -= 0.05 * span;
    hi += 0.05 * span;

    std::vector<int> counts(static_cast<size_t>(n_bins), 0);
    for (const double v : values) {
        int b = static_cast<int>((v - lo) / (hi - lo) * n_bins);
        b = std::clamp(b, 0, n_bins - 1);
        ++counts[static_cast<size_t>(b)];
    }
    const int peak = *std::max_element(counts.begin(), counts.end());

    const AxisScale xs{lo, hi, 50, 460};
    const AxisScale ys{0, static_cast<double>(std::max(peak, 1)), 290, 40};
    for (int b = 0; b < n_bins; ++b) {
        const double x0 = xs(lo + (hi - lo) * b / n_bins);
        const double x1 = xs(lo + (hi - lo) * (b + 1) / n_bins);
        const double y = ys(counts[static_cast<size_t>(b)]);
        svg.rect(x0, y, x1 - x0 - 1.0, 290 - y, "#6699cc");
    }
    svg.line(50, 290, 460, 290, "#000");
    svg.line(50, 290, 50, 40, "#000");
    for (int k = 0; k <= 4; ++k) {
        const double v = lo + (hi - lo) * k / 4.0;
        svg.text(xs(v), 306, fmt(v), 10, "middle");
    }
    if (have_truth) {
        svg.line(xs(truth), 290, xs(truth), 40, "#333", 1.5, "5,4");
        svg.text(xs(truth), 36, "truth", 10, "middle", "#333");
    }
    svg.save(path);
}

void write_heatmap_svg(const Eigen::MatrixXd& corr, const std::vector<std::string>& labels,
                       const std::string& title, const std::string& path) {
    const int p = static_cast<int>(corr.rows());
    const double cell = 70.0;
    const double left = 70.0, top = 60.0;
    Svg svg(left + p * cell + 30, top + p * cell + 30);
    svg.text((left + p * cell + 30) / 2, 24, title, 14, "middle");

    for (int i = 0; i < p; ++i) {
        for (int j = 0; j < p; ++j) {
            const double v = corr(i, j);
            const double x = left + j * cell;
            const double y = top + i * cell;
            svg.rect(x, y, cell, cell, corr_color(v), "#888");
            const bool dark = std::abs(v) > 0.6;
            svg.text(x + cell / 2, y + cell / 2 + 4, fmt3(v), 13, "middle", dark ? "#fff" : "#000");
        }
    }
    for (int i = 0; i < p; ++i) {
        const std::string name = i < static_cast<int>(labels.size()) ? labels[static_cast<size_t>(i)] : "";
        svg.text(left - 8, top + i * cell + cell / 2 + 4, name, 12, "end");
        svg.text(left + i * cell + cell / 2, top - 8, name, 12, "middle");
    }
    svg.save(path);
}

void write_curves_svg(const std::vector<Series>& series, const std::string& title,
                      const std::string& x_label, const std::string& y_label,
                      const std::string& path, double hline, bool have_hline,
                      const std::vector<double>& vlines) {
    Svg svg(560, 360);
    svg.text(280, 20, title, 14, "middle");

    double xlo = 0, xhi = 1, ylo = 0, yhi = 1;
    bool first = true;
    for (const auto& s : series) {
        for (size_t k = 0; k < s.x.size(); ++k) {
            if (!std::isfinite(s.x[k]) || !std::isfinite(s.y[k])) continue;
            if (first) {
                xlo = xhi = s.x[k];
                ylo = yhi = s.y[k];
                first = false;
            }
            xlo = std::min(xlo, s.x[k]);
            xhi = std::max(xhi, s.x[k]);
            ylo = std::min(ylo, s.y[k]);
            yhi = std::max(yhi, s.y[k]);
        }
    }
    if (have_hline) {
        ylo = std::min(ylo, hline);
        yhi = std::max(yhi, hline);
    }
    nice_range(xlo, xhi);
    nice_range(ylo, yhi);

    const AxisScale xs{xlo, xhi, 60, 540};
    const AxisScale ys{ylo, yhi, 320, 40};
    svg.line(60, 320, 540, 320, "#000");
    svg.line(60, 320, 60, 40, "#000");
    for (int k = 0; k <= 4; ++k) {
        const double xv = xlo + (xhi - xlo) * k / 4.0;
        const double yv = ylo + (yhi - ylo) * k / 4.0;
        svg.text(xs(xv), 336, fmt(xv), 10, "middle");
        svg.text(54, ys(yv) + 4, fmt(yv), 10, "end");
    }
    svg.text(300, 354, x_label, 11, "middle");
    svg.text(14, 180, y_label, 11, "middle");

    if (have_hline) svg.line(60, ys(hline), 540, ys(hline), "#cc3333", 1.2, "6,4");
    for (const double v : vlines) svg.line(xs(v), 320, xs(v), 40, "#888", 1.0, "3,3");

    double legend_y = 46.0;
    for (const auto& s : series) {
        std::vector<double> px, py;
        px.reserve(s.x.size());
        py.reserve(s.y.size());
        for (size_t k = 0; k < s.x.size(); ++k) {
            if (!std::isfinite(s.y[k])) continue;
            px.push_back(xs(s.x[k]));
            py.push_back(ys(s.y[k]));
        }
        svg.polyline(px, py, s.color);
        if (!s.label.empty()) {
            svg.line(450, legend_y, 470, legend_y, s.color, 2.0);
            svg.text(474, legend_y + 4, s.label, 10);
            legend_y += 14;
        }
    }
    svg.save(path);
}

void write_band_svg(const std::vector<double>& times, const std::vector<double>& lower,
                    const std::vector<double>& upper, const std::vector<double>& median,
                    const std::vector<double>& obs_times, const std::vector<double>& obs,
                    const std::string& title, const std::string& path) {
    Svg svg(560, 360);
    svg.text(280, 20, title, 14, "middle");
    if (times.empty()) {
        svg.save(path);
        return;
    }

    double yhi = 1.0;
    for (const double v : upper) yhi = std::max(yhi, v);
    for (const double v : obs) yhi = std::max(yhi, v);

    const AxisScale xs{times.front(), times.back(), 60, 540};
    const AxisScale ys{0.0, yhi * 1.05, 320, 40};
    svg.line(60, 320, 540, 320, "#000");
    svg.line(60, 320, 60, 40, "#000");
    for (int k = 0; k <= 4; ++k) {
        const double xv = times.front() + (times.back() - times.front()) * k / 4.0;
        const double yv = yhi * 1.05 * k / 4.0;
        svg.text(xs(xv), 336, fmt(xv), 10, "middle");
        svg.text(54, ys(yv) + 4, fmt(yv), 10, "end");
    }
    svg.text(300, 354, "day", 11, "middle");

    std::vector<double> px, py;
    for (size_t k = 0; k < times.size(); ++k) {
        px.push_back(xs(times[k]));
        py.push_back(ys(upper[k]));
    }
    for (size_t k = times.size(); k-- > 0;) {
        px.push_back(xs(times[k]));
        py.push_back(ys(lower[k]));
    }
    svg.polygon(px, py, "#6699cc", 0.35);

    std::vector<double> mx, my;
    for (size_t k = 0; k < times.size(); ++k) {
        mx.push_back(xs(times[k]));
        my.push_back(ys(median[k]));
    }
    svg.polyline(mx, my, "#1f4e8c", 1.8);

    for (size_t k = 0; k < obs_times.size() && k < obs.size(); ++k) {
        svg.circle(xs(obs_times[k]), ys(obs[k]), 1.6, "#222");
    }
    svg.save(path);
}

}  // namespace heteroseir
