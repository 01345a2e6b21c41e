#ifndef HETEROSEIR_SVG_HPP
#define HETEROSEIR_SVG_HPP

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace heteroseir {

/// Minimal static-SVG canvas: built up as a string, written at the end.
class Svg {
  public:
    Svg(double width, double height);

    void line(double x1, double y1, double x2, double y2, const std::string& stroke,
              double width = 1.0, const std::string& dash = "");
    void polyline(const std::vector<double>& xs, const std::vector<double>& ys,
                  const std::string& stroke, double width = 1.5);
    void polygon(const std::vector<double>& xs, const std::vector<double>& ys,
                 const std::string& fill, double opacity = 1.0);
    void rect(double x, double y, double w, double h, const std::string& fill,
              const std::string& stroke = "none");
    void circle(double cx, double cy, double r, const std::string& fill);
    void text(double x, double y, const std::string& content, double size = 12.0,
              const std::string& anchor = "start", const std::string& fill = "#000");

    std::string str() const;
    void save(const std::string& path) const;

    double width() const { return width_; }
    double height() const { return height_; }

  private:
    double width_, height_;
    std::string body_;
};

/// Affine data-to-pixel mapping for one axis.
struct AxisScale {
    double data_min = 0.0, data_max = 1.0;
    double pix_min = 0.0, pix_max = 1.0;
    double operator()(double v) const {
        return pix_min + (v - data_min) / (data_max - data_min) * (pix_max - pix_min);
    }
};

struct Series {
    std::vector<double> x;
    std::vector<double> y;
    std::string color = "#1f77b4";
    std::string label;
};

/// Histogram of values with optional truth marker (dashed vertical line).
void write_histogram_svg(const std::vector<double>& values, double truth, bool have_truth,
                         const std::string& title, const std::string& path, int n_bins = 20);

/// Correlation heatmap; each cell is coloured by value and labelled with the
/// entry printed to 3 decimals.
void write_heatmap_svg(const Eigen::MatrixXd& corr, const std::vector<std::string>& labels,
                       const std::string& title, const std::string& path);

/// Line chart with optional horizontal threshold and vertical markers.
void write_curves_svg(const std::vector<Series>& series, const std::string& title,
                      const std::string& x_label, const std::string& y_label,
                      const std::string& path, double hline = 0.0, bool have_hline = false,
                      const std::vector<double>& vlines = {});

/// Quantile band (filled), median line, and optional observation points.
void write_band_svg(const std::vector<double>& times, const std::vector<double>& lower,
                    const std::vector<double>& upper, const std::vector<double>& median,
                    const std::vector<double>& obs_times, const std::vector<double>& obs,
                    const std::string& title, const std::string& path);

}  // namespace heteroseir

#endif  // HETEROSEIR_SVG_HPP
