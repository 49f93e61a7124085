#pragma once

#include <algorithm>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "sddtmpc/scenario.hpp"

namespace sddtmpc {

/// Minimal static SVG line-plot writer: fixed canvas, linear axes, polylines.
class SvgPlot {
 public:
  SvgPlot(double xmin, double xmax, double ymin, double ymax, std::string title = "")
      : xmin_(xmin), xmax_(xmax), ymin_(ymin), ymax_(ymax), title_(std::move(title)) {}

  void polyline(const std::vector<Eigen::Vector2d>& pts, const std::string& color,
                double width = 1.5, const std::string& dash = "") {
    if (pts.empty()) return;
    std::ostringstream os;
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"" << width << "\"";
    if (!dash.empty()) os << " stroke-dasharray=\"" << dash << "\"";
    os << " points=\"";
    for (const auto& p : pts) os << px(p.x()) << ',' << py(p.y()) << ' ';
    os << "\"/>";
    body_.push_back(os.str());
  }

  void hline(double y, const std::string& color, double width = 1.0) {
    polyline({{xmin_, y}, {xmax_, y}}, color, width);
  }

  void circle(const Eigen::Vector2d& c, double r_px, const std::string& color) {
    std::ostringstream os;
    os << "<circle cx=\"" << px(c.x()) << "\" cy=\"" << py(c.y()) << "\" r=\"" << r_px
       << "\" fill=\"" << color << "\"/>";
    body_.push_back(os.str());
  }

  /// Closed polygon outline (e.g. a tube cross-section projection).
  void polygon(const std::vector<Eigen::Vector2d>& pts, const std::string& color,
               double width = 1.0) {
    if (pts.size() < 2) return;
    auto closed = pts;
    closed.push_back(pts.front());
    polyline(closed, color, width);
  }

  void heat_strip(const std::vector<double>& xs, const std::vector<double>& vals, double y0,
                  double h) {
    // value in [0,1] mapped to a blue ramp, drawn as little rects
    for (size_t i = 0; i + 1 < xs.size(); ++i) {
      const int blue = 255;
      const int other = static_cast<int>(255 * (1.0 - std::clamp(vals[i], 0.0, 1.0)));
      std::ostringstream os;
      os << "<rect x=\"" << px(xs[i]) << "\" y=\"" << py(y0) << "\" width=\""
         << std::max(1.0, px(xs[i + 1]) - px(xs[i])) << "\" height=\"" << h << "\" fill=\"rgb("
         << other << ',' << other << ',' << blue << ")\"/>";
      body_.push_back(os.str());
    }
  }

  size_t element_count() const { return body_.size(); }

  void save(const std::string& path) const {
    std::ofstream f(path);
    f << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" viewBox=\"0 0 " << W << ' ' << H << "\">\n";
    f << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    f << "<rect x=\"" << M << "\" y=\"" << M << "\" width=\"" << W - 2 * M << "\" height=\""
      << H - 2 * M << "\" fill=\"none\" stroke=\"#888\"/>\n";
    if (!title_.empty())
      f << "<text x=\"" << W / 2 << "\" y=\"18\" text-anchor=\"middle\" font-size=\"13\">"
        << title_ << "</text>\n";
    for (const auto& b : body_) f << b << '\n';
    f << "</svg>\n";
  }

 private:
  static constexpr int W = 720, H = 480, M = 40;
  double px(double x) const { return M + (x - xmin_) / (xmax_ - xmin_) * (W - 2 * M); }
  double py(double y) const { return H - M - (y - ymin_) / (ymax_ - ymin_) * (H - 2 * M); }

  double xmin_, xmax_, ymin_, ymax_;
  std::string title_;
  std::vector<std::string> body_;
};

/// Position trajectory with the slipperiness strip; draws the wall for
/// scenario 2.
inline void plot_trajectory(const TrajectoryLog& log, const std::string& scenario,
                            const std::string& path) {
  double xmin = 1e9, xmax = -1e9, ymin = 1e9, ymax = -1e9;
  for (const auto& r : log.rows) {
    xmin = std::min(xmin, r.x(0));
    xmax = std::max(xmax, r.x(0));
    ymin = std::min(ymin, r.x(1));
    ymax = std::max(ymax, r.x(1));
  }
  if (log.rows.empty()) {
    xmin = ymin = 0;
    xmax = ymax = 1;
  }
  const double padx = std::max(0.5, 0.1 * (xmax - xmin));
  const double pady = std::max(0.5, 0.1 * (ymax - ymin));
  SvgPlot plot(xmin - padx, xmax + padx, ymin - pady, ymax + pady,
               scenario + " position trajectory");
  std::vector<Eigen::Vector2d> xs, zs;
  std::vector<double> ts, betas;
  for (const auto& r : log.rows) {
    xs.push_back(r.x.head<2>());
    zs.push_back(r.z.head<2>());
    ts.push_back(r.x(0));
    betas.push_back(r.beta);
  }
  plot.heat_strip(ts, betas, ymin - 0.8 * pady, 6.0);
  if (scenario == "s2") plot.hline(0.0, "black", 2.0);
  plot.polyline(zs, "#2a7", 1.5, "4 3");
  plot.polyline(xs, "#d33", 1.5);
  if (!xs.empty()) plot.circle(xs.front(), 4, "#d33");
  plot.save(path);
}

/// Tube cross-section projections over a plan.
inline void plot_tube(const std::vector<TubeSection>& tube, const std::string& path) {
  SvgPlot plot(-1.0 + -0.2, static_cast<double>(tube.size()), -1.2, 1.2, "tube evolution");
  for (size_t i = 0; i < tube.size(); ++i) {
    // position-plane projection: template rows 0..7 are the planar octagon
    std::vector<Eigen::Vector2d> poly;
    const auto& E = tube[i].E;
    for (int j = 0; j < 8; ++j) {
      const int j2 = (j + 1) % 8;
      Eigen::Matrix2d A;
      A.row(0) = E.normals.row(j).head<2>();
      A.row(1) = E.normals.row(j2).head<2>();
      const Eigen::Vector2d v = A.inverse() * Eigen::Vector2d(E.offsets(j), E.offsets(j2));
      poly.push_back(Eigen::Vector2d(i + v.x(), v.y()));
    }
    plot.polygon(poly, "#39c");
  }
  plot.save(path);
}

/// Distance-to-target curve.
inline void plot_distance(const std::vector<double>& t, const std::vector<double>& dist,
                          const std::string& path) {
  if (t.empty()) return;
  const double dmax = *std::max_element(dist.begin(), dist.end());
  SvgPlot plot(t.front(), t.back(), 0.0, 1.1 * std::max(dmax, 1e-6), "distance to target");
  std::vector<Eigen::Vector2d> pts;
  for (size_t i = 0; i < t.size(); ++i) pts.push_back({t[i], dist[i]});
  plot.polyline(pts, "#d33");
  plot.hline(0.05, "#888");
  plot.save(path);
}

/// Input traces with the admissible diamond bounds (nominal and realized).
inline void plot_inputs(const TrajectoryLog& log, double nu_max, double rho, double v_frac,
                        const std::string& path) {
  if (log.rows.empty()) return;
  SvgPlot plot(log.rows.front().t, log.rows.back().t + 1e-9, -1.3, 1.3, "inputs (diamond norm)");
  std::vector<Eigen::Vector2d> real, nominal;
  for (const auto& r : log.rows) {
    const double nr = std::abs(r.u(0)) / nu_max + rho * std::abs(r.u(1)) / nu_max;
    const double nn = std::abs(r.v(0)) / nu_max + rho * std::abs(r.v(1)) / nu_max;
    real.push_back({r.t, nr});
    nominal.push_back({r.t, nn});
  }
  plot.hline(1.0, "black", 1.5);     // boundary of U
  plot.hline(v_frac, "#888", 1.0);   // boundary of the fixed nominal set
  plot.polyline(nominal, "#2a7", 1.5, "4 3");
  plot.polyline(real, "#d33", 1.5);
  plot.save(path);
}

}  // namespace sddtmpc
