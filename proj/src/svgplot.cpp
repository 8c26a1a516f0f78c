#include "cipherscale/svgplot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace cipherscale {

namespace {

constexpr int kWidth = 640;
constexpr int kHeight = 440;
constexpr int kMarginLeft = 70;
constexpr int kMarginRight = 20;
constexpr int kMarginTop = 24;
constexpr int kMarginBottom = 50;

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

struct Frame {
  double x_min, x_max, y_min, y_max;

  double px(double x) const {
    const double t = (x - x_min) / (x_max - x_min);
    return kMarginLeft + t * (kWidth - kMarginLeft - kMarginRight);
  }
  double py(double y) const {
    const double t = (y - y_min) / (y_max - y_min);
    return kHeight - kMarginBottom - t * (kHeight - kMarginTop - kMarginBottom);
  }
};

void open_svg(std::string& svg, const std::string& digest) {
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
         std::to_string(kWidth) + "\" height=\"" + std::to_string(kHeight) +
         "\" viewBox=\"0 0 " + std::to_string(kWidth) + " " +
         std::to_string(kHeight) + "\">\n";
  if (!digest.empty()) svg += "<!-- config_digest=" + digest + " -->\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
}

void draw_axes(std::string& svg, const Frame& f, const std::string& x_label,
               const std::string& y_label, bool log_ticks) {
  svg += "<rect x=\"" + std::to_string(kMarginLeft) + "\" y=\"" +
         std::to_string(kMarginTop) + "\" width=\"" +
         std::to_string(kWidth - kMarginLeft - kMarginRight) + "\" height=\"" +
         std::to_string(kHeight - kMarginTop - kMarginBottom) +
         "\" fill=\"none\" stroke=\"black\"/>\n";
  const int n_ticks = 5;
  for (int i = 0; i <= n_ticks; ++i) {
    const double tx = f.x_min + (f.x_max - f.x_min) * i / n_ticks;
    const double ty = f.y_min + (f.y_max - f.y_min) * i / n_ticks;
    const std::string xl = log_ticks ? fmt("%.3g", std::pow(10.0, tx)) : fmt("%.4g", tx);
    const std::string yl = log_ticks ? fmt("%.3g", std::pow(10.0, ty)) : fmt("%.4g", ty);
    svg += "<text x=\"" + fmt("%.1f", f.px(tx)) + "\" y=\"" +
           std::to_string(kHeight - kMarginBottom + 18) +
           "\" font-size=\"11\" text-anchor=\"middle\">" + xl + "</text>\n";
    svg += "<text x=\"" + std::to_string(kMarginLeft - 6) + "\" y=\"" +
           fmt("%.1f", f.py(ty) + 4) +
           "\" font-size=\"11\" text-anchor=\"end\">" + yl + "</text>\n";
  }
  svg += "<text x=\"" + std::to_string((kMarginLeft + kWidth - kMarginRight) / 2) +
         "\" y=\"" + std::to_string(kHeight - 10) +
         "\" font-size=\"13\" text-anchor=\"middle\">" + x_label + "</text>\n";
  svg += "<text x=\"14\" y=\"" + std::to_string((kMarginTop + kHeight - kMarginBottom) / 2) +
         "\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 14 " +
         std::to_string((kMarginTop + kHeight - kMarginBottom) / 2) + ")\">" +
         y_label + "</text>\n";
}

}  // namespace

std::string loss_curve_svg(const std::vector<nn::TrainRecord>& history,
                           const std::string& config_digest) {
  if (history.empty()) throw std::invalid_argument("loss_curve_svg: empty history");
  Frame f;
  f.x_min = history.front().epoch;
  f.x_max = history.back().epoch;
  if (f.x_max == f.x_min) f.x_max = f.x_min + 1;
  double lo = history[0].test_loss, hi = history[0].test_loss;
  for (const auto& r : history) {
    lo = std::min({lo, r.test_loss, r.train_loss});
    hi = std::max({hi, r.test_loss, r.train_loss});
  }
  const double pad = 0.05 * std::max(hi - lo, 1e-9);
  f.y_min = lo - pad;
  f.y_max = hi + pad;

  std::string svg;
  open_svg(svg, config_digest);
  draw_axes(svg, f, "epoch", "loss (nats)", /*log_ticks=*/false);

  auto polyline = [&](auto getter, const char* color) {
    svg += std::string("<polyline fill=\"none\" stroke=\"") + color +
           "\" stroke-width=\"1.5\" points=\"";
    for (const auto& r : history) {
      svg += fmt("%.2f", f.px(r.epoch)) + "," + fmt("%.2f", f.py(getter(r))) + " ";
    }
    svg += "\"/>\n";
  };
  polyline([](const nn::TrainRecord& r) { return r.train_loss; }, "#999999");
  polyline([](const nn::TrainRecord& r) { return r.test_loss; }, "#1f5fbf");
  for (const auto& r : history) {
    svg += "<circle cx=\"" + fmt("%.2f", f.px(r.epoch)) + "\" cy=\"" +
           fmt("%.2f", f.py(r.test_loss)) + "\" r=\"2.5\" fill=\"#1f5fbf\"/>\n";
  }
  svg += "<text x=\"" + std::to_string(kWidth - kMarginRight - 8) + "\" y=\"" +
         std::to_string(kMarginTop + 14) +
         "\" font-size=\"12\" text-anchor=\"end\">test loss (dots), train loss (grey)</text>\n";
  svg += "</svg>\n";
  return svg;
}

std::string loglog_svg(const std::vector<ScalingPoint>& points,
                       const PowerLawFit& fit, const std::string& x_label,
                       const std::string& config_digest) {
  if (points.empty()) throw std::invalid_argument("loglog_svg: no points");
  Frame f;
  f.x_min = std::log10(points[0].x);
  f.x_max = f.x_min;
  f.y_min = std::log10(points[0].y);
  f.y_max = f.y_min;
  for (const auto& p : points) {
    f.x_min = std::min(f.x_min, std::log10(p.x));
    f.x_max = std::max(f.x_max, std::log10(p.x));
    f.y_min = std::min(f.y_min, std::log10(p.y));
    f.y_max = std::max(f.y_max, std::log10(p.y));
  }
  const double xpad = 0.06 * std::max(f.x_max - f.x_min, 1e-9);
  const double ypad = 0.12 * std::max(f.y_max - f.y_min, 1e-9);
  f.x_min -= xpad;
  f.x_max += xpad;
  f.y_min -= ypad;
  f.y_max += ypad;

  std::string svg;
  open_svg(svg, config_digest);
  draw_axes(svg, f, x_label, "best test loss (nats)", /*log_ticks=*/true);

  // fitted line in log space: log10 y = log10_a + b * log10 x
  const double yl = fit.log10_a + fit.b * f.x_min;
  const double yr = fit.log10_a + fit.b * f.x_max;
  svg += "<line x1=\"" + fmt("%.2f", f.px(f.x_min)) + "\" y1=\"" +
         fmt("%.2f", f.py(yl)) + "\" x2=\"" + fmt("%.2f", f.px(f.x_max)) +
         "\" y2=\"" + fmt("%.2f", f.py(yr)) +
         "\" stroke=\"#c03030\" stroke-width=\"1.5\" stroke-dasharray=\"5,3\"/>\n";

  for (const auto& p : points) {
    svg += "<circle cx=\"" + fmt("%.2f", f.px(std::log10(p.x))) + "\" cy=\"" +
           fmt("%.2f", f.py(std::log10(p.y))) + "\" r=\"4\" fill=\"#1f5fbf\"/>\n";
  }
  svg += "<text x=\"" + std::to_string(kWidth - kMarginRight - 8) + "\" y=\"" +
         std::to_string(kMarginTop + 14) + "\" font-size=\"12\" text-anchor=\"end\">" +
         "slope b = " + fmt("%.3f", fit.b) + ", r^2 = " + fmt("%.3f", fit.r2) +
         "</text>\n";
  svg += "</svg>\n";
  return svg;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << content;
}

}  // namespace cipherscale
