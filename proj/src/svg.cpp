#include "riseflock/svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "riseflock/errors.hpp"

namespace riseflock::svg {

namespace {

constexpr int kMarginLeft = 70;
constexpr int kMarginRight = 160;
constexpr int kMarginTop = 40;
constexpr int kMarginBottom = 55;

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

// Round a span to a pleasant tick step (1, 2, or 5 times a power of ten).
double nice_step(double span, int target_ticks) {
  if (!(span > 0.0)) return 1.0;
  const double raw = span / std::max(1, target_ticks);
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double norm = raw / mag;
  if (norm < 1.5) return mag;
  if (norm < 3.5) return 2.0 * mag;
  if (norm < 7.5) return 5.0 * mag;
  return 10.0 * mag;
}

}  // namespace

const std::string& palette(std::size_t index) {
  static const std::vector<std::string> colors = {
      "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
      "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  return colors[index % colors.size()];
}

LinePlot::LinePlot(std::string title, std::string xlabel, std::string ylabel)
    : title_(std::move(title)),
      xlabel_(std::move(xlabel)),
      ylabel_(std::move(ylabel)) {}

void LinePlot::add(Series series) { series_.push_back(std::move(series)); }

void LinePlot::add_hline(double y, std::string label) {
  hlines_.push_back({y, std::move(label)});
}

std::string LinePlot::render(int width, int height) const {
  double xmin = std::numeric_limits<double>::infinity();
  double xmax = -xmin, ymin = xmin, ymax = -xmin;
  bool any = false;
  for (const Series& s : series_) {
    for (std::size_t k = 0; k < s.x.size(); ++k) {
      const double y = s.y[k];
      if (log_y_ && !(y > 0.0)) continue;
      any = true;
      xmin = std::min(xmin, s.x[k]);
      xmax = std::max(xmax, s.x[k]);
      ymin = std::min(ymin, y);
      ymax = std::max(ymax, y);
    }
  }
  if (!any) {
    throw ValidationError("plot: no plottable samples");
  }
  for (const auto& [y, label] : hlines_) {
    (void)label;
    if (!log_y_ || y > 0.0) {
      ymin = std::min(ymin, y);
      ymax = std::max(ymax, y);
    }
  }
  if (xmax == xmin) xmax = xmin + 1.0;
  if (ymax == ymin) ymax = ymin + 1.0;

  const double ylo = log_y_ ? std::log10(ymin) : ymin;
  const double yhi = log_y_ ? std::log10(ymax) : ymax;
  const double plot_w = width - kMarginLeft - kMarginRight;
  const double plot_h = height - kMarginTop - kMarginBottom;
  auto px = [&](double x) {
    return kMarginLeft + plot_w * (x - xmin) / (xmax - xmin);
  };
  auto py = [&](double y) {
    const double v = log_y_ ? std::log10(y) : y;
    return kMarginTop + plot_h * (1.0 - (v - ylo) / (yhi - ylo));
  };

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << ' '
      << height << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" "
         "font-family=\"sans-serif\" font-size=\"16\">"
      << title_ << "</text>\n";

  // Axes.
  out << "<rect x=\"" << kMarginLeft << "\" y=\"" << kMarginTop
      << "\" width=\"" << plot_w << "\" height=\"" << plot_h
      << "\" fill=\"none\" stroke=\"#333\"/>\n";

  // X ticks.
  const double xstep = nice_step(xmax - xmin, 8);
  for (double x = std::ceil(xmin / xstep) * xstep; x <= xmax + 1e-9 * xstep;
       x += xstep) {
    const double gx = px(x);
    out << "<line x1=\"" << gx << "\" y1=\"" << kMarginTop + plot_h
        << "\" x2=\"" << gx << "\" y2=\"" << kMarginTop + plot_h + 5
        << "\" stroke=\"#333\"/>\n";
    out << "<text x=\"" << gx << "\" y=\"" << kMarginTop + plot_h + 20
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"11\">"
        << fmt(x) << "</text>\n";
  }

  // Y ticks: decades for log scale, nice steps otherwise.
  if (log_y_) {
    for (double d = std::ceil(ylo); d <= std::floor(yhi) + 1e-9; d += 1.0) {
      const double gy = py(std::pow(10.0, d));
      out << "<line x1=\"" << kMarginLeft - 5 << "\" y1=\"" << gy
          << "\" x2=\"" << kMarginLeft << "\" y2=\"" << gy
          << "\" stroke=\"#333\"/>\n";
      out << "<line x1=\"" << kMarginLeft << "\" y1=\"" << gy << "\" x2=\""
          << kMarginLeft + plot_w << "\" y2=\"" << gy
          << "\" stroke=\"#eee\"/>\n";
      out << "<text x=\"" << kMarginLeft - 8 << "\" y=\"" << gy + 4
          << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
             "font-size=\"11\">1e"
          << static_cast<int>(d) << "</text>\n";
    }
  } else {
    const double ystep = nice_step(yhi - ylo, 6);
    for (double y = std::ceil(ylo / ystep) * ystep; y <= yhi + 1e-9 * ystep;
         y += ystep) {
      const double gy = py(y);
      out << "<line x1=\"" << kMarginLeft - 5 << "\" y1=\"" << gy
          << "\" x2=\"" << kMarginLeft << "\" y2=\"" << gy
          << "\" stroke=\"#333\"/>\n";
      out << "<line x1=\"" << kMarginLeft << "\" y1=\"" << gy << "\" x2=\""
          << kMarginLeft + plot_w << "\" y2=\"" << gy
          << "\" stroke=\"#eee\"/>\n";
      out << "<text x=\"" << kMarginLeft - 8 << "\" y=\"" << gy + 4
          << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
             "font-size=\"11\">"
          << fmt(y) << "</text>\n";
    }
  }

  out << "<text x=\"" << kMarginLeft + plot_w / 2 << "\" y=\""
      << height - 12
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"13\">"
      << xlabel_ << "</text>\n";
  out << "<text x=\"18\" y=\"" << kMarginTop + plot_h / 2
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"13\" transform=\"rotate(-90 18 "
      << kMarginTop + plot_h / 2 << ")\">"
      << ylabel_ << "</text>\n";

  for (const auto& [y, label] : hlines_) {
    if (log_y_ && !(y > 0.0)) continue;
    const double gy = py(y);
    out << "<line x1=\"" << kMarginLeft << "\" y1=\"" << gy << "\" x2=\""
        << kMarginLeft + plot_w << "\" y2=\"" << gy
        << "\" stroke=\"#555\" stroke-dasharray=\"6 4\"/>\n";
    out << "<text x=\"" << kMarginLeft + plot_w - 4 << "\" y=\"" << gy - 5
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
           "font-size=\"11\" fill=\"#555\">"
        << label << "</text>\n";
  }

  for (const Series& s : series_) {
    out << "<polyline fill=\"none\" stroke=\"" << s.color
        << "\" stroke-width=\"1.4\"";
    if (s.dashed) out << " stroke-dasharray=\"5 3\"";
    out << " points=\"";
    for (std::size_t k = 0; k < s.x.size(); ++k) {
      if (log_y_ && !(s.y[k] > 0.0)) continue;
      out << px(s.x[k]) << ',' << py(s.y[k]) << ' ';
    }
    out << "\"/>\n";
  }

  // Legend.
  double ly = kMarginTop + 8;
  for (const Series& s : series_) {
    const double lx = kMarginLeft + plot_w + 12;
    out << "<line x1=\"" << lx << "\" y1=\"" << ly << "\" x2=\"" << lx + 22
        << "\" y2=\"" << ly << "\" stroke=\"" << s.color
        << "\" stroke-width=\"2\"";
    if (s.dashed) out << " stroke-dasharray=\"5 3\"";
    out << "/>\n";
    out << "<text x=\"" << lx + 28 << "\" y=\"" << ly + 4
        << "\" font-family=\"sans-serif\" font-size=\"11\">" << s.label
        << "</text>\n";
    ly += 16;
  }

  out << "</svg>\n";
  return out.str();
}

void LinePlot::write(const std::string& path, int width, int height) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw ValidationError("plot: cannot open " + path + " for writing");
  }
  out << render(width, height);
}

}  // namespace riseflock::svg
