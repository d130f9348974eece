#include "semtrack/svg.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace semtrack::svg {

namespace {

constexpr std::array<const char*, 6> kPalette = {"#1f77b4", "#d62728", "#2ca02c",
                                                 "#ff7f0e", "#9467bd", "#8c564b"};

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", x);
  return buf;
}

std::string tick_label(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", x);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void add(double v) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  bool empty() const { return !(lo <= hi); }
  void pad() {
    if (empty()) {
      lo = 0.0;
      hi = 1.0;
    } else if (hi - lo < 1e-12 * std::max(1.0, std::abs(hi))) {
      lo -= 0.5;
      hi += 0.5;
    }
  }
};

}  // namespace

std::string render_line_chart(const std::vector<Series>& series, const ChartOptions& options) {
  const double left = 80, right = 20, top = 40, bottom = 56;
  const double plot_w = options.width - left - right;
  const double plot_h = options.height - top - bottom;

  auto ty = [&](double y) { return options.log_y ? std::log10(y) : y; };
  auto usable = [&](double x, double y) {
    return std::isfinite(x) && std::isfinite(y) && (!options.log_y || y > 0.0);
  };

  Range xr, yr;
  for (const auto& s : series) {
    for (std::size_t k = 0; k < std::min(s.x.size(), s.y.size()); ++k) {
      if (!usable(s.x[k], s.y[k])) continue;
      xr.add(s.x[k]);
      yr.add(ty(s.y[k]));
    }
  }
  xr.pad();
  yr.pad();

  auto px = [&](double x) { return left + (x - xr.lo) / (xr.hi - xr.lo) * plot_w; };
  auto py = [&](double y) { return top + plot_h - (ty(y) - yr.lo) / (yr.hi - yr.lo) * plot_h; };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << options.width << "\" height=\""
      << options.height << "\" viewBox=\"0 0 " << options.width << ' ' << options.height
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << num(options.width / 2.0) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
      << escape(options.title) << "</text>\n";
  svg << "<rect x=\"" << num(left) << "\" y=\"" << num(top) << "\" width=\"" << num(plot_w)
      << "\" height=\"" << num(plot_h) << "\" fill=\"none\" stroke=\"#444\"/>\n";

  constexpr int kTicks = 5;
  for (int k = 0; k <= kTicks; ++k) {
    const double fx = xr.lo + (xr.hi - xr.lo) * k / kTicks;
    const double x = left + plot_w * k / kTicks;
    svg << "<line x1=\"" << num(x) << "\" y1=\"" << num(top + plot_h) << "\" x2=\"" << num(x)
        << "\" y2=\"" << num(top + plot_h + 5) << "\" stroke=\"#444\"/>\n";
    svg << "<text x=\"" << num(x) << "\" y=\"" << num(top + plot_h + 18)
        << "\" text-anchor=\"middle\">" << tick_label(fx) << "</text>\n";

    const double fy = yr.lo + (yr.hi - yr.lo) * k / kTicks;
    const double y = top + plot_h - plot_h * k / kTicks;
    svg << "<line x1=\"" << num(left - 5) << "\" y1=\"" << num(y) << "\" x2=\"" << num(left)
        << "\" y2=\"" << num(y) << "\" stroke=\"#444\"/>\n";
    svg << "<text x=\"" << num(left - 8) << "\" y=\"" << num(y + 4) << "\" text-anchor=\"end\">"
        << tick_label(options.log_y ? std::pow(10.0, fy) : fy) << "</text>\n";
  }
  svg << "<text x=\"" << num(left + plot_w / 2) << "\" y=\"" << num(options.height - 14.0)
      << "\" text-anchor=\"middle\">" << escape(options.x_label) << "</text>\n";
  svg << "<text x=\"16\" y=\"" << num(top + plot_h / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
      << num(top + plot_h / 2) << ")\">" << escape(options.y_label)
      << (options.log_y ? " (log scale)" : "") << "</text>\n";

  for (std::size_t s = 0; s < series.size(); ++s) {
    const auto& ser = series[s];
    const std::string color = ser.color.empty() ? kPalette[s % kPalette.size()] : ser.color;
    std::vector<std::pair<double, double>> pts;
    for (std::size_t k = 0; k < std::min(ser.x.size(), ser.y.size()); ++k) {
      if (usable(ser.x[k], ser.y[k])) pts.emplace_back(px(ser.x[k]), py(ser.y[k]));
    }
    svg << "<g class=\"series\" data-label=\"" << escape(ser.label) << "\">\n";
    if (pts.size() == 1) {
      svg << "<circle cx=\"" << num(pts[0].first) << "\" cy=\"" << num(pts[0].second)
          << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    } else if (pts.size() > 1) {
      svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\"";
      if (ser.dashed) svg << " stroke-dasharray=\"6 4\"";
      svg << " points=\"";
      for (std::size_t k = 0; k < pts.size(); ++k)
        svg << (k ? " " : "") << num(pts[k].first) << ',' << num(pts[k].second);
      svg << "\"/>\n";
    }
    svg << "</g>\n";

    const double ly = top + 16 + 16 * static_cast<double>(s);
    const double lx = left + plot_w - 170;
    svg << "<line x1=\"" << num(lx) << "\" y1=\"" << num(ly - 4) << "\" x2=\"" << num(lx + 24)
        << "\" y2=\"" << num(ly - 4) << "\" stroke=\"" << color << "\" stroke-width=\"2\""
        << (ser.dashed ? " stroke-dasharray=\"6 4\"" : "") << "/>\n";
    svg << "<text x=\"" << num(lx + 30) << "\" y=\"" << num(ly) << "\">" << escape(ser.label)
        << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace semtrack::svg
