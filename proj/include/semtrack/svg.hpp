#pragma once

#include <string>
#include <vector>

namespace semtrack::svg {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  /// Stroke colour, e.g. "#1f77b4". Empty picks from the default palette.
  std::string color;
  bool dashed = false;
};

struct ChartOptions {
  std::string title;
  std::string x_label = "t";
  std::string y_label;
  bool log_y = false;
  int width = 720;
  int height = 440;
};

/// Static line chart with axes, ticks and a legend. Series with a single
/// point are drawn as a marker. Non-finite points (and non-positive ones on
/// a log axis) are skipped.
std::string render_line_chart(const std::vector<Series>& series, const ChartOptions& options);

}  // namespace semtrack::svg
