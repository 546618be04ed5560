#pragma once

// Minimal standalone SVG charts for run outputs.

#include <string>
#include <vector>

namespace foilrl {

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  bool line = true;  // polyline, otherwise markers
  std::vector<bool> highlight;  // markers only; drawn filled when true
};

struct PlotSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool diagonal = false;  // y = x reference line
};

// Non-finite points are dropped.
std::string svg_chart(const PlotSpec& spec, const std::vector<PlotSeries>& series);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace foilrl
