#pragma once

#include <string>
#include <vector>

#include "ntkspec/measure.hpp"
#include "ntkspec/spectra.hpp"

namespace ntkspec {

struct SvgSeries {
  std::vector<double> x;
  std::vector<double> y;
  std::string color = "#d62728";
  std::string label;
};

struct SvgPlot {
  std::string title;
  std::string xlabel = "eigenvalue";
  std::string ylabel = "density";
  const Histogram* histogram = nullptr;
  std::vector<SvgSeries> series;
  int width = 640;
  int height = 420;
};

SvgSeries series_from_curve(const DensityCurve& curve, std::string label = "limit",
                            std::string color = "#d62728");

std::string render_svg(const SvgPlot& plot);

}  // namespace ntkspec
