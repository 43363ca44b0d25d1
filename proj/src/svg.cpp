#include "ntkspec/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "ntkspec/errors.hpp"

namespace ntkspec {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

// Round step 1, 2 or 5 times a power of ten giving about `target` ticks.
double nice_step(double span, int target) {
  const double raw = span / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    if (m * mag >= raw) return m * mag;
  }
  return 10.0 * mag;
}

}  // namespace

SvgSeries series_from_curve(const DensityCurve& curve, std::string label, std::string color) {
  SvgSeries s;
  s.x = curve.grid;
  s.y = curve.density;
  s.label = std::move(label);
  s.color = std::move(color);
  return s;
}

std::string render_svg(const SvgPlot& plot) {
  double xmin = INFINITY, xmax = -INFINITY, ymax = 0.0;
  if (plot.histogram) {
    const auto& h = *plot.histogram;
    xmin = std::min(xmin, h.edges.front());
    xmax = std::max(xmax, h.edges.back());
    for (double d : h.density) ymax = std::max(ymax, d);
  }
  for (const auto& s : plot.series) {
    if (s.x.size() != s.y.size()) throw InvalidArgument("svg series x and y differ in length");
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      xmin = std::min(xmin, s.x[i]);
      xmax = std::max(xmax, s.x[i]);
      if (std::isfinite(s.y[i])) ymax = std::max(ymax, s.y[i]);
    }
  }
  if (!std::isfinite(xmin) || !(xmax > xmin)) {
    xmin = 0.0;
    xmax = 1.0;
  }
  if (!(ymax > 0.0)) ymax = 1.0;
  ymax *= 1.05;

  const double left = 60, right = 20, top = 36, bottom = 48;
  const double pw = plot.width - left - right;
  const double ph = plot.height - top - bottom;
  auto sx = [&](double x) { return left + (x - xmin) / (xmax - xmin) * pw; };
  auto sy = [&](double y) { return top + ph - std::clamp(y / ymax, 0.0, 1.0) * ph; };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << plot.width << "\" height=\"" << plot.height
    << "\" viewBox=\"0 0 " << plot.width << ' ' << plot.height << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!plot.title.empty()) {
    o << "<text x=\"" << num(plot.width / 2.0) << "\" y=\"20\" text-anchor=\"middle\" font-size=\"13\">"
      << escape(plot.title) << "</text>\n";
  }
  if (plot.histogram) {
    const auto& h = *plot.histogram;
    o << "<g fill=\"#9ecae1\" stroke=\"#4a7fa8\" stroke-width=\"0.4\">\n";
    for (std::size_t b = 0; b < h.density.size(); ++b) {
      if (h.density[b] <= 0.0) continue;
      const double x0 = sx(h.edges[b]), x1 = sx(h.edges[b + 1]), y = sy(h.density[b]);
      o << "<rect x=\"" << num(x0) << "\" y=\"" << num(y) << "\" width=\"" << num(x1 - x0) << "\" height=\""
        << num(top + ph - y) << "\"/>\n";
    }
    o << "</g>\n";
  }
  for (const auto& s : plot.series) {
    o << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.y[i])) continue;
      o << (i ? " " : "") << num(sx(s.x[i])) << ',' << num(sy(s.y[i]));
    }
    o << "\"/>\n";
  }

  o << "<g stroke=\"black\" stroke-width=\"1\">\n";
  o << "<line x1=\"" << num(left) << "\" y1=\"" << num(top + ph) << "\" x2=\"" << num(left + pw) << "\" y2=\""
    << num(top + ph) << "\"/>\n";
  o << "<line x1=\"" << num(left) << "\" y1=\"" << num(top) << "\" x2=\"" << num(left) << "\" y2=\""
    << num(top + ph) << "\"/>\n";
  o << "</g>\n";
  const double xs = nice_step(xmax - xmin, 6);
  for (double t = std::ceil(xmin / xs) * xs; t <= xmax + 1e-9 * xs; t += xs) {
    o << "<line x1=\"" << num(sx(t)) << "\" y1=\"" << num(top + ph) << "\" x2=\"" << num(sx(t)) << "\" y2=\""
      << num(top + ph + 4) << "\" stroke=\"black\"/>\n";
    o << "<text x=\"" << num(sx(t)) << "\" y=\"" << num(top + ph + 16) << "\" text-anchor=\"middle\">"
      << tick_label(std::abs(t) < 1e-12 * xs ? 0.0 : t) << "</text>\n";
  }
  const double ys = nice_step(ymax, 5);
  for (double t = 0.0; t <= ymax; t += ys) {
    o << "<line x1=\"" << num(left - 4) << "\" y1=\"" << num(sy(t)) << "\" x2=\"" << num(left) << "\" y2=\""
      << num(sy(t)) << "\" stroke=\"black\"/>\n";
    o << "<text x=\"" << num(left - 6) << "\" y=\"" << num(sy(t) + 4) << "\" text-anchor=\"end\">"
      << tick_label(t) << "</text>\n";
  }
  o << "<text x=\"" << num(left + pw / 2) << "\" y=\"" << num(plot.height - 10.0) << "\" text-anchor=\"middle\">"
    << escape(plot.xlabel) << "</text>\n";
  o << "<text transform=\"translate(14," << num(top + ph / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
    << escape(plot.ylabel) << "</text>\n";
  double ly = top + 8;
  for (const auto& s : plot.series) {
    if (s.label.empty()) continue;
    o << "<line x1=\"" << num(left + pw - 90) << "\" y1=\"" << num(ly) << "\" x2=\"" << num(left + pw - 70)
      << "\" y2=\"" << num(ly) << "\" stroke=\"" << s.color << "\" stroke-width=\"2\"/>\n";
    o << "<text x=\"" << num(left + pw - 65) << "\" y=\"" << num(ly + 4) << "\">" << escape(s.label) << "</text>\n";
    ly += 16;
  }
  o << "</svg>\n";
  return o.str();
}

}  // namespace ntkspec
