#include "t2m/plots.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "t2m/error.hpp"

namespace t2m {

namespace {

const char* kColors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"};

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

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", x);
  return buf;
}

}  // namespace

std::string bar_chart_svg(const std::string& title, const std::vector<std::string>& labels,
                          const std::vector<BarSeries>& series, const std::string& y_label) {
  for (const auto& s : series) {
    if (s.values.size() != labels.size()) throw ShapeError("bar_chart_svg: series '" + s.name + "' size mismatch");
  }
  const double width = 120.0 + 60.0 * static_cast<double>(labels.size()) * std::max<std::size_t>(1, series.size()) / 2.0;
  const double height = 360.0, left = 70.0, top = 40.0, bottom = 110.0;
  const double plot_w = width - left - 20.0, plot_h = height - top - bottom;
  double vmax = 0.0;
  for (const auto& s : series) {
    for (double v : s.values) vmax = std::max(vmax, v);
  }
  if (vmax <= 0.0) vmax = 1.0;

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width) << "\" height=\"" << num(height) << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << num(width / 2) << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" << escape(title)
     << "</text>\n";
  os << "<text x=\"16\" y=\"" << num(top + plot_h / 2) << "\" transform=\"rotate(-90 16 " << num(top + plot_h / 2)
     << ")\" text-anchor=\"middle\" font-size=\"12\">" << escape(y_label) << "</text>\n";
  for (int k = 0; k <= 4; ++k) {
    const double v = vmax * k / 4.0;
    const double y = top + plot_h - plot_h * k / 4.0;
    os << "<line x1=\"" << num(left) << "\" x2=\"" << num(left + plot_w) << "\" y1=\"" << num(y) << "\" y2=\""
       << num(y) << "\" stroke=\"#ddd\"/>\n";
    os << "<text x=\"" << num(left - 6) << "\" y=\"" << num(y + 4) << "\" text-anchor=\"end\" font-size=\"10\">"
       << num(v) << "</text>\n";
  }
  const double group = plot_w / static_cast<double>(std::max<std::size_t>(1, labels.size()));
  const double bar = group * 0.8 / static_cast<double>(std::max<std::size_t>(1, series.size()));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double gx = left + group * static_cast<double>(i) + group * 0.1;
    for (std::size_t s = 0; s < series.size(); ++s) {
      const double v = series[s].values[i];
      const double h = plot_h * v / vmax;
      os << "<rect x=\"" << num(gx + bar * static_cast<double>(s)) << "\" y=\"" << num(top + plot_h - h)
         << "\" width=\"" << num(bar) << "\" height=\"" << num(h) << "\" fill=\"" << kColors[s % 6]
         << "\"><title>" << escape(labels[i]) << ": " << v << "</title></rect>\n";
    }
    const double lx = gx + group * 0.4;
    const double ly = top + plot_h + 12;
    os << "<text x=\"" << num(lx) << "\" y=\"" << num(ly) << "\" transform=\"rotate(45 " << num(lx) << " " << num(ly)
       << ")\" font-size=\"11\">" << escape(labels[i]) << "</text>\n";
  }
  for (std::size_t s = 0; s < series.size(); ++s) {
    const double y = height - 16.0 - 14.0 * static_cast<double>(series.size() - 1 - s);
    os << "<rect x=\"" << num(left) << "\" y=\"" << num(y - 9) << "\" width=\"10\" height=\"10\" fill=\""
       << kColors[s % 6] << "\"/><text x=\"" << num(left + 14) << "\" y=\"" << num(y) << "\" font-size=\"11\">"
       << escape(series[s].name) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::string trajectory_svg(const MotionSequence& global, const Skeleton& skeleton, const std::string& title) {
  const std::size_t T = global.length();
  if (T == 0) throw LengthError("trajectory_svg: empty motion");
  const std::size_t up = skeleton.up_axis();
  const std::size_t a = up == 0 ? 1 : 0;
  const std::size_t b = up == 2 ? 1 : 2;
  const auto& parents = skeleton.parents();
  const auto root = static_cast<std::size_t>(std::find(parents.begin(), parents.end(), -1) - parents.begin());
  std::vector<double> xs(T), ys(T);
  for (std::size_t t = 0; t < T; ++t) {
    xs[t] = global.pose(t)[3 * root + a];
    ys[t] = global.pose(t)[3 * root + b];
  }
  const auto [xmin, xmax] = std::minmax_element(xs.begin(), xs.end());
  const auto [ymin, ymax] = std::minmax_element(ys.begin(), ys.end());
  const double span = std::max({*xmax - *xmin, *ymax - *ymin, 1.0});
  const double size = 400.0, pad = 30.0;
  const double scale = (size - 2 * pad) / span;
  auto px = [&](double x) { return pad + (x - *xmin) * scale; };
  auto py = [&](double y) { return size - pad - (y - *ymin) * scale; };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(size) << "\" height=\"" << num(size + 20)
     << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << num(size / 2) << "\" y=\"18\" text-anchor=\"middle\" font-size=\"13\">" << escape(title)
     << "</text>\n<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"2\" points=\"";
  for (std::size_t t = 0; t < T; ++t) os << num(px(xs[t])) << "," << num(py(ys[t]) + 20) << " ";
  os << "\"/>\n";
  const double sx = px(xs.front()), sy = py(ys.front()) + 20;
  os << "<path d=\"M" << num(sx - 6) << " " << num(sy - 6) << " L" << num(sx + 6) << " " << num(sy + 6) << " M"
     << num(sx - 6) << " " << num(sy + 6) << " L" << num(sx + 6) << " " << num(sy - 6)
     << "\" stroke=\"orange\" stroke-width=\"3\"/>\n";
  os << "<circle cx=\"" << num(px(xs.back())) << "\" cy=\"" << num(py(ys.back()) + 20)
     << "\" r=\"6\" fill=\"green\"/>\n</svg>\n";
  return os.str();
}

}  // namespace t2m
