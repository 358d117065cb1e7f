#include "stgnit/plot.hpp"

#include <algorithm>
#include <limits>
#include <sstream>

#include "stgnit/numfmt.hpp"

namespace stgnit {

namespace {

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

struct Frame2 {
  double x0, y0, scale, height;
  double px(double x) const { return (x - x0) * scale; }
  double py(double y) const { return height - (y - y0) * scale; }
};

void polyline(std::ostream& os, const Frame2& f, const std::vector<Point2>& pts, const char* style) {
  if (pts.empty()) return;
  os << "<polyline fill=\"none\" " << style << " points=\"";
  for (const auto& p : pts) os << format_double(f.px(p.x)) << "," << format_double(f.py(p.y)) << " ";
  os << "\"/>\n";
}

}  // namespace

std::string render_svg(const PlotWindow& w) {
  double xmin = std::numeric_limits<double>::infinity(), ymin = xmin;
  double xmax = -xmin, ymax = -xmin;
  const auto grow = [&](const Point2& p) {
    xmin = std::min(xmin, p.x);
    ymin = std::min(ymin, p.y);
    xmax = std::max(xmax, p.x);
    ymax = std::max(ymax, p.y);
  };
  for (const auto& t : w.tracks) {
    for (const auto& p : t.history) grow(p);
    for (const auto& p : t.label) grow(p);
    for (const auto& c : t.candidates)
      for (const auto& p : c) grow(p);
  }
  if (w.grid && w.grid->width() > 0 && w.grid->height() > 0) {
    grow(w.grid->origin());
    grow({w.grid->origin().x + w.grid->width() * w.grid->resolution(),
          w.grid->origin().y + w.grid->height() * w.grid->resolution()});
  }
  if (xmin > xmax) xmin = ymin = -1.0, xmax = ymax = 1.0;
  const double margin = 0.5;
  xmin -= margin, ymin -= margin, xmax += margin, ymax += margin;
  const double scale = 600.0 / std::max(xmax - xmin, ymax - ymin);
  const Frame2 f{xmin, ymin, scale, (ymax - ymin) * scale};
  const double width = (xmax - xmin) * scale;

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << format_double(width) << "\" height=\""
     << format_double(f.height) << "\">\n";
  os << "<metadata>" << escape(w.metadata) << "</metadata>\n";
  os << "<title>" << escape(w.title) << "</title>\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (w.grid) {
    const double r = w.grid->resolution();
    os << "<g class=\"grid\" fill=\"#888888\">\n";
    for (int cy = 0; cy < w.grid->height(); ++cy) {
      for (int cx = 0; cx < w.grid->width(); ++cx) {
        if (!w.grid->occupied(cy, cx)) continue;
        const Point2 c = w.grid->cell_center(cy, cx);
        os << "<rect x=\"" << format_double(f.px(c.x - r / 2)) << "\" y=\"" << format_double(f.py(c.y + r / 2))
           << "\" width=\"" << format_double(r * scale) << "\" height=\"" << format_double(r * scale) << "\"/>\n";
      }
    }
    os << "</g>\n";
  }
  for (const auto& t : w.tracks) {
    os << "<g class=\"pedestrian\" id=\"" << escape(t.pedestrian_id) << "\">\n";
    polyline(os, f, t.history, "class=\"history\" stroke=\"#1f4fd6\" stroke-width=\"2\"");
    polyline(os, f, t.label, "class=\"label\" stroke=\"#1a9c3b\" stroke-width=\"2\"");
    for (const auto& c : t.candidates) {
      polyline(os, f, c, "class=\"prediction\" stroke=\"#d62728\" stroke-width=\"1.5\" stroke-dasharray=\"4 3\"");
    }
    os << "</g>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace stgnit
