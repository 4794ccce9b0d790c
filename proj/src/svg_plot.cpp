#include "hotdef/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace hotdef {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 420.0;
constexpr double kLeft = 60.0;
constexpr double kRight = 130.0;
constexpr double kTop = 20.0;
constexpr double kBottom = 40.0;

constexpr std::array<const char*, 4> kColors{"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", x);
  return buf;
}

std::string label(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", x);
  return buf;
}

struct Frame {
  double x0, x1, y0, y1;

  double px(double x) const {
    return kLeft + (x - x0) / (x1 - x0) * (kWidth - kLeft - kRight);
  }
  double py(double y) const {
    return kHeight - kBottom - (y - y0) / (y1 - y0) * (kHeight - kTop - kBottom);
  }
};

Frame padded(double x0, double x1, double y0, double y1) {
  if (!(x1 > x0)) {
    x0 -= 0.5;
    x1 += 0.5;
  }
  if (!(y1 > y0)) {
    y0 -= 0.5;
    y1 += 0.5;
  }
  const double pad = 0.05 * (y1 - y0);
  return {x0, x1, y0 - pad, y1 + pad};
}

std::string header() {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) + "\" height=\"" +
         num(kHeight) + "\" font-family=\"sans-serif\" font-size=\"11\">\n"
         "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
}

std::string axes(const Frame& f, const std::string& xlabel) {
  std::string out;
  const double left = f.px(f.x0), right = f.px(f.x1);
  const double bottom = f.py(f.y0), top = f.py(f.y1);
  out += "<path d=\"M" + num(left) + " " + num(top) + " V" + num(bottom) + " H" + num(right) +
         "\" stroke=\"black\" fill=\"none\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double x = f.x0 + (f.x1 - f.x0) * k / 4.0;
    const double y = f.y0 + (f.y1 - f.y0) * k / 4.0;
    out += "<text x=\"" + num(f.px(x)) + "\" y=\"" + num(bottom + 15) +
           "\" text-anchor=\"middle\">" + label(x) + "</text>\n";
    out += "<text x=\"" + num(left - 6) + "\" y=\"" + num(f.py(y) + 4) +
           "\" text-anchor=\"end\">" + label(y) + "</text>\n";
  }
  out += "<text x=\"" + num(0.5 * (left + right)) + "\" y=\"" + num(kHeight - 6) +
         "\" text-anchor=\"middle\">" + xlabel + "</text>\n";
  return out;
}

std::string legend_entry(int slot, const char* color, const std::string& text) {
  const double y = kTop + 14.0 + 16.0 * slot;
  const double x = kWidth - kRight + 12.0;
  return "<rect x=\"" + num(x) + "\" y=\"" + num(y - 8) + "\" width=\"10\" height=\"10\" fill=\"" +
         color + "\"/>\n<text x=\"" + num(x + 16) + "\" y=\"" + num(y + 1) + "\">" + text +
         "</text>\n";
}

std::vector<std::size_t> series_for(PlotKind kind) {
  switch (kind) {
    case PlotKind::alignments: return {2, 3, 4, 5};
    case PlotKind::eigenvalues: return {0, 1};
    case PlotKind::eta: return {6};
  }
  return {};
}

}  // namespace

PlotKind parse_plot_kind(const std::string& name) {
  if (name == "alignments") return PlotKind::alignments;
  if (name == "eigenvalues") return PlotKind::eigenvalues;
  if (name == "eta") return PlotKind::eta;
  throw std::invalid_argument("unknown plot kind '" + name + "'");
}

std::string to_string(PlotKind kind) {
  switch (kind) {
    case PlotKind::alignments: return "alignments";
    case PlotKind::eigenvalues: return "eigenvalues";
    case PlotKind::eta: return "eta";
  }
  return "unknown";
}

std::string render_sweep_svg(const std::vector<SweepRow>& rows, PlotKind kind) {
  if (rows.empty()) throw std::invalid_argument("no sweep rows to plot");
  const std::vector<std::size_t> series = series_for(kind);

  double x0 = rows.front().beta1, x1 = x0;
  double y0 = INFINITY, y1 = -INFINITY;
  const auto extend = [&](double y) {
    if (std::isfinite(y)) {
      y0 = std::min(y0, y);
      y1 = std::max(y1, y);
    }
  };
  for (const SweepRow& row : rows) {
    x0 = std::min(x0, row.beta1);
    x1 = std::max(x1, row.beta1);
    for (std::size_t s : series) {
      const double sd = std::isfinite(row.std[s]) ? row.std[s] : 0.0;
      extend(row.mean[s] - sd);
      extend(row.mean[s] + sd);
      if (row.prediction) extend((*row.prediction)[s]);
    }
  }
  if (!std::isfinite(y0)) throw std::invalid_argument("sweep rows contain no finite values");
  const Frame f = padded(x0, x1, y0, y1);

  std::string out = header() + axes(f, "beta_1");
  for (std::size_t k = 0; k < series.size(); ++k) {
    const std::size_t s = series[k];
    const char* color = kColors[k % kColors.size()];
    std::string path;
    for (const SweepRow& row : rows) {
      if (!row.prediction) continue;
      path += (path.empty() ? "M" : " L") + num(f.px(row.beta1)) + " " +
              num(f.py((*row.prediction)[s]));
    }
    if (!path.empty()) {
      out += "<path d=\"" + path + "\" stroke=\"" + color + "\" fill=\"none\"/>\n";
    }
    for (const SweepRow& row : rows) {
      const double m = row.mean[s];
      if (!std::isfinite(m)) continue;
      const double sd = std::isfinite(row.std[s]) ? row.std[s] : 0.0;
      const double x = f.px(row.beta1);
      out += "<line x1=\"" + num(x) + "\" y1=\"" + num(f.py(m - sd)) + "\" x2=\"" + num(x) +
             "\" y2=\"" + num(f.py(m + sd)) + "\" stroke=\"" + color + "\"/>\n";
      out += "<circle cx=\"" + num(x) + "\" cy=\"" + num(f.py(m)) + "\" r=\"3\" fill=\"" + color +
             "\"/>\n";
    }
    out += legend_entry(static_cast<int>(k), color, kStatNames[s]);
  }
  out += "</svg>\n";
  return out;
}

std::string render_spectrum_svg(const SpectrumResult& result) {
  if (result.histogram.empty() || result.bin_edges.size() != result.histogram.size() + 1) {
    throw std::invalid_argument("spectrum histogram is empty or malformed");
  }
  double top = 0.0;
  for (double v : result.histogram) top = std::max(top, v);
  for (double v : result.semicircle) top = std::max(top, v);
  const Frame f{result.bin_edges.front(), result.bin_edges.back(), 0.0,
                top > 0.0 ? 1.05 * top : 1.0};

  std::string out = header() + axes(f, "eigenvalue");
  for (std::size_t b = 0; b < result.histogram.size(); ++b) {
    const double left = f.px(result.bin_edges[b]);
    const double right = f.px(result.bin_edges[b + 1]);
    const double y = f.py(result.histogram[b]);
    out += "<rect x=\"" + num(left) + "\" y=\"" + num(y) + "\" width=\"" + num(right - left) +
           "\" height=\"" + num(f.py(0.0) - y) + "\" fill=\"#9ecae1\" stroke=\"white\"/>\n";
  }
  std::string path;
  for (std::size_t b = 0; b < result.semicircle.size(); ++b) {
    const double x = 0.5 * (result.bin_edges[b] + result.bin_edges[b + 1]);
    path += (path.empty() ? "M" : " L") + num(f.px(x)) + " " + num(f.py(result.semicircle[b]));
  }
  out += "<path d=\"" + path + "\" stroke=\"" + kColors[1] + "\" fill=\"none\" stroke-width=\"2\"/>\n";
  out += legend_entry(0, "#9ecae1", "empirical");
  out += legend_entry(1, kColors[1], "semicircle");
  out += "</svg>\n";
  return out;
}

void emit_plot(const std::vector<SweepRow>& rows, PlotKind kind,
               const std::filesystem::path& path) {
  write_text_file(path, render_sweep_svg(rows, kind));
}

void emit_plot(const SpectrumResult& result, const std::filesystem::path& path) {
  write_text_file(path, render_spectrum_svg(result));
}

}  // namespace hotdef
