#include "mmtomo/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include <json.hpp>

#include "mmtomo/common.hpp"
#include "mmtomo/io.hpp"

namespace mmt::plot {

using nlohmann::json;

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

}  // namespace

void plot_histogram_svg(const fs::path& report_path, const fs::path& out_path) {
  std::string text = io::read_file(report_path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::io, "malformed report at byte " + std::to_string(e.byte) +
                            ": " + std::string(e.what()));
  }
  std::vector<double> edges = j.at("bin_edges").get<std::vector<double>>();
  std::vector<int> counts = j.at("histogram").get<std::vector<int>>();
  double truncation = j.at("truncation").get<double>();
  require(edges.size() == counts.size() + 1 || counts.empty(), ErrorKind::io,
          "inconsistent histogram arrays in report");

  const double width = 640.0, height = 400.0;
  const double ml = 60.0, mr = 20.0, mt = 20.0, mb = 48.0;
  const double pw = width - ml - mr, ph = height - mt - mb;
  double x_lo = -truncation - 1.0, x_hi = truncation + 1.0;
  int max_count = 1;
  for (int c : counts) max_count = std::max(max_count, c);

  auto sx = [&](double v) { return ml + (v - x_lo) / (x_hi - x_lo) * pw; };
  auto sy = [&](double v) { return mt + ph - v / max_count * ph; };

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"400\" "
         "viewBox=\"0 0 640 400\">\n";
  svg += "<rect width=\"640\" height=\"400\" fill=\"white\"/>\n";
  // axes
  svg += "<line x1=\"" + fmt(ml) + "\" y1=\"" + fmt(mt + ph) + "\" x2=\"" +
         fmt(ml + pw) + "\" y2=\"" + fmt(mt + ph) +
         "\" stroke=\"black\" stroke-width=\"1\"/>\n";
  svg += "<line x1=\"" + fmt(ml) + "\" y1=\"" + fmt(mt) + "\" x2=\"" + fmt(ml) +
         "\" y2=\"" + fmt(mt + ph) + "\" stroke=\"black\" stroke-width=\"1\"/>\n";
  // bars
  for (std::size_t b = 0; b < counts.size(); ++b) {
    if (counts[b] == 0) continue;
    double x0 = sx(edges[b]);
    double x1 = sx(edges[b + 1]);
    double y = sy(counts[b]);
    svg += "<rect x=\"" + fmt(x0) + "\" y=\"" + fmt(y) + "\" width=\"" +
           fmt(x1 - x0) + "\" height=\"" + fmt(mt + ph - y) +
           "\" fill=\"#4878a8\" stroke=\"none\"/>\n";
  }
  // truncation bounds
  for (double t : {-truncation, truncation}) {
    svg += "<line x1=\"" + fmt(sx(t)) + "\" y1=\"" + fmt(mt) + "\" x2=\"" +
           fmt(sx(t)) + "\" y2=\"" + fmt(mt + ph) +
           "\" stroke=\"#c03030\" stroke-width=\"1\" stroke-dasharray=\"4 3\"/>\n";
    svg += "<text x=\"" + fmt(sx(t)) + "\" y=\"" + fmt(mt + ph + 16) +
           "\" font-family=\"sans-serif\" font-size=\"11\" fill=\"#c03030\" "
           "text-anchor=\"middle\">" +
           fmt(t) + "</text>\n";
  }
  // x ticks every 5 m
  for (double t = std::ceil(x_lo / 5.0) * 5.0; t <= x_hi; t += 5.0) {
    svg += "<line x1=\"" + fmt(sx(t)) + "\" y1=\"" + fmt(mt + ph) + "\" x2=\"" +
           fmt(sx(t)) + "\" y2=\"" + fmt(mt + ph + 4) +
           "\" stroke=\"black\" stroke-width=\"1\"/>\n";
    svg += "<text x=\"" + fmt(sx(t)) + "\" y=\"" + fmt(mt + ph + 30) +
           "\" font-family=\"sans-serif\" font-size=\"11\" "
           "text-anchor=\"middle\">" +
           fmt(t) + "</text>\n";
  }
  // y max label and axis titles
  svg += "<text x=\"" + fmt(ml - 6) + "\" y=\"" + fmt(mt + 10) +
         "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">" +
         std::to_string(max_count) + "</text>\n";
  svg += "<text x=\"" + fmt(ml + pw / 2) + "\" y=\"" + fmt(height - 6) +
         "\" font-family=\"sans-serif\" font-size=\"12\" "
         "text-anchor=\"middle\">height difference (m)</text>\n";
  svg += "</svg>\n";

  io::atomic_write(out_path, svg);
}

void plot_height_raster_ppm(const fs::path& scatterer_base_path,
                            const fs::path& out_path) {
  io::ScattererMeta meta;
  inv::ScattererRaster raster = io::read_scatterers(scatterer_base_path, &meta);
  const double sin_inc =
      std::sin(meta.incidence_deg * 3.14159265358979323846 / 180.0);

  double max_h = 1.0;
  std::vector<double> heights(raster.size(), -1.0);
  for (std::size_t i = 0; i < raster.size(); ++i) {
    const auto& r = raster[i];
    if (r.failed || r.order < 1) continue;
    double top = r.scatterers[0].elevation;
    if (r.order == 2) top = std::max(top, r.scatterers[1].elevation);
    heights[i] = top * sin_inc;
    max_h = std::max(max_h, heights[i]);
  }

  std::string ppm = "P6\n" + std::to_string(raster.width()) + " " +
                    std::to_string(raster.height()) + "\n255\n";
  ppm.reserve(ppm.size() + raster.size() * 3);
  for (std::size_t i = 0; i < raster.size(); ++i) {
    unsigned char rgb[3];
    if (heights[i] < 0.0) {
      rgb[0] = rgb[1] = rgb[2] = 24;  // no detection: near-black
    } else {
      double t = std::clamp(heights[i] / max_h, 0.0, 1.0);
      // blue -> cyan -> yellow -> red ramp
      double r = std::clamp(std::min(4.0 * t - 1.5, -4.0 * t + 4.5), 0.0, 1.0);
      double g = std::clamp(std::min(4.0 * t + 0.5, -4.0 * t + 3.5), 0.0, 1.0);
      double b = std::clamp(std::min(4.0 * t + 1.5, -4.0 * t + 2.5), 0.0, 1.0);
      rgb[0] = static_cast<unsigned char>(r * 255.0);
      rgb[1] = static_cast<unsigned char>(g * 255.0);
      rgb[2] = static_cast<unsigned char>(b * 255.0);
    }
    ppm.append(reinterpret_cast<char*>(rgb), 3);
  }
  io::atomic_write(out_path, ppm);
}

}  // namespace mmt::plot
