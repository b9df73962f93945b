#include "sorsp/render.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

namespace sorsp {

namespace {

constexpr double kCell = 24.0;   // px per grid step, ellipse grid
constexpr double kPixel = 8.0;   // px per grid step, intensity panels
constexpr double kGap = 12.0;
constexpr double kLabel = 16.0;

std::string header(double w, double h) {
  return fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.0f}\" height=\"{:.0f}\" viewBox=\"0 0 {:.0f} {:.0f}\">\n",
      w, h, w, h);
}

// Row j = 0 is the bottom of the image.
double row_top(const GridSpec& g, int j, double cell) { return (g.ny - 1 - j) * cell; }

std::string intensity_panels(std::span<const PolarizationSample> samples, const GridSpec& g) {
  static constexpr char kPols[] = {'H', 'V', 'D', 'A', 'R', 'L'};
  const double pw = g.nx * kPixel, ph = g.ny * kPixel;
  const double w = 3 * pw + 4 * kGap, h = 2 * (ph + kLabel) + 3 * kGap;
  std::vector<std::vector<double>> images;
  double peak = 0.0;
  for (char p : kPols) {
    images.push_back(projection_image(samples, p));
    for (double v : images.back()) peak = std::max(peak, v);
  }
  std::string out = header(w, h);
  out += fmt::format("<rect x=\"0\" y=\"0\" width=\"{:.0f}\" height=\"{:.0f}\" fill=\"#ffffff\"/>\n", w, h);
  for (std::size_t k = 0; k < 6; ++k) {
    const double ox = kGap + static_cast<double>(k % 3) * (pw + kGap);
    const double oy = kGap + static_cast<double>(k / 3) * (ph + kLabel + kGap);
    out += fmt::format("<g id=\"proj-{}\">\n", kPols[k]);
    out += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" font-family=\"sans-serif\" font-size=\"12\">{}</text>\n",
                       ox, oy + 12.0, kPols[k]);
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) {
        const double v = images[k][static_cast<std::size_t>(j * g.nx + i)];
        const int level = peak > 0.0 ? static_cast<int>(std::lround(255.0 * std::clamp(v / peak, 0.0, 1.0))) : 0;
        out += fmt::format(
            "<rect x=\"{:.1f}\" y=\"{:.1f}\" width=\"{:.1f}\" height=\"{:.1f}\" fill=\"#{:02x}{:02x}{:02x}\"/>\n",
            ox + i * kPixel, oy + kLabel + row_top(g, j, kPixel), kPixel, kPixel, level, level, level);
      }
    out += "</g>\n";
  }
  out += "</svg>\n";
  return out;
}

std::string ellipse_grid(std::span<const PolarizationSample> samples, const GridSpec& g) {
  const double w = g.nx * kCell, h = g.ny * kCell;
  double peak = 0.0;
  for (const auto& s : samples) peak = std::max(peak, s.stokes[0]);
  std::string out = header(w, h);
  out += fmt::format("<rect x=\"0\" y=\"0\" width=\"{:.0f}\" height=\"{:.0f}\" fill=\"#000000\"/>\n", w, h);
  // Background intensity, then one ellipse per determinate point sized by its
  // degree of polarization.
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const auto& s = samples[static_cast<std::size_t>(j * g.nx + i)];
      const int level = peak > 0.0 ? static_cast<int>(std::lround(160.0 * std::clamp(s.stokes[0] / peak, 0.0, 1.0))) : 0;
      out += fmt::format("<rect x=\"{:.1f}\" y=\"{:.1f}\" width=\"{:.1f}\" height=\"{:.1f}\" fill=\"#{:02x}{:02x}{:02x}\"/>\n",
                         i * kCell, row_top(g, j, kCell), kCell, kCell, level, level, level);
    }
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const auto& s = samples[static_cast<std::size_t>(j * g.nx + i)];
      if (!s.determinate) continue;
      const double cx = (i + 0.5) * kCell, cy = row_top(g, j, kCell) + 0.5 * kCell;
      const double a = 0.45 * kCell * s.dop;
      const double b = a * std::abs(s.ellipticity);
      // SVG y points down, so a counterclockwise angle becomes negative.
      const double deg = -s.orientation * 180.0 / std::numbers::pi;
      const char* color = s.ellipticity > 1e-6 ? "#ff4040" : (s.ellipticity < -1e-6 ? "#4080ff" : "#ffffff");
      if (b < 1e-6 * kCell) {
        const double c = std::cos(-s.orientation), sn = std::sin(-s.orientation);
        out += fmt::format(
            "<line x1=\"{:.3f}\" y1=\"{:.3f}\" x2=\"{:.3f}\" y2=\"{:.3f}\" stroke=\"{}\" stroke-width=\"1.5\"/>\n",
            cx - a * c, cy - a * sn, cx + a * c, cy + a * sn, color);
      } else {
        out += fmt::format(
            "<ellipse cx=\"{:.3f}\" cy=\"{:.3f}\" rx=\"{:.3f}\" ry=\"{:.3f}\" transform=\"rotate({:.3f} {:.3f} {:.3f})\" "
            "fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\"/>\n",
            cx, cy, a, b, deg, cx, cy, color);
      }
    }
  out += "</svg>\n";
  return out;
}

}  // namespace

RenderStyle render_style_from_string(const std::string& s) {
  if (s == "intensity-projections") return RenderStyle::intensity_projections;
  if (s == "ellipse-grid") return RenderStyle::ellipse_grid;
  throw std::invalid_argument(fmt::format("unknown render style '{}'", s));
}

std::string to_string(RenderStyle s) {
  return s == RenderStyle::intensity_projections ? "intensity-projections" : "ellipse-grid";
}

std::vector<double> projection_image(std::span<const PolarizationSample> samples, char pol) {
  int idx = 0, sign = 1;
  switch (pol) {
    case 'H': idx = 1; sign = 1; break;
    case 'V': idx = 1; sign = -1; break;
    case 'D': idx = 2; sign = 1; break;
    case 'A': idx = 2; sign = -1; break;
    case 'R': idx = 3; sign = 1; break;
    case 'L': idx = 3; sign = -1; break;
    default: throw std::invalid_argument(fmt::format("projection_image: unknown polarization '{}'", pol));
  }
  std::vector<double> out;
  out.reserve(samples.size());
  for (const auto& s : samples)
    out.push_back(std::max(0.0, 0.5 * (s.stokes[0] + sign * s.stokes[static_cast<std::size_t>(idx)])));
  return out;
}

std::vector<PolarizationSample> scan_samples(const ScanResult& scan) {
  std::vector<PolarizationSample> out;
  out.reserve(scan.points.size());
  for (const auto& p : scan.points) out.push_back(p.sample);
  return out;
}

std::string samples_csv(std::span<const PolarizationSample> samples) {
  std::string out = "x_mm,y_mm,S0,S1,S2,S3,dop,orientation_rad,ellipticity,determinate\n";
  for (const auto& s : samples) {
    out += fmt::format("{:.6f},{:.6f},{:.9e},{:.9e},{:.9e},{:.9e},{:.9f},{:.9f},{:.9f},{}\n", s.x, s.y,
                       s.stokes[0], s.stokes[1], s.stokes[2], s.stokes[3], s.dop, s.orientation, s.ellipticity,
                       s.determinate ? 1 : 0);
  }
  return out;
}

std::string render_svg(std::span<const PolarizationSample> samples, const GridSpec& grid, RenderStyle style) {
  grid.validate();
  if (samples.size() != static_cast<std::size_t>(grid.nx * grid.ny)) {
    throw std::invalid_argument(fmt::format("render_svg: {} samples for a {}x{} grid", samples.size(), grid.nx, grid.ny));
  }
  return style == RenderStyle::intensity_projections ? intensity_panels(samples, grid) : ellipse_grid(samples, grid);
}

}  // namespace sorsp
