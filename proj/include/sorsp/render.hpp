// SVG and CSV renders of transverse polarization profiles. Output depends only
// on the inputs (fixed-precision number formatting), so equal inputs give
// equal bytes.
#pragma once

#include <span>
#include <string>
#include <vector>

#include "sorsp/beams.hpp"

namespace sorsp {

enum class RenderStyle { intensity_projections, ellipse_grid };

RenderStyle render_style_from_string(const std::string& s);
std::string to_string(RenderStyle s);

/// Projected intensity per sample for one of H V D A R L, from the Stokes parameters.
std::vector<double> projection_image(std::span<const PolarizationSample> samples, char pol);

std::vector<PolarizationSample> scan_samples(const ScanResult& scan);

/// x_mm, y_mm, S0, S1, S2, S3, dop, orientation_rad, ellipticity, determinate
std::string samples_csv(std::span<const PolarizationSample> samples);

std::string render_svg(std::span<const PolarizationSample> samples, const GridSpec& grid, RenderStyle style);

}  // namespace sorsp
