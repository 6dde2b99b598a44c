#pragma once

#include "formdet/geometry.hpp"
#include "formdet/pdf_model.hpp"

namespace formdet {

struct RenderConfig {
  int target_long_side_px = 1216;

  // Throws ConfigError.
  void validate() const;
  bool operator==(const RenderConfig&) const = default;
};

struct ImageSize {
  int width = 0;
  int height = 0;
  bool operator==(const ImageSize&) const = default;
};

// Pixels per point: target over the longer side of the displayed (rotated) page.
double compute_render_scale(const PageGeometry& geom, const RenderConfig& cfg);

// Rendered image dimensions: displayed page size times scale, rounded.
ImageSize rendered_size(const PageGeometry& geom, double scale);

// Maps a user-space point to displayed-page pixel coordinates (unrounded).
void pdf_point_to_pixel(const PageGeometry& geom, double scale, double x, double y,
                        double& u, double& v);
void pixel_point_to_pdf(const PageGeometry& geom, double scale, double u, double v,
                        double& x, double& y);

// Maps all four corners and takes their bounding box, then clips to the
// rendered image. Throws DegenerateRect when the result is under half a pixel
// in either dimension.
PixelBox pdf_rect_to_pixels(const PdfRect& rect, const PageGeometry& geom, double scale);

// Inverse of pdf_rect_to_pixels (up to the clip).
PdfRect pixels_to_pdf_rect(const PixelBox& box, const PageGeometry& geom, double scale);

}  // namespace formdet
