#include "formdet/transform.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "formdet/errors.hpp"

namespace formdet {

void RenderConfig::validate() const {
  if (target_long_side_px < 64) {
    throw ConfigError("target_long_side_px must be at least 64, got " +
                      std::to_string(target_long_side_px));
  }
}

namespace {

bool swaps_axes(int rotation) { return rotation == 90 || rotation == 270; }

}  // namespace

double compute_render_scale(const PageGeometry& geom, const RenderConfig& cfg) {
  double w = geom.media_box.width();
  double h = geom.media_box.height();
  if (swaps_axes(geom.rotation)) std::swap(w, h);
  return static_cast<double>(cfg.target_long_side_px) / std::max(w, h);
}

ImageSize rendered_size(const PageGeometry& geom, double scale) {
  double w = geom.media_box.width() * scale;
  double h = geom.media_box.height() * scale;
  if (swaps_axes(geom.rotation)) std::swap(w, h);
  return {static_cast<int>(std::lround(w)), static_cast<int>(std::lround(h))};
}

// Rotation is clockwise on display. (u0, v0) are the unrotated pixel
// coordinates; wd, hd the unrotated page size in pixels.
void pdf_point_to_pixel(const PageGeometry& geom, double scale, double x, double y,
                        double& u, double& v) {
  const PdfRect& m = geom.media_box;
  double u0 = (x - m.x0) * scale;
  double v0 = (m.y1 - y) * scale;
  double wd = m.width() * scale;
  double hd = m.height() * scale;
  switch (geom.rotation) {
    case 90: u = hd - v0; v = u0; break;
    case 180: u = wd - u0; v = hd - v0; break;
    case 270: u = v0; v = wd - u0; break;
    default: u = u0; v = v0; break;
  }
}

void pixel_point_to_pdf(const PageGeometry& geom, double scale, double u, double v,
                        double& x, double& y) {
  const PdfRect& m = geom.media_box;
  double wd = m.width() * scale;
  double hd = m.height() * scale;
  double u0 = u, v0 = v;
  switch (geom.rotation) {
    case 90: u0 = v; v0 = hd - u; break;
    case 180: u0 = wd - u; v0 = hd - v; break;
    case 270: u0 = wd - v; v0 = u; break;
    default: break;
  }
  x = m.x0 + u0 / scale;
  y = m.y1 - v0 / scale;
}

PixelBox pdf_rect_to_pixels(const PdfRect& rect, const PageGeometry& geom, double scale) {
  PdfRect r = rect.normalized();
  double u[2], v[2];
  pdf_point_to_pixel(geom, scale, r.x0, r.y0, u[0], v[0]);
  pdf_point_to_pixel(geom, scale, r.x1, r.y1, u[1], v[1]);
  ImageSize size = rendered_size(geom, scale);
  double left = std::clamp(std::min(u[0], u[1]), 0.0, double(size.width));
  double right = std::clamp(std::max(u[0], u[1]), 0.0, double(size.width));
  double top = std::clamp(std::min(v[0], v[1]), 0.0, double(size.height));
  double bottom = std::clamp(std::max(v[0], v[1]), 0.0, double(size.height));
  PixelBox box{left, top, right - left, bottom - top};
  if (std::lround(box.w) == 0 || std::lround(box.h) == 0) {
    throw DegenerateRect("box rounds to zero pixels");
  }
  return box;
}

PdfRect pixels_to_pdf_rect(const PixelBox& box, const PageGeometry& geom, double scale) {
  double x[2], y[2];
  pixel_point_to_pdf(geom, scale, box.x, box.y, x[0], y[0]);
  pixel_point_to_pdf(geom, scale, box.x + box.w, box.y + box.h, x[1], y[1]);
  return PdfRect{x[0], y[0], x[1], y[1]}.normalized();
}

}  // namespace formdet
