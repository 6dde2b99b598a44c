#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "formdet/pdf_model.hpp"

namespace formdet {

// 8-bit RGB, row-major, no padding.
struct RasterImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;
};

struct RenderRequest {
  std::string doc_id;
  std::optional<std::string> source_path;
  int page_index = 0;
  PageGeometry geometry;
  double scale = 0;
  int width_px = 0;
  int height_px = 0;
};

// Page rasterization boundary. Implementations must be safe to call from
// several threads at once. Throw RenderFailure per page.
class PageRenderer {
 public:
  virtual ~PageRenderer() = default;
  virtual RasterImage render(const RenderRequest& req) = 0;
};

// White page of the requested size. Keeps the pipeline testable without a
// rasterizer.
class BlankRenderer : public PageRenderer {
 public:
  RasterImage render(const RenderRequest& req) override;
};

// Runs `<executable> <pdf path> <page index> <width px> <height px> <scale>`
// and reads a binary PPM (P6, maxval 255) from its stdout.
class ExternalRenderer : public PageRenderer {
 public:
  explicit ExternalRenderer(std::string executable);
  RasterImage render(const RenderRequest& req) override;
  const std::string& executable() const { return executable_; }

 private:
  std::string executable_;
};

inline constexpr const char* kRendererEnvVar = "FORMDET_RENDERER";

// ExternalRenderer when FORMDET_RENDERER is set and non-empty, else BlankRenderer.
std::unique_ptr<PageRenderer> renderer_from_environment();

// Throws RenderFailure for bad headers or short data.
RasterImage parse_ppm(const std::string& bytes);

// Lossless 8-bit RGB PNG tagged sRGB. Throws IoError.
void write_png(const std::filesystem::path& path, const RasterImage& img);
std::string encode_png(const RasterImage& img);
// Decodes any PNG to 8-bit RGB. Throws IoError.
RasterImage read_png(const std::filesystem::path& path);

}  // namespace formdet
