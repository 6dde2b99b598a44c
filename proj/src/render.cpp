#include "formdet/render.hpp"

#include <png.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>

#include "formdet/errors.hpp"

extern char** environ;

namespace formdet {

RasterImage BlankRenderer::render(const RenderRequest& req) {
  if (req.width_px <= 0 || req.height_px <= 0) {
    throw RenderFailure("non-positive image size");
  }
  RasterImage img;
  img.width = req.width_px;
  img.height = req.height_px;
  img.rgb.assign(static_cast<std::size_t>(img.width) * img.height * 3, 0xff);
  return img;
}

ExternalRenderer::ExternalRenderer(std::string executable)
    : executable_(std::move(executable)) {}

namespace {

std::string format_scale(double s) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", s);
  return buf;
}

std::string run_capture(const std::vector<std::string>& argv) {
  int fds[2];
  if (pipe(fds) != 0) throw RenderFailure(std::string("pipe: ") + std::strerror(errno));

  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_addclose(&actions, fds[0]);
  posix_spawn_file_actions_adddup2(&actions, fds[1], STDOUT_FILENO);
  posix_spawn_file_actions_addclose(&actions, fds[1]);

  std::vector<char*> args;
  for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
  args.push_back(nullptr);

  pid_t pid = 0;
  int rc = posix_spawnp(&pid, args[0], &actions, nullptr, args.data(), environ);
  posix_spawn_file_actions_destroy(&actions);
  close(fds[1]);
  if (rc != 0) {
    close(fds[0]);
    throw RenderFailure("cannot start renderer " + argv[0] + ": " + std::strerror(rc));
  }

  std::string out;
  char buf[1 << 16];
  for (;;) {
    ssize_t n = read(fds[0], buf, sizeof buf);
    if (n > 0) {
      out.append(buf, static_cast<std::size_t>(n));
    } else if (n == 0 || errno != EINTR) {
      break;
    }
  }
  close(fds[0]);

  int status = 0;
  while (waitpid(pid, &status, 0) < 0 && errno == EINTR) {
  }
  if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
    throw RenderFailure("renderer exited with status " + std::to_string(status));
  }
  return out;
}

}  // namespace

RasterImage ExternalRenderer::render(const RenderRequest& req) {
  if (!req.source_path) {
    throw RenderFailure("external renderer needs a source file for " + req.doc_id);
  }
  std::string out = run_capture({executable_, *req.source_path,
                                 std::to_string(req.page_index),
                                 std::to_string(req.width_px),
                                 std::to_string(req.height_px), format_scale(req.scale)});
  RasterImage img = parse_ppm(out);
  if (img.width != req.width_px || img.height != req.height_px) {
    throw RenderFailure("renderer returned " + std::to_string(img.width) + "x" +
                        std::to_string(img.height) + ", expected " +
                        std::to_string(req.width_px) + "x" + std::to_string(req.height_px));
  }
  return img;
}

std::unique_ptr<PageRenderer> renderer_from_environment() {
  const char* exe = std::getenv(kRendererEnvVar);
  if (exe != nullptr && *exe != '\0') return std::make_unique<ExternalRenderer>(exe);
  return std::make_unique<BlankRenderer>();
}

RasterImage parse_ppm(const std::string& bytes) {
  std::size_t pos = 0;
  auto skip_ws = [&] {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto read_int = [&]() -> long {
    skip_ws();
    long v = 0;
    std::size_t start = pos;
    while (pos < bytes.size() && std::isdigit(static_cast<unsigned char>(bytes[pos]))) {
      v = v * 10 + (bytes[pos] - '0');
      if (v > 1'000'000) throw RenderFailure("PPM header value too large");
      ++pos;
    }
    if (pos == start) throw RenderFailure("bad PPM header");
    return v;
  };
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6') {
    throw RenderFailure("renderer output is not a binary PPM");
  }
  pos = 2;
  long w = read_int();
  long h = read_int();
  long maxval = read_int();
  if (w <= 0 || h <= 0 || maxval != 255) throw RenderFailure("unsupported PPM header");
  ++pos;  // single whitespace before the raster
  std::size_t need = static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * 3;
  if (bytes.size() < pos + need) throw RenderFailure("truncated PPM raster");
  RasterImage img;
  img.width = static_cast<int>(w);
  img.height = static_cast<int>(h);
  img.rgb.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                 bytes.begin() + static_cast<std::ptrdiff_t>(pos + need));
  return img;
}

namespace {

void png_append(png_structp png, png_bytep data, png_size_t len) {
  auto* out = static_cast<std::string*>(png_get_io_ptr(png));
  out->append(reinterpret_cast<const char*>(data), len);
}

void png_flush_noop(png_structp) {}

void png_fail(png_structp png, png_const_charp msg) {
  auto* err = static_cast<std::string*>(png_get_error_ptr(png));
  *err = msg;
  png_longjmp(png, 1);
}

void png_warn(png_structp, png_const_charp) {}

}  // namespace

std::string encode_png(const RasterImage& img) {
  if (img.width <= 0 || img.height <= 0 ||
      img.rgb.size() != static_cast<std::size_t>(img.width) * img.height * 3) {
    throw IoError("invalid raster for PNG encoding");
  }
  std::string out;
  std::string err;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &err, png_fail, png_warn);
  if (png == nullptr) throw IoError("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (info == nullptr) {
    png_destroy_write_struct(&png, nullptr);
    throw IoError("png_create_info_struct failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("PNG encoding failed: " + err);
  }
  png_set_write_fn(png, &out, png_append, png_flush_noop);
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width),
               static_cast<png_uint_32>(img.height), 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_set_sRGB_gAMA_and_cHRM(png, info, PNG_sRGB_INTENT_PERCEPTUAL);
  png_write_info(png, info);
  const std::size_t stride = static_cast<std::size_t>(img.width) * 3;
  for (int y = 0; y < img.height; ++y) {
    png_write_row(png, const_cast<png_bytep>(img.rgb.data() + stride * y));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

void write_png(const std::filesystem::path& path, const RasterImage& img) {
  std::string data = encode_png(img);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write " + path.string());
  f.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!f) throw IoError("error writing " + path.string());
}

RasterImage read_png(const std::filesystem::path& path) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    throw IoError("cannot read PNG " + path.string() + ": " + image.message);
  }
  image.format = PNG_FORMAT_RGB;
  RasterImage img;
  img.width = static_cast<int>(image.width);
  img.height = static_cast<int>(image.height);
  img.rgb.resize(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, img.rgb.data(), 0, nullptr)) {
    std::string msg = image.message;
    png_image_free(&image);
    throw IoError("cannot decode PNG " + path.string() + ": " + msg);
  }
  return img;
}

}  // namespace formdet
