// Copyright 2026 The NDLP Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "ndlp/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <memory>
#include <vector>

namespace ndlp {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using File = std::unique_ptr<std::FILE, FileCloser>;

// libpng reports errors by longjmp; the message is parked here so the
// caller can raise it once control is back in C++ code.
thread_local char g_png_message[256];

void png_error_handler(png_structp png, png_const_charp msg) {
  std::snprintf(g_png_message, sizeof(g_png_message), "%s", msg);
  png_longjmp(png, 1);
}

void png_warning_handler(png_structp, png_const_charp) {}

}  // namespace

unsigned char quantize(float v) {
  const double c = std::clamp(static_cast<double>(v), 0.0, 1.0);
  return static_cast<unsigned char>(std::floor(c * 255.0 + 0.5));
}

Image load_png(const std::filesystem::path& path) {
  File file(std::fopen(path.c_str(), "rb"));
  if (!file) throw IoError("cannot open " + path.string());
  unsigned char sig[8];
  if (std::fread(sig, 1, 8, file.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0)
    throw IoError(path.string() + " is not a PNG file");

  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_handler, png_warning_handler);
  if (!png) throw IoError("png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  struct Guard {
    png_structp* png;
    png_infop* info;
    ~Guard() { png_destroy_read_struct(png, info, nullptr); }
  } guard{&png, &info};
  if (!info) throw IoError("png_create_info_struct failed");

  std::vector<unsigned char> buffer;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) throw IoError(path.string() + ": " + g_png_message);

  png_init_io(png, file.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  const png_uint_32 width = png_get_image_width(png, info);
  const png_uint_32 height = png_get_image_height(png, info);
  const int depth = png_get_bit_depth(png, info);
  const int color = png_get_color_type(png, info);
  if (depth != 8)
    throw IoError(path.string() + ": unsupported bit depth " + std::to_string(depth));
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_gray_to_rgb(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  png_read_update_info(png, info);
  if (png_get_channels(png, info) != 3) throw IoError(path.string() + ": unsupported layout");

  const std::size_t stride = png_get_rowbytes(png, info);
  buffer.resize(stride * height);
  rows.resize(height);
  for (png_uint_32 y = 0; y < height; ++y) rows[y] = buffer.data() + y * stride;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);

  const Index h = height, w = width, plane = h * w;
  Image::Array values(3 * plane);
  for (Index y = 0; y < h; ++y)
    for (Index x = 0; x < w; ++x)
      for (Index c = 0; c < 3; ++c)
        values[c * plane + y * w + x] = static_cast<float>(buffer[y * stride + x * 3 + c]) / 255.0f;
  return Image({3, h, w}, std::move(values));
}

void save_png(const Image& image, const std::filesystem::path& path) {
  NDLP_CHECK_SHAPE(image.rank() == 3 && (image.dim(0) == 3 || image.dim(0) == 1),
                   "save_png: expected [3,H,W] or [1,H,W], got ", to_string(image.shape()));
  const Index channels = image.dim(0), h = image.dim(1), w = image.dim(2), plane = h * w;

  File file(std::fopen(path.c_str(), "wb"));
  if (!file) throw IoError("cannot write " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_handler,
                                            png_warning_handler);
  if (!png) throw IoError("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  struct Guard {
    png_structp* png;
    png_infop* info;
    ~Guard() { png_destroy_write_struct(png, info); }
  } guard{&png, &info};
  if (!info) throw IoError("png_create_info_struct failed");

  std::vector<unsigned char> row(static_cast<std::size_t>(w * channels));
  if (setjmp(png_jmpbuf(png))) throw IoError(path.string() + ": " + g_png_message);

  png_init_io(png, file.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), 8,
               channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (Index y = 0; y < h; ++y) {
    for (Index x = 0; x < w; ++x)
      for (Index c = 0; c < channels; ++c)
        row[x * channels + c] = quantize(image.values()[c * plane + y * w + x]);
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
}

}  // namespace ndlp
