// Copyright 2026 lfnr authors
// SPDX-License-Identifier: Apache-2.0

#include "lfnr/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <vector>

namespace lfnr {

Tensor load_png(const std::string& path) {
  png_image img;
  std::memset(&img, 0, sizeof(img));
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.c_str()))
    throw IoError("load_png: cannot read " + path + ": " + img.message);
  img.format = PNG_FORMAT_RGB;
  std::vector<png_byte> buf(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, buf.data(), 0, nullptr)) {
    png_image_free(&img);
    throw IoError("load_png: decode failed for " + path + ": " + img.message);
  }
  int64_t h = img.height, w = img.width;
  Tensor out = Tensor::zeros({3, h, w});
  float* p = out.data<float>();
  for (int64_t y = 0; y < h; ++y)
    for (int64_t x = 0; x < w; ++x)
      for (int64_t c = 0; c < 3; ++c)
        p[(c * h + y) * w + x] =
            static_cast<float>(buf[static_cast<size_t>((y * w + x) * 3 + c)]) /
            255.0f;
  return out;
}

void save_png(const std::string& path, const Tensor& image) {
  if (image.ndim() != 3 || image.dim(0) != 3)
    throw ShapeError("save_png: expected (3,H,W), got " +
                     shape_str(image.shape()));
  Tensor img32 = image.dtype() == DType::F32 ? image : image.to(DType::F32);
  int64_t h = img32.dim(1), w = img32.dim(2);
  const float* p = img32.data<float>();
  std::vector<png_byte> buf(static_cast<size_t>(h * w * 3));
  for (int64_t y = 0; y < h; ++y)
    for (int64_t x = 0; x < w; ++x)
      for (int64_t c = 0; c < 3; ++c) {
        float v = p[(c * h + y) * w + x];
        v = std::min(1.0f, std::max(0.0f, v));
        buf[static_cast<size_t>((y * w + x) * 3 + c)] =
            static_cast<png_byte>(std::lround(v * 255.0f));
      }
  png_image img;
  std::memset(&img, 0, sizeof(img));
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(w);
  img.height = static_cast<png_uint_32>(h);
  img.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&img, path.c_str(), 0, buf.data(), 0, nullptr))
    throw IoError("save_png: cannot write " + path + ": " + img.message);
}

namespace {

template <typename T>
void box4_kernel(const T* sp, T* op, int64_t c, int64_t h, int64_t w) {
  for (int64_t ci = 0; ci < c; ++ci)
    for (int64_t y = 0; y < h / 4; ++y)
      for (int64_t x = 0; x < w / 4; ++x) {
        double acc = 0.0;
        for (int64_t i = 0; i < 4; ++i)
          for (int64_t j = 0; j < 4; ++j)
            acc += sp[(ci * h + 4 * y + i) * w + 4 * x + j];
        op[(ci * (h / 4) + y) * (w / 4) + x] = static_cast<T>(acc / 16.0);
      }
}

}  // namespace

Tensor box_downsample4(const Tensor& image) {
  if (image.ndim() != 3) throw ShapeError("box_downsample4: expected (C,H,W)");
  int64_t c = image.dim(0), h = image.dim(1), w = image.dim(2);
  if (h % 4 != 0 || w % 4 != 0)
    throw ShapeError("box_downsample4: extents must be divisible by 4");
  Tensor out = Tensor::zeros({c, h / 4, w / 4}, image.dtype());
  if (image.dtype() == DType::F32)
    box4_kernel(image.data<float>(), out.data<float>(), c, h, w);
  else
    box4_kernel(image.data<double>(), out.data<double>(), c, h, w);
  return out;
}

Tensor grayscale_visual(const Tensor& map) {
  if (map.ndim() != 2) throw ShapeError("grayscale_visual: expected (H,W)");
  Tensor src = map.dtype() == DType::F32 ? map : map.to(DType::F32);
  int64_t h = src.dim(0), w = src.dim(1);
  const float* p = src.data<float>();
  float lo = p[0], hi = p[0];
  for (int64_t i = 0; i < h * w; ++i) {
    lo = std::min(lo, p[i]);
    hi = std::max(hi, p[i]);
  }
  float span = hi - lo > 1e-12f ? hi - lo : 1.0f;
  Tensor out = Tensor::zeros({3, h, w});
  float* o = out.data<float>();
  for (int64_t i = 0; i < h * w; ++i) {
    float v = (p[i] - lo) / span;
    o[i] = v;
    o[h * w + i] = v;
    o[2 * h * w + i] = v;
  }
  return out;
}

}  // namespace lfnr
