// Copyright 2026 lfnr authors
// SPDX-License-Identifier: Apache-2.0

#include "lfnr/scenes.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>

#include "lfnr/image.hpp"
#include "nlohmann/json.hpp"

namespace lfnr {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

Scene generate_scene(uint64_t seed) {
  Rng rng(seed);
  Scene scene;
  int n = 1 + static_cast<int>(rng.uniform_int(8));
  scene.primitives.reserve(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    Primitive prim;
    prim.kind = rng.uniform_int(2) == 0 ? Primitive::Kind::Sphere
                                        : Primitive::Kind::Box;
    if (prim.kind == Primitive::Kind::Sphere) {
      double r = rng.uniform(0.05, 0.18);
      prim.size = Vec3(r, r, r);
    } else {
      prim.size = Vec3(rng.uniform(0.05, 0.18), rng.uniform(0.05, 0.18),
                       rng.uniform(0.05, 0.18));
    }
    for (int a = 0; a < 3; ++a) {
      double margin = 0.5 - prim.size[a];
      prim.center[a] = rng.uniform(-margin, margin);
    }
    prim.albedo = Vec3(rng.uniform(0.05, 0.95), rng.uniform(0.05, 0.95),
                       rng.uniform(0.05, 0.95));
    scene.primitives.push_back(prim);
  }
  scene.background = Vec3(rng.uniform(0.1, 0.9), rng.uniform(0.1, 0.9),
                          rng.uniform(0.1, 0.9));
  return scene;
}

uint64_t scene_hash(const Scene& scene) {
  uint64_t h = 0xcbf29ce484222325ull;
  auto feed = [&h](const void* data, size_t n) {
    const unsigned char* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < n; ++i) {
      h ^= p[i];
      h *= 0x100000001b3ull;
    }
  };
  auto feed_vec = [&feed](const Vec3& v) {
    double d[3] = {v.x(), v.y(), v.z()};
    feed(d, sizeof(d));
  };
  for (const Primitive& p : scene.primitives) {
    unsigned char kind = p.kind == Primitive::Kind::Sphere ? 0 : 1;
    feed(&kind, 1);
    feed_vec(p.center);
    feed_vec(p.size);
    feed_vec(p.albedo);
  }
  feed_vec(scene.background);
  return h;
}

namespace {

// Nearest positive hit along o + t*d; returns t or +inf.
double hit_sphere(const Vec3& o, const Vec3& d, const Vec3& c, double r) {
  Vec3 oc = o - c;
  double b = oc.dot(d);
  double disc = b * b - (oc.squaredNorm() - r * r);
  if (disc < 0.0) return std::numeric_limits<double>::infinity();
  double s = std::sqrt(disc);
  double t = -b - s;
  if (t > 1e-9) return t;
  t = -b + s;
  if (t > 1e-9) return t;
  return std::numeric_limits<double>::infinity();
}

double hit_box(const Vec3& o, const Vec3& d, const Vec3& c,
               const Vec3& half) {
  double tmin = -std::numeric_limits<double>::infinity();
  double tmax = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    double lo = c[a] - half[a], hi = c[a] + half[a];
    if (std::fabs(d[a]) < 1e-15) {
      if (o[a] < lo || o[a] > hi)
        return std::numeric_limits<double>::infinity();
      continue;
    }
    double t0 = (lo - o[a]) / d[a], t1 = (hi - o[a]) / d[a];
    if (t0 > t1) std::swap(t0, t1);
    tmin = std::max(tmin, t0);
    tmax = std::min(tmax, t1);
    if (tmin > tmax) return std::numeric_limits<double>::infinity();
  }
  if (tmin > 1e-9) return tmin;
  if (tmax > 1e-9) return tmax;
  return std::numeric_limits<double>::infinity();
}

}  // namespace

Tensor raytrace_gt(const Scene& scene, const Camera& cam) {
  cam.validate();
  int64_t h = cam.height, w = cam.width;
  Tensor out = Tensor::zeros({3, h, w});
  float* p = out.data<float>();
  for (int64_t u = 1; u <= h; ++u)
    for (int64_t v = 1; v <= w; ++v) {
      Vec3 d = ray_direction(cam, static_cast<double>(u) - 0.5,
                             static_cast<double>(v) - 0.5);
      double best = std::numeric_limits<double>::infinity();
      Vec3 color = scene.background;
      for (const Primitive& prim : scene.primitives) {
        double t = prim.kind == Primitive::Kind::Sphere
                       ? hit_sphere(cam.T, d, prim.center, prim.size.x())
                       : hit_box(cam.T, d, prim.center, prim.size);
        if (t < best) {
          best = t;
          color = prim.albedo;
        }
      }
      for (int64_t c = 0; c < 3; ++c)
        p[(c * h + u - 1) * w + v - 1] = static_cast<float>(color[c]);
    }
  return out;
}

std::vector<Camera> camera_ring(int n_views, double radius,
                                double elevation_deg, const Vec3& look_at,
                                int height, int width, double focal_rel,
                                double az_offset_deg) {
  if (n_views < 1) throw ConfigError("camera_ring: need n >= 1");
  std::vector<Camera> cams;
  cams.reserve(static_cast<size_t>(n_views));
  const double kPi = 3.14159265358979323846;
  double el = elevation_deg * kPi / 180.0;
  double f = focal_rel * static_cast<double>(std::min(height, width));
  for (int i = 0; i < n_views; ++i) {
    double az = az_offset_deg * kPi / 180.0 +
                2.0 * kPi * static_cast<double>(i) /
                    static_cast<double>(n_views);
    Camera cam;
    cam.T = look_at + radius * Vec3(std::cos(el) * std::cos(az), std::sin(el),
                                    std::cos(el) * std::sin(az));
    Vec3 zc = (look_at - cam.T).normalized();
    Vec3 up(0.0, 1.0, 0.0);
    if (std::fabs(zc.dot(up)) > 0.999) up = Vec3(1.0, 0.0, 0.0);
    Vec3 yc = up.cross(zc).normalized();
    Vec3 xc = yc.cross(zc);
    cam.R.col(0) = xc;
    cam.R.col(1) = yc;
    cam.R.col(2) = zc;
    cam.K << f, 0.0, static_cast<double>(height) / 2.0, 0.0, f,
        static_cast<double>(width) / 2.0, 0.0, 0.0, 1.0;
    cam.height = height;
    cam.width = width;
    cam.z_near = std::max(0.05, radius - 0.6);
    cam.z_far = radius + 0.6;
    cam.validate();
    cams.push_back(cam);
  }
  return cams;
}

namespace {

ordered_json mat_to_json(const Mat3& m) {
  ordered_json arr = ordered_json::array();
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) arr.push_back(m(r, c));
  return arr;
}

Mat3 mat_from_json(const ordered_json& arr) {
  if (!arr.is_array() || arr.size() != 9)
    throw IoError("manifest: expected 9-element matrix");
  Mat3 m;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c)
      m(r, c) = arr[static_cast<size_t>(r * 3 + c)].get<double>();
  return m;
}

}  // namespace

void export_dataset(const DatasetManifest& manifest,
                    const std::vector<Tensor>& images,
                    const std::string& dir) {
  if (images.size() != manifest.views.size())
    throw ContractError("export_dataset: image/view count mismatch");
  fs::create_directories(dir);
  ordered_json j;
  j["scene_id"] = manifest.scene_id;
  j["height"] = manifest.height;
  j["width"] = manifest.width;
  j["views"] = ordered_json::array();
  for (size_t i = 0; i < manifest.views.size(); ++i) {
    const ViewRecord& view = manifest.views[i];
    save_png((fs::path(dir) / view.image).string(), images[i]);
    ordered_json vj;
    vj["image"] = view.image;
    vj["K"] = mat_to_json(view.cam.K);
    vj["R"] = mat_to_json(view.cam.R);
    vj["T"] = ordered_json::array({view.cam.T.x(), view.cam.T.y(),
                                   view.cam.T.z()});
    vj["z_near"] = view.cam.z_near;
    vj["z_far"] = view.cam.z_far;
    vj["split"] = view.split;
    j["views"].push_back(vj);
  }
  std::ofstream os(fs::path(dir) / "manifest.json");
  if (!os) throw IoError("export_dataset: cannot write manifest in " + dir);
  os << j.dump(2) << "\n";
}

DatasetManifest import_dataset(const std::string& manifest_path,
                               bool check_images) {
  std::ifstream is(manifest_path);
  if (!is) throw IoError("import_dataset: cannot open " + manifest_path);
  ordered_json j;
  try {
    is >> j;
  } catch (const std::exception& e) {
    throw IoError("import_dataset: bad JSON in " + manifest_path + ": " +
                  e.what());
  }
  DatasetManifest m;
  try {
    m.scene_id = j.at("scene_id").get<std::string>();
    m.height = j.at("height").get<int>();
    m.width = j.at("width").get<int>();
    for (const auto& vj : j.at("views")) {
      ViewRecord view;
      view.image = vj.at("image").get<std::string>();
      view.cam.K = mat_from_json(vj.at("K"));
      view.cam.R = mat_from_json(vj.at("R"));
      auto tt = vj.at("T");
      view.cam.T = Vec3(tt.at(0).get<double>(), tt.at(1).get<double>(),
                        tt.at(2).get<double>());
      view.cam.z_near = vj.at("z_near").get<double>();
      view.cam.z_far = vj.at("z_far").get<double>();
      view.cam.height = m.height;
      view.cam.width = m.width;
      view.split = vj.at("split").get<std::string>();
      if (view.split != "train" && view.split != "test")
        throw IoError("import_dataset: bad split '" + view.split + "'");
      view.cam.validate();
      m.views.push_back(view);
    }
  } catch (const ordered_json::exception& e) {
    throw IoError("import_dataset: invalid manifest " + manifest_path + ": " +
                  e.what());
  }
  if (m.height < 1 || m.width < 1)
    throw IoError("import_dataset: bad image size in " + manifest_path);
  if (check_images) {
    fs::path base = fs::path(manifest_path).parent_path();
    for (const ViewRecord& view : m.views) {
      Tensor img = load_png((base / view.image).string());
      if (img.dim(1) != m.height || img.dim(2) != m.width)
        throw IoError("import_dataset: " + view.image + " is " +
                      shape_str(img.shape()) + ", manifest says " +
                      std::to_string(m.height) + "x" +
                      std::to_string(m.width));
    }
  }
  return m;
}

double psnr(const Tensor& pred, const Tensor& gt) {
  if (pred.shape() != gt.shape())
    throw ShapeError("psnr: " + shape_str(pred.shape()) + " vs " +
                     shape_str(gt.shape()));
  std::vector<double> a = pred.to_vector(), b = gt.to_vector();
  double mse = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    double d = a[i] - b[i];
    mse += d * d;
  }
  mse /= static_cast<double>(a.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

double ssim(const Tensor& pred, const Tensor& gt) {
  if (pred.shape() != gt.shape())
    throw ShapeError("ssim: " + shape_str(pred.shape()) + " vs " +
                     shape_str(gt.shape()));
  if (pred.ndim() != 3) throw ShapeError("ssim: expected (C,H,W)");
  int64_t c = pred.dim(0), h = pred.dim(1), w = pred.dim(2);
  const int kWin = 11;
  if (h < kWin || w < kWin)
    throw ShapeError("ssim: image smaller than the 11x11 window");
  // 11x11 Gaussian, sigma 1.5, normalized.
  double g1[kWin];
  double gsum = 0.0;
  for (int i = 0; i < kWin; ++i) {
    double x = static_cast<double>(i - kWin / 2);
    g1[i] = std::exp(-x * x / (2.0 * 1.5 * 1.5));
    gsum += g1[i];
  }
  for (int i = 0; i < kWin; ++i) g1[i] /= gsum;
  const double kC1 = 0.01 * 0.01, kC2 = 0.03 * 0.03;

  std::vector<double> a = pred.to_vector(), b = gt.to_vector();
  double total = 0.0;
  int64_t count = 0;
  for (int64_t ci = 0; ci < c; ++ci) {
    const double* x = a.data() + ci * h * w;
    const double* y = b.data() + ci * h * w;
    for (int64_t py = 0; py + kWin <= h; ++py)
      for (int64_t px = 0; px + kWin <= w; ++px) {
        double mx = 0, my = 0, mxx = 0, myy = 0, mxy = 0;
        for (int i = 0; i < kWin; ++i)
          for (int j = 0; j < kWin; ++j) {
            double wt = g1[i] * g1[j];
            double xv = x[(py + i) * w + px + j];
            double yv = y[(py + i) * w + px + j];
            mx += wt * xv;
            my += wt * yv;
            mxx += wt * xv * xv;
            myy += wt * yv * yv;
            mxy += wt * xv * yv;
          }
        double vx = mxx - mx * mx, vy = myy - my * my, cov = mxy - mx * my;
        double val = ((2 * mx * my + kC1) * (2 * cov + kC2)) /
                     ((mx * mx + my * my + kC1) * (vx + vy + kC2));
        total += val;
        ++count;
      }
  }
  return total / static_cast<double>(count);
}

}  // namespace lfnr
