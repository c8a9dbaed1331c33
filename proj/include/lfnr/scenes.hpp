// Copyright 2026 lfnr authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lfnr/geometry.hpp"
#include "lfnr/tensor.hpp"

namespace lfnr {

// Procedural stand-in data: flat-shaded opaque primitives in the unit cube,
// so ground truth is exactly view-consistent.
struct Primitive {
  enum class Kind { Sphere, Box };
  Kind kind = Kind::Sphere;
  Vec3 center = Vec3::Zero();
  Vec3 size = Vec3::Zero();  // sphere: size.x() = radius; box: half extents
  Vec3 albedo = Vec3::Zero();
};

struct Scene {
  std::vector<Primitive> primitives;
  Vec3 background = Vec3::Zero();
};

Scene generate_scene(uint64_t seed);
uint64_t scene_hash(const Scene& scene);  // FNV-1a over exact field bytes

Tensor raytrace_gt(const Scene& scene, const Camera& cam);  // (3,H,W) f32

// Cameras evenly spaced in azimuth on a circle of the given radius and
// elevation (degrees), principal axis through look_at. World up is +y.
std::vector<Camera> camera_ring(int n_views, double radius,
                                double elevation_deg, const Vec3& look_at,
                                int height, int width,
                                double focal_rel = 0.9,
                                double az_offset_deg = 0.0);

struct ViewRecord {
  std::string image;  // path relative to the manifest
  Camera cam;
  std::string split;  // "train" | "test"
};

struct DatasetManifest {
  std::string scene_id;
  int height = 0;
  int width = 0;
  std::vector<ViewRecord> views;
};

// Writes manifest.json plus one PNG per view into dir.
void export_dataset(const DatasetManifest& manifest,
                    const std::vector<Tensor>& images, const std::string& dir);
// Loads and validates a manifest; check_images also decodes every image
// header to confirm existence and size.
DatasetManifest import_dataset(const std::string& manifest_path,
                               bool check_images = true);

double psnr(const Tensor& pred, const Tensor& gt);  // +inf when MSE == 0
double ssim(const Tensor& pred, const Tensor& gt);

}  // namespace lfnr
